/**
 * Typed client for the quality feedback loop service.
 *
 * Decision posts carry an Idempotency-Key header so replays after flaky
 * networks return the original outcome. API errors are surfaced verbatim
 * (code + message) for the views to display.
 */

import type {
  Alert,
  ApiErrorBody,
  AssessmentPoint,
  Decision,
  DecisionEvent,
  DecisionStage,
  HistorySeries,
  QflBody,
  QualityModel,
  QualityRequirement,
} from "./types.js";

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(body: ApiErrorBody) {
    super(`${body.code}: ${body.message}`);
    this.code = body.code;
    this.status = body.status;
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

function freshKey(): string {
  return `ui-${Date.now()}-${Math.random().toString(36).slice(2, 10)}`;
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;
  readonly keyFactory: () => string;

  constructor(base = "", fetchImpl: FetchLike = fetch.bind(globalThis),
              keyFactory: () => string = freshKey) {
    this.base = base.replace(/\/$/, "");
    this.fetchImpl = fetchImpl;
    this.keyFactory = keyFactory;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.base}${path}`, init);
    const body = await response.json();
    if (!response.ok) {
      throw new ApiError(body as ApiErrorBody);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown, idempotent = true): Promise<T> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (idempotent) {
      headers["Idempotency-Key"] = this.keyFactory();
    }
    return this.request<T>(path, {
      method: "POST",
      headers,
      body: JSON.stringify(payload ?? {}),
    });
  }

  model(): Promise<QualityModel> {
    return this.request("/model");
  }

  latestAssessment(): Promise<AssessmentPoint[]> {
    return this.request("/assessment/latest");
  }

  history(elementId: string): Promise<HistorySeries> {
    return this.request(`/history/${encodeURIComponent(elementId)}`);
  }

  events(subject?: string): Promise<DecisionEvent[]> {
    const query = subject ? `?subject=${encodeURIComponent(subject)}` : "";
    return this.request(`/events${query}`);
  }

  alerts(state?: string): Promise<Alert[]> {
    const query = state ? `?state=${encodeURIComponent(state)}` : "";
    return this.request(`/alerts${query}`);
  }

  qrs(state?: string): Promise<QualityRequirement[]> {
    const query = state ? `?state=${encodeURIComponent(state)}` : "";
    return this.request(`/qrs${query}`);
  }

  qfl(): Promise<QflBody> {
    return this.request("/qfl");
  }

  acknowledgeAlert(alertId: string): Promise<Alert> {
    return this.post(`/alerts/${encodeURIComponent(alertId)}/ack`, {}, false);
  }

  suggest(alertId: string, pattern: string,
          params: Record<string, unknown>): Promise<QualityRequirement> {
    return this.post(`/alerts/${encodeURIComponent(alertId)}/suggest`, { pattern, params });
  }

  decide(qrId: string, stage: DecisionStage, decision: Decision,
         rationale: string): Promise<QualityRequirement> {
    return this.post(`/qrs/${encodeURIComponent(qrId)}/decision`, {
      stage,
      decision,
      rationale,
    });
  }

  exportQr(qrId: string): Promise<QualityRequirement> {
    return this.post(`/qrs/${encodeURIComponent(qrId)}/export`, {});
  }

  derive(qrId: string, subject: string): Promise<QualityRequirement & { new_task_id: string }> {
    return this.post(`/qrs/${encodeURIComponent(qrId)}/derive`, { subject });
  }

  sync(): Promise<QualityRequirement[]> {
    return this.post("/sync", {}, false);
  }

  whatif(overrides: Record<string, number>): Promise<AssessmentPoint[]> {
    return this.post("/whatif", { overrides }, false);
  }
}
