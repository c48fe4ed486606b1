/**
 * Decision submission rules and the per-QR serialization queue.
 *
 * Rejections (and nothing else) require a non-empty rationale before any
 * request leaves the browser; the guard is what also drives the disabled
 * state of the reject button. Posts for one QR are serialized so a
 * double-click cannot interleave two decisions.
 */

import type { ApiClient } from "./api.js";
import type { Decision, DecisionStage, QualityRequirement } from "./types.js";

export function rationaleRequired(decision: Decision): boolean {
  return decision === "reject";
}

export function canSubmit(decision: Decision, rationale: string): boolean {
  return !rationaleRequired(decision) || rationale.trim().length > 0;
}

export function stageFor(qr: Pick<QualityRequirement, "state">): DecisionStage | null {
  if (qr.state === "Suggested") {
    return "qe";
  }
  if (qr.state === "Exported" || qr.state === "Postponed") {
    return "pm";
  }
  return null;
}

export class DecisionQueue {
  private readonly api: ApiClient;
  private readonly chains = new Map<string, Promise<unknown>>();

  constructor(api: ApiClient) {
    this.api = api;
  }

  /**
   * Submit a decision; resolves null (no request sent) when the guard blocks
   * it. Calls for the same QR run strictly one after another.
   */
  submit(qrId: string, stage: DecisionStage, decision: Decision,
         rationale: string): Promise<QualityRequirement | null> {
    if (!canSubmit(decision, rationale)) {
      return Promise.resolve(null);
    }
    const previous = this.chains.get(qrId) ?? Promise.resolve();
    const next = previous
      .catch(() => undefined)
      .then(() => this.api.decide(qrId, stage, decision, rationale));
    this.chains.set(qrId, next);
    return next;
  }
}
