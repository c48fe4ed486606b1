/**
 * Dashboard shell: fetches the view-model from the service, renders the
 * panels, and wires user actions back to the API. Optimistic updates are not
 * used; every mutation re-fetches the affected panel so the screen only ever
 * shows server-provided values.
 */

import { ApiClient, ApiError } from "./api.js";
import { DecisionQueue } from "./decisions.js";
import type { Decision } from "./types.js";
import { renderAlertInbox } from "./views/alerts.js";
import { renderIndicatorBoard } from "./views/gauges.js";
import { renderHistoryChart } from "./views/history.js";
import { renderQflPanel } from "./views/qflPanel.js";
import { renderQrQueue } from "./views/qrQueue.js";
import { renderWhatifDeltas, renderWhatifPanel } from "./views/whatif.js";

const api = new ApiClient("");
const decisions = new DecisionQueue(api);
const rationales: Record<string, string> = {};
const overrides: Record<string, number> = {};
let chartElement = "";

function mount(id: string, html: string): void {
  const node = document.getElementById(id);
  if (node) {
    node.innerHTML = html;
  }
}

function showError(error: unknown): void {
  const banner = document.getElementById("error-banner");
  if (!banner) {
    return;
  }
  if (error instanceof ApiError) {
    banner.textContent = `${error.code}: ${error.message}`;
  } else {
    banner.textContent = String(error);
  }
  banner.classList.add("visible");
  setTimeout(() => banner.classList.remove("visible"), 6000);
}

async function refreshBoard(): Promise<void> {
  const [model, latest] = await Promise.all([api.model(), api.latestAssessment()]);
  mount("board-slot", renderIndicatorBoard(model, latest));
  mount("whatif-slot", renderWhatifPanel(model, latest, overrides));
  if (!chartElement && model.indicators.length > 0) {
    chartElement = model.indicators[0].id;
  }
}

async function refreshAlerts(): Promise<void> {
  mount("alerts-slot", renderAlertInbox(await api.alerts()));
}

async function refreshQrs(): Promise<void> {
  mount("qr-slot", renderQrQueue(await api.qrs(), rationales));
}

async function refreshQfl(): Promise<void> {
  mount("qfl-slot", renderQflPanel(await api.qfl()));
}

async function refreshChart(): Promise<void> {
  if (!chartElement) {
    return;
  }
  const [series, events] = await Promise.all([api.history(chartElement), api.events()]);
  const relevant = events.filter((e) => e.kind === "qr_added" || e.kind === "threshold_changed");
  mount("chart-slot", renderHistoryChart(series, relevant));
}

async function refreshAll(): Promise<void> {
  try {
    await refreshBoard();
    await Promise.all([refreshAlerts(), refreshQrs(), refreshQfl(), refreshChart()]);
  } catch (error) {
    showError(error);
  }
}

async function handleAction(target: HTMLElement): Promise<void> {
  const action = target.dataset.action;
  try {
    if (action === "ack" && target.dataset.alert) {
      await api.acknowledgeAlert(target.dataset.alert);
      await refreshAlerts();
    } else if (action === "suggest" && target.dataset.alert) {
      const pattern = window.prompt("Pattern name?");
      if (!pattern) {
        return;
      }
      const value = window.prompt("Parameter 'value'?");
      if (value === null) {
        return;
      }
      await api.suggest(target.dataset.alert, pattern, { value: Number(value) });
      await refreshQrs();
    } else if (action === "decide" && target.dataset.qr) {
      const decision = target.dataset.decision as Decision;
      const stage = target.dataset.stage as "qe" | "pm";
      const updated = await decisions.submit(
        target.dataset.qr, stage, decision, rationales[target.dataset.qr] ?? "",
      );
      if (updated !== null) {
        delete rationales[target.dataset.qr];
        await Promise.all([refreshQrs(), refreshQfl(), refreshChart()]);
      }
    } else if (action === "export" && target.dataset.qr) {
      await api.exportQr(target.dataset.qr);
      await refreshQrs();
    } else if (action === "derive" && target.dataset.qr) {
      const input = document.querySelector<HTMLInputElement>(
        `input[data-role="task-subject"][data-qr="${target.dataset.qr}"]`,
      );
      const subject = input?.value.trim() ?? "";
      if (!subject) {
        showError(new Error("task subject required"));
        return;
      }
      await api.derive(target.dataset.qr, subject);
      await Promise.all([refreshQrs(), refreshQfl()]);
    } else if (action === "sync") {
      await api.sync();
      await Promise.all([refreshQrs(), refreshQfl()]);
    } else if (action === "whatif-run") {
      const [model, latest, hypothetical] = await Promise.all([
        api.model(),
        api.latestAssessment(),
        api.whatif(overrides),
      ]);
      mount("whatif-result", renderWhatifDeltas(model, latest, hypothetical));
    } else if (action === "whatif-clear") {
      for (const key of Object.keys(overrides)) {
        delete overrides[key];
      }
      await refreshBoard();
      mount("whatif-result", "");
    }
  } catch (error) {
    showError(error);
  }
}

export function boot(): void {
  document.addEventListener("click", (event) => {
    const target = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
    if (target) {
      void handleAction(target);
    }
  });
  document.addEventListener("input", (event) => {
    const target = event.target as HTMLInputElement;
    if (target.dataset.role === "rationale" && target.dataset.qr) {
      rationales[target.dataset.qr] = target.value;
      const reject = document.querySelector<HTMLButtonElement>(
        `button[data-action="decide"][data-decision="reject"][data-qr="${target.dataset.qr}"]`,
      );
      if (reject) {
        reject.disabled = target.value.trim().length === 0;
      }
    } else if (target.dataset.role === "whatif" && target.dataset.element) {
      overrides[target.dataset.element] = Number(target.value) / 100;
      const label = target.nextElementSibling;
      if (label) {
        label.textContent = `${target.value}%`;
      }
    }
  });
  document.addEventListener("change", (event) => {
    const target = event.target as HTMLSelectElement;
    if (target.dataset.role === "chart-element") {
      chartElement = target.value;
      void refreshChart();
    }
  });
  void refreshAll();
}

if (typeof document !== "undefined" && document.getElementById("qfl-app")) {
  boot();
}
