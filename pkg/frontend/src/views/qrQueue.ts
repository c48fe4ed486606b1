/**
 * QR review queue and detail: where quality engineers and project managers
 * make their calls. The reject button stays disabled until a rationale is
 * typed; the guard in decisions.ts enforces the same rule before any request
 * is sent.
 */

import { canSubmit, stageFor } from "../decisions.js";
import { escapeHtml, shortDate } from "../format.js";
import type { QualityRequirement } from "../types.js";

const ACTIONABLE = new Set(["Suggested", "Exported", "Postponed", "AcceptedByQE", "AcceptedByPM", "Derived"]);

export function renderQrQueue(qrs: QualityRequirement[], rationales: Record<string, string> = {}): string {
  if (qrs.length === 0) {
    return `<section id="qr-queue"><p class="empty">No quality requirements.</p></section>`;
  }
  const cards = qrs.map((qr) => renderQrCard(qr, rationales[qr.qr_id] ?? "")).join("\n");
  return `<section id="qr-queue" aria-label="Quality requirement review queue">${cards}</section>`;
}

export function renderQrCard(qr: QualityRequirement, rationale: string): string {
  const stage = stageFor(qr);
  const rejectBlocked = !canSubmit("reject", rationale);
  const taskItems = qr.derived_task_ids
    .map((taskId) => {
      const status = qr.task_statuses[taskId] ?? "unknown";
      return `<li>task ${escapeHtml(taskId)}: ${escapeHtml(status)}</li>`;
    })
    .join("");

  let actions = "";
  if (stage !== null) {
    const rationaleId = `rationale-${qr.qr_id}`;
    actions = `<div class="qr-actions">
  <label for="${rationaleId}">Rationale (required to reject)</label>
  <input id="${rationaleId}" type="text" data-role="rationale" data-qr="${escapeHtml(qr.qr_id)}"
         value="${escapeHtml(rationale)}" placeholder="why?">
  <button type="button" data-action="decide" data-decision="accept" data-stage="${stage}"
          data-qr="${escapeHtml(qr.qr_id)}">Accept</button>
  <button type="button" data-action="decide" data-decision="reject" data-stage="${stage}"
          data-qr="${escapeHtml(qr.qr_id)}" ${rejectBlocked ? "disabled" : ""}>Reject</button>
  ${stage === "pm"
    ? `<button type="button" data-action="decide" data-decision="postpone" data-stage="pm"
          data-qr="${escapeHtml(qr.qr_id)}" ${qr.state === "Postponed" ? "disabled" : ""}>Postpone</button>`
    : ""}
</div>`;
  } else if (qr.state === "AcceptedByQE") {
    actions = `<div class="qr-actions">
  <button type="button" data-action="export" data-qr="${escapeHtml(qr.qr_id)}">Export to backlog</button>
</div>`;
  }
  if (qr.state === "AcceptedByPM" || qr.state === "Derived") {
    actions += `<div class="qr-actions">
  <label for="task-${qr.qr_id}">New task subject</label>
  <input id="task-${qr.qr_id}" type="text" data-role="task-subject" data-qr="${escapeHtml(qr.qr_id)}">
  <button type="button" data-action="derive" data-qr="${escapeHtml(qr.qr_id)}">Derive task</button>
</div>`;
  }

  return `<article class="qr-card state-${escapeHtml(qr.state)}" data-qr="${escapeHtml(qr.qr_id)}">
  <header>
    <span class="qr-id">${escapeHtml(qr.qr_id)}</span>
    <span class="qr-state">${escapeHtml(qr.state)}</span>
    <span class="qr-date">${shortDate(qr.created_at)}</span>
  </header>
  <p class="qr-text">${escapeHtml(qr.text)}</p>
  ${qr.backlog_ref ? `<p class="qr-wp">work package #${escapeHtml(qr.backlog_ref)}</p>` : ""}
  ${taskItems ? `<ul class="qr-tasks">${taskItems}</ul>` : ""}
  ${ACTIONABLE.has(qr.state) ? actions : ""}
</article>`;
}
