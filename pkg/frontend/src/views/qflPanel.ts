/**
 * Quality Feedback Loop panel: the loop's own health ratios and their rollup
 * into the dedicated strategic indicator, straight from GET /qfl.
 */

import { pct } from "../format.js";
import type { QflBody } from "../types.js";

const METRIC_LABELS: Array<[keyof QflBody["metrics"], string]> = [
  ["qe_acceptance", "Accepted by quality engineers"],
  ["pm_acceptance", "Accepted by project managers"],
  ["end_to_end", "Suggested to roadmap"],
  ["qr_derivation", "Derived into tasks"],
  ["mitigation_task_completion", "Mitigation tasks completed"],
];

export function renderQflPanel(body: QflBody): string {
  const rows = METRIC_LABELS.map(
    ([key, label]) =>
      `<tr data-metric="${key}"><td>${label}</td><td class="num">${pct(body.metrics[key])}</td></tr>`,
  ).join("\n");
  const indicator = body.rollup["quality_feedback_loop"] ?? 0;
  const relevance = body.rollup["qfl_relevance"] ?? 0;
  const completion = body.rollup["qfl_completion"] ?? 0;
  return `<section id="qfl-panel" aria-label="Quality feedback loop">
<h3>Quality Feedback Loop <strong data-role="qfl-indicator">${pct(indicator)}</strong></h3>
<p>Relevance ${pct(relevance)} | Completion ${pct(completion)}</p>
<table><tbody>${rows}</tbody></table>
</section>`;
}
