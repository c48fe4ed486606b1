/**
 * What-if panel: sliders pin hypothetical metric or factor values; the server
 * recomputes the rollup and the panel shows the deltas against the baseline.
 * No aggregation happens client-side.
 */

import { escapeHtml, pct } from "../format.js";
import type { AssessmentPoint, QualityModel } from "../types.js";

export function renderWhatifPanel(model: QualityModel,
                                  latest: AssessmentPoint[],
                                  overrides: Record<string, number>): string {
  const byId = new Map(latest.map((p) => [p.element_id, p]));
  const sliders = [...model.metrics.map((m) => ({ id: m.id, name: m.name })),
                   ...model.factors.map((f) => ({ id: f.id, name: f.name }))]
    .map(({ id, name }) => {
      const baseline = byId.get(id)?.value ?? 0;
      const pinned = overrides[id];
      const value = pinned ?? baseline;
      return `<div class="whatif-slider">
  <label for="whatif-${escapeHtml(id)}">${escapeHtml(name)}${pinned !== undefined ? " (pinned)" : ""}</label>
  <input id="whatif-${escapeHtml(id)}" type="range" min="0" max="100" step="1"
         value="${Math.round(value * 100)}" data-role="whatif" data-element="${escapeHtml(id)}">
  <span>${pct(value)}</span>
</div>`;
    })
    .join("\n");
  return `<section id="whatif-panel" aria-label="What-if analysis">
${sliders}
<button type="button" data-action="whatif-run">Recompute</button>
<button type="button" data-action="whatif-clear">Clear pins</button>
<div id="whatif-result"></div>
</section>`;
}

export function renderWhatifDeltas(model: QualityModel,
                                   baseline: AssessmentPoint[],
                                   hypothetical: AssessmentPoint[]): string {
  const before = new Map(baseline.map((p) => [p.element_id, p.value]));
  const rows = model.indicators
    .map((indicator) => {
      const after = hypothetical.find((p) => p.element_id === indicator.id);
      if (!after) {
        return "";
      }
      const base = before.get(indicator.id) ?? 0;
      const delta = after.value - base;
      const sign = delta >= 0 ? "+" : "-";
      return `<tr data-element="${escapeHtml(indicator.id)}">
  <td>${escapeHtml(indicator.name)}</td>
  <td class="num">${pct(base)}</td>
  <td class="num">${pct(after.value)}</td>
  <td class="num delta">${sign}${pct(Math.abs(delta))}</td>
</tr>`;
    })
    .join("\n");
  return `<table class="whatif-deltas">
<thead><tr><th>indicator</th><th>baseline</th><th>what-if</th><th>delta</th></tr></thead>
<tbody>${rows}</tbody>
</table>`;
}
