/**
 * Strategic indicator board: one SVG gauge per indicator, with factor rows
 * underneath. Color bands default to the alert thresholds handed in by the
 * app shell.
 */

import { escapeHtml, pct } from "../format.js";
import type { AssessmentPoint, QualityModel } from "../types.js";

export interface GaugeBands {
  /** below -> red, below + margin -> amber, else green */
  red: number;
  amber: number;
}

export const DEFAULT_BANDS: GaugeBands = { red: 0.4, amber: 0.7 };

export function gaugeColor(value: number, bands: GaugeBands = DEFAULT_BANDS): string {
  if (value < bands.red) {
    return "#c0392b";
  }
  if (value < bands.amber) {
    return "#e67e22";
  }
  return "#27ae60";
}

export function renderGauge(name: string, value: number,
                            bands: GaugeBands = DEFAULT_BANDS): string {
  const angle = Math.PI * (1 - value);
  const x = 60 + 50 * Math.cos(angle);
  const y = 60 - 50 * Math.sin(angle);
  const large = value > 0.5 ? 1 : 0;
  const color = gaugeColor(value, bands);
  return `<figure class="gauge" role="img" aria-label="${escapeHtml(name)}: ${pct(value)}">
  <svg viewBox="0 0 120 70" width="160" height="96">
    <path d="M 10 60 A 50 50 0 0 1 110 60" fill="none" stroke="#ecf0f1" stroke-width="10"/>
    <path d="M 10 60 A 50 50 0 ${large} 1 ${x.toFixed(2)} ${y.toFixed(2)}"
          fill="none" stroke="${color}" stroke-width="10"/>
    <text x="60" y="58" text-anchor="middle" class="gauge-value">${pct(value)}</text>
  </svg>
  <figcaption>${escapeHtml(name)}</figcaption>
</figure>`;
}

export function renderIndicatorBoard(
  model: QualityModel,
  latest: AssessmentPoint[],
  bands: GaugeBands = DEFAULT_BANDS,
): string {
  const byId = new Map(latest.map((p) => [p.element_id, p]));
  const cards = model.indicators.map((indicator) => {
    const point = byId.get(indicator.id);
    const gauge = point
      ? renderGauge(indicator.name, point.value, bands)
      : `<p class="empty">not assessed yet</p>`;
    const factors = indicator.children
      .map((child) => {
        const factor = model.factors.find((f) => f.id === child.id);
        const factorPoint = byId.get(child.id);
        const value = factorPoint ? pct(factorPoint.value) : "-";
        return `<li><span>${escapeHtml(factor?.name ?? child.id)}</span><strong>${value}</strong></li>`;
      })
      .join("");
    return `<article class="indicator-card" data-element="${escapeHtml(indicator.id)}">
${gauge}
<ul class="factor-list">${factors}</ul>
</article>`;
  });
  return `<section id="indicator-board" aria-label="Strategic indicators">${cards.join("\n")}</section>`;
}
