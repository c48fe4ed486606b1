/**
 * History chart: an SVG line of one element's assessment series with decision
 * events overlaid as green crosses on the day they were taken.
 */

import { escapeHtml, pct, shortDate } from "../format.js";
import type { DecisionEvent, HistorySeries } from "../types.js";

const WIDTH = 640;
const HEIGHT = 220;
const PAD = 36;

function xScale(times: number[], t: number): number {
  const min = Math.min(...times);
  const max = Math.max(...times);
  if (max === min) {
    return WIDTH / 2;
  }
  return PAD + ((t - min) / (max - min)) * (WIDTH - 2 * PAD);
}

function yScale(value: number): number {
  return HEIGHT - PAD - value * (HEIGHT - 2 * PAD);
}

export function renderHistoryChart(series: HistorySeries,
                                   events: DecisionEvent[] = []): string {
  if (series.points.length === 0) {
    return `<section id="history-chart"><p class="empty">No history for ${escapeHtml(series.element_id)}.</p></section>`;
  }
  const times = series.points.map((p) => Date.parse(p.timestamp));
  const line = series.points
    .map((p, i) => `${xScale(times, times[i]).toFixed(1)},${yScale(p.value).toFixed(1)}`)
    .join(" ");
  const dots = series.points
    .map((p, i) => {
      const x = xScale(times, times[i]).toFixed(1);
      const y = yScale(p.value).toFixed(1);
      return `<circle cx="${x}" cy="${y}" r="2.5" class="point"><title>${shortDate(p.timestamp)}: ${pct(p.value)}</title></circle>`;
    })
    .join("\n");
  const markers = events
    .map((event) => {
      const x = xScale(times, Date.parse(event.timestamp)).toFixed(1);
      const y = yScale(valueAt(series, event.timestamp)).toFixed(1);
      return `<g class="event-marker" data-event="${escapeHtml(event.event_id)}" transform="translate(${x},${y})">
  <path d="M -6 -6 L 6 6 M -6 6 L 6 -6" stroke="#27ae60" stroke-width="2.5" fill="none"/>
  <title>${escapeHtml(event.kind)} ${escapeHtml(event.subject_id)} (${shortDate(event.timestamp)})</title>
</g>`;
    })
    .join("\n");
  return `<section id="history-chart" aria-label="History of ${escapeHtml(series.element_id)}">
<svg viewBox="0 0 ${WIDTH} ${HEIGHT}" width="${WIDTH}" height="${HEIGHT}" role="img">
  <line x1="${PAD}" y1="${yScale(0)}" x2="${WIDTH - PAD}" y2="${yScale(0)}" stroke="#bdc3c7"/>
  <line x1="${PAD}" y1="${yScale(1)}" x2="${WIDTH - PAD}" y2="${yScale(1)}" stroke="#ecf0f1"/>
  <text x="${PAD - 6}" y="${yScale(0) + 4}" text-anchor="end" class="axis">0%</text>
  <text x="${PAD - 6}" y="${yScale(1) + 4}" text-anchor="end" class="axis">100%</text>
  <polyline points="${line}" fill="none" stroke="#2980b9" stroke-width="2"/>
  ${dots}
  ${markers}
</svg>
</section>`;
}

/** Series value in effect at a timestamp (last point at or before it). */
export function valueAt(series: HistorySeries, timestamp: string): number {
  const t = Date.parse(timestamp);
  let value = series.points[0]?.value ?? 0;
  for (const point of series.points) {
    if (Date.parse(point.timestamp) <= t) {
      value = point.value;
    }
  }
  return value;
}
