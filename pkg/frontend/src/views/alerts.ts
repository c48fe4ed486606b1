/**
 * Alert inbox: the open breaches that can seed new quality requirements.
 */

import { escapeHtml, pct, shortDate } from "../format.js";
import type { Alert } from "../types.js";

export function renderAlertInbox(alerts: Alert[]): string {
  if (alerts.length === 0) {
    return `<section id="alert-inbox"><p class="empty">No alerts.</p></section>`;
  }
  const rows = alerts
    .map(
      (alert) => `<tr class="alert-row severity-${alert.severity}" data-alert="${escapeHtml(alert.alert_id)}">
  <td>${shortDate(alert.raised_at)}</td>
  <td>${escapeHtml(alert.element_id)}</td>
  <td>${pct(alert.observed_value)} &lt; ${pct(alert.trigger_below)}</td>
  <td>${alert.severity}</td>
  <td>${alert.state}</td>
  <td>
    <button type="button" data-action="ack" data-alert="${escapeHtml(alert.alert_id)}"
            ${alert.state === "open" ? "" : "disabled"}>Acknowledge</button>
    <button type="button" data-action="suggest" data-alert="${escapeHtml(alert.alert_id)}"
            data-element="${escapeHtml(alert.element_id)}">Suggest QR</button>
  </td>
</tr>`,
    )
    .join("\n");
  return `<section id="alert-inbox" aria-label="Alert inbox">
<table>
  <thead><tr><th>raised</th><th>element</th><th>value</th><th>severity</th><th>state</th><th>actions</th></tr></thead>
  <tbody>${rows}</tbody>
</table>
</section>`;
}
