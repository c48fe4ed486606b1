/**
 * Display formatting. The wire always carries fractions in [0, 1]; the UI
 * speaks percentages on a 0-100 scale, rounded to at most two decimals with
 * trailing zeros trimmed.
 */

export function pct(fraction: number): string {
  const scaled = fraction * 100;
  const text = scaled.toFixed(2).replace(/\.?0+$/, "");
  return `${text}%`;
}

export function shortDate(timestamp: string): string {
  return timestamp.slice(0, 10);
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
