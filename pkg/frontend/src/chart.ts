/** A plain line of closing prices with a date axis, rendered to an SVG
 * string. Scaling is presentation only; every number drawn came off the
 * wire. */

import type { ChartWindow } from "./types.js";

const W = 640;
const H = 260;
const PAD_L = 56;
const PAD_R = 16;
const PAD_T = 14;
const PAD_B = 34;

function fmt(n: number): string {
  return n.toLocaleString("en-US", {
    minimumFractionDigits: 2,
    maximumFractionDigits: 2,
  });
}

export function chartSvg(window: ChartWindow): string {
  const closes = window.closes;
  const dates = window.dates;
  if (closes.length === 0) return `<svg viewBox="0 0 ${W} ${H}"></svg>`;

  const lo = Math.min(...closes);
  const hi = Math.max(...closes);
  const span = hi - lo || 1; // flat window still needs a finite scale
  const innerW = W - PAD_L - PAD_R;
  const innerH = H - PAD_T - PAD_B;
  const xAt = (i: number) =>
    closes.length === 1 ? PAD_L + innerW / 2 : PAD_L + (i * innerW) / (closes.length - 1);
  const yAt = (c: number) => PAD_T + innerH - ((c - lo) / span) * innerH;

  const points = closes
    .map((c, i) => `${xAt(i).toFixed(1)},${yAt(c).toFixed(1)}`)
    .join(" ");

  const gridYs = [lo, (lo + hi) / 2, hi];
  const grid = gridYs
    .map((v) => {
      const y = yAt(v).toFixed(1);
      return (
        `<line x1="${PAD_L}" y1="${y}" x2="${W - PAD_R}" y2="${y}" class="grid"/>` +
        `<text x="${PAD_L - 6}" y="${y}" class="ylabel" text-anchor="end" dy="0.35em">${fmt(v)}</text>`
      );
    })
    .join("");

  const tickIdx = [0, Math.floor((closes.length - 1) / 2), closes.length - 1];
  const ticks = [...new Set(tickIdx)]
    .map((i) => {
      const d = dates[i] ?? "";
      return `<text x="${xAt(i).toFixed(1)}" y="${H - 10}" class="xlabel" text-anchor="middle">${d}</text>`;
    })
    .join("");

  const lastIdx = closes.length - 1;
  const lastClose = closes[lastIdx]!;
  const marker =
    `<circle cx="${xAt(lastIdx).toFixed(1)}" cy="${yAt(lastClose).toFixed(1)}" r="3.5" class="last-dot"/>` +
    `<text x="${(W - PAD_R).toFixed(1)}" y="${PAD_T}" class="last-label" text-anchor="end">` +
    `last close ${fmt(lastClose)} (${window.end_date})</text>`;

  return (
    `<svg viewBox="0 0 ${W} ${H}" class="price-chart" role="img" ` +
    `aria-label="closing prices through ${window.end_date}">` +
    grid +
    `<polyline points="${points}" class="price-line" fill="none"/>` +
    marker +
    ticks +
    `</svg>`
  );
}
