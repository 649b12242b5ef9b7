/**
 * Deterministic SVG line chart with shaded mean +/- std bands.
 *
 * No DOM and no plotting library: scales, ticks, and markup are built by
 * hand so identical inputs give byte-identical output. One line per
 * algorithm (alphabetical legend order), optional log-scaled x axis.
 */

import type { Series } from './stats.js';

export interface ChartOptions {
  width?: number;
  height?: number;
  logX?: boolean;
  xLabel: string;
  yLabel: string;
  title?: string;
}

const MARGIN = { top: 36, right: 160, bottom: 48, left: 64 };

// Okabe-Ito palette: color-blind safe, fixed assignment by legend position.
const COLORS = [
  '#0072B2',
  '#D55E00',
  '#009E73',
  '#CC79A7',
  '#E69F00',
  '#56B4E9',
  '#F0E442',
  '#000000',
];

function fmt(v: number): string {
  if (!Number.isFinite(v)) return '0';
  const rounded = Math.round(v * 100) / 100;
  return Object.is(rounded, -0) ? '0' : String(rounded);
}

function fmtTick(v: number): string {
  if (Math.abs(v) >= 1 && Math.abs(v - Math.round(v)) < 1e-9) {
    return String(Math.round(v));
  }
  return String(Math.round(v * 1000) / 1000);
}

export function linearTicks(lo: number, hi: number, count = 6): number[] {
  if (hi <= lo) return [lo];
  const span = hi - lo;
  const step0 = span / Math.max(1, count - 1);
  const mag = 10 ** Math.floor(Math.log10(step0));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => span / s <= count - 1) ?? mag * 10;
  const first = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = first; v <= hi + 1e-12; v += step) {
    ticks.push(Math.round(v * 1e9) / 1e9);
  }
  return ticks.length ? ticks : [lo, hi];
}

export function logTicks(values: number[]): number[] {
  // data-driven ticks: the distinct x values when few, else powers of two
  const unique = [...new Set(values)].sort((a, b) => a - b);
  if (unique.length <= 12) return unique;
  const lo = unique[0];
  const hi = unique[unique.length - 1];
  const ticks: number[] = [];
  for (let v = 2 ** Math.ceil(Math.log2(lo)); v <= hi; v *= 2) ticks.push(v);
  return ticks;
}

export function renderChart(series: Series[], options: ChartOptions): string {
  const width = options.width ?? 720;
  const height = options.height ?? 480;
  const innerW = width - MARGIN.left - MARGIN.right;
  const innerH = height - MARGIN.top - MARGIN.bottom;

  const xs = series.flatMap((s) => s.points.map((p) => p.x));
  const ys = series.flatMap((s) => s.points.flatMap((p) => [p.mean - p.std, p.mean + p.std]));
  const xLo = Math.min(...xs);
  const xHi = Math.max(...xs);
  const yLo = Math.min(0, ...ys);
  const yHi = Math.max(...ys) * 1.05 || 1;

  const xPos = (x: number): number => {
    if (options.logX) {
      const a = Math.log(xLo);
      const b = Math.log(xHi);
      const t = b > a ? (Math.log(x) - a) / (b - a) : 0.5;
      return MARGIN.left + t * innerW;
    }
    const t = xHi > xLo ? (x - xLo) / (xHi - xLo) : 0.5;
    return MARGIN.left + t * innerW;
  };
  const yPos = (y: number): number =>
    MARGIN.top + innerH - ((y - yLo) / (yHi - yLo)) * innerH;

  const xTicks = options.logX ? logTicks(xs) : linearTicks(xLo, xHi);
  const yTicks = linearTicks(yLo, yHi);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="12">`,
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  if (options.title) {
    parts.push(
      `<text class="title" x="${fmt(MARGIN.left + innerW / 2)}" y="20" ` +
        `text-anchor="middle" font-size="14">${options.title}</text>`,
    );
  }

  // axes
  const axisY = MARGIN.top + innerH;
  parts.push(
    `<line x1="${MARGIN.left}" y1="${axisY}" x2="${MARGIN.left + innerW}" y2="${axisY}" stroke="black"/>`,
  );
  parts.push(
    `<line x1="${MARGIN.left}" y1="${MARGIN.top}" x2="${MARGIN.left}" y2="${axisY}" stroke="black"/>`,
  );
  for (const tick of xTicks) {
    const x = fmt(xPos(tick));
    parts.push(`<line x1="${x}" y1="${axisY}" x2="${x}" y2="${fmt(axisY + 5)}" stroke="black"/>`);
    parts.push(
      `<text class="x-tick" x="${x}" y="${fmt(axisY + 18)}" text-anchor="middle">${fmtTick(tick)}</text>`,
    );
  }
  for (const tick of yTicks) {
    const y = fmt(yPos(tick));
    parts.push(`<line x1="${fmt(MARGIN.left - 5)}" y1="${y}" x2="${MARGIN.left}" y2="${y}" stroke="black"/>`);
    parts.push(
      `<text class="y-tick" x="${fmt(MARGIN.left - 8)}" y="${fmt(Number(y) + 4)}" text-anchor="end">${fmtTick(tick)}</text>`,
    );
  }
  parts.push(
    `<text class="x-label" x="${fmt(MARGIN.left + innerW / 2)}" y="${fmt(height - 10)}" ` +
      `text-anchor="middle">${options.xLabel}</text>`,
  );
  parts.push(
    `<text class="y-label" x="16" y="${fmt(MARGIN.top + innerH / 2)}" text-anchor="middle" ` +
      `transform="rotate(-90 16 ${fmt(MARGIN.top + innerH / 2)})">${options.yLabel}</text>`,
  );

  // bands then lines, legend order = alphabetical series order
  series.forEach((s, idx) => {
    const color = COLORS[idx % COLORS.length];
    const hasBand = s.points.some((p) => p.std > 0);
    if (hasBand) {
      const upper = s.points.map((p) => `${fmt(xPos(p.x))},${fmt(yPos(p.mean + p.std))}`);
      const lower = [...s.points]
        .reverse()
        .map((p) => `${fmt(xPos(p.x))},${fmt(yPos(p.mean - p.std))}`);
      parts.push(
        `<polygon class="band" data-algorithm="${s.algorithm}" ` +
          `points="${[...upper, ...lower].join(' ')}" fill="${color}" fill-opacity="0.15" stroke="none"/>`,
      );
    }
  });
  series.forEach((s, idx) => {
    const color = COLORS[idx % COLORS.length];
    const pts = s.points.map((p) => `${fmt(xPos(p.x))},${fmt(yPos(p.mean))}`).join(' ');
    parts.push(
      `<polyline class="line" data-algorithm="${s.algorithm}" points="${pts}" ` +
        `fill="none" stroke="${color}" stroke-width="2"/>`,
    );
  });

  // legend
  const legendX = MARGIN.left + innerW + 12;
  series.forEach((s, idx) => {
    const color = COLORS[idx % COLORS.length];
    const y = MARGIN.top + 8 + idx * 20;
    parts.push(
      `<line x1="${fmt(legendX)}" y1="${fmt(y)}" x2="${fmt(legendX + 18)}" y2="${fmt(y)}" ` +
        `stroke="${color}" stroke-width="2"/>`,
    );
    parts.push(
      `<text class="legend" x="${fmt(legendX + 24)}" y="${fmt(y + 4)}">${s.algorithm}</text>`,
    );
  });

  parts.push('</svg>');
  return parts.join('\n') + '\n';
}
