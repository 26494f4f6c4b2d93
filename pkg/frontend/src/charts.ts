/**
 * Hand-rolled SVG timeline chart: live GPUs (left axis, area) and
 * cumulative spend (right axis, line) by campaign hour.
 *
 * The chart model is pure data — polyline point strings, tick
 * positions — computed with deterministic arithmetic so tests can
 * assert exact coordinates; the SVG string is assembled from it.
 */

import type { TimelineRow } from "./api.js";

export interface ChartTick {
  pos: number;
  label: string;
}

export interface ChartModel {
  width: number;
  height: number;
  plot: { left: number; top: number; right: number; bottom: number };
  gpuPoints: string;
  spendPoints: string;
  xTicks: ChartTick[];
  yTicksLeft: ChartTick[];
  yTicksRight: ChartTick[];
  maxGpus: number;
  maxSpendUsd: number;
  empty: boolean;
}

const PAD_LEFT = 46;
const PAD_RIGHT = 58;
const PAD_TOP = 12;
const PAD_BOTTOM = 24;

/** Smallest "nice" bound (1/2/5 × 10^k) at or above `v`. */
export function niceCeil(v: number): number {
  if (!Number.isFinite(v) || v <= 0) return 1;
  const exp = Math.floor(Math.log10(v));
  const base = Math.pow(10, exp);
  for (const m of [1, 2, 5, 10]) {
    if (m * base >= v) return m * base;
  }
  return 10 * base;
}

/** Hour step giving at most `maxTicks` x-axis labels. */
export function hourStep(spanHours: number, maxTicks = 8): number {
  const steps = [1, 2, 4, 6, 12, 24, 48, 96, 168, 336, 672];
  for (const step of steps) {
    if (spanHours / step <= maxTicks - 1) return step;
  }
  const last = steps[steps.length - 1]!;
  return Math.ceil(spanHours / (maxTicks - 1) / last) * last;
}

function fmt(v: number): string {
  return v.toFixed(1);
}

function axisLabel(v: number): string {
  if (v >= 1_000_000) return `${v / 1_000_000}M`;
  if (v >= 1_000) return `${v / 1_000}k`;
  return String(v);
}

export function buildChart(
  rows: readonly TimelineRow[],
  width = 680,
  height = 220,
): ChartModel {
  const plot = {
    left: PAD_LEFT,
    top: PAD_TOP,
    right: width - PAD_RIGHT,
    bottom: height - PAD_BOTTOM,
  };
  const model: ChartModel = {
    width,
    height,
    plot,
    gpuPoints: "",
    spendPoints: "",
    xTicks: [],
    yTicksLeft: [],
    yTicksRight: [],
    maxGpus: 0,
    maxSpendUsd: 0,
    empty: rows.length === 0,
  };
  if (rows.length === 0) return model;

  const first = rows[0]!;
  const last = rows[rows.length - 1]!;
  const hourSpan = Math.max(last.hour - first.hour, 1);
  const innerW = plot.right - plot.left;
  const innerH = plot.bottom - plot.top;

  const maxGpus = niceCeil(Math.max(...rows.map((r) => r.live_gpus)));
  const maxSpend = niceCeil(Math.max(...rows.map((r) => Number(r.spend_usd))));
  model.maxGpus = maxGpus;
  model.maxSpendUsd = maxSpend;

  const x = (hour: number) => plot.left + ((hour - first.hour) / hourSpan) * innerW;
  const yGpu = (v: number) => plot.bottom - (v / maxGpus) * innerH;
  const ySpend = (v: number) => plot.bottom - (v / maxSpend) * innerH;

  model.gpuPoints = rows
    .map((r) => `${fmt(x(r.hour))},${fmt(yGpu(r.live_gpus))}`)
    .join(" ");
  model.spendPoints = rows
    .map((r) => `${fmt(x(r.hour))},${fmt(ySpend(Number(r.spend_usd)))}`)
    .join(" ");

  const step = hourStep(hourSpan);
  for (
    let h = Math.ceil(first.hour / step) * step;
    h <= last.hour;
    h += step
  ) {
    model.xTicks.push({ pos: Number(fmt(x(h))), label: `h${h}` });
  }
  for (let i = 0; i <= 4; i++) {
    const gv = (maxGpus / 4) * i;
    const sv = (maxSpend / 4) * i;
    model.yTicksLeft.push({ pos: Number(fmt(yGpu(gv))), label: axisLabel(gv) });
    model.yTicksRight.push({
      pos: Number(fmt(ySpend(sv))),
      label: `$${axisLabel(sv)}`,
    });
  }
  return model;
}

export function chartSvg(m: ChartModel): string {
  if (m.empty) {
    return `<svg class="chart" viewBox="0 0 ${m.width} ${m.height}" role="img"><text x="${m.width / 2}" y="${m.height / 2}" class="chart-empty" text-anchor="middle">no timeline yet</text></svg>`;
  }
  const parts: string[] = [];
  parts.push(
    `<svg class="chart" viewBox="0 0 ${m.width} ${m.height}" role="img" aria-label="live GPUs and cumulative spend by hour">`,
  );
  for (const t of m.yTicksLeft) {
    parts.push(
      `<line class="grid" x1="${m.plot.left}" y1="${t.pos}" x2="${m.plot.right}" y2="${t.pos}"/>`,
      `<text class="tick" x="${m.plot.left - 6}" y="${t.pos + 3}" text-anchor="end">${t.label}</text>`,
    );
  }
  for (const t of m.yTicksRight) {
    parts.push(
      `<text class="tick tick-spend" x="${m.plot.right + 6}" y="${t.pos + 3}" text-anchor="start">${t.label}</text>`,
    );
  }
  for (const t of m.xTicks) {
    parts.push(
      `<text class="tick" x="${t.pos}" y="${m.plot.bottom + 14}" text-anchor="middle">${t.label}</text>`,
    );
  }
  const base = `${m.plot.right},${m.plot.bottom} ${m.plot.left},${m.plot.bottom}`;
  parts.push(
    `<polygon class="gpu-area" points="${m.gpuPoints} ${base}"/>`,
    `<polyline class="gpu-line" fill="none" points="${m.gpuPoints}"/>`,
    `<polyline class="spend-line" fill="none" points="${m.spendPoints}"/>`,
    `</svg>`,
  );
  return parts.join("");
}
