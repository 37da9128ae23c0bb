/** Geometry for the F1 vs. runtime scatter.
 *
 * Pure math so it can be tested without a DOM: callers hand in
 * evaluation rows and get back pixel positions, decade ticks for the
 * log-scale runtime axis, and the list of rows that cannot be plotted
 * (no measured test runtime).
 */

import type { EvalRow } from "./types.js";

export interface ScatterPoint {
  backendId: string;
  f1: number;
  runtimeMin: number;
  x: number;
  y: number;
}

export interface AxisTick<V> {
  value: V;
  pos: number;
  label: string;
}

export interface ScatterLayout {
  width: number;
  height: number;
  pad: number;
  points: ScatterPoint[];
  xTicks: Array<AxisTick<number>>;
  yTicks: Array<AxisTick<number>>;
  omitted: string[];
}

const Y_TICKS = [0, 0.25, 0.5, 0.75, 1];

/** The labeled decades; points outside stretch the domain, not the labels. */
export const RUNTIME_TICKS_MIN = [0.1, 1, 10, 100, 1000];

function tickLabel(minutes: number): string {
  return minutes < 1 ? String(minutes) : String(Math.round(minutes));
}

/** Log10 domain covering both the canonical ticks and the data. */
export function runtimeDomain(runtimesMin: number[]): [number, number] {
  let lo = Math.log10(RUNTIME_TICKS_MIN[0]);
  let hi = Math.log10(RUNTIME_TICKS_MIN[RUNTIME_TICKS_MIN.length - 1]);
  for (const m of runtimesMin) {
    lo = Math.min(lo, Math.floor(Math.log10(m)));
    hi = Math.max(hi, Math.ceil(Math.log10(m)));
  }
  return [lo, hi];
}

export function layoutScatter(
  rows: EvalRow[],
  width = 640,
  height = 360,
  pad = 48,
): ScatterLayout {
  const plottable = rows.filter(
    (r) => r.f1 !== null && r.test_s !== null && r.test_s > 0,
  );
  const omitted = rows
    .filter((r) => !plottable.includes(r))
    .map((r) => r.backend_id);

  const runtimes = plottable.map((r) => (r.test_s as number) / 60);
  const [lo, hi] = runtimeDomain(runtimes);
  const innerW = width - 2 * pad;
  const innerH = height - 2 * pad;

  const xOf = (minutes: number): number =>
    pad + ((Math.log10(minutes) - lo) / (hi - lo)) * innerW;
  const yOf = (f1: number): number => height - pad - f1 * innerH;

  return {
    width,
    height,
    pad,
    points: plottable.map((r, i) => ({
      backendId: r.backend_id,
      f1: r.f1 as number,
      runtimeMin: runtimes[i],
      x: xOf(runtimes[i]),
      y: yOf(r.f1 as number),
    })),
    xTicks: RUNTIME_TICKS_MIN.map((t) => ({
      value: t,
      pos: xOf(t),
      label: tickLabel(t),
    })),
    yTicks: Y_TICKS.map((t) => ({ value: t, pos: yOf(t), label: t.toFixed(2) })),
    omitted,
  };
}
