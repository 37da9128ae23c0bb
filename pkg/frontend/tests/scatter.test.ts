import { describe, expect, it } from "vitest";

import { layoutScatter, RUNTIME_TICKS_MIN, runtimeDomain } from "../src/scatter.js";
import { makeEvalRow } from "./helpers.js";

/** The ten benchmark backends, runtimes in seconds. */
const BENCH = [
  makeEvalRow("roberta-base", 0.9, 8),
  makeEvalRow("bert-base", 0.89, 10),
  makeEvalRow("distilbert-base", 0.88, 7),
  makeEvalRow("xlnet-base", 0.87, 23),
  makeEvalRow("llama3-70b", 0.86, 139 * 60),
  makeEvalRow("longformer-base", 0.86, 24),
  makeEvalRow("deepseek-r1-70b", 0.85, 723 * 60),
  makeEvalRow("gemma3-27b", 0.81, 80 * 60),
  makeEvalRow("qwen3-32b", 0.79, 460 * 60),
  makeEvalRow("logreg-tfidf", 0.66, 0.1),
];

describe("scatter layout", () => {
  it("plots all ten benchmark backends", () => {
    const layout = layoutScatter(BENCH);
    expect(layout.points).toHaveLength(10);
    expect(layout.omitted).toEqual([]);
  });

  it("puts logistic regression at the lowest F1", () => {
    const layout = layoutScatter(BENCH);
    const lowest = layout.points.reduce((a, b) => (a.f1 <= b.f1 ? a : b));
    expect(lowest.backendId).toBe("logreg-tfidf");
    expect(Math.max(...layout.points.map((p) => p.y))).toBe(lowest.y);
  });

  it("labels the runtime axis at 0.1, 1, 10, 100, 1000 minutes", () => {
    const layout = layoutScatter(BENCH);
    expect(layout.xTicks.map((t) => t.value)).toEqual([0.1, 1, 10, 100, 1000]);
    expect(layout.xTicks.map((t) => t.label)).toEqual(["0.1", "1", "10", "100", "1000"]);
    const positions = layout.xTicks.map((t) => t.pos);
    for (let i = 1; i < positions.length; i++) {
      expect(positions[i] - positions[i - 1]).toBeCloseTo(positions[1] - positions[0], 6);
    }
  });

  it("keeps points inside the canvas even beyond the labeled decades", () => {
    const layout = layoutScatter(BENCH);
    for (const p of layout.points) {
      expect(p.x).toBeGreaterThanOrEqual(0);
      expect(p.x).toBeLessThanOrEqual(layout.width);
      expect(p.y).toBeGreaterThanOrEqual(layout.pad);
      expect(p.y).toBeLessThanOrEqual(layout.height - layout.pad);
    }
    const fastest = layout.points.find((p) => p.backendId === "logreg-tfidf")!;
    const leftTick = layout.xTicks[0];
    expect(fastest.x).toBeLessThan(leftTick.pos);
  });

  it("orders x positions by runtime", () => {
    const layout = layoutScatter(BENCH);
    const sorted = [...layout.points].sort((a, b) => a.runtimeMin - b.runtimeMin);
    const xs = sorted.map((p) => p.x);
    for (let i = 1; i < xs.length; i++) expect(xs[i]).toBeGreaterThan(xs[i - 1]);
  });

  it("omits rows without a measured test runtime", () => {
    const rows = [...BENCH, makeEvalRow("llama3-70b-sizes", 0.84, null)];
    const layout = layoutScatter(rows);
    expect(layout.points).toHaveLength(10);
    expect(layout.omitted).toEqual(["llama3-70b-sizes"]);
  });

  it("defaults the domain to the canonical band", () => {
    expect(runtimeDomain([])).toEqual([-1, 3]);
    expect(RUNTIME_TICKS_MIN).toEqual([0.1, 1, 10, 100, 1000]);
  });

  it("widens the domain for data outside the band without adding labels", () => {
    const [lo, hi] = runtimeDomain([0.001, 5000]);
    expect(lo).toBe(-3);
    expect(hi).toBe(4);
  });
});
