import { describe, expect, it } from "vitest";

import { focusedItem, fromItems, moveFocus, putBack, takeOut } from "../src/queue.js";
import { makeItem } from "./helpers.js";

const A = makeItem("A", { enqueuedAt: "2024-03-01T09:00:00" });
const B = makeItem("B", { enqueuedAt: "2024-03-01T09:05:00" });
const C = makeItem("C", { enqueuedAt: "2024-03-01T09:10:00" });

describe("queue list state", () => {
  it("orders oldest first and focuses the head", () => {
    const state = fromItems([C, A, B]);
    expect(state.items.map((i) => i.record_id)).toEqual(["A", "B", "C"]);
    expect(state.focusId).toBe("A");
  });

  it("breaks enqueue-time ties by record id", () => {
    const twin = makeItem("AA", { enqueuedAt: A.enqueued_at });
    const state = fromItems([twin, A]);
    expect(state.items.map((i) => i.record_id)).toEqual(["A", "AA"]);
  });

  it("optimistic removal slides focus to the next row", () => {
    let state = fromItems([A, B, C]);
    const out = takeOut(state, "A");
    state = out.state;
    expect(out.removed?.record_id).toBe("A");
    expect(state.items.map((i) => i.record_id)).toEqual(["B", "C"]);
    expect(state.focusId).toBe("B");
  });

  it("removing the last row moves focus backwards", () => {
    let state = fromItems([A, B]);
    state = { ...state, focusId: "B" };
    state = takeOut(state, "B").state;
    expect(state.focusId).toBe("A");
  });

  it("removing an unknown id changes nothing", () => {
    const state = fromItems([A, B]);
    const out = takeOut(state, "ZZ");
    expect(out.removed).toBeNull();
    expect(out.state).toBe(state);
  });

  it("rollback restores the exact order and refocuses the row", () => {
    const original = fromItems([A, B, C]);
    const { state, removed } = takeOut(original, "B");
    const restored = putBack(state, removed!);
    expect(restored.items.map((i) => i.record_id)).toEqual(["A", "B", "C"]);
    expect(restored.focusId).toBe("B");
    expect(focusedItem(restored)).toBe(removed);
  });

  it("rollback never duplicates a row that is already back", () => {
    const state = fromItems([A, B]);
    expect(putBack(state, A).items).toHaveLength(2);
  });

  it("focus movement clamps at both ends and survives empty lists", () => {
    let state = fromItems([A, B, C]);
    state = moveFocus(state, -5);
    expect(state.focusId).toBe("A");
    state = moveFocus(state, 1);
    expect(state.focusId).toBe("B");
    state = moveFocus(state, 99);
    expect(state.focusId).toBe("C");
    expect(moveFocus(fromItems([]), 1).focusId).toBeNull();
  });
});
