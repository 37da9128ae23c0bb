/** Pure state for the adjudication list.
 *
 * The server owns the truth; this module only mirrors one page of it
 * and supports optimistic removal with exact rollback. All functions
 * return new state, so the view layer can re-render from scratch.
 */

import type { QueueItem } from "./types.js";

export interface QueueListState {
  items: QueueItem[];
  focusId: string | null;
}

function byAge(a: QueueItem, b: QueueItem): number {
  if (a.enqueued_at !== b.enqueued_at) {
    return a.enqueued_at < b.enqueued_at ? -1 : 1;
  }
  return a.record_id < b.record_id ? -1 : a.record_id > b.record_id ? 1 : 0;
}

/** Oldest first, matching the server's listing order. */
export function fromItems(items: QueueItem[]): QueueListState {
  const sorted = [...items].sort(byAge);
  return { items: sorted, focusId: sorted[0]?.record_id ?? null };
}

export function focusedItem(state: QueueListState): QueueItem | null {
  return state.items.find((i) => i.record_id === state.focusId) ?? null;
}

/** Optimistically drop an item; focus slides to its neighbor. */
export function takeOut(
  state: QueueListState,
  recordId: string,
): { state: QueueListState; removed: QueueItem | null } {
  const idx = state.items.findIndex((i) => i.record_id === recordId);
  if (idx < 0) return { state, removed: null };
  const items = state.items.slice(0, idx).concat(state.items.slice(idx + 1));
  let focusId = state.focusId;
  if (focusId === recordId) {
    focusId = (items[idx] ?? items[idx - 1])?.record_id ?? null;
  }
  return { state: { items, focusId }, removed: state.items[idx] };
}

/** Rollback for a failed mutation: the item returns to its slot. */
export function putBack(state: QueueListState, item: QueueItem): QueueListState {
  if (state.items.some((i) => i.record_id === item.record_id)) return state;
  const items = [...state.items, item].sort(byAge);
  return { items, focusId: item.record_id };
}

export function moveFocus(state: QueueListState, delta: number): QueueListState {
  if (state.items.length === 0) return { ...state, focusId: null };
  const idx = state.items.findIndex((i) => i.record_id === state.focusId);
  const next = idx < 0 ? 0 : Math.min(Math.max(idx + delta, 0), state.items.length - 1);
  return { ...state, focusId: state.items[next].record_id };
}
