/** Markup builders for the adjudication list. */

import { escapeHtml } from "./dashboard.js";
import { describeSplit, formatAge, formatProbability } from "./format.js";
import { segments } from "./highlight.js";
import { isFailure, type Decision, type QueueItem } from "./types.js";

export function narrativeHtml(narrative: string | null, matches: string[]): string {
  if (!narrative) return `<em>narrative unavailable</em>`;
  return segments(narrative, matches)
    .map((s) => (s.hit ? `<mark>${escapeHtml(s.text)}</mark>` : escapeHtml(s.text)))
    .join("");
}

export function verdictChips(decision: Decision): string {
  return decision.verdicts
    .map((v) => {
      if (isFailure(v)) {
        return `<span class="chip err" title="${escapeHtml(v.message)}">${escapeHtml(
          v.backend_id,
        )}: error (${escapeHtml(v.category)})</span>`;
      }
      const cls = v.answer === "YES" ? "yes" : "no";
      return `<span class="chip ${cls}" title="${escapeHtml(v.explanation)}">${escapeHtml(
        v.backend_id,
      )}: ${v.answer} ${formatProbability(v.probability)}</span>`;
    })
    .join(" ");
}

export function queueRow(item: QueueItem, focused: boolean, now: Date): string {
  const id = escapeHtml(item.record_id);
  return `<li class="row${focused ? " focused" : ""}" data-id="${id}" tabindex="0">
<div class="rowhead">
  <span class="rid">${id}</span>
  <span class="split">${escapeHtml(describeSplit(item.answer_split))}</span>
  <span class="age" title="${escapeHtml(item.enqueued_at)}">${formatAge(item.enqueued_at, now)}</span>
</div>
<p class="narrative">${narrativeHtml(item.narrative, item.indicator_matches)}</p>
<div class="verdicts">${verdictChips(item.decision)}</div>
<p class="reason">${escapeHtml(item.decision.reason)}</p>
<div class="actions">
  <input class="note" placeholder="note (optional)" aria-label="note for ${id}">
  <button data-act="yes" data-id="${id}">secondary (Y)</button>
  <button data-act="no" data-id="${id}">not secondary (N)</button>
  <button data-act="skip" data-id="${id}">skip (S)</button>
</div>
</li>`;
}

export function emptyState(status: string): string {
  if (status === "pending") {
    return `<p class="empty big">Queue clear. Nothing is waiting for review.</p>`;
  }
  return `<p class="empty big">No ${escapeHtml(status)} items.</p>`;
}

export function pager(page: number, totalPages: number): string {
  if (totalPages <= 1) return "";
  return `<div class="pager">
<button data-page="${page - 1}" ${page <= 1 ? "disabled" : ""}>newer</button>
<span>page ${page} of ${totalPages}</span>
<button data-page="${page + 1}" ${page >= totalPages ? "disabled" : ""}>older</button>
</div>`;
}
