/** Small display formatters shared by the queue and dashboard views. */

import type { QueueItem } from "./types.js";

/** "2 YES / 1 NO", with errors appended only when present. */
export function describeSplit(split: QueueItem["answer_split"]): string {
  const parts = [`${split.YES} YES / ${split.NO} NO`];
  if (split.error > 0) parts.push(`${split.error} error`);
  return parts.join(" / ");
}

/** Coarse age like "5m", "3h", "2d"; sub-minute shows as "<1m". */
export function formatAge(enqueuedAtIso: string, now: Date = new Date()): string {
  const then = new Date(enqueuedAtIso).getTime();
  const minutes = Math.floor((now.getTime() - then) / 60_000);
  if (minutes < 1) return "<1m";
  if (minutes < 60) return `${minutes}m`;
  const hours = Math.floor(minutes / 60);
  if (hours < 24) return `${hours}h`;
  return `${Math.floor(hours / 24)}d`;
}

export function formatMetric(x: number | null): string {
  return x === null ? "—" : x.toFixed(2);
}

export function formatRuntime(seconds: number | null): string {
  if (seconds === null) return "—";
  if (seconds < 1) return `${seconds.toFixed(2)} s`;
  if (seconds < 120) return `${Math.round(seconds)} s`;
  return `${Math.round(seconds / 60)} min`;
}

export function formatRate(agree: number, total: number): string {
  if (total === 0) return "—";
  return `${Math.round((agree / total) * 100)}% (${agree}/${total})`;
}

export function formatProbability(p: number): string {
  return `${Math.round(p * 100)}%`;
}
