/** Split a narrative into plain and highlighted segments.
 *
 * The matched terms come from the server's indicator scan; this module
 * just locates every case-insensitive occurrence and merges overlaps,
 * leaving the narrative text itself untouched.
 */

export interface Segment {
  text: string;
  hit: boolean;
}

export function segments(narrative: string, matches: string[]): Segment[] {
  if (!narrative) return [];
  const spans: Array<[number, number]> = [];
  const lower = narrative.toLowerCase();
  for (const raw of matches) {
    const needle = raw.toLowerCase();
    if (!needle) continue;
    let from = 0;
    for (;;) {
      const at = lower.indexOf(needle, from);
      if (at < 0) break;
      spans.push([at, at + needle.length]);
      from = at + 1;
    }
  }
  if (spans.length === 0) return [{ text: narrative, hit: false }];

  spans.sort((a, b) => a[0] - b[0] || a[1] - b[1]);
  const merged: Array<[number, number]> = [spans[0]];
  for (const [start, end] of spans.slice(1)) {
    const last = merged[merged.length - 1];
    if (start <= last[1]) last[1] = Math.max(last[1], end);
    else merged.push([start, end]);
  }

  const out: Segment[] = [];
  let cursor = 0;
  for (const [start, end] of merged) {
    if (start > cursor) out.push({ text: narrative.slice(cursor, start), hit: false });
    out.push({ text: narrative.slice(start, end), hit: true });
    cursor = end;
  }
  if (cursor < narrative.length) out.push({ text: narrative.slice(cursor), hit: false });
  return out;
}
