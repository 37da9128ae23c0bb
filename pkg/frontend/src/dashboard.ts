/** HTML and SVG builders for the performance dashboard.
 *
 * Everything returns markup strings built from already-fetched data;
 * the app shell owns fetching and insertion. All dynamic text is
 * escaped here, so callers never touch innerHTML-unsafe values.
 */

import { formatMetric, formatRate, formatRuntime } from "./format.js";
import { layoutScatter } from "./scatter.js";
import type { AgreementStats, EvalRow, MetricsPayload } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function comparisonTable(rows: EvalRow[]): string {
  if (rows.length === 0) {
    return `<p class="empty">No evaluation results loaded.</p>`;
  }
  const ranked = [...rows].sort((a, b) => (b.f1 ?? -1) - (a.f1 ?? -1));
  const body = ranked
    .map(
      (r) => `<tr>
<td>${escapeHtml(r.backend_id)}</td>
<td>${formatMetric(r.f1)}</td>
<td>${formatMetric(r.precision)}</td>
<td>${formatMetric(r.recall)}</td>
<td>${formatMetric(r.accuracy)}</td>
<td>${r.sum_of_falses}</td>
<td>${formatRuntime(r.train_s)}</td>
<td>${formatRuntime(r.test_s)}</td>
</tr>`,
    )
    .join("\n");
  return `<table class="metrics">
<thead><tr><th>backend</th><th>F1</th><th>precision</th><th>recall</th>
<th>accuracy</th><th>falses</th><th>train</th><th>test</th></tr></thead>
<tbody>
${body}
</tbody>
</table>`;
}

export function agreementTable(stats: AgreementStats): string {
  const ids = Object.keys(stats).sort();
  if (ids.length === 0) {
    return `<p class="empty">No resolved reviews yet.</p>`;
  }
  const body = ids
    .map((id) => {
      const s = stats[id];
      return `<tr><td>${escapeHtml(id)}</td><td>${formatRate(s.agree, s.total)}</td><td>${s.disagree}</td></tr>`;
    })
    .join("\n");
  return `<table class="metrics">
<thead><tr><th>backend</th><th>agrees with analyst</th><th>disagreements</th></tr></thead>
<tbody>
${body}
</tbody>
</table>`;
}

export function scatterSvg(rows: EvalRow[]): string {
  const layout = layoutScatter(rows);
  if (layout.points.length === 0) {
    return `<p class="empty">Nothing to plot: no run has a measured test runtime.</p>`;
  }
  const { width, height, pad } = layout;
  const parts: string[] = [
    `<svg class="scatter" viewBox="0 0 ${width} ${height}" role="img" aria-label="F1 versus test runtime">`,
  ];
  for (const t of layout.xTicks) {
    parts.push(
      `<line x1="${t.pos}" y1="${pad}" x2="${t.pos}" y2="${height - pad}" class="grid"/>`,
      `<text x="${t.pos}" y="${height - pad + 16}" class="tick" text-anchor="middle">${t.label}</text>`,
    );
  }
  for (const t of layout.yTicks) {
    parts.push(
      `<line x1="${pad}" y1="${t.pos}" x2="${width - pad}" y2="${t.pos}" class="grid"/>`,
      `<text x="${pad - 6}" y="${t.pos + 4}" class="tick" text-anchor="end">${t.label}</text>`,
    );
  }
  for (const p of layout.points) {
    parts.push(
      `<circle cx="${p.x.toFixed(1)}" cy="${p.y.toFixed(1)}" r="5"><title>${escapeHtml(
        `${p.backendId}: F1 ${p.f1.toFixed(2)}, ${p.runtimeMin.toFixed(2)} min`,
      )}</title></circle>`,
      `<text x="${(p.x + 8).toFixed(1)}" y="${(p.y - 6).toFixed(1)}" class="pt">${escapeHtml(p.backendId)}</text>`,
    );
  }
  parts.push(
    `<text x="${width / 2}" y="${height - 8}" class="axis" text-anchor="middle">test runtime (min, log scale)</text>`,
    `<text x="14" y="${height / 2}" class="axis" text-anchor="middle" transform="rotate(-90 14 ${height / 2})">F1</text>`,
    `</svg>`,
  );
  if (layout.omitted.length > 0) {
    parts.push(
      `<p class="footnote">Not plotted (no test runtime): ${layout.omitted.map(escapeHtml).join(", ")}</p>`,
    );
  }
  return parts.join("\n");
}

export function dashboardView(payload: MetricsPayload): string {
  return `<section>
<h2>Model comparison</h2>
${comparisonTable(payload.evaluation)}
</section>
<section>
<h2>Quality vs. runtime</h2>
${scatterSvg(payload.evaluation)}
</section>
<section>
<h2>Agreement with analysts</h2>
${agreementTable(payload.agreement)}
<p class="footnote">Queue: ${payload.queue.pending} pending,
${payload.queue.resolved} resolved, ${payload.queue.skipped} skipped.</p>
</section>`;
}
