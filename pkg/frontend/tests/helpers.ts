/** Shared builders and an in-memory stand-in for the review service.
 *
 * The fake speaks the same routes, payload shapes, and status codes as
 * the real API (409 on double-resolve, 422 on blank analyst, bearer
 * auth on mutations only), so client tests exercise the real contract.
 */

import type {
  AgreementStats,
  EvalRow,
  PanelEntry,
  QueueItem,
  Verdict,
} from "../src/types.js";

export function makeVerdict(
  backendId: string,
  recordId: string,
  answer: "YES" | "NO",
  probability = answer === "YES" ? 0.9 : 0.1,
): Verdict {
  return {
    backend_id: backendId,
    record_id: recordId,
    answer,
    probability,
    explanation: `for test record ${recordId}`,
    latency_ms: 12,
    prompt_version: "v3",
    raw_response: "",
  };
}

export function makeItem(
  recordId: string,
  opts: {
    verdicts?: PanelEntry[];
    enqueuedAt?: string;
    narrative?: string | null;
    matches?: string[];
  } = {},
): QueueItem {
  const verdicts = opts.verdicts ?? [
    makeVerdict("llm-a", recordId, "YES"),
    makeVerdict("llm-b", recordId, "NO"),
  ];
  const split = { YES: 0, NO: 0, error: 0 };
  for (const v of verdicts) {
    if (v.error) split.error += 1;
    else split[(v as Verdict).answer] += 1;
  }
  return {
    record_id: recordId,
    decision: {
      record_id: recordId,
      verdicts,
      outcome: "Flagged",
      reason: "backends disagree",
    },
    status: "Pending",
    enqueued_at: opts.enqueuedAt ?? "2024-03-01T09:00:00",
    resolution: null,
    answer_split: split,
    narrative:
      opts.narrative === undefined
        ? `unit 1 slowed for an earlier crash ahead (${recordId})`
        : opts.narrative,
    indicator_matches: opts.matches ?? ["crash"],
  };
}

export function makeEvalRow(
  backendId: string,
  f1: number,
  testS: number | null,
  trainS: number | null = null,
): EvalRow {
  return {
    backend_id: backendId,
    tn: 100,
    fp: 10,
    fn: 10,
    tp: 40,
    sum_of_falses: 20,
    precision: f1,
    recall: f1,
    f1,
    accuracy: 0.9,
    train_s: trainS,
    test_s: testS,
  };
}

export function memoryStorage() {
  const map = new Map<string, string>();
  return {
    getItem: (k: string) => map.get(k) ?? null,
    setItem: (k: string, v: string) => void map.set(k, v),
    removeItem: (k: string) => void map.delete(k),
  };
}

interface StoredLabel {
  record_id: string;
  is_secondary: boolean;
  source: string;
  note: string | null;
}

export class FakeReviewService {
  readonly labels: StoredLabel[] = [];
  requests = 0;

  constructor(
    private readonly items: QueueItem[],
    private readonly evaluation: EvalRow[] = [],
    private readonly token = "",
  ) {}

  /** Bind for use as an ApiClient fetchFn. */
  readonly fetch = async (url: string, init?: RequestInit): Promise<Response> => {
    this.requests += 1;
    const u = new URL(url, "http://fake");
    const method = init?.method ?? "GET";

    if (method === "POST" && this.token) {
      const got = new Headers(init?.headers).get("Authorization");
      if (got !== `Bearer ${this.token}`) {
        return json(401, { detail: "missing or invalid bearer token" });
      }
    }

    const resolveMatch = u.pathname.match(/^\/review\/([^/]+)\/resolve$/);
    const skipMatch = u.pathname.match(/^\/review\/([^/]+)\/skip$/);
    if (u.pathname === "/review/queue") return this.queuePage(u);
    if (resolveMatch) {
      return this.resolve(decodeURIComponent(resolveMatch[1]), init?.body);
    }
    if (skipMatch) return this.skip(decodeURIComponent(skipMatch[1]));
    if (u.pathname === "/metrics") return this.metrics();
    if (u.pathname === "/health") {
      return json(200, { status: "ok", records: this.items.length, queue: this.counts() });
    }
    return json(404, { detail: `unknown path ${u.pathname}` });
  };

  private find(recordId: string): QueueItem | undefined {
    return this.items.find((i) => i.record_id === recordId);
  }

  private counts() {
    const counts = { pending: 0, resolved: 0, skipped: 0 };
    for (const i of this.items) {
      counts[i.status.toLowerCase() as keyof typeof counts] += 1;
    }
    return counts;
  }

  private queuePage(u: URL): Response {
    const status = (u.searchParams.get("status") ?? "pending").toLowerCase();
    const wanted =
      status === "all" ? null : status[0].toUpperCase() + status.slice(1);
    if (wanted !== null && !["Pending", "Resolved", "Skipped"].includes(wanted)) {
      return json(422, { detail: `unknown status '${status}'` });
    }
    const rows = this.items.filter((i) => wanted === null || i.status === wanted);
    return json(200, {
      items: rows,
      page: 1,
      page_size: 50,
      total: rows.length,
      total_pages: 1,
    });
  }

  private resolve(recordId: string, rawBody: unknown): Response {
    const item = this.find(recordId);
    if (!item) return json(404, { detail: `no review item for record '${recordId}'` });
    if (item.status === "Resolved") {
      return json(409, { detail: `record '${recordId}' was already resolved` });
    }
    const body = JSON.parse(String(rawBody)) as {
      is_secondary: boolean;
      analyst: string;
      note?: string | null;
    };
    if (!body.analyst || !body.analyst.trim()) {
      return json(422, { detail: "analyst must be non-empty" });
    }
    item.status = "Resolved";
    item.resolution = {
      is_secondary: body.is_secondary,
      analyst: body.analyst,
      note: body.note ?? null,
      resolved_at: "2024-03-01T10:00:00",
    };
    this.labels.push({
      record_id: recordId,
      is_secondary: body.is_secondary,
      source: "AnalystUI",
      note: body.note ?? null,
    });
    return json(200, item);
  }

  private skip(recordId: string): Response {
    const item = this.find(recordId);
    if (!item) return json(404, { detail: `no review item for record '${recordId}'` });
    if (item.status === "Resolved") {
      return json(409, { detail: `record '${recordId}' was already resolved` });
    }
    item.status = "Skipped";
    return json(200, item);
  }

  private metrics(): Response {
    const agreement: AgreementStats = {};
    for (const item of this.items) {
      if (item.status !== "Resolved" || !item.resolution) continue;
      for (const v of item.decision.verdicts) {
        if (v.error) continue;
        const entry = (agreement[v.backend_id] ??= {
          agree: 0,
          disagree: 0,
          total: 0,
        });
        const agrees = (v.answer === "YES") === item.resolution.is_secondary;
        entry[agrees ? "agree" : "disagree"] += 1;
        entry.total += 1;
      }
    }
    return json(200, {
      evaluation: this.evaluation,
      agreement,
      queue: this.counts(),
    });
  }
}

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}
