/** Wire types, mirroring the review service JSON field for field. */

export interface Verdict {
  backend_id: string;
  record_id: string;
  answer: "YES" | "NO";
  probability: number;
  explanation: string;
  latency_ms: number;
  prompt_version: string;
  raw_response: string;
  error?: undefined;
}

export interface BackendFailure {
  backend_id: string;
  record_id: string;
  category: string;
  message: string;
  error: true;
}

export type PanelEntry = Verdict | BackendFailure;

export function isFailure(v: PanelEntry): v is BackendFailure {
  return v.error === true;
}

export interface Decision {
  record_id: string;
  verdicts: PanelEntry[];
  outcome: "AutoYes" | "AutoNo" | "Flagged";
  reason: string;
}

export interface Resolution {
  is_secondary: boolean;
  analyst: string;
  note: string | null;
  resolved_at: string;
}

export type ReviewStatus = "Pending" | "Resolved" | "Skipped";

export interface QueueItem {
  record_id: string;
  decision: Decision;
  status: ReviewStatus;
  enqueued_at: string;
  resolution: Resolution | null;
  answer_split: { YES: number; NO: number; error: number };
  narrative: string | null;
  indicator_matches: string[];
}

export interface QueuePage {
  items: QueueItem[];
  page: number;
  page_size: number;
  total: number;
  total_pages: number;
}

export interface RecordDetail {
  record: Record<string, unknown> & { record_id: string; narrative: string };
  indicator_matches: string[];
  review_item: Omit<QueueItem, "answer_split" | "narrative" | "indicator_matches"> | null;
  label: {
    record_id: string;
    is_secondary: boolean;
    source: string;
    note: string | null;
    labeled_at: string;
  } | null;
}

export interface EvalRow {
  backend_id: string;
  tn: number;
  fp: number;
  fn: number;
  tp: number;
  sum_of_falses: number;
  precision: number | null;
  recall: number | null;
  f1: number | null;
  accuracy: number | null;
  train_s: number | null;
  test_s: number | null;
}

export interface AgreementStats {
  [backendId: string]: { agree: number; disagree: number; total: number };
}

export interface QueueCounts {
  pending: number;
  resolved: number;
  skipped: number;
}

export interface MetricsPayload {
  evaluation: EvalRow[];
  agreement: AgreementStats;
  queue: QueueCounts;
}

export interface HealthPayload {
  status: string;
  records: number;
  queue: QueueCounts;
}

export interface ResolveBody {
  is_secondary: boolean;
  analyst: string;
  note?: string | null;
}
