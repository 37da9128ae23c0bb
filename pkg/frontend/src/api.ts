/** Thin typed client over the review service REST endpoints.
 *
 * The bearer token is entered once and kept in session storage; every
 * mutation sends it. Network failures and HTTP errors surface as typed
 * exceptions so callers can distinguish "service down" (banner) from
 * "request rejected" (toast).
 */

import type {
  HealthPayload,
  MetricsPayload,
  QueueItem,
  QueuePage,
  RecordDetail,
  ResolveBody,
} from "./types.js";

export const TOKEN_KEY = "crashqc.token";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

/** The service never answered: distinct from any HTTP status. */
export class OfflineError extends Error {
  constructor(cause: unknown) {
    super("service unreachable");
    this.name = "OfflineError";
    this.cause = cause;
  }
}

type FetchFn = (url: string, init?: RequestInit) => Promise<Response>;

interface TokenStorage {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export interface ApiOptions {
  baseUrl?: string;
  fetchFn?: FetchFn;
  storage?: TokenStorage;
}

export class ApiClient {
  private readonly baseUrl: string;
  private readonly fetchFn: FetchFn;
  private readonly storage: TokenStorage;

  constructor(opts: ApiOptions = {}) {
    this.baseUrl = (opts.baseUrl ?? "").replace(/\/$/, "");
    this.fetchFn = opts.fetchFn ?? ((url, init) => fetch(url, init));
    this.storage = opts.storage ?? globalThis.sessionStorage;
  }

  get token(): string {
    return this.storage.getItem(TOKEN_KEY) ?? "";
  }

  setToken(token: string): void {
    if (token) this.storage.setItem(TOKEN_KEY, token);
    else this.storage.removeItem(TOKEN_KEY);
  }

  async health(): Promise<HealthPayload> {
    return this.request("GET", "/health");
  }

  async queue(status: string, page = 1, pageSize = 50): Promise<QueuePage> {
    const q = new URLSearchParams({
      status,
      page: String(page),
      page_size: String(pageSize),
    });
    return this.request("GET", `/review/queue?${q}`);
  }

  async record(recordId: string): Promise<RecordDetail> {
    return this.request("GET", `/records/${encodeURIComponent(recordId)}`);
  }

  async resolve(recordId: string, body: ResolveBody): Promise<QueueItem> {
    return this.request(
      "POST",
      `/review/${encodeURIComponent(recordId)}/resolve`,
      body,
    );
  }

  async skip(recordId: string): Promise<QueueItem> {
    return this.request("POST", `/review/${encodeURIComponent(recordId)}/skip`);
  }

  async metrics(): Promise<MetricsPayload> {
    return this.request("GET", "/metrics");
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { Accept: "application/json" };
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;

    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, {
        method,
        headers,
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new OfflineError(err);
    }
    if (!response.ok) {
      throw new ApiError(response.status, await extractDetail(response));
    }
    return (await response.json()) as T;
  }
}

async function extractDetail(response: Response): Promise<string> {
  try {
    const data = await response.json();
    if (data && typeof data.detail === "string") return data.detail;
    return JSON.stringify(data);
  } catch {
    return response.statusText || `status ${response.status}`;
  }
}
