/** Typed client for the search service's HTTP+JSON API.
 *
 * The UI computes nothing itself: every number rendered on screen comes
 * out of these response payloads verbatim.
 */

export interface SearchResultEntry {
  doc_id: string;
  score: number;
  raw_count: number;
  true_inner?: number;
}

export interface SearchResponse {
  results: SearchResultEntry[];
  mode: string;
  cutoff: { rule: string; count_threshold: number | null };
  query_support_size: number;
  h_query: number;
}

export interface DocRecord {
  doc_id: string;
  support_size: number;
  vector?: number[];
}

export interface HealthInfo {
  status: string;
  doc_count: number;
  m: number;
  d: number;
  kind: string;
  has_vectors: boolean;
}

export type SearchMode = "top_k" | "threshold" | "nearest_neighbor";

export interface SearchRequest {
  vector?: number[];
  doc_id?: string;
  mode: SearchMode;
  k?: number;
  lambda?: number;
  eta?: number;
  q?: number;
}

/** Service-reported failure (4xx/5xx); message is surfaced verbatim. */
export class ServiceError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ServiceError";
  }
}

/** Network-level failure (service unreachable). */
export class OfflineError extends Error {
  constructor() {
    super("search service unreachable");
    this.name = "OfflineError";
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  const body = await resp.json().catch(() => ({}));
  if (!resp.ok) {
    const message =
      typeof (body as { error?: unknown }).error === "string"
        ? (body as { error: string }).error
        : `HTTP ${resp.status}`;
    throw new ServiceError(resp.status, message);
  }
  return body as T;
}

export class ServiceClient {
  constructor(readonly baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let resp: Response;
    try {
      resp = await fetch(this.baseUrl + path, init);
    } catch (err) {
      if (err instanceof DOMException && err.name === "AbortError") throw err;
      throw new OfflineError();
    }
    return asJson<T>(resp);
  }

  health(): Promise<HealthInfo> {
    return this.request<HealthInfo>("/healthz");
  }

  doc(docId: string): Promise<DocRecord> {
    return this.request<DocRecord>(`/doc/${encodeURIComponent(docId)}`);
  }

  search(body: SearchRequest, signal?: AbortSignal): Promise<SearchResponse> {
    return this.request<SearchResponse>("/search", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
      signal,
    });
  }
}
