/** UI session state: the current query, its parameters, and the history.
 *
 * At most one search request is in flight; submitting again aborts the
 * earlier request. Every accepted submission is appended to the history
 * log, so a session's final state is reproducible by replaying the log.
 */

import {
  SearchMode,
  SearchRequest,
  SearchResponse,
  ServiceClient,
} from "./api.js";

export interface QuerySpec {
  kind: "vector" | "doc_id";
  vector?: number[];
  docId?: string;
}

export interface SearchParams {
  mode: SearchMode;
  lambda: number;
  k: number;
  q?: number;
}

export interface HistoryEntry {
  spec: QuerySpec;
  params: SearchParams;
}

/** Parse a pasted vector: comma or whitespace separated numbers. */
export function parseVectorText(text: string): number[] {
  const parts = text.split(/[\s,]+/).filter((p) => p.length > 0);
  if (parts.length === 0) throw new Error("empty vector");
  return parts.map((p) => {
    const v = Number(p);
    if (!Number.isFinite(v)) throw new Error(`not a number: "${p}"`);
    return v;
  });
}

/** First data row of an uploaded CSV: optional leading id, then values. */
export function parseCsvRow(text: string): { id?: string; vector: number[] } {
  const line = text.split(/\r?\n/).find((l) => l.trim().length > 0);
  if (!line) throw new Error("empty file");
  const cells = line.split(",").map((c) => c.trim());
  if (cells.length > 1 && !Number.isFinite(Number(cells[0]))) {
    return { id: cells[0], vector: parseVectorText(cells.slice(1).join(",")) };
  }
  return { vector: parseVectorText(line) };
}

function toRequest(spec: QuerySpec, params: SearchParams): SearchRequest {
  const body: SearchRequest = { mode: params.mode };
  if (spec.kind === "vector") body.vector = spec.vector;
  else body.doc_id = spec.docId;
  if (params.mode === "top_k") body.k = params.k;
  else body.lambda = params.lambda;
  if (params.mode === "nearest_neighbor") body.eta = 1.645;
  if (params.q !== undefined && params.q !== 1) body.q = params.q;
  return body;
}

export class SearchController {
  readonly history: HistoryEntry[] = [];
  lastResponse: SearchResponse | null = null;
  private inflight: AbortController | null = null;

  constructor(private readonly client: ServiceClient) {}

  /** Submit a query, cancelling any in-flight one. */
  async submit(spec: QuerySpec, params: SearchParams): Promise<SearchResponse> {
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    const response = await this.client.search(
      toRequest(spec, params),
      controller.signal,
    );
    if (this.inflight === controller) this.inflight = null;
    this.history.push({ spec, params });
    this.lastResponse = response;
    return response;
  }

  /** Re-issue every logged query in order; ends in the same state. */
  async replay(log: HistoryEntry[]): Promise<SearchResponse | null> {
    let last: SearchResponse | null = null;
    for (const entry of log) {
      last = await this.submit(entry.spec, entry.params);
    }
    return last;
  }
}
