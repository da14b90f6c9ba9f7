/** DOM rendering. Display order always equals response order, and every
 * number is formatted from the parsed JSON value with String(), the
 * canonical shortest round-trip rendering: no client-side arithmetic,
 * rounding, or re-sorting.
 */

import { SearchResponse, SearchResultEntry } from "./api.js";

export function formatNumber(value: number | null | undefined): string {
  return value === null || value === undefined ? "" : String(value);
}

/** Deterministic bar chart of a vector, bars in dimension order. */
export function renderHistogram(vector: number[] | undefined): HTMLElement | null {
  if (!vector || vector.length === 0) return null;
  const chart = document.createElement("div");
  chart.className = "histogram";
  const maxAbs = Math.max(...vector.map((v) => Math.abs(v)), 1e-12);
  vector.forEach((v, i) => {
    const bar = document.createElement("span");
    bar.className = "bar" + (v < 0 ? " negative" : "");
    bar.style.height = `${(100 * Math.abs(v)) / maxAbs}%`;
    bar.title = `dim ${i}: ${String(v)}`;
    chart.appendChild(bar);
  });
  return chart;
}

function renderRow(entry: SearchResultEntry, rank: number): HTMLElement {
  const row = document.createElement("li");
  row.className = "result";
  row.dataset.docId = entry.doc_id;

  const head = document.createElement("div");
  head.className = "result-head";
  head.innerHTML =
    `<span class="rank">${rank}</span>` +
    `<span class="doc-id"></span>` +
    `<span class="score" title="overlap score"></span>` +
    `<span class="raw-count" title="raw overlap count"></span>` +
    `<span class="true-inner" title="true inner product"></span>`;
  (head.querySelector(".doc-id") as HTMLElement).textContent = entry.doc_id;
  (head.querySelector(".score") as HTMLElement).textContent = formatNumber(
    entry.score,
  );
  (head.querySelector(".raw-count") as HTMLElement).textContent = formatNumber(
    entry.raw_count,
  );
  (head.querySelector(".true-inner") as HTMLElement).textContent =
    entry.true_inner === undefined ? "" : formatNumber(entry.true_inner);
  row.appendChild(head);
  return row;
}

/** Render the ranked list; returns the per-row elements for decoration. */
export function renderResults(
  container: HTMLElement,
  response: SearchResponse,
): HTMLElement[] {
  container.textContent = "";
  const list = document.createElement("ol");
  list.className = "results";
  const rows = response.results.map((entry, i) => renderRow(entry, i + 1));
  rows.forEach((row) => list.appendChild(row));
  container.appendChild(list);
  if (response.results.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty";
    empty.textContent = "no documents above the cutoff";
    container.appendChild(empty);
  }
  return rows;
}

/** The parameter panel's transparency line: the service-resolved cutoff. */
export function renderCutoff(element: HTMLElement, response: SearchResponse): void {
  const threshold = response.cutoff.count_threshold;
  element.textContent =
    threshold === null
      ? `rule: ${response.cutoff.rule}`
      : `rule: ${response.cutoff.rule}, cutoff count: ${formatNumber(threshold)}`;
}

/** Attach a histogram under a result row (skipped if no vector). */
export function attachHistogram(row: HTMLElement, vector?: number[]): void {
  const chart = renderHistogram(vector);
  if (chart) row.appendChild(chart);
}
