/** Wire the page together: query input, parameter panel, results pane. */

import { OfflineError, ServiceClient, ServiceError } from "./api.js";
import { renderCutoff, renderHistogram, renderResults, attachHistogram } from "./render.js";
import {
  parseCsvRow,
  parseVectorText,
  QuerySpec,
  SearchController,
  SearchParams,
} from "./state.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export function setupApp(root: Document, serviceUrl: string): SearchController {
  const client = new ServiceClient(serviceUrl);
  const controller = new SearchController(client);

  const vectorInput = el<HTMLTextAreaElement>("vector-input");
  const docIdInput = el<HTMLInputElement>("doc-id-input");
  const modeSelect = el<HTMLSelectElement>("mode-select");
  const lambdaInput = el<HTMLInputElement>("lambda-input");
  const lambdaValue = el<HTMLSpanElement>("lambda-value");
  const kInput = el<HTMLInputElement>("k-input");
  const qInput = el<HTMLInputElement>("q-input");
  const submitButton = el<HTMLButtonElement>("submit-button");
  const errorBox = el<HTMLElement>("error-box");
  const offlineBanner = el<HTMLElement>("offline-banner");
  const cutoffLine = el<HTMLElement>("cutoff-line");
  const resultsPane = el<HTMLElement>("results-pane");
  const queryChart = el<HTMLElement>("query-histogram");

  lambdaInput.addEventListener("input", () => {
    lambdaValue.textContent = lambdaInput.value;
  });

  const fileInput = el<HTMLInputElement>("csv-input");
  fileInput.addEventListener("change", async () => {
    const file = fileInput.files?.[0];
    if (!file) return;
    try {
      const row = parseCsvRow(await file.text());
      vectorInput.value = row.vector.join(", ");
      if (row.id) docIdInput.value = "";
      errorBox.textContent = "";
    } catch (err) {
      errorBox.textContent = (err as Error).message;
    }
  });

  function currentSpec(): QuerySpec {
    const pasted = vectorInput.value.trim();
    if (pasted) return { kind: "vector", vector: parseVectorText(pasted) };
    const docId = docIdInput.value.trim();
    if (docId) return { kind: "doc_id", docId };
    throw new Error("paste a vector or enter a document id");
  }

  function currentParams(): SearchParams {
    return {
      mode: modeSelect.value as SearchParams["mode"],
      lambda: Number(lambdaInput.value),
      k: Number(kInput.value),
      q: qInput.value ? Number(qInput.value) : undefined,
    };
  }

  async function runSearch(): Promise<void> {
    errorBox.textContent = "";
    offlineBanner.hidden = true;
    let spec: QuerySpec;
    try {
      spec = currentSpec();  // local validation: no request on bad input
    } catch (err) {
      errorBox.textContent = (err as Error).message;
      return;
    }
    try {
      const response = await controller.submit(spec, currentParams());
      const rows = renderResults(resultsPane, response);
      renderCutoff(cutoffLine, response);
      queryChart.textContent = "";
      if (spec.kind === "vector" && spec.vector) {
        const chart = renderHistogram(spec.vector);
        if (chart) queryChart.appendChild(chart);
      }
      // histograms come from stored vectors; purely decorative and async
      response.results.forEach((entry, i) => {
        client
          .doc(entry.doc_id)
          .then((record) => attachHistogram(rows[i], record.vector))
          .catch(() => undefined);
      });
    } catch (err) {
      if (err instanceof DOMException && err.name === "AbortError") return;
      if (err instanceof OfflineError) {
        offlineBanner.hidden = false;
      } else if (err instanceof ServiceError) {
        errorBox.textContent = err.message;  // 4xx text shown verbatim
      } else {
        errorBox.textContent = (err as Error).message;
      }
    }
  }

  submitButton.addEventListener("click", () => void runSearch());
  vectorInput.addEventListener("keydown", (ev) => {
    if (ev.key === "Enter" && (ev.ctrlKey || ev.metaKey)) void runSearch();
  });
  return controller;
}

if (typeof window !== "undefined" && document.getElementById("submit-button")) {
  const params = new URLSearchParams(window.location.search);
  setupApp(document, params.get("service") ?? "http://127.0.0.1:8080");
}
