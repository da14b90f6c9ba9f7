import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { attachHistogram, renderHistogram } from "../src/render.js";

describe("renderHistogram", () => {
  it("identical vectors produce identical bars", () => {
    const v = [0.1, -0.4, 0.9, 0.0, 0.2];
    const a = renderHistogram(v)!;
    const b = renderHistogram([...v])!;
    expect(a.outerHTML).toBe(b.outerHTML);
  });

  it("is omitted when the vector is absent or empty", () => {
    expect(renderHistogram(undefined)).toBeNull();
    expect(renderHistogram([])).toBeNull();
    const row = document.createElement("li");
    attachHistogram(row, undefined);
    expect(row.querySelector(".histogram")).toBeNull();
  });

  it("bars follow ascending dimension order", () => {
    const chart = renderHistogram([0.5, 1.0, 0.25])!;
    const bars = [...chart.querySelectorAll<HTMLElement>(".bar")];
    expect(bars).toHaveLength(3);
    expect(bars.map((b) => b.title.split(":")[0])).toEqual([
      "dim 0",
      "dim 1",
      "dim 2",
    ]);
    // heights scale against the max-magnitude dimension
    expect(bars[1].style.height).toBe("100%");
    expect(bars[0].style.height).toBe("50%");
  });

  it("negative values get the negative bar style", () => {
    const chart = renderHistogram([0.5, -0.5])!;
    const bars = [...chart.querySelectorAll<HTMLElement>(".bar")];
    expect(bars[0].classList.contains("negative")).toBe(false);
    expect(bars[1].classList.contains("negative")).toBe(true);
  });

  it("renders the stored fixture document's vector", () => {
    const record = JSON.parse(
      readFileSync(join(__dirname, "fixtures", "doc_record.json"), "utf-8"),
    );
    const chart = renderHistogram(record.vector)!;
    expect(chart.querySelectorAll(".bar")).toHaveLength(record.vector.length);
  });
});
