"""Time-series search: find days whose local trading pattern matches a query day.

Each day becomes the vector of relative close-to-close moves in a window
around it; similar market "shapes" land near each other on the sphere.

Run:  python demos/05_market_windows.py
"""

import numpy as np

from sphx import (
    IndexConfig,
    TopK,
    TransformKind,
    UnitVector,
    build_index,
    histogram_bin,
    make_transform,
    map_vector,
    search,
    threshold_h,
    window_series,
)

# Synthetic daily closes: a noisy random walk with a few planted crash
# patterns (sharp drop, partial rebound).
rng = np.random.default_rng(1929)
n_days = 2000
moves = rng.normal(0.0003, 0.01, n_days)
crash_days = [400, 1100, 1700]
for day in crash_days:
    moves[day] = -0.12
    moves[day + 1] = -0.05
    moves[day + 2] = 0.06
closes = 100.0 * np.cumprod(1.0 + moves)
series = [(f"day{i:04d}", float(c)) for i, c in enumerate(closes)]

corpus = window_series(series, half_window=5)
print(f"{len(corpus)} windows of dimension {corpus.d}")

m, r = 2**14, 0.4
h = threshold_h(m, r)
config = IndexConfig(m=m, r=r, h_index=h, h_query=h,
                     kind=TransformKind.STRUCTURED, d=corpus.d, seed=8)
transform = make_transform(config.kind, corpus.d, m, config.seed)
codes = [(doc_id, map_vector(transform, UnitVector(v), h))
         for doc_id, v in zip(corpus.ids, corpus.vectors)]
index = build_index(codes, config)

# Query with the first crash day: the other crashes should surface.
query_id = f"day{crash_days[0]:04d}"
row = corpus.ids.index(query_id)
query_code = map_vector(transform, UnitVector(corpus.vectors[row]), h)
print(f"\nquery {query_id} (crash); top matches:")
for res in search(index, query_code, TopK(6)):
    true_inner = corpus.vectors[corpus.ids.index(res.doc_id)] @ corpus.vectors[row]
    marker = " <- planted crash" if any(
        abs(int(res.doc_id[3:]) - c) <= 2 for c in crash_days
    ) else ""
    print(f"  {res.doc_id}  score={res.score:.4f}  true={true_inner:+.3f}{marker}")

# Histogram features work the same way: bin any per-record value stream,
# and the loader's normalization puts the counts on the sphere.
values = rng.normal(0.5, 0.2, 500)
hist = histogram_bin(values, edges=np.linspace(0, 1, 17))
print(f"\nhistogram demo: 16 bins, {int(hist.counts.sum())} values in range, "
      f"{hist.dropped} dropped")
