"""Run the HTTP search service and talk to it like the browser demo does.

Run:  python demos/06_search_service.py
"""

import json
import tempfile
import urllib.request
from pathlib import Path

import numpy as np

from sphx import (
    IndexConfig,
    TransformKind,
    UnitVector,
    build_index,
    make_transform,
    map_vector,
    save_index,
    save_vectors,
    threshold_h,
)
from sphx.corpus import RawCorpus
from sphx.service import ServiceConfig, serve_background

# Small corpus on disk: the service loads the index and (optionally) the
# vector store so it can annotate results with true inner products.
rng = np.random.default_rng(3)
d, n = 32, 200
vectors = rng.standard_normal((n, d))
vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
ids = [f"doc{i:03d}" for i in range(n)]

m, r = 2**12, 0.4
h = threshold_h(m, r)
config = IndexConfig(m=m, r=r, h_index=h, h_query=h,
                     kind=TransformKind.STRUCTURED, d=d, seed=4)
transform = make_transform(config.kind, d, m, config.seed)
codes = [(doc_id, map_vector(transform, UnitVector(v), h))
         for doc_id, v in zip(ids, vectors)]
index = build_index(codes, config)

workdir = Path(tempfile.mkdtemp())
save_index(index, workdir / "demo.sphx")
save_vectors(RawCorpus(ids=ids, vectors=vectors), workdir / "demo.csv")

server, thread = serve_background(ServiceConfig(
    index_path=str(workdir / "demo.sphx"),
    vectors_path=str(workdir / "demo.csv"),
    port=0,  # pick a free port
    cors_origins=("*",),
))
host, port = server.server_address[:2]
base = f"http://{host}:{port}"
print(f"service up at {base}")

with urllib.request.urlopen(f"{base}/healthz") as resp:
    print("healthz:", json.loads(resp.read()))

# Query by stored document id; the document itself comes back first.
req = urllib.request.Request(
    f"{base}/search",
    data=json.dumps({"doc_id": "doc042", "mode": "top_k", "k": 5}).encode(),
    headers={"Content-Type": "application/json"},
)
with urllib.request.urlopen(req) as resp:
    body = json.loads(resp.read())
print("\ntop-5 for doc042:")
for res in body["results"]:
    print(f"  {res['doc_id']}  score={res['score']:.4f}  "
          f"true_inner={res.get('true_inner', float('nan')):+.3f}")

# Threshold mode exposes the resolved cutoff for transparency.
req = urllib.request.Request(
    f"{base}/search",
    data=json.dumps({"doc_id": "doc042", "mode": "threshold", "lambda": 0.5}).encode(),
    headers={"Content-Type": "application/json"},
)
with urllib.request.urlopen(req) as resp:
    body = json.loads(resp.read())
print(f"\nthreshold 0.5: {len(body['results'])} results, "
      f"cutoff at {body['cutoff']['count_threshold']:.2f} counts")

server.shutdown()
print("\nservice stopped; the browser UI in frontend/ consumes the same API")
