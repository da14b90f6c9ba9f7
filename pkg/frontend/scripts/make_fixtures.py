"""Regenerate the frontend test fixtures from a live service instance.

Builds the deterministic fixture index, starts the HTTP service on a free
port, replays the scripted queries, and stores the raw response bytes so
the rendering tests compare against exactly what the service emits.

Run from the repo root:  python frontend/scripts/make_fixtures.py
"""

import json
import pathlib
import tempfile
import urllib.request

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

FIXTURE_DIR = pathlib.Path(__file__).resolve().parent.parent / "test" / "fixtures"

# One planted topic plus background, so threshold queries return stable,
# interestingly-sized result sets.
SEED, D, N, M, R = 20240601, 32, 300, 2**12, 0.4


def build_fixture_corpus():
    rng = np.random.default_rng(SEED)
    center = rng.standard_normal(D)
    center /= np.linalg.norm(center)
    rows = []
    for _ in range(40):
        lam = float(np.clip(0.9 + rng.normal(0, 0.02), -0.99, 0.99))
        perp = rng.standard_normal(D)
        perp -= (perp @ center) * center
        perp /= np.linalg.norm(perp)
        rows.append(lam * center + np.sqrt(1 - lam * lam) * perp)
    for _ in range(N - 40):
        v = rng.standard_normal(D)
        rows.append(v / np.linalg.norm(v))
    ids = [f"doc{i:04d}" for i in range(N)]
    return RawCorpus(ids=ids, vectors=np.array(rows)), center


def main() -> None:
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    corpus, center = build_fixture_corpus()
    h = threshold_h(M, R)
    config = IndexConfig(m=M, r=R, h_index=h, h_query=h,
                         kind=TransformKind.STRUCTURED, d=D, seed=SEED)
    transform = make_transform(config.kind, D, M, config.seed)
    codes = [(doc_id, map_vector(transform, UnitVector(v), h))
             for doc_id, v in zip(corpus.ids, corpus.vectors)]
    index = build_index(codes, config)

    workdir = pathlib.Path(tempfile.mkdtemp())
    save_index(index, workdir / "fixture.sphx")
    save_vectors(corpus, workdir / "fixture.csv")
    server, _ = serve_background(ServiceConfig(
        index_path=str(workdir / "fixture.sphx"),
        vectors_path=str(workdir / "fixture.csv"),
        port=0,
    ))
    host, port = server.server_address[:2]
    base = f"http://{host}:{port}"

    queries = {
        "query1_topk.json": {"doc_id": "doc0003", "mode": "top_k", "k": 8},
        "query2_threshold_low.json": {
            "vector": [float(v) for v in center], "mode": "threshold", "lambda": 0.6,
        },
        "query3_threshold_high.json": {
            "vector": [float(v) for v in center], "mode": "threshold", "lambda": 0.8,
        },
    }
    for name, body in queries.items():
        req = urllib.request.Request(
            f"{base}/search", data=json.dumps(body).encode(),
            headers={"Content-Type": "application/json"},
        )
        with urllib.request.urlopen(req) as resp:
            raw = resp.read()
        (FIXTURE_DIR / name).write_bytes(raw)
        print(f"{name}: {len(json.loads(raw)['results'])} results, {len(raw)} bytes")
        (FIXTURE_DIR / name.replace(".json", ".request.json")).write_text(
            json.dumps(body, indent=2)
        )

    with urllib.request.urlopen(f"{base}/doc/doc0003") as resp:
        (FIXTURE_DIR / "doc_record.json").write_bytes(resp.read())
    server.shutdown()
    print(f"fixtures written to {FIXTURE_DIR}")


if __name__ == "__main__":
    main()
