"""Corpus ingestion: delimited/JSON vectors, time-series windows, histograms.

Loaders are streaming and single-pass. Every emitted vector is L2
normalized onto the unit sphere; zero vectors are rejected by id so the
caller can fix the offending record.
"""

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    BadEdges,
    NonPositivePrice,
    ParseError,
    RaggedDimensions,
    SeriesTooShort,
    ZeroVector,
)


@dataclass(frozen=True)
class RawCorpus:
    """Aligned external ids and row vectors (one record per row)."""

    ids: list
    vectors: np.ndarray

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.ids)


def _normalize_rows(ids, rows) -> RawCorpus:
    if not rows:
        return RawCorpus(ids=[], vectors=np.empty((0, 0)))
    vectors = np.asarray(rows, dtype=np.float64)
    if not np.all(np.isfinite(vectors)):
        bad = ids[int(np.argwhere(~np.isfinite(vectors))[0][0])]
        raise ParseError(f"non-finite value in record {bad!r}")
    norms = np.linalg.norm(vectors, axis=1)
    if np.any(norms == 0.0):
        bad = ids[int(np.argmin(norms))]
        raise ZeroVector(f"record {bad!r} has zero norm")
    return RawCorpus(ids=list(ids), vectors=vectors / norms[:, None])


def _open_text(source, mode="r"):
    if hasattr(source, "read") or hasattr(source, "write"):
        return source, False
    return open(source, mode, encoding="utf-8"), True


def load_vectors(source, format: str = "csv") -> RawCorpus:
    """Load "id,v1,...,vd" CSV rows or {"id":…, "vector":[…]} JSONL lines.

    Vectors are unit-normalized; raises ParseError (with the offending
    line), ZeroVector, or RaggedDimensions.
    """
    fh, own = _open_text(source)
    ids, rows, d = [], [], None
    try:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if format == "csv":
                parts = [p.strip() for p in line.split(",")]
                if len(parts) < 2:
                    raise ParseError(f"line {lineno}: need an id and values")
                rec_id = parts[0]
                try:
                    values = [float(p) for p in parts[1:]]
                except ValueError as exc:
                    raise ParseError(f"line {lineno}: {exc}") from exc
            elif format == "jsonl":
                try:
                    obj = json.loads(line)
                    rec_id = obj["id"]
                    values = [float(v) for v in obj["vector"]]
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise ParseError(f"line {lineno}: {exc}") from exc
            else:
                raise ParseError(f"unknown format {format!r}")
            if d is None:
                d = len(values)
            elif len(values) != d:
                raise RaggedDimensions(
                    f"line {lineno}: got {len(values)} values, expected {d}"
                )
            ids.append(str(rec_id))
            rows.append(values)
    finally:
        if own:
            fh.close()
    return RawCorpus(ids=ids, vectors=np.empty((0, 0))) if not rows else _normalize_rows(ids, rows)


def save_vectors(corpus: RawCorpus, sink, format: str = "csv") -> None:
    """Inverse of load_vectors up to float formatting (repr round-trips)."""
    fh, own = _open_text(sink, "w")
    try:
        for rec_id, row in zip(corpus.ids, corpus.vectors):
            if format == "csv":
                fh.write(rec_id + "," + ",".join(repr(float(v)) for v in row) + "\n")
            elif format == "jsonl":
                fh.write(json.dumps({"id": rec_id, "vector": [float(v) for v in row]}) + "\n")
            else:
                raise ParseError(f"unknown format {format!r}")
    finally:
        if own:
            fh.close()


def window_series(series, half_window: int) -> RawCorpus:
    """Turn a (date, close) series into per-day vectors of relative moves.

    Each interior day t becomes the 2*half_window forward relative
    differences (close[s+1]-close[s])/close[s] for s spanning the
    half_window day-pairs before and after t, normalized like any other
    corpus vector and labeled with day t's date. A constant series yields
    zero vectors and is rejected.
    """
    if half_window < 1:
        raise SeriesTooShort("half_window must be >= 1")
    series = list(series)
    if len(series) < 2 * half_window + 1:
        raise SeriesTooShort(
            f"need at least {2 * half_window + 1} points, got {len(series)}"
        )
    dates = [str(p[0]) for p in series]
    closes = np.array([float(p[1]) for p in series])
    if np.any(closes <= 0):
        bad = dates[int(np.argmin(closes))]
        raise NonPositivePrice(f"non-positive close at {bad}")
    diffs = (closes[1:] - closes[:-1]) / closes[:-1]
    ids, rows = [], []
    for t in range(half_window, len(series) - half_window):
        ids.append(dates[t])
        rows.append(diffs[t - half_window : t + half_window])
    return _normalize_rows(ids, rows)


class BinnedHistogram(NamedTuple):
    counts: np.ndarray
    dropped: int


def histogram_bin(values, edges) -> BinnedHistogram:
    """Counts per bin, left-closed right-open with the last bin closed.

    Out-of-range values are dropped and counted; normalization to the
    sphere is the loader's job.
    """
    edges = np.asarray(edges, dtype=np.float64)
    if edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise BadEdges("need at least two strictly ascending edges")
    values = np.asarray(values, dtype=np.float64)
    in_range = (values >= edges[0]) & (values <= edges[-1])
    counts, _ = np.histogram(values[in_range], bins=edges)
    return BinnedHistogram(
        counts=counts.astype(np.float64),
        dropped=int(values.size - in_range.sum()),
    )
