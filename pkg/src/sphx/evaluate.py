"""Retrieval-quality metrics against exact inner-product ground truth.

Relevance always comes from the original space (true inner products of
unit vectors), never from codes; the engine under test only decides what
is retrieved. The gray zone between lambda - eps_minus and lambda +
eps_plus carries no guarantee, so documents there are never counted as
errors.
"""

import csv
import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .embedding import UnitVector, map_vector
from .index import ThresholdLambda, search


class Band(Enum):
    EPS_RELEVANT = "eps-relevant"
    GRAY = "gray"
    EPS_IRRELEVANT = "eps-irrelevant"


@dataclass(frozen=True)
class RelevanceJudgment:
    doc_id: str
    true_inner: float
    relevant: bool
    band: Band


def judge(doc_ids, true_inners, lam: float, eps_minus: float, eps_plus: float):
    """Classify every document by its true inner product against the bands."""
    out = []
    for doc_id, inner in zip(doc_ids, true_inners):
        inner = float(inner)
        if inner >= lam + eps_plus:
            band = Band.EPS_RELEVANT
        elif inner <= lam - eps_minus:
            band = Band.EPS_IRRELEVANT
        else:
            band = Band.GRAY
        out.append(RelevanceJudgment(
            doc_id=doc_id, true_inner=inner, relevant=inner > lam, band=band,
        ))
    return out


class PrecisionRecall(NamedTuple):
    precision: float
    recall: float
    empty_retrieved: bool  # precision defaulted to 1 by convention
    empty_relevant: bool   # recall defaulted to 1 by convention


def precision_recall(relevant: set, retrieved: set) -> PrecisionRecall:
    """|rel ∩ ret|/|ret| and |rel ∩ ret|/|rel|, with flagged empty-set defaults."""
    both = len(relevant & retrieved)
    empty_ret = len(retrieved) == 0
    empty_rel = len(relevant) == 0
    return PrecisionRecall(
        precision=1.0 if empty_ret else both / len(retrieved),
        recall=1.0 if empty_rel else both / len(relevant),
        empty_retrieved=empty_ret,
        empty_relevant=empty_rel,
    )


class ErrorCounts(NamedTuple):
    type_i: int
    type_ii: int
    gray_retrieved: int


def count_error_events(judgments, retrieved: set) -> ErrorCounts:
    """Type I: eps-irrelevant retrieved. Type II: eps-relevant missed."""
    type_i = type_ii = gray_ret = 0
    for j in judgments:
        hit = j.doc_id in retrieved
        if j.band is Band.EPS_IRRELEVANT and hit:
            type_i += 1
        elif j.band is Band.EPS_RELEVANT and not hit:
            type_ii += 1
        elif j.band is Band.GRAY and hit:
            gray_ret += 1
    return ErrorCounts(type_i, type_ii, gray_ret)


@dataclass(frozen=True)
class PRPoint:
    threshold: float
    precision: float
    recall: float
    se_precision: float
    se_recall: float


def pr_curve(index, transform, corpus: "RawCorpus", queries, thresholds) -> list[PRPoint]:
    """Mean precision/recall over queries at each relevance threshold T.

    Relevance: true inner product >= T. Retrieval: raw overlap count >=
    m * mu(T) at the index threshold. Standard errors are sample standard
    deviations over queries divided by sqrt(#queries).
    """
    cfg = index.config
    doc_ids = list(corpus.ids)
    points = []
    query_codes = []
    query_inners = []
    for qv in queries:
        q = qv if isinstance(qv, UnitVector) else UnitVector.normalized(qv)
        query_codes.append(map_vector(transform, q, cfg.h_query))
        query_inners.append(corpus.vectors @ q.coords)
    for t_cut in thresholds:
        precisions, recalls = [], []
        for code, inners in zip(query_codes, query_inners):
            relevant = {d for d, s in zip(doc_ids, inners) if s >= t_cut}
            retrieved = {r.doc_id for r in search(index, code, ThresholdLambda(t_cut))}
            pr = precision_recall(relevant, retrieved)
            precisions.append(pr.precision)
            recalls.append(pr.recall)
        nq = len(precisions)
        points.append(PRPoint(
            threshold=float(t_cut),
            precision=float(np.mean(precisions)),
            recall=float(np.mean(recalls)),
            se_precision=float(np.std(precisions, ddof=1) / math.sqrt(nq)) if nq > 1 else 0.0,
            se_recall=float(np.std(recalls, ddof=1) / math.sqrt(nq)) if nq > 1 else 0.0,
        ))
    return points


def pr_auc(points) -> float:
    """Trapezoidal area under the (recall, precision) polyline.

    The curve is extended horizontally to recall 0 and 1 so thresholds
    that never reach the extremes still integrate over [0, 1].
    """
    pairs = sorted((p.recall, p.precision) for p in points)
    if not pairs:
        return 0.0
    recalls = [0.0] + [r for r, _ in pairs] + [1.0]
    precs = [pairs[0][1]] + [p for _, p in pairs] + [pairs[-1][1]]
    area = 0.0
    for (r0, p0), (r1, p1) in zip(zip(recalls, precs), zip(recalls[1:], precs[1:])):
        area += (r1 - r0) * 0.5 * (p0 + p1)
    return area


def write_error_events_csv(rows, sink) -> None:
    """CSV table of per-query error counts.

    Each row is a dict with query_id, lambda, eps_minus, eps_plus and an
    ErrorCounts triple under "counts".
    """
    own = isinstance(sink, (str, bytes)) or hasattr(sink, "__fspath__")
    fh = open(sink, "w", newline="") if own else sink
    try:
        writer = csv.writer(fh)
        writer.writerow([
            "query_id", "lambda", "eps_minus", "eps_plus",
            "type_i", "type_ii", "gray_retrieved",
        ])
        for row in rows:
            counts = row["counts"]
            writer.writerow([
                row["query_id"], row["lambda"],
                row["eps_minus"], row["eps_plus"],
                counts.type_i, counts.type_ii, counts.gray_retrieved,
            ])
    finally:
        if own:
            fh.close()


def write_pr_csv(points, sink) -> None:
    """CSV rows (threshold, precision, recall, se_precision, se_recall)."""
    own = isinstance(sink, (str, bytes)) or hasattr(sink, "__fspath__")
    fh = open(sink, "w", newline="") if own else sink
    try:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "precision", "recall", "se_precision", "se_recall"])
        for p in points:
            writer.writerow([p.threshold, p.precision, p.recall, p.se_precision, p.se_recall])
    finally:
        if own:
            fh.close()
