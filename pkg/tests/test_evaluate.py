import io
import itertools
import math

import numpy as np
import pytest

from sphx import analysis
from sphx.corpus import RawCorpus
from sphx.embedding import TransformKind, UnitVector, make_transform, map_vector
from sphx.evaluate import (
    Band,
    count_error_events,
    judge,
    pr_auc,
    pr_curve,
    precision_recall,
    write_pr_csv,
)
from sphx.index import IndexConfig, build_index


class TestPrecisionRecall:
    def test_perfect(self):
        pr = precision_recall({"a", "b"}, {"a", "b"})
        assert (pr.precision, pr.recall) == (1.0, 1.0)

    def test_disjoint(self):
        pr = precision_recall({"a"}, {"b"})
        assert (pr.precision, pr.recall) == (0.0, 0.0)

    def test_fractional(self):
        rel = set("abcdefgh")
        ret = {"a", "b", "x", "y"}
        pr = precision_recall(rel, ret)
        assert pr.precision == 0.5
        assert pr.recall == 0.25

    def test_empty_conventions_flagged(self):
        pr = precision_recall({"a"}, set())
        assert pr.precision == 1.0 and pr.empty_retrieved
        pr = precision_recall(set(), {"a"})
        assert pr.recall == 1.0 and pr.empty_relevant

    def test_exhaustive_three_element_universe(self):
        universe = ["a", "b", "c"]
        subsets = [set(c) for n in range(4) for c in itertools.combinations(universe, n)]
        for rel in subsets:
            for ret in subsets:
                pr = precision_recall(rel, ret)
                both = len(rel & ret)
                want_p = 1.0 if not ret else both / len(ret)
                want_r = 1.0 if not rel else both / len(rel)
                assert pr.precision == want_p
                assert pr.recall == want_r


class TestJudgments:
    def test_band_edges(self):
        js = judge(["a", "b", "c", "d"], [0.96, 0.85, 0.7, 0.5],
                   lam=0.8, eps_minus=0.1, eps_plus=0.15)
        assert js[0].band is Band.EPS_RELEVANT       # 0.96 >= 0.95
        assert js[1].band is Band.GRAY               # inside (0.7, 0.95)
        assert js[2].band is Band.EPS_IRRELEVANT     # 0.7 <= 0.7
        assert js[3].band is Band.EPS_IRRELEVANT
        assert js[0].relevant and js[1].relevant and not js[2].relevant

    def test_count_error_events(self):
        js = judge(["a", "b", "c", "d", "e"],
                   [0.99, 0.97, 0.85, 0.6, 0.55],
                   lam=0.8, eps_minus=0.1, eps_plus=0.1)
        counts = count_error_events(js, retrieved={"a", "c", "d"})
        # b (eps-relevant) missed; d (eps-irrelevant) retrieved; c gray hit
        assert counts.type_ii == 1
        assert counts.type_i == 1
        assert counts.gray_retrieved == 1

    def test_no_errors_when_bands_respected(self):
        js = judge(["a", "b"], [0.95, 0.2], lam=0.8, eps_minus=0.1, eps_plus=0.1)
        counts = count_error_events(js, retrieved={"a"})
        assert counts.type_i == 0 and counts.type_ii == 0

    def test_partition_totals(self):
        rng = np.random.default_rng(5)
        inners = rng.uniform(-1, 1, 100)
        ids = [f"d{i}" for i in range(100)]
        js = judge(ids, inners, lam=0.2, eps_minus=0.15, eps_plus=0.15)
        retrieved = set(rng.choice(ids, 40, replace=False))
        counts = count_error_events(js, retrieved)
        correct = sum(
            1 for j in js
            if (j.band is Band.EPS_RELEVANT and j.doc_id in retrieved)
            or (j.band is Band.EPS_IRRELEVANT and j.doc_id not in retrieved)
        )
        gray_total = sum(1 for j in js if j.band is Band.GRAY)
        assert counts.type_i + counts.type_ii + correct + gray_total == 100

    def test_counts_match_brute_force_recount(self):
        rng = np.random.default_rng(11)
        inners = rng.uniform(-1, 1, 200)
        ids = [f"d{i}" for i in range(200)]
        lam, em, ep = 0.1, 0.2, 0.25
        js = judge(ids, inners, lam, em, ep)
        retrieved = set(rng.choice(ids, 70, replace=False))
        counts = count_error_events(js, retrieved)
        want_i = sum(1 for i, x in zip(ids, inners) if x <= lam - em and i in retrieved)
        want_ii = sum(1 for i, x in zip(ids, inners) if x >= lam + ep and i not in retrieved)
        assert (counts.type_i, counts.type_ii) == (want_i, want_ii)


def clustered_corpus(n, d, n_cluster, lam_center, seed):
    """Planted cluster around a random center, background uniform."""
    rng = np.random.default_rng(seed)
    center = rng.standard_normal(d)
    center /= np.linalg.norm(center)
    rows = []
    for i in range(n_cluster):
        lam = min(0.999, lam_center + rng.normal(0, 0.02))
        perp = rng.standard_normal(d)
        perp -= (perp @ center) * center
        perp /= np.linalg.norm(perp)
        rows.append(lam * center + math.sqrt(1 - lam * lam) * perp)
    for i in range(n - n_cluster):
        v = rng.standard_normal(d)
        rows.append(v / np.linalg.norm(v))
    ids = [f"doc{i:05d}" for i in range(n)]
    return RawCorpus(ids=ids, vectors=np.array(rows)), center


class TestPrCurve:
    def build(self, m=2**12, r=0.45, n=400, d=48, seed=0):
        corpus, center = clustered_corpus(n, d, 40, 0.93, seed)
        h = analysis.threshold_h(m, r)
        cfg = IndexConfig(m=m, r=r, h_index=h, h_query=h,
                          kind=TransformKind.STRUCTURED, d=d, seed=seed)
        t = make_transform(cfg.kind, d, m, cfg.seed)
        codes = [
            (doc_id, map_vector(t, UnitVector(v), h))
            for doc_id, v in zip(corpus.ids, corpus.vectors)
        ]
        return build_index(codes, cfg), t, corpus, center

    def test_minus_one_threshold_is_perfect_point(self):
        index, t, corpus, center = self.build()
        points = pr_curve(index, t, corpus, [center], thresholds=[-1.0])
        assert points[0].precision == 1.0
        assert points[0].recall == 1.0

    def test_single_doc_corpus_self_query(self):
        m, r, d = 2**10, 0.4, 16
        h = analysis.threshold_h(m, r)
        cfg = IndexConfig(m=m, r=r, h_index=h, h_query=h,
                          kind=TransformKind.GAUSSIAN, d=d, seed=3)
        t = make_transform(cfg.kind, d, m, cfg.seed)
        v = UnitVector.normalized(np.arange(1.0, d + 1.0))
        index = build_index([("only", map_vector(t, v, h))], cfg)
        corpus = RawCorpus(ids=["only"], vectors=v.coords[None, :])
        for t_cut in (-0.5, 0.0, 0.9):
            pt = pr_curve(index, t, corpus, [v], [t_cut])[0]
            assert (pt.precision, pt.recall) == (1.0, 1.0)

    def test_recall_never_rises_with_threshold(self):
        index, t, corpus, center = self.build()
        rng = np.random.default_rng(2)
        queries = [corpus.vectors[i] for i in range(0, 40, 10)]
        points = pr_curve(index, t, corpus, queries,
                          thresholds=np.linspace(0.3, 0.95, 8))
        # relevant sets shrink as T grows, but the retrieved rule moves too;
        # the invariant from the definition is on the relevance side
        for q in queries:
            rels = [np.sum(corpus.vectors @ q >= t_c) for t_c in np.linspace(0.3, 0.95, 8)]
            assert all(b <= a for a, b in zip(rels, rels[1:]))
        assert len(points) == 8

    def test_clustered_corpus_high_auc(self):
        # queries jittered around the planted center; the threshold sweep
        # crosses the gap between background (inner <~ 0.42) and cluster
        # (inner ~ 0.93), where a faithful engine is near perfect
        index, t, corpus, center = self.build()
        rng = np.random.default_rng(8)
        queries = []
        for _ in range(5):
            q = center + rng.normal(0, 0.03, center.size)
            queries.append(q / np.linalg.norm(q))
        points = pr_curve(index, t, corpus, queries,
                          thresholds=np.linspace(0.5, 0.85, 8))
        assert pr_auc(points) >= 0.95

    def test_csv_output(self):
        index, t, corpus, center = self.build(m=2**10, n=100)
        points = pr_curve(index, t, corpus, [center], thresholds=[0.2, 0.5])
        buf = io.StringIO()
        write_pr_csv(points, buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0] == "threshold,precision,recall,se_precision,se_recall"
        assert len(lines) == 3


class TestErrorEventCsv:
    def test_table_format(self):
        from sphx.evaluate import ErrorCounts, write_error_events_csv
        rows = [
            {"query_id": "q1", "lambda": 0.8, "eps_minus": 0.06,
             "eps_plus": 0.05, "counts": ErrorCounts(1, 2, 3)},
        ]
        buf = io.StringIO()
        write_error_events_csv(rows, buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0].startswith("query_id,lambda,")
        assert lines[1] == "q1,0.8,0.06,0.05,1,2,3"


class TestPrAuc:
    def test_rectangle(self):
        from sphx.evaluate import PRPoint
        points = [
            PRPoint(0.1, 1.0, 0.0, 0.0, 0.0),
            PRPoint(0.5, 1.0, 1.0, 0.0, 0.0),
        ]
        assert pr_auc(points) == pytest.approx(1.0)

    def test_empty(self):
        assert pr_auc([]) == 0.0
