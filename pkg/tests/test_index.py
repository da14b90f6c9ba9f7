import io

import numpy as np
import pytest

from sphx import analysis
from sphx.embedding import (
    SparseCode,
    TransformKind,
    UnitVector,
    make_transform,
    map_vector,
    overlap,
)
from sphx.errors import (
    CodeLengthMismatch,
    CorruptStream,
    DuplicateDocId,
    InvalidCutoff,
    VersionMismatch,
)
from sphx.index import (
    IndexConfig,
    NearestNeighbor,
    ThresholdLambda,
    TopK,
    build_index,
    export_tokens,
    index_stats,
    load_index,
    parse_tokens,
    save_index,
    search,
)


def small_config(m=64, r=0.3, kind=TransformKind.GAUSSIAN, d=4, seed=0):
    h = analysis.threshold_h(m, r)
    return IndexConfig(m=m, r=r, h_index=h, h_query=h, kind=kind, d=d, seed=seed)


def synthetic_codes(n, m, k_mean, seed):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        k = min(m, rng.poisson(k_mean))
        support = np.sort(rng.choice(m, size=k, replace=False))
        out.append((f"doc{i:04d}", SparseCode(m=m, support=support)))
    return out


def brute_force(codes, query, count_threshold=None, top_k=None):
    """Oracle: score every document directly, apply the same cutoff rules.

    Zero-overlap documents appear only in threshold mode with a
    nonpositive cutoff, where the iff contract admits every document.
    """
    hits = []
    for doc_id, code in codes:
        c = overlap(query, code)
        if c > 0 or (count_threshold is not None and count_threshold <= 0):
            hits.append((doc_id, c))
    if count_threshold is not None:
        hits = [(d, c) for d, c in hits if c >= count_threshold]
    hits.sort(key=lambda dc: (-dc[1], dc[0]))
    if top_k is not None:
        hits = hits[:top_k]
    return hits


class TestBuild:
    def test_empty(self):
        idx = build_index([], small_config())
        assert idx.doc_count == 0
        assert idx.total_postings() == 0

    def test_single_doc_postings(self):
        cfg = small_config()
        code = SparseCode(m=64, support=np.array([3, 17]))
        idx = build_index([("a", code)], cfg)
        assert list(idx.postings[3]) == [0]
        assert list(idx.postings[17]) == [0]
        assert all(len(idx.postings[i]) == 0 for i in range(64) if i not in (3, 17))

    def test_posting_conservation(self):
        codes = synthetic_codes(1000, 256, 12, seed=5)
        idx = build_index(codes, small_config(m=256))
        assert idx.total_postings() == sum(code.k for _, code in codes)

    def test_duplicate_doc_id(self):
        code = SparseCode(m=64, support=np.array([1]))
        with pytest.raises(DuplicateDocId):
            build_index([("a", code), ("a", code)], small_config())

    def test_code_length_mismatch(self):
        code = SparseCode(m=32, support=np.array([1]))
        with pytest.raises(CodeLengthMismatch):
            build_index([("a", code)], small_config(m=64))

    def test_order_independent(self):
        codes = synthetic_codes(50, 128, 8, seed=1)
        cfg = small_config(m=128)
        a = build_index(codes, cfg)
        b = build_index(list(reversed(codes)), cfg)
        # same lists up to the internal-id relabeling induced by insertion
        for i in range(128):
            ids_a = sorted(a.doc_ids[j] for j in a.postings[i])
            ids_b = sorted(b.doc_ids[j] for j in b.postings[i])
            assert ids_a == ids_b


class TestSearch:
    def test_empty_index(self):
        idx = build_index([], small_config())
        q = SparseCode(m=64, support=np.array([1, 2]))
        assert search(idx, q, TopK(5)) == []

    def test_matches_brute_force_both_modes(self):
        m, n = 256, 1000
        codes = synthetic_codes(n, m, 10, seed=11)
        cfg = small_config(m=m)
        idx = build_index(codes, cfg)
        rng = np.random.default_rng(7)
        for qi in range(50):
            k = rng.integers(1, 20)
            q = SparseCode(m=m, support=np.sort(rng.choice(m, size=k, replace=False)))
            lam = float(rng.uniform(-0.5, 0.9))
            cutoff = m * analysis.mu(lam, cfg.h_index)
            got = search(idx, q, ThresholdLambda(lam))
            want = brute_force(codes, q, count_threshold=cutoff)
            assert [(r.doc_id, r.raw_count) for r in got] == want
            got_k = search(idx, q, TopK(10))
            want_k = brute_force(codes, q, top_k=10)
            assert [(r.doc_id, r.raw_count) for r in got_k] == want_k

    def test_accumulators_identical(self):
        m = 128
        codes = synthetic_codes(300, m, 9, seed=3)
        idx = build_index(codes, small_config(m=m))
        q = SparseCode(m=m, support=np.arange(0, 40, 3))
        dense = search(idx, q, TopK(20), accumulator="dense")
        hashed = search(idx, q, TopK(20), accumulator="hash")
        assert dense == hashed

    def test_threshold_cutoff_exact_membership(self):
        m = 128
        codes = synthetic_codes(400, m, 9, seed=13)
        cfg = small_config(m=m)
        idx = build_index(codes, cfg)
        q = SparseCode(m=m, support=np.arange(0, 60, 2))
        lam = 0.3
        cutoff = m * analysis.mu(lam, cfg.h_index)
        got = {r.doc_id for r in search(idx, q, ThresholdLambda(lam))}
        for doc_id, code in codes:
            c = overlap(q, code)
            assert (doc_id in got) == (c >= cutoff and c > 0)

    def test_raising_lambda_never_adds(self):
        m = 128
        codes = synthetic_codes(400, m, 9, seed=17)
        idx = build_index(codes, small_config(m=m))
        q = SparseCode(m=m, support=np.arange(0, 60, 2))
        previous = None
        for lam in (0.0, 0.2, 0.4, 0.6, 0.8):
            current = {r.doc_id for r in search(idx, q, ThresholdLambda(lam))}
            if previous is not None:
                assert current <= previous
            previous = current

    def test_unreachable_threshold_gives_empty(self):
        m = 64
        codes = synthetic_codes(10, m, 4, seed=2)
        cfg = small_config(m=m)
        idx = build_index(codes, cfg)
        q = SparseCode(m=m, support=np.arange(4))
        assert search(idx, q, ThresholdLambda(0.99999)) == []

    def test_nearest_neighbor_mode(self):
        m, r = 1024, 0.45
        h = analysis.threshold_h(m, r)
        cfg = IndexConfig(m=m, r=r, h_index=h, h_query=h,
                          kind=TransformKind.GAUSSIAN, d=4, seed=0)
        codes = synthetic_codes(200, m, 25, seed=23)
        idx = build_index(codes, cfg)
        q = codes[0][1]
        lam0, eta = 0.9, 1.0
        eps_minus, _ = analysis.solve_epsilons(lam0, m, r, eta)
        cutoff = m * analysis.mu(lam0 - eps_minus, h)
        got = search(idx, q, NearestNeighbor(lam0, eta))
        want = brute_force(codes, q, count_threshold=cutoff)
        assert [(g.doc_id, g.raw_count) for g in got] == want

    def test_nearest_neighbor_out_of_region(self):
        idx = build_index([], small_config(m=64, r=0.8))
        q = SparseCode(m=64, support=np.array([1]))
        with pytest.raises(InvalidCutoff):
            search(idx, q, NearestNeighbor(0.1))

    def test_query_length_mismatch(self):
        idx = build_index([], small_config(m=64))
        with pytest.raises(CodeLengthMismatch):
            search(idx, SparseCode(m=32, support=np.array([0])), TopK(1))


class TestTokens:
    def test_format(self):
        code = SparseCode(m=64, support=np.array([3, 17]))
        assert export_tokens([("a", code)]) == ["a\tt000003 t000017"]

    def test_empty_support(self):
        code = SparseCode(m=64, support=np.array([], dtype=np.int64))
        assert export_tokens([("a", code)]) == ["a\t"]

    def test_round_trip(self):
        codes = synthetic_codes(40, 512, 6, seed=31)
        lines = export_tokens(codes)
        back = parse_tokens(lines, m=512)
        assert [d for d, _ in back] == [d for d, _ in codes]
        for (_, c1), (_, c2) in zip(codes, back):
            assert c1 == c2


class TestPersistence:
    def roundtrip(self, idx):
        buf = io.BytesIO()
        save_index(idx, buf)
        buf.seek(0)
        return load_index(buf)

    def test_round_trip_identity(self):
        codes = synthetic_codes(1000, 256, 10, seed=41)
        cfg = small_config(m=256, kind=TransformKind.STRUCTURED, seed=99)
        idx = build_index(codes, cfg)
        back = self.roundtrip(idx)
        assert back.config == idx.config
        assert back.doc_ids == idx.doc_ids
        assert np.array_equal(back.doc_k, idx.doc_k)
        assert all(
            np.array_equal(a, b) for a, b in zip(back.postings, idx.postings)
        )

    def test_empty_round_trip(self):
        idx = build_index([], small_config())
        back = self.roundtrip(idx)
        assert back.doc_count == 0 and back.total_postings() == 0

    def test_truncated_stream(self):
        idx = build_index(synthetic_codes(10, 64, 5, seed=1), small_config())
        buf = io.BytesIO()
        save_index(idx, buf)
        data = buf.getvalue()
        with pytest.raises(CorruptStream):
            load_index(io.BytesIO(data[: len(data) // 2]))

    def test_bad_magic(self):
        with pytest.raises(CorruptStream):
            load_index(io.BytesIO(b"NOPE!" + b"\0" * 100))

    def test_version_mismatch(self):
        idx = build_index([], small_config())
        buf = io.BytesIO()
        save_index(idx, buf)
        data = bytearray(buf.getvalue())
        data[4] = ord("9")
        with pytest.raises(VersionMismatch):
            load_index(io.BytesIO(bytes(data)))

    def test_flipped_bit_fails_checksum(self):
        idx = build_index(synthetic_codes(10, 64, 5, seed=1), small_config())
        buf = io.BytesIO()
        save_index(idx, buf)
        data = bytearray(buf.getvalue())
        data[30] ^= 0x40
        with pytest.raises(CorruptStream):
            load_index(io.BytesIO(bytes(data)))

    def test_file_path_round_trip(self, tmp_path):
        idx = build_index(synthetic_codes(20, 64, 5, seed=2), small_config())
        path = tmp_path / "test.sphx"
        save_index(idx, path)
        back = load_index(path)
        assert back.doc_ids == idx.doc_ids

    def test_negative_seed_round_trips(self):
        cfg = small_config(seed=-12345)
        idx = build_index([], cfg)
        back = self.roundtrip(idx)
        assert back.config == idx.config
        assert back.config.seed == -12345 & (2**64 - 1)


class TestStats:
    def test_empty(self):
        stats = index_stats(build_index([], small_config()))
        assert stats["doc_count"] == 0
        assert stats["total_postings"] == 0
        assert stats["measured_mean_examined"] == 0.0

    def test_total_postings_conservation(self):
        codes = synthetic_codes(200, 128, 7, seed=3)
        idx = build_index(codes, small_config(m=128))
        assert index_stats(idx)["total_postings"] == sum(c.k for _, c in codes)

    def test_examined_matches_cost_model(self):
        # Uniform synthetic corpus: mean examined per query within 3x of
        # nk^2/m. Needs d large enough that random vectors are near
        # orthogonal, which is the cost model's regime.
        m, r, d, n = 2048, 0.4, 64, 400
        h = analysis.threshold_h(m, r)
        cfg = IndexConfig(m=m, r=r, h_index=h, h_query=h,
                          kind=TransformKind.GAUSSIAN, d=d, seed=7)
        rng = np.random.default_rng(0)
        t = make_transform(cfg.kind, d, m, cfg.seed, materialize=True)
        codes = []
        vecs = rng.standard_normal((n, d))
        vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
        for i, v in enumerate(vecs):
            codes.append((f"doc{i}", map_vector(t, UnitVector(v), h)))
        idx = build_index(codes, cfg)
        for i in range(30):
            qv = rng.standard_normal(d)
            q = map_vector(t, UnitVector.normalized(qv), h)
            search(idx, q, TopK(10))
        stats = index_stats(idx)
        model = stats["model_search_cost_nk2_over_m"]
        measured = stats["measured_mean_examined"]
        assert measured <= 3 * model
        assert measured >= model / 3
