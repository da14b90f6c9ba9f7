"""Inverted index over sparse codes.

One posting list per code dimension holds the (internal) ids of the
documents active there, ascending. A query touches only the lists named by
its own support, accumulates per-document overlap counts, and applies a
cutoff rule. The index is immutable after build; concurrent searches need
no coordination (the examined-documents counters are advisory metrics).

Persistence format (little-endian):

    magic  "SPHX1"
    header m:u64  r:f64  h_index:f64  h_query:f64  kind:u8  d:u64
           seed:u64  cutoff_mode:u8  n:u64
    docs   n x (varint len, utf-8 id)
    lists  m x (varint len, first id as varint, then gaps as varints)
    tail   8-byte BLAKE2b checksum of everything above
"""

import hashlib
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from . import analysis
from .embedding import SparseCode, TransformKind
from .errors import (
    CodeLengthMismatch,
    CorruptStream,
    DuplicateDocId,
    InvalidCutoff,
    VersionMismatch,
)

MAGIC = b"SPHX1"
_HEADER = struct.Struct("<QdddBQQBQ")
_KIND_CODE = {
    TransformKind.GAUSSIAN: 0,
    TransformKind.STRUCTURED: 1,
    TransformKind.BIASED_STRUCTURED: 2,
}
_CODE_KIND = {v: k for k, v in _KIND_CODE.items()}
_MODE_CODE = {"threshold": 0, "top_k": 1, "nearest_neighbor": 2}
_CODE_MODE = {v: k for k, v in _MODE_CODE.items()}


@dataclass(frozen=True)
class IndexConfig:
    """Build-time parameters; h_query >= h_index enables sparser queries."""

    m: int
    r: float
    h_index: float
    h_query: float
    kind: TransformKind
    d: int
    seed: int
    cutoff_mode: str = "threshold"

    def __post_init__(self):
        if self.h_query < self.h_index:
            raise InvalidCutoff(
                f"h_query={self.h_query} must be >= h_index={self.h_index}"
            )
        if self.cutoff_mode not in _MODE_CODE:
            raise InvalidCutoff(f"unknown cutoff mode {self.cutoff_mode!r}")
        # stored as u64 on disk; normalize now so round trips are identity
        object.__setattr__(self, "seed", self.seed & (2**64 - 1))
        object.__setattr__(self, "kind", TransformKind(self.kind))


@dataclass(frozen=True)
class ThresholdLambda:
    """Retrieve documents whose raw count reaches m * mu(lambda)."""

    lam: float


@dataclass(frozen=True)
class TopK:
    """Retrieve the k highest-scoring documents with positive overlap."""

    k: int


@dataclass(frozen=True)
class NearestNeighbor:
    """Approximate-nearest-neighbour band: cutoff at mu(lambda0 - eps_minus)."""

    lam0: float
    eta: float = 1.645


@dataclass(frozen=True)
class SearchResult:
    doc_id: str
    raw_count: int
    score: float
    retrieved_by: str


@dataclass
class InvertedIndex:
    config: IndexConfig
    postings: list          # m arrays of ascending internal doc indices
    doc_ids: list           # internal index -> external id
    doc_k: np.ndarray       # per-document support size
    counters: dict = field(default_factory=lambda: {"queries": 0, "examined": 0})

    @property
    def doc_count(self) -> int:
        return len(self.doc_ids)

    def total_postings(self) -> int:
        return int(sum(len(p) for p in self.postings))


def build_index(codes, config: IndexConfig) -> InvertedIndex:
    """Assemble posting lists; order-independent (lists are sorted)."""
    doc_ids = []
    seen = set()
    per_dim = [[] for _ in range(config.m)]
    ks = []
    for doc_id, code in codes:
        if code.m != config.m:
            raise CodeLengthMismatch(
                f"doc {doc_id!r} has m={code.m}, index expects {config.m}"
            )
        if doc_id in seen:
            raise DuplicateDocId(f"duplicate doc id {doc_id!r}")
        seen.add(doc_id)
        internal = len(doc_ids)
        doc_ids.append(doc_id)
        ks.append(code.k)
        for dim in code.support:
            per_dim[dim].append(internal)
    postings = [np.array(sorted(lst), dtype=np.int64) for lst in per_dim]
    return InvertedIndex(
        config=config,
        postings=postings,
        doc_ids=doc_ids,
        doc_k=np.array(ks, dtype=np.int64),
    )


def _accumulate(index: InvertedIndex, query_code: SparseCode, accumulator: str):
    """Per-document overlap counts; dense and hash strategies agree exactly."""
    n = index.doc_count
    examined = 0
    if accumulator == "auto":
        traffic = sum(len(index.postings[dim]) for dim in query_code.support)
        accumulator = "hash" if traffic * 4 < n else "dense"
    if accumulator == "dense":
        counts = np.zeros(n, dtype=np.int64)
        for dim in query_code.support:
            plist = index.postings[dim]
            counts[plist] += 1
            examined += len(plist)
        hit = np.flatnonzero(counts)
        pairs = {int(i): int(counts[i]) for i in hit}
    elif accumulator == "hash":
        pairs = {}
        for dim in query_code.support:
            plist = index.postings[dim]
            examined += len(plist)
            for i in plist:
                pairs[int(i)] = pairs.get(int(i), 0) + 1
    else:
        raise InvalidCutoff(f"unknown accumulator {accumulator!r}")
    return pairs, examined


def _resolve_cutoff(index: InvertedIndex, cutoff):
    """Return (count_threshold or None, top_k or None, label)."""
    cfg = index.config
    if isinstance(cutoff, ThresholdLambda):
        mu_value = analysis.mu(cutoff.lam, cfg.h_index)
        return cfg.m * mu_value, None, f"threshold_lambda({cutoff.lam})"
    if isinstance(cutoff, TopK):
        if cutoff.k < 1:
            raise InvalidCutoff("top-k needs k >= 1")
        return None, cutoff.k, f"top_k({cutoff.k})"
    if isinstance(cutoff, NearestNeighbor):
        if not (2.0 * cfg.r - 1.0 < cutoff.lam0 < 1.0):
            raise InvalidCutoff(
                f"lambda0={cutoff.lam0} outside (2r-1, 1) for r={cfg.r}"
            )
        eps_minus, _ = analysis.solve_epsilons(
            cutoff.lam0, cfg.m, cfg.r, cutoff.eta
        )
        mu_value = analysis.mu(cutoff.lam0 - eps_minus, cfg.h_index)
        return (
            cfg.m * mu_value,
            None,
            f"nearest_neighbor({cutoff.lam0}, eta={cutoff.eta})",
        )
    raise InvalidCutoff(f"unknown cutoff {cutoff!r}")


def search(
    index: InvertedIndex,
    query_code: SparseCode,
    cutoff,
    accumulator: str = "auto",
) -> list[SearchResult]:
    """Ranked results: descending score, ties by ascending doc id.

    ThresholdLambda retrieves raw_count >= m * mu(lambda) (ties retrieved);
    NearestNeighbor shifts the cutoff down by the solved eps_minus. Only
    documents with positive overlap are reachable.
    """
    if query_code.m != index.config.m:
        raise CodeLengthMismatch(
            f"query has m={query_code.m}, index expects {index.config.m}"
        )
    count_threshold, top_k, label = _resolve_cutoff(index, cutoff)
    pairs, examined = _accumulate(index, query_code, accumulator)
    index.counters["queries"] += 1
    index.counters["examined"] += examined

    if count_threshold is not None:
        chosen = [(i, c) for i, c in pairs.items() if c >= count_threshold]
        if count_threshold <= 0:
            # the cutoff contract is an iff: a nonpositive threshold admits
            # every document, including those with no overlapping posting
            chosen.extend((i, 0) for i in range(index.doc_count) if i not in pairs)
    else:
        chosen = list(pairs.items())
    chosen.sort(key=lambda ic: (-ic[1], index.doc_ids[ic[0]]))
    if top_k is not None:
        chosen = chosen[:top_k]
    m = index.config.m
    return [
        SearchResult(
            doc_id=index.doc_ids[i],
            raw_count=c,
            score=c / m,
            retrieved_by=label,
        )
        for i, c in chosen
    ]


def codes_from_index(index: InvertedIndex):
    """Rebuild each document's sparse code by transposing the postings."""
    supports = [[] for _ in range(index.doc_count)]
    for dim, plist in enumerate(index.postings):
        for internal in plist:
            supports[internal].append(dim)
    return [
        (doc_id, SparseCode(m=index.config.m, support=np.array(sup, dtype=np.int64)))
        for doc_id, sup in zip(index.doc_ids, supports)
    ]


# --- token export ------------------------------------------------------


def export_tokens(codes) -> list[str]:
    """One line per document: "id<TAB>t000003 t000017 ..." (ascending)."""
    lines = []
    for doc_id, code in codes:
        tokens = " ".join(f"t{dim:06d}" for dim in code.support)
        lines.append(f"{doc_id}\t{tokens}")
    return lines


def parse_tokens(lines, m: int):
    """Invert export_tokens; yields (doc_id, SparseCode) pairs."""
    out = []
    for line in lines:
        doc_id, _, tokens = line.rstrip("\n").partition("\t")
        support = np.array(
            [int(tok[1:]) for tok in tokens.split()] if tokens else [],
            dtype=np.int64,
        )
        out.append((doc_id, SparseCode(m=m, support=support)))
    return out


# --- persistence -------------------------------------------------------


def _write_varint(buf: bytearray, value: int) -> None:
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            buf.append(byte | 0x80)
        else:
            buf.append(byte)
            return


def _read_varint(data: bytes, pos: int):
    shift = 0
    value = 0
    while True:
        if pos >= len(data):
            raise CorruptStream("truncated varint")
        byte = data[pos]
        pos += 1
        value |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return value, pos
        shift += 7


def save_index(index: InvertedIndex, sink) -> None:
    """Serialize to the SPHX1 binary format (path or binary file object)."""
    cfg = index.config
    buf = bytearray(MAGIC)
    buf += _HEADER.pack(
        cfg.m, cfg.r, cfg.h_index, cfg.h_query,
        _KIND_CODE[cfg.kind], cfg.d, cfg.seed & (2**64 - 1),
        _MODE_CODE[cfg.cutoff_mode], index.doc_count,
    )
    for doc_id in index.doc_ids:
        raw = str(doc_id).encode("utf-8")
        _write_varint(buf, len(raw))
        buf += raw
    for plist in index.postings:
        _write_varint(buf, len(plist))
        prev = 0
        for j, value in enumerate(plist):
            _write_varint(buf, int(value) if j == 0 else int(value) - prev)
            prev = int(value)
    buf += hashlib.blake2b(bytes(buf), digest_size=8).digest()
    if hasattr(sink, "write"):
        sink.write(bytes(buf))
    else:
        with open(sink, "wb") as fh:
            fh.write(bytes(buf))


def load_index(source) -> InvertedIndex:
    """Inverse of save_index; validates magic, version, and checksum."""
    if hasattr(source, "read"):
        data = source.read()
    else:
        with open(source, "rb") as fh:
            data = fh.read()
    if len(data) < len(MAGIC) + _HEADER.size + 8:
        raise CorruptStream("stream shorter than a minimal index")
    if data[:4] != MAGIC[:4]:
        raise CorruptStream("bad magic")
    if data[:5] != MAGIC:
        raise VersionMismatch(f"unsupported format version {data[4:5]!r}")
    body, checksum = data[:-8], data[-8:]
    if hashlib.blake2b(body, digest_size=8).digest() != checksum:
        raise CorruptStream("checksum mismatch")
    pos = len(MAGIC)
    m, r, h_index, h_query, kind_code, d, seed, mode_code, n = _HEADER.unpack_from(
        body, pos
    )
    pos += _HEADER.size
    config = IndexConfig(
        m=m, r=r, h_index=h_index, h_query=h_query,
        kind=_CODE_KIND[kind_code], d=d, seed=seed,
        cutoff_mode=_CODE_MODE[mode_code],
    )
    doc_ids = []
    for _ in range(n):
        length, pos = _read_varint(body, pos)
        if pos + length > len(body):
            raise CorruptStream("truncated doc id table")
        doc_ids.append(body[pos : pos + length].decode("utf-8"))
        pos += length
    postings = []
    doc_k = np.zeros(n, dtype=np.int64)
    for _ in range(m):
        length, pos = _read_varint(body, pos)
        plist = np.empty(length, dtype=np.int64)
        prev = 0
        for j in range(length):
            delta, pos = _read_varint(body, pos)
            prev = delta if j == 0 else prev + delta
            if prev >= n:
                raise CorruptStream("posting refers past the document table")
            plist[j] = prev
        postings.append(plist)
        doc_k[plist] += 1
    if pos != len(body):
        raise CorruptStream("trailing bytes after posting lists")
    return InvertedIndex(
        config=config, postings=postings, doc_ids=doc_ids, doc_k=doc_k
    )


# --- cost report -------------------------------------------------------


def index_stats(index: InvertedIndex) -> dict:
    """Sizes, model cost estimates (nk, nk^2/m), and measured query traffic."""
    n = index.doc_count
    lengths = np.array([len(p) for p in index.postings], dtype=np.int64)
    total = int(lengths.sum())
    mean_k = float(index.doc_k.mean()) if n else 0.0
    queries = index.counters["queries"]
    stats = {
        "doc_count": n,
        "m": index.config.m,
        "total_postings": total,
        "mean_posting_length": float(lengths.mean()) if index.config.m else 0.0,
        "max_posting_length": int(lengths.max()) if index.config.m else 0,
        "mean_doc_k": mean_k,
        "model_index_cost_nk": n * mean_k,
        "model_search_cost_nk2_over_m": (
            n * mean_k * mean_k / index.config.m if index.config.m else 0.0
        ),
        "measured_queries": queries,
        "measured_mean_examined": (
            index.counters["examined"] / queries if queries else 0.0
        ),
    }
    return stats


def stats_json(index: InvertedIndex) -> str:
    return json.dumps(index_stats(index), indent=2, sort_keys=True)
