"""Random mappings from the unit sphere to sparse binary codes.

A transform sends a unit vector to m real projections; coordinates at or
above a threshold h become the "terms" of the document. Three kinds:

* ``gaussian``: projections are inner products with m i.i.d. standard
  normal rows. Exact but O(m*d) per application.
* ``structured``: zero-pad to d', replicate m/d' times with random sign
  flips, then apply a scaled DCT-II. O(m log m), and the output norm is
  exactly m for unit input.
* ``biased-structured``: negative control: one +-1 per column placed in a
  distinct row, then the same DCT scaled to keep the output norm at m.
  Kept only to demonstrate how a sparse DCT input breaks error symmetry.

Transforms and codes are immutable; apply/score are safe to call from many
threads.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.fft

from .errors import (
    CodeLengthMismatch,
    DimensionMismatch,
    EmptyInput,
    InvalidDimensions,
    NotPowerOfTwo,
)
from .seeding import generator

_GAUSSIAN_CHUNK_ROWS = 8192


class TransformKind(str, Enum):
    GAUSSIAN = "gaussian"
    STRUCTURED = "structured"
    BIASED_STRUCTURED = "biased-structured"


@dataclass(frozen=True, eq=False)
class UnitVector:
    """A point on the unit sphere, validated to 1e-9."""

    coords: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64)
        object.__setattr__(self, "coords", coords)
        if coords.ndim != 1 or coords.size < 1:
            raise InvalidDimensions("unit vector must be 1-D with d >= 1")
        norm = float(np.linalg.norm(coords))
        if abs(norm - 1.0) > 1e-9:
            raise InvalidDimensions(f"norm {norm!r} is not 1 within 1e-9")

    @property
    def d(self) -> int:
        return self.coords.size

    @classmethod
    def normalized(cls, values) -> "UnitVector":
        """Scale an arbitrary nonzero vector onto the sphere."""
        v = np.asarray(values, dtype=np.float64)
        norm = float(np.linalg.norm(v))
        if norm == 0.0:
            raise InvalidDimensions("cannot normalize a zero vector")
        return cls(v / norm)


@dataclass(frozen=True, eq=False)
class ProjectionVector:
    """The m real projections of one vector under a transform."""

    values: np.ndarray

    @property
    def m(self) -> int:
        return self.values.size


@dataclass(frozen=True, eq=False)
class SparseCode:
    """Active dimensions {i : projection_i >= h} of one mapped vector."""

    m: int
    support: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=np.int64)
        object.__setattr__(self, "support", support)
        if support.size and (
            np.any(np.diff(support) <= 0)
            or support[0] < 0
            or support[-1] >= self.m
        ):
            raise InvalidDimensions(
                "support must be strictly increasing within [0, m)"
            )

    @property
    def k(self) -> int:
        return self.support.size

    def __eq__(self, other):
        return (
            isinstance(other, SparseCode)
            and self.m == other.m
            and np.array_equal(self.support, other.support)
        )


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p <<= 1
    return p


@dataclass(frozen=True, eq=False)
class Transform:
    """A reusable random linear map, reproducible from (kind, d, m, seed)."""

    kind: TransformKind
    d: int
    m: int
    seed: int
    d_padded: int = 0
    signs: np.ndarray | None = None       # structured: m sign flips
    positions: np.ndarray | None = None   # biased: row index per column
    _matrix: list = field(default_factory=list, repr=False, compare=False)

    def materialize(self) -> None:
        """Cache the Gaussian matrix (trades memory for speed).

        Streaming and materialized application are bit-identical because
        both read the same generator stream in the same order.
        """
        if self.kind is TransformKind.GAUSSIAN and not self._matrix:
            rng = generator(self.seed)
            self._matrix.append(
                rng.standard_normal(self.m * self.d).reshape(self.m, self.d)
            )

    def project(self, rows: np.ndarray) -> np.ndarray:
        """Project an (n, d) block of unit vectors to (n, m)."""
        rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        if rows.shape[1] != self.d:
            raise DimensionMismatch(
                f"vectors have d={rows.shape[1]}, transform expects {self.d}"
            )
        if self.kind is TransformKind.GAUSSIAN:
            return self._project_gaussian(rows)
        return self._project_dct(rows)

    def _project_gaussian(self, rows: np.ndarray) -> np.ndarray:
        if self._matrix:
            return rows @ self._matrix[0].T
        out = np.empty((rows.shape[0], self.m))
        rng = generator(self.seed)
        start = 0
        while start < self.m:
            stop = min(start + _GAUSSIAN_CHUNK_ROWS, self.m)
            block = rng.standard_normal((stop - start) * self.d)
            block = block.reshape(stop - start, self.d)
            out[:, start:stop] = rows @ block.T
            start = stop
        return out

    def _project_dct(self, rows: np.ndarray) -> np.ndarray:
        dp = self.d_padded
        padded = np.zeros((rows.shape[0], dp))
        padded[:, : self.d] = rows
        if self.kind is TransformKind.STRUCTURED:
            u = np.tile(padded, self.m // dp) * self.signs
            scale = np.sqrt(dp)
        else:
            u = np.zeros((rows.shape[0], self.m))
            u[:, self.positions] = padded * self.signs
            scale = np.sqrt(self.m)
        return scale * scipy.fft.dct(u, type=2, norm="ortho", axis=-1)


def make_transform(
    kind: TransformKind | str,
    d: int,
    m: int,
    seed: int,
    materialize: bool = False,
) -> Transform:
    """Build a transform; identical arguments always give identical outputs.

    Gaussian entries are i.i.d. standard normal from a seeded PCG64 stream.
    Structured sign patterns are i.i.d. Rademacher. The biased control
    samples one distinct output row per (padded) input column.
    """
    kind = TransformKind(kind)
    if d < 1 or m < 1:
        raise InvalidDimensions(f"need d >= 1 and m >= 1, got d={d}, m={m}")
    if kind is TransformKind.GAUSSIAN:
        t = Transform(kind=kind, d=d, m=m, seed=seed)
        if materialize:
            t.materialize()
        return t

    if m & (m - 1):
        raise NotPowerOfTwo(f"structured kinds need a power-of-two m, got {m}")
    if m < d:
        raise InvalidDimensions(f"structured kinds need m >= d, got m={m}, d={d}")
    dp = _next_pow2(d)
    if m % dp:
        raise InvalidDimensions(
            f"padded dimension {dp} must divide m={m}"
        )
    rng = generator(seed)
    if kind is TransformKind.STRUCTURED:
        signs = rng.integers(0, 2, m).astype(np.float64) * 2.0 - 1.0
        return Transform(kind=kind, d=d, m=m, seed=seed, d_padded=dp, signs=signs)
    positions = np.sort(rng.choice(m, size=dp, replace=False))
    signs = rng.integers(0, 2, dp).astype(np.float64) * 2.0 - 1.0
    return Transform(
        kind=kind, d=d, m=m, seed=seed, d_padded=dp,
        signs=signs, positions=positions,
    )


def apply_transform(t: Transform, x: UnitVector) -> ProjectionVector:
    """Project one unit vector to its m real coordinates."""
    if x.d != t.d:
        raise DimensionMismatch(f"vector d={x.d} vs transform d={t.d}")
    return ProjectionVector(t.project(x.coords[None, :])[0])


def dct2(u, d_prime: int | None = None) -> np.ndarray:
    """Scaled type-2 DCT: v_i = c_i * sqrt(d'/m) * sum_j u_j cos(...).

    c_1 = 1 and c_i = sqrt(2) otherwise, so the output norm is
    d' * ||u||^2. Computed in O(m log m); agrees with the direct O(m^2)
    summation to 1e-9 relative per coordinate.
    """
    u = np.asarray(u, dtype=np.float64)
    if u.size == 0:
        raise EmptyInput("dct2 needs at least one sample")
    if d_prime is None:
        d_prime = u.shape[-1]
    return np.sqrt(d_prime) * scipy.fft.dct(u, type=2, norm="ortho", axis=-1)


def encode(p: ProjectionVector, h: float) -> SparseCode:
    """Threshold projections at h; ties at exactly h are included."""
    values = np.asarray(p.values)
    support = np.flatnonzero(values >= h).astype(np.int64)
    return SparseCode(m=values.size, support=support)


def map_vector(t: Transform, x: UnitVector, h: float) -> SparseCode:
    """encode(apply_transform(t, x), h); pure in (kind, d, m, seed, x, h)."""
    return encode(apply_transform(t, x), h)


def overlap(c1: SparseCode, c2: SparseCode) -> int:
    """Raw integer intersection count of two codes' supports."""
    if c1.m != c2.m:
        raise CodeLengthMismatch(f"codes have m={c1.m} and m={c2.m}")
    return int(
        np.intersect1d(c1.support, c2.support, assume_unique=True).size
    )


def score(c1: SparseCode, c2: SparseCode) -> float:
    """Fraction of the m dimensions active in both codes."""
    return overlap(c1, c2) / c1.m
