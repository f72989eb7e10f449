"""Sobol' LP-tau points, column randomization and L2 discrepancy."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np

from .errors import CapacityError

BITS = 32
_SCALE = 2.0**-BITS


@dataclass(frozen=True)
class QrPointSet:
    """A ``count x dims`` block of points in the unit hypercube."""

    points: np.ndarray
    skip: int = 0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValueError("points must be a 2-D array")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def dims(self) -> int:
        return self.points.shape[1]

    @property
    def count(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class RandomizationSpec:
    """Seeded column permutation, optionally followed by a digital shift.

    The "digital" shift here is a Cranley-Patterson rotation (addition
    modulo 1) with seed-derived offsets.
    """

    seed: int
    dims: int
    digital_shift_enabled: bool = False
    column_permutation: np.ndarray = field(init=False, repr=False)
    shift: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.dims < 1:
            raise ValueError("dims must be positive")
        rng = np.random.default_rng(self.seed)
        perm = rng.permutation(self.dims)
        shift = rng.random(self.dims)
        perm.setflags(write=False)
        shift.setflags(write=False)
        object.__setattr__(self, "column_permutation", perm)
        object.__setattr__(self, "shift", shift)

    @classmethod
    def identity(cls, dims: int) -> "RandomizationSpec":
        spec = cls(seed=0, dims=dims)
        perm = np.arange(dims)
        perm.setflags(write=False)
        object.__setattr__(spec, "column_permutation", perm)
        return spec

    @classmethod
    def from_permutation(cls, permutation, shift: bool = False, seed: int = 0):
        perm = np.asarray(permutation, dtype=int)
        if sorted(perm.tolist()) != list(range(perm.size)):
            raise ValueError("column_permutation must be a permutation of 0..dims-1")
        spec = cls(seed=seed, dims=perm.size, digital_shift_enabled=shift)
        perm = perm.copy()
        perm.setflags(write=False)
        object.__setattr__(spec, "column_permutation", perm)
        return spec


@dataclass(frozen=True)
class DiscrepancyReport:
    value: float
    point_count: int
    dims: int

    def __str__(self):
        return f"{self.value:.2g}"


def _parse_table(text: str) -> list[tuple[int, int, tuple[int, ...]]]:
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = [int(tok) for tok in line.split()]
        degree, coeff, m = fields[0], fields[1], tuple(fields[2:])
        if len(m) != degree:
            raise ValueError(f"direction table row {len(rows) + 1}: expected {degree} initial numbers")
        rows.append((degree, coeff, m))
    return rows


@lru_cache(maxsize=None)
def _table() -> tuple:
    text = resources.files("gsa.data").joinpath("sobol_directions.txt").read_text()
    return tuple(_parse_table(text))


def max_dims() -> int:
    """Number of dimensions supported by the bundled table."""
    return len(_table())


def _direction_integers(degree: int, coeff: int, m_init: tuple[int, ...]) -> np.ndarray:
    m = [1] * BITS if degree == 0 else list(m_init)
    for i in range(degree, BITS):
        if degree == 0:
            break
        new = m[i - degree] ^ (m[i - degree] << degree)
        for t in range(1, degree):
            if (coeff >> (degree - 1 - t)) & 1:
                new ^= m[i - t] << t
        m.append(new)
    return np.array([m[i] << (BITS - 1 - i) for i in range(BITS)], dtype=np.uint64)


@lru_cache(maxsize=8)
def _directions(dims: int) -> np.ndarray:
    table = _table()
    v = np.stack([_direction_integers(*table[d]) for d in range(dims)])
    v.setflags(write=False)
    return v


def sobol_points(dims: int, count: int, skip: int = 1) -> QrPointSet:
    """Return Sobol' points with sequence indices ``skip .. skip+count-1``.

    Points are produced in Gray-code order, so for the first dimension the
    sequence starts 0, 0.5, 0.75, 0.25, ...  Index 0 is the all-zero point
    and is skipped by default.
    """
    if dims < 1:
        raise ValueError("dims must be at least 1")
    if dims > max_dims():
        raise CapacityError(f"dims={dims} exceeds the direction table ({max_dims()} dimensions)")
    if count < 0 or skip < 0:
        raise ValueError("count and skip must be non-negative")
    if skip + count > 2**BITS:
        raise CapacityError("sequence index exceeds 2**32")
    v = _directions(dims)
    idx = np.arange(skip, skip + count, dtype=np.uint64)
    gray = idx ^ (idx >> np.uint64(1))
    acc = np.zeros((count, dims), dtype=np.uint64)
    for b in range(BITS):
        bit = ((gray >> np.uint64(b)) & np.uint64(1)).astype(bool)
        if not bit.any():
            continue
        acc[bit] ^= v[:, b]
    return QrPointSet(acc.astype(float) * _SCALE, skip=skip)


def randomize(pts: QrPointSet, spec: RandomizationSpec) -> QrPointSet:
    """Permute columns (output column j = input column perm[j]), then shift."""
    perm = spec.column_permutation
    if perm.size != pts.dims:
        raise ValueError(f"permutation length {perm.size} does not match dims {pts.dims}")
    out = pts.points[:, perm]
    if spec.digital_shift_enabled:
        out = np.mod(out + spec.shift, 1.0)
    return QrPointSet(out, skip=pts.skip)


def l2_discrepancy(pts: QrPointSet | np.ndarray, chunk: int = 512) -> DiscrepancyReport:
    """L2-star discrepancy via Warnock's closed form.

    D^2 = 3^-d - (2/N) sum_i prod_j (1 - x_ij^2)/2
          + (1/N^2) sum_i sum_m prod_j (1 - max(x_ij, x_mj))
    """
    x = pts.points if isinstance(pts, QrPointSet) else np.asarray(pts, dtype=float)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("discrepancy needs at least one point")
    n, d = x.shape
    term1 = 3.0**-d
    term2 = np.prod((1.0 - x**2) / 2.0, axis=1).sum() * 2.0 / n
    term3 = 0.0
    for start in range(0, n, chunk):
        block = x[start:start + chunk]
        prod = np.ones((block.shape[0], n))
        for j in range(d):
            prod *= 1.0 - np.maximum.outer(block[:, j], x[:, j])
        term3 += prod.sum()
    d2 = term1 - term2 + term3 / n**2
    return DiscrepancyReport(float(np.sqrt(max(d2, 0.0))), n, d)


def base_matrices(n: int, k: int, rows: int, seed: int | None = None,
                  skip: int = 1, shift: bool = False) -> list[np.ndarray]:
    """Split an ``n*k``-dimensional Sobol' block into n matrices of k columns.

    The joint column permutation (when ``seed`` is given) is applied before
    the split, so any sequence column can land in any matrix.
    """
    pts = sobol_points(n * k, rows, skip=skip)
    if seed is not None:
        pts = randomize(pts, RandomizationSpec(seed, n * k, digital_shift_enabled=shift))
    return [pts.points[:, m * k:(m + 1) * k].copy() for m in range(n)]
