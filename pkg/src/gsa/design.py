"""Asymmetric and symmetric n-matrix designs for total-effect estimation.

A design evaluates n base matrices (A, B, C, ...) and hybrid matrices
``X_Y^(j)``: all columns from X except column j, which comes from Y.
Pairs of runs one step apart in coordinate j are elementary effects.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

ASYMMETRIC = "asymmetric"
SYMMETRIC = "symmetric"
_SCHEME_ALIASES = {"asym": ASYMMETRIC, "asymmetric": ASYMMETRIC,
                   "sym": SYMMETRIC, "symmetric": SYMMETRIC}
LABELS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"

# plans may overshoot the requested budget by up to 25% (e.g. 624 runs for 500).
PLAN_TOLERANCE = 1.25


def normalize_scheme(scheme: str) -> str:
    try:
        return _SCHEME_ALIASES[scheme.lower()]
    except KeyError:
        raise ValueError(f"unknown scheme {scheme!r}; use 'asym' or 'sym'") from None


@dataclass(frozen=True)
class DesignConfig:
    """Number of factors ``k``, base matrices ``n`` and rows per matrix ``N``.

    The asymmetric scheme normally uses n = 2; n > 2 gives the multi-matrix
    variant with A as the only base sample (kept for reuse accounting).
    """

    k: int
    n: int
    N: int
    scheme: str = ASYMMETRIC

    def __post_init__(self):
        object.__setattr__(self, "scheme", normalize_scheme(self.scheme))
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.n < 2:
            raise ValueError("a design needs at least two base matrices")
        if self.n > len(LABELS):
            raise ValueError(f"at most {len(LABELS)} base matrices are supported")


@dataclass(frozen=True)
class DesignBudget:
    N_T: int
    E_T: int
    explored: int

    @property
    def e(self) -> float:
        return self.E_T / self.N_T


def budget(cfg: DesignConfig) -> DesignBudget:
    """Total runs, elementary effects and explored rows (nN) of a design."""
    k, n, N = cfg.k, cfg.n, cfg.N
    if cfg.scheme == ASYMMETRIC:
        runs = N * (1 + k * (n - 1))
        effects = math.comb(n, 2) * k * N
    else:
        runs = n * N * (1 + k * (n - 1))
        effects = N * k * n * n * (n - 1) // 2
    return DesignBudget(N_T=runs, E_T=effects, explored=n * N)


def economy(k: int, n: int) -> float:
    return k * n * (n - 1) / (2 * (1 + k * (n - 1)))


# --------------------------------------------------------------------------
# run schedules

_TAG_RE = re.compile(r"^([A-Z])(?:_([A-Z])\((\d+)\))?$")


def make_tag(source: int, donor: int = -1, factor: int = -1) -> str:
    """``"A"`` for a base row, ``"A_B(3)"`` for a row of A_B^(3) (1-based factor)."""
    if donor < 0:
        return LABELS[source]
    return f"{LABELS[source]}_{LABELS[donor]}({factor + 1})"


def parse_tag(tag: str) -> tuple[int, int, int]:
    m = _TAG_RE.match(tag.strip())
    if not m:
        raise ValueError(f"malformed run tag {tag!r}")
    src = LABELS.index(m.group(1))
    if m.group(2) is None:
        return src, -1, -1
    return src, LABELS.index(m.group(2)), int(m.group(3)) - 1


@dataclass(frozen=True)
class RunSchedule:
    """Ordered runs of a design.

    Each run r has coordinates ``points[r]`` and a provenance triple
    (source matrix, donor matrix, donor column) plus the base row index.
    Base runs have donor = factor = -1.
    """

    points: np.ndarray
    source: np.ndarray
    donor: np.ndarray
    factor: np.ndarray
    row: np.ndarray
    _blocks: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("points", "source", "donor", "factor", "row"):
            arr = np.asarray(getattr(self, name), dtype=float if name == "points" else int)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        blocks: dict[tuple[int, int, int], list[tuple[int, int]]] = {}
        for r, key in enumerate(zip(self.source.tolist(), self.donor.tolist(), self.factor.tolist())):
            blocks.setdefault(key, []).append((int(self.row[r]), r))
        sorted_blocks = {}
        for key, entries in blocks.items():
            entries.sort()
            rows = [e[0] for e in entries]
            if len(set(rows)) != len(rows):
                raise ValueError(f"duplicate row index in block {make_tag(*key)}")
            sorted_blocks[key] = np.array([e[1] for e in entries], dtype=int)
        object.__setattr__(self, "_blocks", sorted_blocks)

    def __len__(self):
        return self.points.shape[0]

    @property
    def k(self) -> int:
        return self.points.shape[1]

    def tag(self, r: int) -> str:
        return make_tag(int(self.source[r]), int(self.donor[r]), int(self.factor[r]))

    def tags(self) -> list[str]:
        return [self.tag(r) for r in range(len(self))]

    def has_block(self, source: int, donor: int = -1, factor: int = -1) -> bool:
        return (source, donor, factor) in self._blocks

    def block(self, source: int, donor: int = -1, factor: int = -1) -> np.ndarray:
        """Run ids of one matrix, ordered by base row index."""
        try:
            return self._blocks[(source, donor, factor)]
        except KeyError:
            raise ValueError(f"schedule has no block {make_tag(source, donor, factor)}") from None

    def base_matrices(self) -> list[int]:
        return sorted({s for (s, d, _) in self._blocks if d < 0})

    def hybrid_sources(self) -> list[int]:
        return sorted({s for (s, d, _) in self._blocks if d >= 0})

    @property
    def scheme(self) -> str:
        """Asymmetric when only one matrix acts as a base sample."""
        return ASYMMETRIC if len(self.hybrid_sources()) <= 1 else SYMMETRIC

    def variance_rows(self) -> np.ndarray:
        """Base runs whose matrix is a source of hybrids (A only when asymmetric)."""
        sources = self.hybrid_sources() or self.base_matrices()
        rows = [self.block(s) for s in sources if self.has_block(s)]
        return np.concatenate(rows) if rows else np.empty(0, dtype=int)

    @classmethod
    def from_tags(cls, points, tags, rows) -> "RunSchedule":
        parsed = np.array([parse_tag(t) for t in tags], dtype=int).reshape(-1, 3)
        return cls(np.asarray(points, dtype=float).reshape(len(parsed), -1), parsed[:, 0], parsed[:, 1],
                   parsed[:, 2], np.asarray(rows, dtype=int))


@dataclass(frozen=True)
class PairFamily:
    """N pairs (u_i, v_i) from two matrices that differ only in ``factor``."""

    factor: int
    u_tag: str
    v_tag: str
    u: np.ndarray
    v: np.ndarray

    def __len__(self):
        return self.u.size


@dataclass(frozen=True)
class EffectPairIndex:
    k: int
    families: tuple[PairFamily, ...]

    def families_for(self, j: int) -> list[PairFamily]:
        return [f for f in self.families if f.factor == j]

    def pairs_for(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        fams = self.families_for(j)
        if not fams:
            return np.empty(0, dtype=int), np.empty(0, dtype=int)
        return np.concatenate([f.u for f in fams]), np.concatenate([f.v for f in fams])

    def count(self, j: int) -> int:
        return sum(len(f) for f in self.families_for(j))

    @property
    def total(self) -> int:
        return sum(len(f) for f in self.families)

    @classmethod
    def from_pairs(cls, schedule: RunSchedule, factors, u, v) -> "EffectPairIndex":
        """Regroup flat (factor, u, v) triples into families by run tags."""
        groups: dict[tuple[int, str, str], list[tuple[int, int, int]]] = {}
        for j, a, b in zip(factors, u, v):
            key = (int(j), schedule.tag(int(a)), schedule.tag(int(b)))
            groups.setdefault(key, []).append((int(schedule.row[int(a)]), int(a), int(b)))
        fams = []
        for (j, tu, tv), entries in groups.items():
            entries.sort()
            fams.append(PairFamily(j, tu, tv, np.array([e[1] for e in entries], dtype=int),
                                   np.array([e[2] for e in entries], dtype=int)))
        return cls(schedule.k, tuple(fams))


def _hybrid(base: np.ndarray, donor: np.ndarray, j: int) -> np.ndarray:
    out = base.copy()
    out[:, j] = donor[:, j]
    return out


def build_schedule(cfg: DesignConfig, bases, include_all_bases: bool = False
                   ) -> tuple[RunSchedule, EffectPairIndex]:
    """Lay out every run of the design and index its elementary effects.

    Base rows come first (matrix-major), then hybrids grouped by
    (source, donor, factor).  In the asymmetric scheme only A is evaluated
    among the bases unless ``include_all_bases`` is set (first-order
    estimates need f(B)); the extra rows take part in no pair.
    """
    bases = [np.asarray(b, dtype=float) for b in bases]
    if len(bases) != cfg.n:
        raise ValueError(f"expected {cfg.n} base matrices, got {len(bases)}")
    for b in bases:
        if b.shape != (cfg.N, cfg.k):
            raise ValueError(f"base matrix shape {b.shape} != ({cfg.N}, {cfg.k})")
    for x, y in combinations(range(cfg.n), 2):
        if np.array_equal(bases[x], bases[y]):
            raise ValueError(f"base matrices {LABELS[x]} and {LABELS[y]} are identical")

    N, k, n = cfg.N, cfg.k, cfg.n
    asym = cfg.scheme == ASYMMETRIC
    sources = [0] if asym else list(range(n))
    evaluated_bases = list(range(n)) if (include_all_bases or not asym) else [0]

    blocks = []  # (points, source, donor, factor)
    for m in evaluated_bases:
        blocks.append((bases[m], m, -1, -1))
    for s in sources:
        for d in range(n):
            if d == s:
                continue
            for j in range(k):
                blocks.append((_hybrid(bases[s], bases[d], j), s, d, j))

    points = np.concatenate([b[0] for b in blocks])
    meta = np.array([(s, d, j) for _, s, d, j in blocks], dtype=int)
    meta = np.repeat(meta, N, axis=0)
    rows = np.tile(np.arange(N), len(blocks))
    schedule = RunSchedule(points, meta[:, 0], meta[:, 1], meta[:, 2], rows)

    fams = []
    for j in range(k):
        for s in sources:
            for d in range(n):
                if d != s:
                    fams.append(PairFamily(j, make_tag(s), make_tag(s, d, j),
                                           schedule.block(s), schedule.block(s, d, j)))
        for s in sources:
            others = [d for d in range(n) if d != s]
            for d1, d2 in combinations(others, 2):
                fams.append(PairFamily(j, make_tag(s, d1, j), make_tag(s, d2, j),
                                       schedule.block(s, d1, j), schedule.block(s, d2, j)))
    return schedule, EffectPairIndex(k, tuple(fams))


# --------------------------------------------------------------------------
# planning and reuse accounting

@dataclass(frozen=True)
class PlanRow:
    n: int
    N: int
    scheme: str
    budget: DesignBudget
    note: str = ""

    @property
    def feasible(self) -> bool:
        return self.N >= 1


def plan_for_budget(k: int, target_runs: int, scheme: str = SYMMETRIC, n_candidates=(2,),
                    tolerance: float = PLAN_TOLERANCE) -> list[PlanRow]:
    """For each n, the largest power-of-two N with N_T <= tolerance * target."""
    scheme = normalize_scheme(scheme)
    if k < 1 or target_runs < 1:
        raise ValueError("k and target_runs must be positive")
    limit = tolerance * target_runs
    out = []
    for n in sorted(set(int(c) for c in n_candidates)):
        per_row = budget(DesignConfig(k, n, 1, scheme)).N_T
        if per_row > limit:
            out.append(PlanRow(n, 0, scheme, DesignBudget(0, 0, 0),
                               note=f"infeasible: one row per matrix needs {per_row} runs"))
            continue
        N = 1
        while 2 * N * per_row <= limit:
            N *= 2
        out.append(PlanRow(n, N, scheme, budget(DesignConfig(k, n, N, scheme))))
    return out


@dataclass(frozen=True)
class ReuseTable:
    """How often one coordinate x_ij of each base matrix appears in the runs."""

    counts: dict
    runs_total: int

    def usage_ratio(self, label: str) -> float:
        return self.counts[label] / self.runs_total


def reuse_counts(cfg: DesignConfig) -> ReuseTable:
    k, n = cfg.k, cfg.n
    runs = budget(cfg).N_T
    if cfg.scheme == ASYMMETRIC:
        counts = {LABELS[0]: 1 + (k - 1) * (n - 1)}
        counts.update({LABELS[m]: 1 for m in range(1, n)})
    else:
        counts = {LABELS[m]: 1 + k * (n - 1) for m in range(n)}
    return ReuseTable(counts, runs)


def count_reuse(schedule: RunSchedule, n: int, N: int) -> dict[str, np.ndarray]:
    """Count coordinate usage in a schedule by tracing each run's provenance.

    Returns one ``N x k`` array per base matrix label; entry (i, j) is the
    number of runs whose column j is the coordinate x_ij of that matrix.
    """
    k = schedule.k
    usage = np.zeros((n, N, k), dtype=int)
    for r in range(len(schedule)):
        s, d, f, i = (int(schedule.source[r]), int(schedule.donor[r]),
                      int(schedule.factor[r]), int(schedule.row[r]))
        usage[s, i, :] += 1
        if d >= 0:
            usage[s, i, f] -= 1
            usage[d, i, f] += 1
    return {LABELS[m]: usage[m] for m in range(n)}
