"""Total-effect and first-order index estimators over evaluated designs."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .design import ASYMMETRIC, DesignConfig, EffectPairIndex, RunSchedule
from .errors import DegenerateModelError

SALTENIS = "saltenis"
CORRELATION = "correlation"
CORRELATION_CORRECTED = "correlation_corrected"
_ESTIMATOR_ALIASES = {
    "saltenis": SALTENIS, "jansen": SALTENIS,
    "corr": CORRELATION, "correlation": CORRELATION,
    "corr-corrected": CORRELATION_CORRECTED, "correlation_corrected": CORRELATION_CORRECTED,
    "correlation-corrected": CORRELATION_CORRECTED,
}


def normalize_estimator(name: str) -> str:
    try:
        return _ESTIMATOR_ALIASES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown estimator {name!r}") from None


@dataclass(frozen=True)
class EvaluatedSchedule:
    schedule: RunSchedule
    y: np.ndarray
    model_id: str = ""

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if y.size != len(self.schedule):
            raise ValueError(f"{y.size} outputs for {len(self.schedule)} runs")
        if not np.all(np.isfinite(y)):
            raise ValueError("model outputs must be finite")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)


@dataclass
class CorrelationAccumulator:
    """Pearson coefficients per factor plus the spurious ones between
    couples that share no column."""

    rho: dict = field(default_factory=dict)
    spurious: list = field(default_factory=list)

    def mean(self, j: int) -> float:
        return float(np.mean(self.rho[j]))

    @property
    def spurious_mean(self) -> float:
        return float(np.mean(self.spurious)) if self.spurious else 0.0


@dataclass(frozen=True)
class EstimateReport:
    """Raw (unclamped) index estimates for each factor."""

    estimator_id: str
    variance_Y: float
    T: np.ndarray | None
    S: np.ndarray | None
    pairs_used: np.ndarray
    accumulator: CorrelationAccumulator | None = field(default=None, compare=False, repr=False)

    @property
    def k(self) -> int:
        return self.pairs_used.size

    def to_dict(self) -> dict:
        factors = []
        for j in range(self.k):
            entry = {"factor": j + 1, "pairs_used": int(self.pairs_used[j])}
            if self.T is not None:
                entry["T"] = float(self.T[j])
            if self.S is not None:
                entry["S"] = float(self.S[j])
            factors.append(entry)
        return {"estimator_id": self.estimator_id, "variance_Y": self.variance_Y,
                "factors": factors}


def total_variance(ev: EvaluatedSchedule) -> float:
    """Unbiased variance of y over the base rows that anchor the effects."""
    rows = ev.schedule.variance_rows()
    if rows.size < 2:
        raise ValueError("need at least two base-matrix rows to estimate V(Y)")
    return float(np.var(ev.y[rows], ddof=1))


def _checked_variance(ev: EvaluatedSchedule) -> float:
    var = total_variance(ev)
    if var <= 0.0:
        raise DegenerateModelError("output variance is zero")
    return var


def saltenis_total(ev: EvaluatedSchedule, pairs: EffectPairIndex) -> EstimateReport:
    """T_j = (1/(2P)) sum (y_u - y_v)^2 / V(Y), pooling every pair of factor j."""
    var = _checked_variance(ev)
    T = np.empty(pairs.k)
    used = np.empty(pairs.k, dtype=int)
    for j in range(pairs.k):
        u, v = pairs.pairs_for(j)
        if u.size == 0:
            raise ValueError(f"no elementary effects for factor {j + 1}")
        d = ev.y[u] - ev.y[v]
        T[j] = np.dot(d, d) / (2.0 * u.size) / var
        used[j] = u.size
    return EstimateReport(SALTENIS, var, T, None, used)


def pearson(x, y) -> float:
    """Pearson coefficient with (N-1) normalisation of both covariance and variances."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    if n < 2 or y.size != n:
        raise ValueError("pearson needs two equal-length vectors of at least two entries")
    vx = np.var(x, ddof=1)
    vy = np.var(y, ddof=1)
    if vx <= 0.0 or vy <= 0.0:
        raise DegenerateModelError("cannot correlate a constant vector")
    cov = np.dot(x - x.mean(), y - y.mean()) / (n - 1)
    return float(cov / np.sqrt(vx * vy))


def uncorrelated_couples(schedule: RunSchedule) -> list[tuple[np.ndarray, np.ndarray]]:
    """Couples of N-vectors sharing no column: base vs base, X_Y^(j) vs Y_X^(j)."""
    bases = schedule.base_matrices()
    out = [(schedule.block(x), schedule.block(y)) for x, y in combinations(bases, 2)]
    sources = schedule.hybrid_sources()
    for x, y in combinations(sources, 2):
        for j in range(schedule.k):
            if schedule.has_block(x, y, j) and schedule.has_block(y, x, j):
                out.append((schedule.block(x, y, j), schedule.block(y, x, j)))
    return out


def spurious_correlation(ev: EvaluatedSchedule) -> list[float]:
    return [pearson(ev.y[u], ev.y[v]) for u, v in uncorrelated_couples(ev.schedule)]


def _correct(rho: float, rho0: float) -> float:
    return (rho - rho0) / (1.0 - rho0)


def correlation_total(ev: EvaluatedSchedule, pairs: EffectPairIndex,
                      corrected: bool = False) -> EstimateReport:
    """T_j = 1 - <rho_j>, with <rho_j> averaged over the pair families of j.

    When ``corrected``, the mean spurious coefficient rho0 of couples that
    share no column is removed: T_j = 1 - (<rho_j> - rho0) / (1 - rho0).
    """
    var = _checked_variance(ev)
    acc = CorrelationAccumulator()
    if corrected:
        acc.spurious = spurious_correlation(ev)
        if not acc.spurious:
            raise ValueError("design has no uncorrelated couples to estimate spurious correlation")
    rho0 = acc.spurious_mean
    T = np.empty(pairs.k)
    used = np.empty(pairs.k, dtype=int)
    for j in range(pairs.k):
        fams = pairs.families_for(j)
        if not fams:
            raise ValueError(f"no elementary effects for factor {j + 1}")
        acc.rho[j] = [pearson(ev.y[f.u], ev.y[f.v]) for f in fams]
        mean_rho = acc.mean(j)
        T[j] = 1.0 - (_correct(mean_rho, rho0) if corrected else mean_rho)
        used[j] = sum(len(f) for f in fams)
    est = CORRELATION_CORRECTED if corrected else CORRELATION
    return EstimateReport(est, var, T, None, used, accumulator=acc)


def _first_order_couples(schedule: RunSchedule, design: DesignConfig, j: int):
    """(f(b), f(a), f(a_b^(j))) index triples; mirrored triple added when B is a source."""
    if design.n != 2:
        raise ValueError("first-order estimates need a two-matrix design")
    if not schedule.has_block(1):
        raise ValueError("first-order estimates need f(B); evaluate the B matrix too")
    out = [(schedule.block(1), schedule.block(0), schedule.block(0, 1, j))]
    if design.scheme != ASYMMETRIC and schedule.has_block(1, 0, j):
        out.append((schedule.block(0), schedule.block(1), schedule.block(1, 0, j)))
    return out


def first_order(ev: EvaluatedSchedule, design: DesignConfig, method: str = SALTENIS,
                corrected: bool = False) -> EstimateReport:
    """First-order indices S_j from runs sharing only coordinate j.

    ``method="saltenis"``: S_j = mean(f(b) * (f(a_b^(j)) - f(a))) / V(Y).
    ``method="correlation"``: S_j = mean Pearson coefficient of f(b) and
    f(a_b^(j)), optionally corrected for spurious correlation.
    """
    method = normalize_estimator(method)
    var = _checked_variance(ev)
    rho0 = 0.0
    spurious = []
    if method != SALTENIS and corrected:
        spurious = spurious_correlation(ev)
        if not spurious:
            raise ValueError("design has no uncorrelated couples to estimate spurious correlation")
        rho0 = float(np.mean(spurious))
    S = np.empty(design.k)
    used = np.empty(design.k, dtype=int)
    for j in range(design.k):
        triples = _first_order_couples(ev.schedule, design, j)
        if method == SALTENIS:
            vals = [np.mean(ev.y[b] * (ev.y[ab] - ev.y[a])) for b, a, ab in triples]
            S[j] = float(np.mean(vals)) / var
        else:
            rho = float(np.mean([pearson(ev.y[b], ev.y[ab]) for b, _, ab in triples]))
            S[j] = _correct(rho, rho0) if corrected else rho
        used[j] = sum(t[0].size for t in triples)
    est = SALTENIS if method == SALTENIS else (CORRELATION_CORRECTED if corrected else CORRELATION)
    acc = CorrelationAccumulator(spurious=spurious) if spurious else None
    return EstimateReport(est, var, None, S, used, accumulator=acc)


def estimate(ev: EvaluatedSchedule, pairs: EffectPairIndex, estimator: str = SALTENIS,
             design: DesignConfig | None = None, with_first_order: bool = False) -> EstimateReport:
    """T_j by the chosen estimator, plus matching S_j when requested."""
    estimator = normalize_estimator(estimator)
    if estimator == SALTENIS:
        rep = saltenis_total(ev, pairs)
    else:
        rep = correlation_total(ev, pairs, corrected=estimator == CORRELATION_CORRECTED)
    if not with_first_order:
        return rep
    if design is None:
        raise ValueError("first-order estimates need the design configuration")
    method = SALTENIS if estimator == SALTENIS else CORRELATION
    s = first_order(ev, design, method, corrected=estimator == CORRELATION_CORRECTED)
    return EstimateReport(rep.estimator_id, rep.variance_Y, rep.T, s.S, rep.pairs_used,
                          accumulator=rep.accumulator)
