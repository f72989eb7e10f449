"""Repeated, cost-matched benchmarks of designs and estimators (MAE vs runs)."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adaptive import AdaptiveConfig, run_adaptive, warmup_cost
from .design import ASYMMETRIC, PLAN_TOLERANCE, SYMMETRIC, DesignConfig, build_schedule, \
    normalize_scheme, plan_for_budget
from .estimators import SALTENIS, EvaluatedSchedule, estimate, normalize_estimator
from .models import DEFAULT_A, EvaluationCounter, GFunctionSpec, Model, evaluate_batch, g_analytic
from .qrng import base_matrices

log = logging.getLogger(__name__)

MIN_STRIDE = 16


@dataclass(frozen=True)
class Contender:
    """One design/estimator combination, or the adaptive sampler."""

    id: str
    scheme: str = ASYMMETRIC
    n: int = 2
    estimator: str = SALTENIS
    first_order: bool = False
    adaptive: dict | None = None

    @property
    def is_adaptive(self) -> bool:
        return self.adaptive is not None


def parse_contender(text: str) -> Contender:
    """``asym2:saltenis``, ``sym3:saltenis``, ``sym2:corr-corrected+S``,
    ``adaptive`` or ``adaptive:nts=32,delta=1e-4,p=19``."""
    text = text.strip()
    head, _, tail = text.partition(":")
    if head == "adaptive":
        params = {}
        for item in filter(None, (t.strip() for t in tail.split(","))):
            key, _, value = item.partition("=")
            key = {"nts": "N_TS", "n_ts": "N_TS"}.get(key.strip().lower(), key.strip())
            if key not in ("N_TS", "delta", "p", "epsilon"):
                raise ValueError(f"unknown adaptive parameter {key!r}")
            params[key] = float(value) if key in ("delta", "epsilon") else int(value)
        return Contender(text, adaptive=params)
    scheme = head.rstrip("0123456789")
    digits = head[len(scheme):]
    if not digits:
        raise ValueError(f"contender {text!r}: missing matrix count, e.g. 'sym3'")
    est, plus, flag = (tail or SALTENIS).partition("+")
    if plus and flag.upper() != "S":
        raise ValueError(f"contender {text!r}: only '+S' is understood")
    c = Contender(text, normalize_scheme(scheme), int(digits), normalize_estimator(est), bool(plus))
    if c.scheme == SYMMETRIC and c.n == 2:
        c = Contender(c.id, c.scheme, c.n, c.estimator, True)
    return c


@dataclass(frozen=True)
class BenchmarkSpec:
    model: Model
    k: int
    T_ref: np.ndarray
    contenders: tuple[Contender, ...]
    grid: tuple[int, ...]
    reps: int = 50
    seed: int = 0
    S_ref: np.ndarray | None = None
    tolerance: float = PLAN_TOLERANCE

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if list(self.grid) != sorted(set(self.grid)) or not self.grid:
            raise ValueError("budget grid must be non-empty and strictly increasing")
        if len(self.T_ref) != self.k:
            raise ValueError("reference indices do not match k")


@dataclass(frozen=True)
class BenchmarkRow:
    contender: str
    target_NT: int
    actual_NT: int
    rep: int
    abs_err_T: np.ndarray
    abs_err_S: np.ndarray | None = None
    feasible: bool = True

    @property
    def sum_abs_err_T(self) -> float:
        return float(self.abs_err_T.sum()) if self.feasible else float("nan")

    @property
    def sum_abs_err_S(self) -> float:
        if not self.feasible or self.abs_err_S is None:
            return float("nan")
        return float(self.abs_err_S.sum())


@dataclass
class BenchmarkTable:
    rows: list[BenchmarkRow] = field(default_factory=list)

    def contenders(self) -> list[str]:
        return list(dict.fromkeys(r.contender for r in self.rows))

    def targets(self, contender: str | None = None) -> list[int]:
        return sorted({r.target_NT for r in self.rows if contender in (None, r.contender)})

    def select(self, contender: str, target: int) -> list[BenchmarkRow]:
        return [r for r in self.rows if r.contender == contender and r.target_NT == target]

    def feasible(self, contender: str, target: int) -> bool:
        rows = self.select(contender, target)
        return bool(rows) and all(r.feasible for r in rows)

    def mae(self, contender: str, target: int, which: str = "T") -> float:
        """(1/R) sum_r sum_j |T_hat_jr - T_j| over the retained repetitions."""
        rows = self.select(contender, target)
        if not rows or not all(r.feasible for r in rows):
            return float("nan")
        vals = [r.sum_abs_err_T if which == "T" else r.sum_abs_err_S for r in rows]
        return float(np.mean(vals))

    def actual(self, contender: str, target: int) -> int:
        rows = self.select(contender, target)
        return rows[0].actual_NT if rows else 0

    @property
    def has_infeasible(self) -> bool:
        return any(not r.feasible for r in self.rows)

    def summary(self) -> list[dict]:
        out = []
        for c in self.contenders():
            for t in self.targets(c):
                out.append({"contender": c, "target_NT": t, "actual_NT": self.actual(c, t),
                            "MAE_T": self.mae(c, t, "T"), "MAE_S": self.mae(c, t, "S"),
                            "feasible": self.feasible(c, t)})
        return out

    def to_csv(self, path):
        cols = ["contender", "target_NT", "actual_NT", "rep", "sum_abs_err_T", "sum_abs_err_S",
                "agg", "status"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for r in self.rows:
                w.writerow([r.contender, r.target_NT, r.actual_NT, r.rep, _fmt(r.sum_abs_err_T),
                            _fmt(r.sum_abs_err_S), 0, "ok" if r.feasible else "infeasible"])
            for s in self.summary():
                w.writerow([s["contender"], s["target_NT"], s["actual_NT"], "", _fmt(s["MAE_T"]),
                            _fmt(s["MAE_S"]), 1, "ok" if s["feasible"] else "infeasible"])


def _fmt(v: float) -> str:
    return "" if np.isnan(v) else repr(float(v))


def rep_seed(base_seed: int, rep: int) -> int:
    return int(np.random.SeedSequence([base_seed, rep]).generate_state(1)[0])


def _plan(c: Contender, k: int, target: int, tolerance: float) -> DesignConfig | None:
    row = plan_for_budget(k, target, c.scheme, [c.n], tolerance)[0]
    return DesignConfig(k, c.n, row.N, c.scheme) if row.feasible else None


def _adaptive_budget(k: int, target: int, tolerance: float, nts: int) -> int | None:
    # matched to the plain asymmetric design at the same grid point
    cfg = _plan(Contender("asym2"), k, target, tolerance)
    if cfg is None:
        return None
    nt = cfg.N * (k + 1)
    return nt if nt >= warmup_cost(k, nts) else None


def _rows_needed(spec: BenchmarkSpec) -> int:
    need = 1
    for c in spec.contenders:
        for t in spec.grid:
            if c.is_adaptive:
                nts = c.adaptive.get("N_TS", 32)
                b = _adaptive_budget(spec.k, t, spec.tolerance, nts)
                if b is not None:
                    need = max(need, nts + (b - warmup_cost(spec.k, nts)) // 2)
            else:
                cfg = _plan(c, spec.k, t, spec.tolerance)
                if cfg is not None:
                    need = max(need, cfg.N)
    # low indices carry few bits per coordinate; keep single-row designs off them
    return max(MIN_STRIDE, 1 << (need - 1).bit_length())


def _run_design(spec: BenchmarkSpec, c: Contender, cfg: DesignConfig, seed: int, skip: int):
    bases = base_matrices(cfg.n, cfg.k, cfg.N, seed=seed, skip=skip)
    schedule, pairs = build_schedule(cfg, bases, include_all_bases=c.first_order)
    counter = EvaluationCounter()
    y = evaluate_batch(spec.model, schedule, counter)
    rep = estimate(EvaluatedSchedule(schedule, y), pairs, c.estimator, cfg, c.first_order)
    err_S = None
    if rep.S is not None and spec.S_ref is not None:
        err_S = np.abs(rep.S - spec.S_ref)
    return counter.evaluations, np.abs(rep.T - spec.T_ref), err_S


def run_benchmark(spec: BenchmarkSpec) -> BenchmarkTable:
    """Run every contender at every grid budget for each repetition.

    Repetition r permutes the QMC columns with a seed derived from the base
    seed and starts the sequence at ``(r + 1) * stride``, so repetitions use
    disjoint, aligned power-of-two blocks (and never index 1, the all-0.5
    point that would make single-row bases coincide).  Contenders within a
    repetition share that block.
    """
    stride = _rows_needed(spec)
    table = BenchmarkTable()
    for r in range(spec.reps):
        seed = rep_seed(spec.seed, r)
        skip = (r + 1) * stride
        for c in spec.contenders:
            if c.is_adaptive:
                table.rows.extend(_adaptive_rows(spec, c, r, seed, skip))
                continue
            for t in spec.grid:
                cfg = _plan(c, spec.k, t, spec.tolerance)
                if cfg is None:
                    table.rows.append(BenchmarkRow(c.id, t, 0, r, np.full(spec.k, np.nan),
                                                   feasible=False))
                    continue
                actual, err_T, err_S = _run_design(spec, c, cfg, seed, skip)
                table.rows.append(BenchmarkRow(c.id, t, actual, r, err_T, err_S))
        log.debug("repetition %d done", r)
    return table


def _adaptive_rows(spec: BenchmarkSpec, c: Contender, r: int, seed: int, skip: int):
    nts = c.adaptive.get("N_TS", 32)
    budgets = {t: _adaptive_budget(spec.k, t, spec.tolerance, nts) for t in spec.grid}
    feasible = [b for b in budgets.values() if b is not None]
    trace = None
    if feasible:
        cfg = AdaptiveConfig(total_budget=max(feasible), seed=seed, skip=skip, **c.adaptive)
        trace = run_adaptive(spec.model, spec.k, cfg)
    rows = []
    for t, b in budgets.items():
        if b is None:
            rows.append(BenchmarkRow(c.id, t, 0, r, np.full(spec.k, np.nan), feasible=False))
            continue
        cp = trace.at_budget(b)
        rows.append(BenchmarkRow(c.id, t, cp.evaluations, r, np.abs(cp.T - spec.T_ref)))
    return rows


@dataclass(frozen=True)
class Comparison:
    contender_a: str
    contender_b: str
    targets: tuple[int, ...]
    ratios: tuple[float, ...]

    @property
    def wins(self) -> tuple[bool, ...]:
        return tuple(r < 1.0 for r in self.ratios)

    @property
    def win_fraction(self) -> float:
        return sum(self.wins) / len(self.wins)


def compare(table: BenchmarkTable, contender_a: str, contender_b: str, targets=None) -> Comparison:
    """Per grid point MAE_a / MAE_b; a wins where the ratio is below one."""
    shared = sorted(set(table.targets(contender_a)) & set(table.targets(contender_b)))
    shared = [t for t in shared if table.feasible(contender_a, t) and table.feasible(contender_b, t)]
    if targets is not None:
        shared = [t for t in shared if t in set(targets)]
    if not shared:
        raise ValueError(f"{contender_a} and {contender_b} share no feasible grid point")
    ratios = []
    for t in shared:
        a, b = table.mae(contender_a, t), table.mae(contender_b, t)
        ratios.append(1.0 if a == b else (a / b if b > 0 else float("inf")))
    return Comparison(contender_a, contender_b, tuple(shared), tuple(ratios))


# --------------------------------------------------------------------------
# config files

def reference_indices(model: Model, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Analytic (T, S) for the builtin models."""
    if isinstance(model, GFunctionSpec):
        an = g_analytic(model)
        return an.T, an.S
    if model == "first":
        ref = np.zeros(k)
        ref[0] = 1.0
        return ref, ref.copy()
    if model == "sum":
        ref = np.full(k, 1.0 / k)
        return ref, ref.copy()
    raise ValueError(f"no analytic reference for model {model!r}")


def parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(" ", "").split(",") if t)


def read_config(path) -> dict[str, str]:
    cfg = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        cfg[key.strip().lower()] = value.strip()
    return cfg


def spec_from_config(cfg: dict[str, str]) -> BenchmarkSpec:
    """Build a spec from ``model``, ``a``, ``k``, ``contenders`` (';'-separated),
    ``grid``, ``reps``, ``seed`` and ``tolerance`` keys."""
    known = {"model", "a", "k", "contenders", "grid", "reps", "seed", "tolerance"}
    unknown = set(cfg) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    name = cfg.get("model", "g")
    if name == "g":
        model: Model = GFunctionSpec(parse_float_list(cfg.get("a", ",".join(map(str, DEFAULT_A)))))
        k = model.k
    else:
        model = name
        k = int(cfg["k"])
    T, S = reference_indices(model, k)
    contenders = tuple(parse_contender(c) for c in cfg.get("contenders", "asym2:saltenis").split(";")
                       if c.strip())
    grid = tuple(int(float(g)) for g in parse_float_list(cfg.get("grid", "500,1000,2000,4000,8000")))
    return BenchmarkSpec(model, k, T, contenders, grid, reps=int(cfg.get("reps", 50)),
                         seed=int(cfg.get("seed", 0)), S_ref=S,
                         tolerance=float(cfg.get("tolerance", PLAN_TOLERANCE)))
