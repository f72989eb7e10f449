"""Adaptive total-effect sampling with Russian-roulette factor selection.

After a warm-up asymmetric design, each step evaluates one new base row
f(a_i) and the hybrid f(a_b^(j)) of one factor drawn with probability
proportional to its current total-effect estimate.  Factors not drawn get
an extra hybrid evaluation while their recent estimates still oscillate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateModelError
from .models import EvaluationCounter, Model, evaluate_batch
from .qrng import base_matrices


@dataclass(frozen=True)
class AdaptiveConfig:
    total_budget: int
    N_TS: int = 32
    delta: float = 1e-4
    p: int = 19
    epsilon: float = 1e-6
    seed: int | None = 0
    skip: int = 1

    def __post_init__(self):
        if self.N_TS < 2:
            raise ValueError("N_TS must be at least 2")
        if self.p < 1:
            raise ValueError("p must be at least 1")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class Checkpoint:
    evaluations: int
    T: np.ndarray
    counts: np.ndarray
    selected: tuple[int, ...]


@dataclass
class AdaptiveTrace:
    k: int
    checkpoints: list[Checkpoint] = field(default_factory=list)

    @property
    def final(self) -> Checkpoint:
        return self.checkpoints[-1]

    def at_budget(self, budget: int) -> Checkpoint:
        """Last checkpoint whose cost does not exceed ``budget``.

        Equals the final checkpoint of a run with ``total_budget=budget``
        and the same seed, since the procedure never looks ahead.
        """
        best = None
        for cp in self.checkpoints:
            if cp.evaluations > budget:
                break
            best = cp
        if best is None:
            raise ValueError(f"budget {budget} is below the warm-up cost")
        return best

    def rows(self):
        for cp in self.checkpoints:
            yield cp.evaluations, cp.T, cp.counts, cp.selected


def selection_probabilities(T_hat, epsilon: float = 1e-6) -> np.ndarray:
    w = np.maximum(np.asarray(T_hat, dtype=float), epsilon)
    return w / w.sum()


def warmup_cost(k: int, N_TS: int) -> int:
    return N_TS * (k + 1)


def _oscillating(history: list[np.ndarray], p: int, delta: float) -> np.ndarray:
    if len(history) < p:
        return np.zeros(history[0].size, dtype=bool)
    window = np.array(history[-p:])
    return (window.max(axis=0) - window.min(axis=0)) > delta


def run_adaptive(model: Model, k: int, cfg: AdaptiveConfig,
                 counter: EvaluationCounter | None = None) -> AdaptiveTrace:
    warm = warmup_cost(k, cfg.N_TS)
    if cfg.total_budget < warm:
        raise ValueError(f"budget {cfg.total_budget} is below the warm-up cost {warm}")
    counter = counter if counter is not None else EvaluationCounter()
    start = counter.evaluations
    rng = np.random.default_rng(cfg.seed)

    # every step consumes one QMC row and at least two evaluations
    max_rows = cfg.N_TS + (cfg.total_budget - warm) // 2
    A, B = base_matrices(2, k, max_rows, seed=cfg.seed, skip=cfg.skip)

    NT = cfg.N_TS
    hybrids = np.repeat(A[None, :NT], k, axis=0)
    hybrids[np.arange(k), :, np.arange(k)] = B[:NT].T
    y = evaluate_batch(model, np.concatenate([A[:NT], hybrids.reshape(-1, k)]), counter)
    n_base = NT
    mean = float(y[:NT].mean())
    m2 = float(((y[:NT] - mean) ** 2).sum())
    yh = y[NT:].reshape(k, NT)
    sq_sum = ((yh - y[:NT]) ** 2).sum(axis=1)
    counts = np.full(k, NT, dtype=int)

    var = m2 / (n_base - 1)
    if var <= 0.0:
        raise DegenerateModelError("output variance is zero after warm-up")
    T_hat = sq_sum / (2.0 * counts) / var
    trace = AdaptiveTrace(k)
    trace.checkpoints.append(Checkpoint(counter.evaluations - start, T_hat.copy(), counts.copy(),
                                        tuple(range(k))))
    history = [T_hat.copy()]

    for i in range(NT, max_rows):
        spent = counter.evaluations - start
        chosen = int(rng.choice(k, p=selection_probabilities(T_hat, cfg.epsilon)))
        extra = _oscillating(history, cfg.p, cfg.delta)
        extra[chosen] = True
        selected = np.flatnonzero(extra)
        if spent + 1 + selected.size > cfg.total_budget:
            break
        a = A[i]
        x = np.repeat(a[None, :], 1 + selected.size, axis=0)
        x[1 + np.arange(selected.size), selected] = B[i, selected]
        yi = evaluate_batch(model, x, counter)
        n_base += 1
        d = yi[0] - mean
        mean += d / n_base
        m2 += d * (yi[0] - mean)
        sq_sum[selected] += (yi[1:] - yi[0]) ** 2
        counts[selected] += 1
        var = m2 / (n_base - 1)
        T_hat = sq_sum / (2.0 * counts) / var
        history.append(T_hat.copy())
        trace.checkpoints.append(Checkpoint(counter.evaluations - start, T_hat.copy(),
                                            counts.copy(), tuple(int(j) for j in selected)))
    return trace
