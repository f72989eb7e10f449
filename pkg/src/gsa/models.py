"""Test models: Sobol' G function with analytic indices, simple oracles,
and a batch file bridge to external simulators."""

from __future__ import annotations

import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Union

import numpy as np

from .errors import EvaluationError, ModelOutputParseError

# Four coefficients are named for six factors; the last is repeated.
DEFAULT_A = (0.5, 3.9, 9.99, 99.0, 99.0, 99.0)


@dataclass(frozen=True)
class GFunctionSpec:
    a: tuple[float, ...] = DEFAULT_A

    def __post_init__(self):
        a = tuple(float(v) for v in self.a)
        if not a:
            raise ValueError("G function needs at least one coefficient")
        if any(v < 0 for v in a):
            raise ValueError("G function coefficients must be non-negative")
        object.__setattr__(self, "a", a)

    @property
    def k(self) -> int:
        return len(self.a)

    @property
    def model_id(self) -> str:
        return "g(" + ",".join(f"{v:g}" for v in self.a) + ")"

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return g_values(x, self.a)


def g_values(x, a) -> np.ndarray:
    """Vectorised G over the rows of ``x``; no range checks."""
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    return np.prod((np.abs(4.0 * x - 2.0) + a) / (1.0 + a), axis=-1)


def g_function(x, spec: GFunctionSpec) -> float:
    """G(x) = prod_j (|4 x_j - 2| + a_j) / (1 + a_j) at a single point."""
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.k,):
        raise ValueError(f"expected a point with {spec.k} coordinates, got shape {x.shape}")
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError("coordinates must lie in [0, 1]")
    return float(g_values(x, spec.a))


@dataclass(frozen=True)
class AnalyticIndices:
    V_j: np.ndarray
    V: float
    S: np.ndarray
    T: np.ndarray


def g_analytic(spec: GFunctionSpec) -> AnalyticIndices:
    a = np.asarray(spec.a)
    vj = (1.0 / 3.0) / (1.0 + a) ** 2
    # expm1/log1p keep V accurate when every V_j is tiny
    V = np.expm1(np.log1p(vj).sum())
    total = 1.0 + V
    S = vj / V
    T = vj * (total / (1.0 + vj)) / V
    return AnalyticIndices(vj, float(V), S, T)


def first_coordinate(x: np.ndarray) -> np.ndarray:
    return np.asarray(x, dtype=float)[..., 0]


def coordinate_sum(x: np.ndarray) -> np.ndarray:
    return np.asarray(x, dtype=float).sum(axis=-1)


BUILTIN = {
    "first": first_coordinate,
    "sum": coordinate_sum,
}


@dataclass(frozen=True)
class ExternalModelSpec:
    """Batch protocol: write ``x1..xk`` CSV, run the command, read one value per line.

    ``command`` may contain ``{input}`` and ``{output}`` placeholders; the
    paths are shell-quoted when substituted.
    """

    command: str
    input_path: str | None = None
    output_path: str | None = None
    timeout: float = 600.0

    @property
    def model_id(self) -> str:
        return f"external:{self.command}"

    def __call__(self, x: np.ndarray, first_run: int = 0) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        with tempfile.TemporaryDirectory(prefix="gsa-ext-") as tmp:
            inp = Path(self.input_path or Path(tmp) / "input.csv")
            out = Path(self.output_path or Path(tmp) / "output.csv")
            write_points_csv(inp, x)
            if out.exists():
                out.unlink()
            cmd = self.command.format(input=shlex.quote(str(inp)), output=shlex.quote(str(out)))
            last = first_run + x.shape[0] - 1
            try:
                proc = subprocess.run(cmd, shell=True, capture_output=True, text=True,
                                      timeout=self.timeout)
            except subprocess.TimeoutExpired:
                raise EvaluationError(f"external model timed out after {self.timeout}s",
                                      first_run, last) from None
            if proc.returncode != 0:
                raise EvaluationError(f"external model exited with {proc.returncode}: "
                                      f"{proc.stderr.strip()[:200]}", first_run, last)
            if not out.exists():
                raise EvaluationError("external model wrote no output file", first_run, last)
            y = read_values(out)
        if y.size != x.shape[0]:
            raise ModelOutputParseError(f"expected {x.shape[0]} output values, got {y.size}")
        return y


def write_points_csv(path, x: np.ndarray, header=True):
    x = np.atleast_2d(x)
    names = ",".join(f"x{j + 1}" for j in range(x.shape[1]))
    np.savetxt(path, x, delimiter=",", fmt="%.17g", header=names if header else "", comments="")


def read_values(path) -> np.ndarray:
    """One decimal value per line; a non-numeric first line is taken as a header."""
    values = []
    lines = Path(path).read_text().splitlines()
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        try:
            values.append(float(line))
        except ValueError:
            if lineno == 1:
                continue
            raise ModelOutputParseError(f"{path}:{lineno}: not a number: {line!r}") from None
    y = np.array(values, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ModelOutputParseError(f"{path}: non-finite output value")
    return y


Model = Union[GFunctionSpec, ExternalModelSpec, str, Callable[[np.ndarray], np.ndarray]]


def resolve_model(model: Model) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(model, str):
        try:
            return BUILTIN[model]
        except KeyError:
            raise ValueError(f"unknown builtin model {model!r}; choose from {sorted(BUILTIN)}") from None
    if callable(model):
        return model
    raise TypeError(f"not a model: {model!r}")


@dataclass
class EvaluationCounter:
    """Running count of model evaluations (the benchmark's cost axis)."""

    evaluations: int = 0
    batches: int = 0


def evaluate_batch(model: Model, runs, counter: EvaluationCounter | None = None) -> np.ndarray:
    """Evaluate a model at every run of a schedule (or rows of an array), in order."""
    x = runs.points if hasattr(runs, "points") else np.asarray(runs, dtype=float)
    if x.size == 0:
        return np.empty(0)
    x = np.atleast_2d(x)
    first = counter.evaluations if counter is not None else 0
    if isinstance(model, ExternalModelSpec):
        y = model(x, first_run=first)
    else:
        y = np.asarray(resolve_model(model)(x), dtype=float).reshape(-1)
    if y.size != x.shape[0]:
        raise ModelOutputParseError(f"model returned {y.size} values for {x.shape[0]} runs")
    if not np.all(np.isfinite(y)):
        bad = int(np.flatnonzero(~np.isfinite(y))[0])
        raise EvaluationError("model produced a non-finite value", first + bad, first + bad)
    if counter is not None:
        counter.evaluations += x.shape[0]
        counter.batches += 1
    return y
