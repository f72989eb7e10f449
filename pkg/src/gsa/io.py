"""CSV layouts for points, run schedules, pair lists and traces."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .design import LABELS, DesignConfig, EffectPairIndex, RunSchedule


def write_points(path, x: np.ndarray):
    x = np.atleast_2d(x)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{j + 1}" for j in range(x.shape[1])])
        for row in x:
            w.writerow([repr(float(v)) for v in row])


def read_points(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file")
        rows = [[float(v) for v in row] for row in reader if row]
    if not rows:
        return np.empty((0, len(header)))
    return np.array(rows, dtype=float)


def write_runs(path, schedule: RunSchedule):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["run_id", "tag"] + [f"x{j + 1}" for j in range(schedule.k)])
        for r in range(len(schedule)):
            w.writerow([r, schedule.tag(r)] + [repr(float(v)) for v in schedule.points[r]])


def read_runs(path) -> RunSchedule:
    """Rebuild a schedule; base row indices follow file order within each tag."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        xcols = [c for c in reader.fieldnames or [] if c.startswith("x")]
        ids, tags, pts = [], [], []
        for rec in reader:
            ids.append(int(rec["run_id"]))
            tags.append(rec["tag"])
            pts.append([float(rec[c]) for c in xcols])
    if ids != list(range(len(ids))):
        raise ValueError(f"{path}: run_id must be 0..n-1 in order")
    seen: dict[str, int] = {}
    rows = []
    for t in tags:
        rows.append(seen.get(t, 0))
        seen[t] = rows[-1] + 1
    return RunSchedule.from_tags(np.array(pts, dtype=float).reshape(len(ids), len(xcols)), tags, rows)


def write_pairs(path, pairs: EffectPairIndex):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["factor", "run_id_u", "run_id_v"])
        for fam in pairs.families:
            for u, v in zip(fam.u, fam.v):
                w.writerow([fam.factor + 1, int(u), int(v)])


def read_pairs(path, schedule: RunSchedule) -> EffectPairIndex:
    data = np.loadtxt(path, delimiter=",", skiprows=1, dtype=int, ndmin=2)
    if data.size == 0:
        return EffectPairIndex(schedule.k, ())
    return EffectPairIndex.from_pairs(schedule, data[:, 0] - 1, data[:, 1], data[:, 2])


def write_values(path, y):
    Path(path).write_text("".join(f"{float(v)!r}\n" for v in y))


def infer_design(schedule: RunSchedule) -> DesignConfig:
    """Recover (k, n, N, scheme) from the tags of a schedule."""
    used = set(schedule.source.tolist()) | {d for d in schedule.donor.tolist() if d >= 0}
    n = max(used) + 1
    N = int(schedule.row.max()) + 1
    if n < 2:
        raise ValueError(f"schedule uses only matrix {LABELS[0]}")
    return DesignConfig(schedule.k, n, N, schedule.scheme)


def write_trace(path, trace):
    k = trace.k
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["evals"] + [f"T{j + 1}" for j in range(k)] + [f"N{j + 1}" for j in range(k)]
                   + ["selected"])
        for cp in trace.checkpoints:
            w.writerow([cp.evaluations] + [repr(float(t)) for t in cp.T] + [int(c) for c in cp.counts]
                       + [";".join(str(j + 1) for j in cp.selected)])
