"""``gsa`` command line: sampling, designs, estimation, adaptive runs, benchmarks."""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from . import io
from .adaptive import AdaptiveConfig, run_adaptive
from .design import DesignConfig, build_schedule, plan_for_budget
from .errors import GSAError
from .estimators import EvaluatedSchedule, estimate
from .harness import compare, parse_float_list, read_config, run_benchmark, spec_from_config
from .models import DEFAULT_A, ExternalModelSpec, GFunctionSpec, evaluate_batch, read_values
from .qrng import RandomizationSpec, base_matrices, l2_discrepancy, randomize, sobol_points

DEFAULT_A_TEXT = ",".join(f"{v:g}" for v in DEFAULT_A)


def _model(name: str, a: str, command: str | None, timeout: float):
    if command:
        return ExternalModelSpec(command, timeout=timeout)
    if name == "g":
        return GFunctionSpec(parse_float_list(a))
    return name


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
def main(verbose):
    """Variance-based sensitivity analysis for total-effect indices."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--dims", type=int, required=True)
@click.option("--count", type=int, required=True)
@click.option("--skip", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=None, help="Column-permutation seed (none: identity).")
@click.option("--shift", is_flag=True, help="Add a seed-derived shift modulo 1.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def sample(dims, count, skip, seed, shift, out):
    """Write Sobol' points to CSV."""
    pts = sobol_points(dims, count, skip)
    if seed is not None:
        pts = randomize(pts, RandomizationSpec(seed, dims, digital_shift_enabled=shift))
    elif shift:
        raise click.UsageError("--shift needs --seed")
    io.write_points(out, pts.points)


@main.command()
@click.option("--in", "path", type=click.Path(exists=True, dir_okay=False), required=True)
def discrepancy(path):
    """Print the L2 discrepancy of a point CSV."""
    click.echo(repr(l2_discrepancy(io.read_points(path)).value))


@main.command()
@click.option("--k", type=int, required=True)
@click.option("--n", "n_mat", type=int, default=2, show_default=True)
@click.option("--rows", type=int, required=True, help="Rows N per base matrix.")
@click.option("--scheme", type=click.Choice(["sym", "asym"]), default="asym", show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--skip", type=int, default=1, show_default=True)
@click.option("--with-b", is_flag=True, help="Also evaluate B in the asymmetric design (for S_j).")
@click.option("--out", type=click.Path(file_okay=False), required=True)
def design(k, n_mat, rows, scheme, seed, skip, with_b, out):
    """Write runs.csv and pairs.csv for a design."""
    cfg = DesignConfig(k, n_mat, rows, scheme)
    schedule, pairs = build_schedule(cfg, base_matrices(n_mat, k, rows, seed=seed, skip=skip),
                                     include_all_bases=with_b)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_runs(out / "runs.csv", schedule)
    io.write_pairs(out / "pairs.csv", pairs)
    click.echo(f"{len(schedule)} runs, {pairs.total} elementary effects -> {out}")


@main.command()
@click.option("--k", type=int, required=True)
@click.option("--budget", type=int, required=True, help="Target total runs N_T.")
@click.option("--scheme", type=click.Choice(["sym", "asym", "all"]), default="all", show_default=True)
@click.option("--n", "n_list", default="2,3,4,5,6,7,8,9,10", show_default=True,
              help="Candidate matrix counts for the symmetric scheme.")
@click.option("--tolerance", type=float, default=1.25, show_default=True)
def plan(k, budget, scheme, n_list, tolerance):
    """Print (N, n, N_T, E_T, nN, e, D) rows near a run budget."""
    rows = []
    if scheme in ("asym", "all"):
        rows += plan_for_budget(k, budget, "asym", [2], tolerance)
    if scheme in ("sym", "all"):
        rows += plan_for_budget(k, budget, "sym", [int(v) for v in n_list.split(",")], tolerance)
    click.echo(f"{'N':>6} {'n':>16} {'N_T':>7} {'E_T':>7} {'nN':>6} {'e':>7} {'D':>8}")
    for r in rows:
        label = f"{r.n} ({r.scheme})"
        if not r.feasible:
            click.echo(f"{'-':>6} {label:>16}  {r.note}")
            continue
        pts = np.concatenate(base_matrices(r.n, k, r.N))
        d = l2_discrepancy(pts).value
        b = r.budget
        click.echo(f"{r.N:>6} {label:>16} {b.N_T:>7} {b.E_T:>7} {b.explored:>6} {b.e:>7.3f} {d:>8.2g}")


@main.command(name="estimate")
@click.option("--runs", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--pairs", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--y", "y_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--estimator", type=click.Choice(["saltenis", "corr", "corr-corrected"]),
              default="saltenis", show_default=True)
@click.option("--first-order", is_flag=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="JSON report (default stdout).")
def estimate_cmd(runs, pairs, y_path, estimator, first_order, out):
    """Estimate T_j (and optionally S_j) from evaluated runs."""
    schedule = io.read_runs(runs)
    index = io.read_pairs(pairs, schedule)
    ev = EvaluatedSchedule(schedule, read_values(y_path))
    cfg = io.infer_design(schedule) if first_order else None
    report = estimate(ev, index, estimator, cfg, first_order)
    text = json.dumps(report.to_dict(), indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        click.echo(text)


@main.command(name="eval")
@click.option("--model", type=click.Choice(["g", "first", "sum", "external"]), default="g",
              show_default=True)
@click.option("--a", default=DEFAULT_A_TEXT, show_default=True, help="G-function coefficients.")
@click.option("--command", default=None, help="External command; {input} and {output} are substituted.")
@click.option("--timeout", type=float, default=600.0, show_default=True)
@click.option("--runs", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def eval_cmd(model, a, command, timeout, runs, out):
    """Evaluate a model at every run (one output value per line)."""
    if model == "external" and not command:
        raise click.UsageError("--model external needs --command")
    schedule = io.read_runs(runs)
    y = evaluate_batch(_model(model, a, command, timeout), schedule)
    io.write_values(out, y)


@main.command()
@click.option("--model", type=click.Choice(["g", "first", "sum", "external"]), default="g",
              show_default=True)
@click.option("--a", default=DEFAULT_A_TEXT, show_default=True)
@click.option("--command", default=None)
@click.option("--k", type=int, default=None, help="Number of factors (default: length of --a).")
@click.option("--budget", type=int, required=True)
@click.option("--nts", type=int, default=32, show_default=True)
@click.option("--delta", type=float, default=1e-4, show_default=True)
@click.option("--p", "window", type=int, default=19, show_default=True)
@click.option("--epsilon", type=float, default=1e-6, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False), required=True)
def adaptive(model, a, command, k, budget, nts, delta, window, epsilon, seed, trace_path):
    """Run the adaptive Russian-roulette sampler and write its trace."""
    m = _model(model, a, command, 600.0)
    if k is None:
        if not isinstance(m, GFunctionSpec):
            raise click.UsageError("--k is required for non-G models")
        k = m.k
    cfg = AdaptiveConfig(budget, N_TS=nts, delta=delta, p=window, epsilon=epsilon, seed=seed)
    trace = run_adaptive(m, k, cfg)
    io.write_trace(trace_path, trace)
    final = trace.final
    click.echo(f"{final.evaluations} evaluations; T = " + " ".join(f"{t:.4g}" for t in final.T))


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--reps", type=int, default=None, help="Override the repetition count.")
@click.option("--compare", "pairs", multiple=True, help="'A vs B' contender ids to summarise.")
def bench(config_path, out, reps, pairs):
    """Run a MAE-vs-cost benchmark from a key=value config file."""
    cfg = read_config(config_path)
    if reps is not None:
        cfg["reps"] = str(reps)
    spec = spec_from_config(cfg)
    table = run_benchmark(spec)
    table.to_csv(out)
    for s in table.summary():
        mae = "infeasible" if not s["feasible"] else f"MAE_T={s['MAE_T']:.4g}"
        click.echo(f"{s['contender']:>28} target={s['target_NT']:>6} actual={s['actual_NT']:>6} {mae}")
    for item in pairs:
        a, _, b = item.partition(" vs ")
        c = compare(table, a.strip(), b.strip())
        click.echo(f"{c.contender_a} vs {c.contender_b}: wins {c.win_fraction:.0%} "
                   f"ratios " + " ".join(f"{r:.2f}" for r in c.ratios))
    if table.has_infeasible:
        click.echo("some contender rows are infeasible", err=True)
        sys.exit(2)


def run():
    try:
        main(standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except click.exceptions.Abort:
        sys.exit(1)
    except (GSAError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    run()
