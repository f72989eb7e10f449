import csv

import numpy as np
import pytest

from gsa.harness import (BenchmarkRow, BenchmarkSpec, BenchmarkTable, compare, parse_contender,
                         read_config, reference_indices, rep_seed, run_benchmark, spec_from_config)
from gsa.models import GFunctionSpec, g_analytic


def small_spec(contenders=("asym2:saltenis", "sym2:saltenis"), grid=(200, 400), reps=3, seed=7):
    g = GFunctionSpec((0.0, 1.0, 9.0))
    an = g_analytic(g)
    return BenchmarkSpec(g, 3, an.T, tuple(parse_contender(c) for c in contenders), grid,
                         reps=reps, seed=seed, S_ref=an.S)


def test_mae_is_mean_of_summed_errors():
    t = BenchmarkTable([
        BenchmarkRow("x", 100, 96, 0, np.array([0.1, 0.2])),
        BenchmarkRow("x", 100, 96, 1, np.array([0.3, 0.0])),
        BenchmarkRow("x", 200, 192, 0, np.array([0.05, 0.05])),
    ])
    assert t.mae("x", 100) == pytest.approx(0.3)
    assert t.mae("x", 200) == pytest.approx(0.1)
    assert np.isnan(t.mae("x", 100, "S"))
    assert t.targets() == [100, 200]
    assert t.actual("x", 200) == 192


def test_parse_contender():
    c = parse_contender("sym3:saltenis")
    assert (c.scheme, c.n, c.estimator, c.first_order) == ("symmetric", 3, "saltenis", False)
    c = parse_contender("asym2:corr-corrected+S")
    assert (c.scheme, c.estimator, c.first_order) == ("asymmetric", "correlation_corrected", True)
    assert parse_contender("sym2:corr").first_order
    a = parse_contender("adaptive:nts=16,delta=1e-3,p=5")
    assert a.adaptive == {"N_TS": 16, "delta": 1e-3, "p": 5}
    assert parse_contender("adaptive").adaptive == {}
    for bad in ("sym:saltenis", "asym2:saltenis+T", "adaptive:foo=1", "diag2:saltenis",
                "asym2:sobol"):
        with pytest.raises(ValueError):
            parse_contender(bad)


def test_spec_validation():
    with pytest.raises(ValueError):
        small_spec(reps=0)
    with pytest.raises(ValueError):
        small_spec(grid=(400, 200))
    with pytest.raises(ValueError):
        BenchmarkSpec(GFunctionSpec((0.0,)), 1, np.zeros(2), (), (100,))


def test_rep_seed_distinct():
    seeds = {rep_seed(0, r) for r in range(100)}
    assert len(seeds) == 100
    assert rep_seed(3, 4) == rep_seed(3, 4) != rep_seed(4, 3)


def test_benchmark_deterministic_and_cost_matched():
    spec = small_spec()
    a, b = run_benchmark(spec), run_benchmark(spec)
    assert [r.sum_abs_err_T for r in a.rows] == [r.sum_abs_err_T for r in b.rows]
    # 3 factors: asym N=32 -> 128 runs at 200, N=64 -> 256 at 400; sym2 uses half the rows
    assert a.actual("asym2:saltenis", 200) == 128
    assert a.actual("sym2:saltenis", 200) == 128
    assert a.actual("asym2:saltenis", 400) == 256
    assert len(a.rows) == 2 * 2 * 3
    other = run_benchmark(small_spec(seed=8))
    assert [r.sum_abs_err_T for r in other.rows] != [r.sum_abs_err_T for r in a.rows]


def test_repetitions_differ():
    t = run_benchmark(small_spec(contenders=("asym2:saltenis",), grid=(200,)))
    errs = [r.sum_abs_err_T for r in t.rows]
    assert len(set(errs)) == 3


def test_first_order_errors_recorded():
    t = run_benchmark(small_spec(contenders=("asym2:saltenis+S", "sym2:saltenis", "sym3:saltenis")))
    assert not np.isnan(t.mae("asym2:saltenis+S", 200, "S"))
    # symmetric n=2 gets S for free; n=3 has no S estimate
    assert not np.isnan(t.mae("sym2:saltenis", 200, "S"))
    assert np.isnan(t.mae("sym3:saltenis", 200, "S"))
    # B is evaluated as well: one more block of N runs
    assert t.actual("asym2:saltenis+S", 200) == 32 * 5


def test_csv_reaggregates(tmp_path):
    t = run_benchmark(small_spec())
    path = tmp_path / "bench.csv"
    t.to_csv(path)
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    per_rep = [r for r in rows if r["agg"] == "0"]
    agg = [r for r in rows if r["agg"] == "1"]
    assert len(per_rep) == len(t.rows) and len(agg) == 4
    for a in agg:
        vals = [float(r["sum_abs_err_T"]) for r in per_rep
                if r["contender"] == a["contender"] and r["target_NT"] == a["target_NT"]]
        # aggregate rows carry the MAE in the error column
        assert float(a["sum_abs_err_T"]) == pytest.approx(np.mean(vals), rel=1e-12)


def test_compare_self_and_disjoint():
    t = run_benchmark(small_spec())
    c = compare(t, "asym2:saltenis", "asym2:saltenis")
    assert c.ratios == (1.0, 1.0)
    assert c.win_fraction == 0.0
    c = compare(t, "asym2:saltenis", "sym2:saltenis", targets=[400])
    assert c.targets == (400,)
    assert c.wins == (c.ratios[0] < 1,)
    t2 = BenchmarkTable([BenchmarkRow("x", 100, 96, 0, np.zeros(2)),
                         BenchmarkRow("y", 200, 96, 0, np.zeros(2))])
    with pytest.raises(ValueError):
        compare(t2, "x", "y")


def test_infeasible_rows_flagged():
    g = GFunctionSpec()
    spec = BenchmarkSpec(g, 6, g_analytic(g).T, (parse_contender("sym10:saltenis"),
                                                 parse_contender("asym2:saltenis")),
                         (200, 500), reps=2, seed=1)
    t = run_benchmark(spec)
    assert t.has_infeasible
    assert not t.feasible("sym10:saltenis", 200)
    assert t.feasible("sym10:saltenis", 500)
    assert np.isnan(t.mae("sym10:saltenis", 200))
    assert t.actual("sym10:saltenis", 500) == 550
    c = compare(t, "asym2:saltenis", "sym10:saltenis")
    assert c.targets == (500,)


def test_adaptive_contender():
    t = run_benchmark(small_spec(contenders=("asym2:saltenis", "adaptive:nts=8"), grid=(200, 400)))
    # budget matched to the plain asymmetric design, never exceeded
    for target in (200, 400):
        assert t.actual("adaptive:nts=8", target) <= t.actual("asym2:saltenis", target)
        assert t.actual("adaptive:nts=8", target) > t.actual("asym2:saltenis", target) - 4
        assert np.isfinite(t.mae("adaptive:nts=8", target))


def test_reference_indices():
    T, S = reference_indices("first", 3)
    assert T.tolist() == [1, 0, 0] and S.tolist() == [1, 0, 0]
    T, _ = reference_indices("sum", 4)
    assert T.tolist() == [0.25] * 4
    with pytest.raises(ValueError):
        reference_indices("other", 2)


def test_config_file(tmp_path):
    p = tmp_path / "bench.cfg"
    p.write_text("# demo\nmodel = g\na = 0, 1, 9   # three factors\n"
                 "contenders = asym2:saltenis; sym3:corr-corrected\ngrid = 200, 400\nreps=4\nseed=3\n")
    spec = spec_from_config(read_config(p))
    assert spec.k == 3
    assert [c.id for c in spec.contenders] == ["asym2:saltenis", "sym3:corr-corrected"]
    assert spec.grid == (200, 400)
    assert (spec.reps, spec.seed) == (4, 3)
    np.testing.assert_allclose(spec.T_ref, g_analytic(GFunctionSpec((0, 1, 9))).T)
    with pytest.raises(ValueError):
        spec_from_config({"colour": "red"})
    p.write_text("just words\n")
    with pytest.raises(ValueError):
        read_config(p)


def test_default_config():
    spec = spec_from_config({})
    assert spec.k == 6 and spec.reps == 50
    assert spec.grid == (500, 1000, 2000, 4000, 8000)
    spec = spec_from_config({"model": "sum", "k": "3"})
    assert spec.T_ref.tolist() == [1 / 3] * 3
