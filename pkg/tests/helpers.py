from gsa.design import DesignConfig, build_schedule
from gsa.estimators import EvaluatedSchedule
from gsa.models import evaluate_batch
from gsa.qrng import base_matrices


def evaluated_design(model, k, N, scheme="asym", n=2, seed=0, skip=1, with_b=False):
    cfg = DesignConfig(k, n, N, scheme)
    schedule, pairs = build_schedule(cfg, base_matrices(n, k, N, seed=seed, skip=skip),
                                     include_all_bases=with_b)
    return cfg, EvaluatedSchedule(schedule, evaluate_batch(model, schedule)), pairs
