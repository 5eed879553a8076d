"""Smoke test for the acho_py extension module.

Build and install first:
    pip install maturin
    maturin develop --release -m crates/python/Cargo.toml
"""

import json
import math

import acho_py


def main():
    space = acho_py.ConfigSpace.random_forest(60, seed=3)
    assert len(space) == 60
    assert set(space.config(0)) == {
        "n_estimators",
        "min_samples_split",
        "min_samples_leaf",
        "max_features",
    }

    objective = acho_py.Objective.friedman(1, 300, noise_sd=1.0, seed=5)
    phi = objective.evaluate(space, 0)
    assert phi < 0.0 and phi == objective.evaluate(space, 0)

    trace = acho_py.run_acho(objective, space, budget=15, seed=1, n_init=8, alpha=0.8)
    assert len(trace) == 15
    assert trace.intervals[:8] == [None] * 8
    assert all(a <= b for a, b in zip(trace.best_curve, trace.best_curve[1:]))

    rs = acho_py.run_random_search(objective, space, budget=15, seed=1)
    assert rs.config_ids[:8] == trace.config_ids[:8]
    assert trace.to_csv().splitlines()[0] == "step,elapsed_ms,config_id,phi,lower,upper,breach,alpha_t,best_phi"

    assert acho_py.finite_sample_quantile([1.0, 2.0, 3.0, 4.0], 0.8) == 4.0
    assert math.isinf(acho_py.finite_sample_quantile([1.0, 2.0], 0.9))
    assert abs(acho_py.adaptive_alpha_path(0.8, 0.1, [True])[0] - 0.78) < 1e-12
    assert abs(acho_py.pinball_loss(2.0, 0.8) - 1.6) < 1e-12
    assert acho_py.empirical_quantile([1.0, 2.0, 3.0, 4.0, 10.0], 0.8) == 4.0

    xs, ys = acho_py.gen_friedman(1, 10, noise_sd=0.0, seed=2)
    x = xs[0]
    want = 10 * math.sin(math.pi * x[0] * x[1]) + 20 * (x[2] - 0.5) ** 2 + 10 * x[3] + 5 * x[4]
    assert abs(ys[0] - want) < 1e-9

    spec = """
seeds = [1]
[objective]
kind = "friedman"
variant = 2
n = 200
seed = 1
[space]
preset = "random_forest"
m = 30
[[runs]]
name = "random"
framework = "random"
budget = 5
"""
    import tempfile

    with tempfile.TemporaryDirectory() as out:
        summary = json.loads(acho_py.run_experiment(spec, out))
    assert summary["runs"][0]["n_traces"] == 1

    try:
        acho_py.ConfigSpace.random_forest(0)
    except ValueError:
        pass
    else:
        raise AssertionError("empty space accepted")

    print("acho_py smoke test passed")


if __name__ == "__main__":
    main()
