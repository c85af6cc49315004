"""Smoke test for the msa_py extension.

Build and place the module next to this script, then run it:

    cargo build -p msa-py --release
    cp target/release/libmsa_py.so python/msa_py.so
    python3 python/smoke_test.py
"""

import json
import math
import random

import msa_py


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(b))


def check_divergences():
    p, q = [0.5, 0.5], [0.9, 0.1]
    assert msa_py.renyi_divergence(p, p, 2.0) == 0.0
    d2 = msa_py.renyi_divergence(p, q, 2.0)
    assert close(d2, math.log(0.25 / 0.9 + 0.25 / 0.1))
    assert close(msa_py.renyi_exp(p, q, 2.0), math.exp(d2))
    assert msa_py.renyi_divergence(p, q, float("inf")) >= d2
    slack, lhs, rhs, infinite = msa_py.triangle_slack(p, q, [0.7, 0.3], 2.0, 0.5)
    assert not infinite and slack >= 0.0 and close(slack, rhs - lhs)


def check_weights():
    w = msa_py.mix_weights([0.25, 0.75], [2.0, 1.0])
    assert close(sum(w), 1.0) and close(w[0], 0.4)


def two_domains(rng, n):
    xs, domains, ys = [], [], []
    for i in range(n):
        k = i % 2
        x = rng.gauss(-2.0 if k == 0 else 2.0, 1.0)
        xs.append([x])
        domains.append(k)
        ys.append(1.0 if x > 0 else -1.0)
    return xs, domains, ys


def check_pipeline():
    rng = random.Random(0)
    xs, domains, ys = two_domains(rng, 400)

    model = msa_py.Maxent.train(xs, domains, mu=1e-3)
    post = model.posterior([0.0])
    assert model.num_domains == 2 and close(sum(post), 1.0)
    assert abs(model.crossing_point()) < 1.0
    again = msa_py.Maxent.from_json(model.to_json())
    assert again.posterior([0.3]) == model.posterior([0.3])

    kdes = [msa_py.Kde([x for x, k in zip(xs, domains) if k == j]) for j in range(2)]
    assert all(k.sigma > 0.0 and k.density([0.0]) > 0.0 for k in kdes)

    predictors = msa_py.Predictors.from_json(
        json.dumps(
            {
                "predictors": [
                    {"kind": "linear", "weights": [1.0], "bias": 0.5, "sign": True},
                    {"kind": "linear", "weights": [1.0], "bias": -0.5, "sign": True},
                ]
            }
        )
    )
    assert len(predictors) == 2

    for weighting in (model, kdes):
        sol = msa_py.solve_z(xs, ys, weighting, predictors, resolution=50)
        assert close(sum(sol["z"]), 1.0) and sol["objective"] >= 0.0
        it = msa_py.solve_z(xs, ys, weighting, predictors, method="iter")
        assert it["objective"] <= sol["objective"] + 1e-3
        out = msa_py.predict(sol["z_prime"], weighting, predictors, [3.0])
        assert 0.99 < out <= 1.0

    try:
        msa_py.solve_z(xs, ys, model, predictors, method="bogus")
    except ValueError:
        pass
    else:
        raise AssertionError("bad method accepted")


def check_benchmark():
    config = {
        "sizes": [50],
        "runs": 1,
        "test_size": 200,
        "kde_grid": {"lo": 0.02, "hi": 2.0, "n": 5},
        "resolution": 20,
    }
    report = json.loads(msa_py.run_synthetic(json.dumps(config)))
    assert len(report["runs"]) == 1
    assert {c["method"] for c in report["curves"]} == {"dmsa", "gmsa"}


if __name__ == "__main__":
    check_divergences()
    check_weights()
    check_pipeline()
    check_benchmark()
    print("msa_py smoke test passed")
