"""Quick end-to-end check of the Python bindings."""

import csv
import io
import json
import math

import thermal_shadows as ts


def main():
    h = ts.Hamiltonian.xxz(3)
    assert h.num_qubits == 3 and len(h) == 9
    evals = h.eigenvalues()
    assert evals == sorted(evals)

    obs = ts.observable_set(3)
    assert len(obs) == 36

    budget = ts.sample_budget(len(obs), 2, 0.3, 0.05)
    assert budget.n_s == budget.s * budget.k

    exact = h.gibbs_expectations(1.0, obs)
    sampler = ts.ThermalSampler(h, 1.0, "exact-tpq")
    est = sampler.estimate(obs, budget, seed=7)
    worst = max(abs(a - b) for a, b in zip(est, exact))
    assert worst <= 0.3, worst
    assert est == sampler.estimate(obs, budget, seed=7)

    p = ts.remez_fit(1.5, 8)
    assert p.degree == 8 and abs(p(0.5) - math.exp(-0.75)) <= p.achieved_error * 1.01
    assert ts.min_degree_for(1.0, 1e-5) >= 1

    rows = ts.scaling_study([3, 4], degree=4, target="ft")
    totals = [r for r in rows if r["tag"] == "total"]
    assert len(totals) == 2 and totals[1]["t_count"] > totals[0]["t_count"]

    stats = ts.random_unitary_stats(3, samples=50, target="nisq", seed=1)
    assert sum(stats["histogram"].values()) == 50

    cfg = json.loads(ts.default_config())
    cfg.update(n_min=3, n_max=4)
    table = list(csv.DictReader(io.StringIO(ts.run("budget-sweep", json.dumps(cfg)))))
    assert [r["n"] for r in table] == ["3", "4"]

    try:
        ts.run("budget-sweep", json.dumps({"epsilon": 2.0}))
    except ValueError as e:
        assert "epsilon" in str(e)
    else:
        raise AssertionError("bad config accepted")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
