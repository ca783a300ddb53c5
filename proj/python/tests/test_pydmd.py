import json
import os
import pathlib

import numpy as np
import pytest

import pydmd

FIXTURES = pathlib.Path(os.environ.get("DMD_FIXTURES", pathlib.Path(__file__).resolve().parents[2] / "fixtures"))


def fixture(name):
    return pydmd.Scenario.load(FIXTURES / f"{name}.json")


def test_duo4_solve_matches_closed_form():
    sol = fixture("duo4").solve()
    x = [sol["x_star"][str(i)] for i in range(1, 5)]
    assert np.allclose(x, [8 / 7, 8 / 7, 13 / 7, 13 / 7], atol=1e-9)
    assert sol["lambda_star"]["l1"] == pytest.approx(7 / 5)
    assert max(sol["kkt"].values()) <= 1e-8


def test_construct_and_check_round_trip():
    sc = fixture("relay5")
    out = sc.construct()
    assert out["pass"]
    assert out["certificate"]["pass"]
    again = sc.check(out["profile"])
    assert again["pass"]

    broken = json.loads(json.dumps(out["profile"]))
    broken["1"]["y"] += 0.5
    assert not sc.check(broken)["pass"]


def test_dims_and_dynamics():
    sc = fixture("duo4")
    d = sc.dims()
    assert [d["agents"][str(i)]["counted"] for i in range(1, 5)] == [11, 13, 12, 6]
    assert d["total"] == 42
    dyn = sc.dynamics(perturb=0.0, seed=1, max_sweeps=3)
    assert dyn["status"] == "fixed_point"
    assert dyn["trace_csv"].startswith("iter,agent_updated,welfare")


def test_errors_surface_as_exceptions():
    with pytest.raises(pydmd.ScenarioError, match="message network required"):
        pydmd.Scenario.from_dict({"agents": [], "links": []})
    bad = json.loads((FIXTURES / "duo4.json").read_text())
    bad["links"][0]["capacity"] = 0.0
    assert any("capacity > 0" in v for v in pydmd.Scenario.from_dict(bad).validate())


def random_scenario(rng):
    n = int(rng.integers(2, 7))
    groups = [int(rng.integers(1, 4)) for _ in range(n)]
    alphas = rng.uniform(0.5, 4.0, size=n)
    links = []
    for l in range(int(rng.integers(1, 4))):
        users = sorted({int(u) for u in rng.choice(np.arange(1, n + 1), size=int(rng.integers(2, n + 1)), replace=False)})
        links.append({"id": l + 1, "capacity": float(rng.uniform(1.0, 6.0)), "users": users})
    used = {u for link in links for u in link["users"]}
    for i in range(1, n + 1):
        if i not in used:
            links[0]["users"].append(i)
    return {
        "agents": [{"id": i + 1, "group": groups[i], "valuation": {"family": "log", "alpha": float(alphas[i])}}
                   for i in range(n)],
        "links": links,
        "message_network": {"edges": [[i, i + 1] for i in range(1, n)]},
    }


def cvxpy_optimum(data):
    cp = pytest.importorskip("cvxpy")
    n = len(data["agents"])
    alpha = np.array([a["valuation"]["alpha"] for a in data["agents"]])
    group = [a["group"] for a in data["agents"]]
    x = cp.Variable(n, nonneg=True)
    cons = []
    for link in data["links"]:
        load = 0
        for k in sorted({group[u - 1] for u in link["users"]}):
            members = [u - 1 for u in link["users"] if group[u - 1] == k]
            load = load + cp.max(cp.hstack([x[m] for m in members]))
        cons.append(load <= link["capacity"])
    prob = cp.Problem(cp.Maximize(alpha @ cp.log1p(x)), cons)
    prob.solve()
    return x.value, prob.value


def test_solver_agrees_with_cvxpy():
    rng = np.random.default_rng(2024)
    checked = 0
    while checked < 8:
        data = random_scenario(rng)
        sc = pydmd.Scenario.from_dict(data)
        # Links with a single group are outside the model.
        if any("K^l" in v for v in sc.validate()):
            continue
        sol = sc.solve()
        x = np.array([sol["x_star"][str(i)] for i in range(1, len(data["agents"]) + 1)])
        ref_x, ref_w = cvxpy_optimum(data)
        assert sol["welfare"] == pytest.approx(ref_w, abs=1e-5)
        assert np.max(np.abs(x - ref_x)) <= 1e-3
        checked += 1
