import numpy as np
import pytest

from ucpnet import (
    LinearConstraint,
    LinearExpr,
    enumerate_vertices,
    solve_lp,
)
from ucpnet.lp import FEAS_TOL, bound_constraint


def box(names, hi=1.0):
    out = []
    for n in names:
        out.extend(bound_constraint(n, 0.0, hi))
    return out


def random_instance(rng, d):
    names = [f"w{i}" for i in range(d)]
    cons = []
    for n in names:
        cons.extend(bound_constraint(n, 0.0, float(rng.uniform(0.5, 4.0))))
    interior = {n: 0.1 for n in names}
    for _ in range(int(rng.integers(1, 5))):
        coeffs = {n: float(rng.normal()) for n in names}
        slackness = float(rng.uniform(0.1, 2.0))
        rhs = sum(coeffs[n] * interior[n] for n in names) + slackness
        cons.append(LinearConstraint(LinearExpr(coeffs), "<=", rhs))
    objective = LinearExpr({n: float(rng.normal()) for n in names})
    return objective, cons


class TestBasics:
    def test_single_box(self):
        sol = solve_lp(LinearExpr({"x": 1.0}), "max", bound_constraint("x", 0, 1))
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(1.0, abs=1e-9)

    def test_tight_facet(self):
        cons = box(["x", "y"]) + [
            LinearConstraint(LinearExpr({"x": 1.0, "y": 1.0}), "<=", 1.0)
        ]
        sol = solve_lp(LinearExpr({"x": 1.0, "y": 1.0}), "max", cons)
        assert sol.objective == pytest.approx(1.0, abs=1e-9)

    def test_min_direction(self):
        cons = box(["x"], hi=3.0)
        sol = solve_lp(LinearExpr({"x": 1.0}, constant=2.0), "min", cons)
        assert sol.objective == pytest.approx(2.0, abs=1e-9)
        assert sol.point["x"] == pytest.approx(0.0, abs=1e-9)

    def test_equality_constraint(self):
        cons = box(["x", "y"], hi=2.0) + [
            LinearConstraint(LinearExpr({"x": 1.0, "y": 1.0}), "==", 1.0)
        ]
        sol = solve_lp(LinearExpr({"x": 2.0, "y": 1.0}), "max", cons)
        assert sol.objective == pytest.approx(2.0, abs=1e-9)

    def test_infeasible_status(self):
        cons = [
            LinearConstraint(LinearExpr({"x": 1.0}), "<=", 0.0),
            LinearConstraint(LinearExpr({"x": 1.0}), ">=", 1.0),
        ]
        assert solve_lp(LinearExpr({"x": 1.0}), "max", cons).status == "infeasible"

    def test_unbounded_status(self):
        cons = [LinearConstraint(LinearExpr({"x": 1.0}), ">=", 0.0)]
        assert solve_lp(LinearExpr({"x": 1.0}), "max", cons).status == "unbounded"

    def test_negative_weights_allowed(self):
        cons = [
            LinearConstraint(LinearExpr({"x": 1.0}), ">=", -5.0),
            LinearConstraint(LinearExpr({"x": 1.0}), "<=", -1.0),
        ]
        sol = solve_lp(LinearExpr({"x": 1.0}), "max", cons)
        assert sol.objective == pytest.approx(-1.0, abs=1e-9)

    def test_binding_bound_dual(self):
        cons = bound_constraint("x", 0.0, 5.0)
        sol = solve_lp(LinearExpr({"x": 1.0}), "max", cons)
        duals = dict(sol.duals)
        assert duals[1] == pytest.approx(1.0, abs=1e-7)  # the x <= 5 row


class TestAgainstVertexOracle:
    def test_random_instances(self):
        rng = np.random.default_rng(71)
        for _ in range(80):
            d = int(rng.integers(2, 5))
            objective, cons = random_instance(rng, d)
            sol = solve_lp(objective, "max", cons)
            assert sol.status == "optimal"
            vertices = enumerate_vertices(cons, dim_limit=4)
            assert vertices
            best = max(objective.evaluate(v) for v in vertices)
            assert sol.objective == pytest.approx(best, abs=1e-7)
            # weak-duality spot check and feasibility of the returned point
            assert all(objective.evaluate(v) <= sol.objective + 1e-7 for v in vertices)
            assert all(c.satisfied(sol.point, FEAS_TOL) for c in cons)

    def test_optimum_attained_at_a_vertex(self):
        rng = np.random.default_rng(73)
        for _ in range(20):
            objective, cons = random_instance(rng, 3)
            sol = solve_lp(objective, "max", cons)
            vertices = enumerate_vertices(cons, dim_limit=3)
            assert any(
                abs(objective.evaluate(v) - sol.objective) <= 1e-7 for v in vertices
            )


class TestVertices:
    def test_unit_box(self):
        vertices = enumerate_vertices(box(["x", "y"]))
        assert len(vertices) == 4

    def test_cut_corner(self):
        cons = box(["x", "y"]) + [
            LinearConstraint(LinearExpr({"x": 1.0, "y": 1.0}), "<=", 1.0)
        ]
        assert len(enumerate_vertices(cons)) == 3

    def test_dimension_limit(self):
        cons = box([f"w{i}" for i in range(7)])
        with pytest.raises(Exception):
            enumerate_vertices(cons, dim_limit=6)


class TestDegenerate:
    def test_klee_minty_terminates_and_is_exact(self):
        for n in range(2, 9):
            names = [f"x{j}" for j in range(1, n + 1)]
            cons = [
                LinearConstraint(LinearExpr({nm: 1.0}), ">=", 0.0) for nm in names
            ]
            for i in range(1, n + 1):
                coeffs = {names[i - 1]: 1.0}
                for j in range(1, i):
                    coeffs[names[j - 1]] = 2.0 ** (i - j + 1)
                cons.append(LinearConstraint(LinearExpr(coeffs), "<=", 5.0**i))
            objective = LinearExpr({names[j - 1]: 2.0 ** (n - j) for j in range(1, n + 1)})
            sol = solve_lp(objective, "max", cons)
            assert sol.status == "optimal"
            assert sol.objective == pytest.approx(5.0**n, rel=1e-9)

    def test_beale_cycling_instance(self):
        # Classic instance that cycles under the largest-coefficient rule.
        names = ["x4", "x5", "x6", "x7"]
        cons = [LinearConstraint(LinearExpr({n: 1.0}), ">=", 0.0) for n in names]
        cons.append(
            LinearConstraint(
                LinearExpr({"x4": 0.25, "x5": -60.0, "x6": -1.0 / 25.0, "x7": 9.0}),
                "<=", 0.0,
            )
        )
        cons.append(
            LinearConstraint(
                LinearExpr({"x4": 0.5, "x5": -90.0, "x6": -1.0 / 50.0, "x7": 3.0}),
                "<=", 0.0,
            )
        )
        cons.append(LinearConstraint(LinearExpr({"x6": 1.0}), "<=", 1.0))
        objective = LinearExpr({"x4": -0.75, "x5": 150.0, "x6": -0.02, "x7": 6.0})
        sol = solve_lp(objective, "min", cons)
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(-0.05, abs=1e-9)

    def test_determinism(self):
        rng = np.random.default_rng(79)
        objective, cons = random_instance(rng, 4)
        first = solve_lp(objective, "max", cons)
        for _ in range(5):
            again = solve_lp(objective, "max", cons)
            assert again.status == first.status
            assert again.objective == first.objective
            assert again.point == first.point
