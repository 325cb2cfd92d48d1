"""Small dense linear programming over named variables.

Maximize (or minimize) a linear expression subject to linear constraints.
The solver is a two-phase tableau simplex with Bland's pivoting rule:
problem sizes here are tiny (a handful of tradeoff weights per factor
row), and Bland guarantees termination on degenerate instances. Basic
solutions land exactly on constraint intersections, which keeps regret
comparisons stable.

The solver is stateless and reentrant.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Literal, Mapping, Sequence

import numpy as np

from .errors import SizeLimitError

FEAS_TOL = 1e-7
PIVOT_TOL = 1e-10

Sense = Literal["<=", ">=", "=="]
ConstraintLabel = Literal["structural", "bound", "user-response", "other"]


@dataclass
class LinearExpr:
    """coeffs . w + constant, over named weight identifiers."""

    coeffs: dict[str, float] = field(default_factory=dict)
    constant: float = 0.0

    def __post_init__(self):
        for k, v in self.coeffs.items():
            if not np.isfinite(v):
                raise ValueError(f"non-finite coefficient for {k!r}")
        if not np.isfinite(self.constant):
            raise ValueError("non-finite constant")

    def evaluate(self, point: Mapping[str, float]) -> float:
        return self.constant + sum(c * point[k] for k, c in self.coeffs.items())

    def minus(self, other: "LinearExpr") -> "LinearExpr":
        coeffs = dict(self.coeffs)
        for k, c in other.coeffs.items():
            coeffs[k] = coeffs.get(k, 0.0) + -c
        return LinearExpr(coeffs, self.constant - other.constant)

    def canonical(self) -> tuple[tuple[tuple[str, float], ...], float]:
        items = tuple(
            (k, self.coeffs[k]) for k in sorted(self.coeffs) if self.coeffs[k] != 0.0
        )
        return items, self.constant


@dataclass
class LinearConstraint:
    expr: LinearExpr
    sense: Sense
    rhs: float
    label: ConstraintLabel = "other"

    def satisfied(self, point: Mapping[str, float], tol: float = FEAS_TOL) -> bool:
        lhs = self.expr.evaluate(point)
        if self.sense == "<=":
            return lhs <= self.rhs + tol
        if self.sense == ">=":
            return lhs >= self.rhs - tol
        return abs(lhs - self.rhs) <= tol

    def describe(self) -> str:
        terms = " + ".join(
            f"{c:g}*{k}" for k, c in sorted(self.expr.coeffs.items()) if c != 0.0
        ) or "0"
        if self.expr.constant:
            terms += f" + {self.expr.constant:g}"
        return f"{terms} {self.sense} {self.rhs:g} [{self.label}]"


def bound_constraint(identifier: str, lo: float, hi: float) -> list[LinearConstraint]:
    return [
        LinearConstraint(LinearExpr({identifier: 1.0}), ">=", lo, "bound"),
        LinearConstraint(LinearExpr({identifier: 1.0}), "<=", hi, "bound"),
    ]


@dataclass(frozen=True)
class LpSolution:
    status: Literal["optimal", "infeasible", "unbounded"]
    objective: float | None = None
    point: dict[str, float] | None = None
    # Diagnostics only: (original constraint index, dual value) per active
    # internal row; no automated behavior depends on these.
    duals: tuple[tuple[int, float], ...] = ()


def _gather_identifiers(
    objective: LinearExpr, constraints: Sequence[LinearConstraint]
) -> list[str]:
    ids = set(objective.coeffs)
    for c in constraints:
        ids.update(c.expr.coeffs)
    return sorted(ids)


def _rows_le(
    constraints: Sequence[LinearConstraint], ids: list[str]
) -> list[tuple[np.ndarray, float, int]]:
    """Normalize all constraints to a.w <= b rows, tagged with the original
    constraint index (equalities contribute two rows)."""
    col = {k: i for i, k in enumerate(ids)}
    rows = []
    for ci, c in enumerate(constraints):
        a = np.zeros(len(ids))
        for k, v in c.expr.coeffs.items():
            a[col[k]] = v
        b = c.rhs - c.expr.constant
        if c.sense in ("<=", "=="):
            rows.append((a.copy(), b, ci))
        if c.sense in (">=", "=="):
            rows.append((-a, -b, ci))
    return rows


def _bland_simplex(T: np.ndarray, basis: list[int], c: np.ndarray) -> str:
    """Maximize c.x on tableau rows [A|b] with the given starting basis.
    Entering: lowest-index improving column; leaving: min ratio, ties to
    the lowest basic index."""
    basis_arr = np.asarray(basis)
    for _ in range(100000):
        reduced = c - c[basis_arr] @ T[:, :-1]
        improving = np.nonzero(reduced > PIVOT_TOL)[0]
        if improving.size == 0:
            basis[:] = basis_arr.tolist()
            return "optimal"
        entering = int(improving[0])
        col = T[:, entering]
        eligible = np.nonzero(col > PIVOT_TOL)[0]
        if eligible.size == 0:
            basis[:] = basis_arr.tolist()
            return "unbounded"
        ratios = T[eligible, -1] / col[eligible]
        near = eligible[ratios <= ratios.min() + 1e-12]
        leave = int(near[np.argmin(basis_arr[near])])
        pivot_row = T[leave] / T[leave, entering]
        T -= np.outer(col, pivot_row)
        T[leave] = pivot_row
        basis_arr[leave] = entering
    raise RuntimeError("simplex failed to terminate")


def solve_lp(
    objective: LinearExpr,
    direction: Literal["max", "min"],
    constraints: Sequence[LinearConstraint],
) -> LpSolution:
    """Optimize a linear expression over the constraint polytope.

    Infeasible and unbounded outcomes are reported as statuses. Weight
    variables are unrestricted in sign internally (bounds are expected to
    arrive as ordinary constraints), and results are deterministic for a
    fixed input ordering.
    """
    ids = _gather_identifiers(objective, constraints)
    d = len(ids)
    rows = _rows_le(constraints, ids)
    m = len(rows)
    sign = -1.0 if direction == "min" else 1.0
    c_real = np.zeros(2 * d)
    for i, k in enumerate(ids):
        coef = sign * objective.coeffs.get(k, 0.0)
        c_real[i] = coef
        c_real[d + i] = -coef

    if m == 0:
        # No constraints: optimum is the constant unless the objective has
        # any nonzero coefficient.
        if np.any(c_real != 0.0):
            return LpSolution("unbounded")
        val = sign * 0.0 + objective.constant
        return LpSolution("optimal", val, {k: 0.0 for k in ids})

    n_struct = 2 * d
    n_slack = m
    negated = [b < 0 for _, b, _ in rows]
    n_art = sum(negated)
    n_cols = n_struct + n_slack + n_art
    T = np.zeros((m, n_cols + 1))
    basis: list[int] = []
    art_at = 0
    for i, (a, b, _) in enumerate(rows):
        row = np.concatenate([a, -a, np.zeros(n_slack + n_art + 1)])
        row[n_struct + i] = 1.0
        row[-1] = b
        if negated[i]:
            row = -row
            art_col = n_struct + n_slack + art_at
            row[art_col] = 1.0
            basis.append(art_col)
            art_at += 1
        else:
            basis.append(n_struct + i)
        T[i] = row

    if n_art:
        c1 = np.zeros(n_cols)
        c1[n_struct + n_slack:] = -1.0
        status = _bland_simplex(T, basis, c1)
        assert status == "optimal"  # phase 1 is always bounded
        cb = c1[basis]
        if -(cb @ T[:, -1]) > FEAS_TOL:
            return LpSolution("infeasible")
        # Pivot any residual artificial out of the basis, or drop its row.
        keep_rows = []
        for i in range(m):
            if basis[i] >= n_struct + n_slack:
                piv = -1
                for j in range(n_struct + n_slack):
                    if abs(T[i, j]) > PIVOT_TOL:
                        piv = j
                        break
                if piv < 0:
                    continue  # redundant row
                T[i] /= T[i, piv]
                for r in range(m):
                    if r != i and T[r, piv] != 0.0:
                        T[r] -= T[r, piv] * T[i]
                basis[i] = piv
            keep_rows.append(i)
        T = T[keep_rows][:, list(range(n_struct + n_slack)) + [n_cols]]
        basis = [basis[i] for i in keep_rows]
        rows_kept = [rows[i] for i in keep_rows]
        negated = [negated[i] for i in keep_rows]
    else:
        rows_kept = rows

    c2 = np.concatenate([c_real, np.zeros(n_slack)])
    status = _bland_simplex(T, basis, c2)
    if status == "unbounded":
        return LpSolution("unbounded")

    x = np.zeros(n_struct + n_slack)
    for i, bi in enumerate(basis):
        x[bi] = T[i, -1]
    point = {k: float(x[i] - x[d + i]) for i, k in enumerate(ids)}
    value = sign * float(c_real @ x[:n_struct]) + objective.constant

    cb = c2[basis]
    duals = []
    for j, (_, _, ci) in enumerate(rows_kept):
        col = n_struct + j
        if col < T.shape[1] - 1:
            y = float(cb @ T[:, col])
            if negated[j]:
                y = -y
            duals.append((ci, sign * y))
    return LpSolution("optimal", value, point, tuple(duals))


def feasible(constraints: Sequence[LinearConstraint]) -> bool:
    """Feasibility probe: solve with a zero objective."""
    return solve_lp(LinearExpr({}), "max", constraints).status == "optimal"


def enumerate_vertices(
    constraints: Sequence[LinearConstraint], dim_limit: int = 6
) -> list[dict[str, float]]:
    """All basic feasible points of the constraint polytope, deduplicated
    within 1e-9. Brute force over d-subsets of constraint hyperplanes;
    refuses above ``dim_limit`` identifiers."""
    ids = _gather_identifiers(LinearExpr({}), constraints)
    d = len(ids)
    if d > dim_limit:
        raise SizeLimitError(f"{d} identifiers exceed the vertex-enumeration limit {dim_limit}")
    if d == 0:
        return [{}]
    rows = _rows_le(constraints, ids)
    vertices: dict[tuple[int, ...], dict[str, float]] = {}
    for combo in itertools.combinations(range(len(rows)), d):
        A = np.array([rows[i][0] for i in combo])
        b = np.array([rows[i][1] for i in combo])
        try:
            x = np.linalg.solve(A, b)
        except np.linalg.LinAlgError:
            continue
        if not np.isfinite(x).all():
            continue
        if any(a @ x > bb + FEAS_TOL for a, bb, _ in rows):
            continue
        key = tuple(int(round(v / 1e-9)) for v in x)
        vertices.setdefault(key, {k: float(x[i]) for i, k in enumerate(ids)})
    return list(vertices.values())
