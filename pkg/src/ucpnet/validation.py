"""Validity checking for quantified directed utility nets.

A quantified DAG is a valid net exactly when every variable dominates its
children: for every parent context, whenever the variable's own factor
ranks one of its values above another, the local utility drop of switching
values must cover the worst-case total swing that switch can cause in the
children's factors. This module provides the exact (exponential in
extended-family size) test, a cheap sufficient span test, construction of
net topologies from additive decompositions, and brute-force semantic
oracles over full utility tables.

All functions are pure; per-variable checks are independent.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    DuplicateLastVariableError,
    InvalidAssignmentError,
    InvalidModelError,
    SizeLimitError,
)
from .model import (
    EPS_UTIL,
    Factor,
    UcpNet,
    VariableTable,
    assignment_key,
)

# Exact checks enumerate the joint domain of a variable's extended family
# (itself, parents, children, children's parents); refuse beyond this.
SIZE_LIMIT = 2**22

# Keep reports readable: at most this many recorded witnesses per variable.
WITNESS_CAP = 100


@dataclass(frozen=True)
class DominationWitness:
    """One concrete violation of the domination inequality.

    ``x1`` is the value the factor ranks at least as high as ``x2`` in
    context ``context``; ``y``/``z`` instantiate the children and their
    other parents; ``lhs``/``rhs`` are the two sides of the inequality.
    """

    variable: str
    context: dict[str, str]
    x1: str
    x2: str
    y: dict[str, str]
    z: dict[str, str]
    lhs: float
    rhs: float


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    acyclic: bool
    failures: tuple[DominationWitness, ...]
    violation_count: int

    def summary(self) -> str:
        if self.valid:
            return "valid"
        if not self.acyclic:
            return "invalid: parent relation contains a directed cycle"
        w = self.failures[0]
        return (
            f"invalid: {self.violation_count} domination violation(s); e.g. "
            f"{w.variable} given {assignment_key(w.context) or '{}'}: "
            f"f({w.x1}) - f({w.x2}) = {w.lhs:.6g} < {w.rhs:.6g} at "
            f"{assignment_key({**w.y, **w.z})}"
        )


def check_acyclic(net: UcpNet) -> bool:
    """True iff the parent relation has no directed cycle."""
    return topological_order(net) is not None


def topological_order(net: UcpNet) -> list[str] | None:
    """Kahn's algorithm; returns None on a cycle. Ties are broken by
    declaration order so the result is deterministic."""
    names = net.variables.names
    remaining_parents = {f.child: set(f.parents) for f in net.factors}
    order: list[str] = []
    ready = [n for n in names if not remaining_parents[n]]
    while ready:
        node = ready.pop(0)
        order.append(node)
        newly = []
        for child in names:
            if node in remaining_parents[child]:
                remaining_parents[child].discard(node)
                if not remaining_parents[child]:
                    newly.append(child)
        ready.extend(n for n in names if n in newly)
        ready.sort(key=net.variables.index)
    return order if len(order) == len(names) else None


def _extended_family(net: UcpNet, name: str):
    """Parents, children, and co-parents (children's other parents) of a
    variable, all in declaration order."""
    fx = net.factor_for(name)
    parents = fx.parents
    children = net.children_of(name)
    seen = set(parents) | {name}
    z_vars = sorted(
        {
            p
            for c in children
            for p in net.factor_for(c).parents
            if p not in seen
        },
        key=net.variables.index,
    )
    return fx, parents, children, z_vars


def _family_size(net: UcpNet, name: str) -> int:
    fx, parents, children, z_vars = _extended_family(net, name)
    size = len(net.variables.domain(name))
    for v in itertools.chain(parents, children, z_vars):
        size *= len(net.variables.domain(v))
    return size


def _child_swing(
    net: UcpNet,
    x_name: str,
    child: str,
    u_by_name: dict[str, int],
    x_index: int,
    z_vars: list[str],
    z_dims: list[int],
    y_pos: int,
    n_y: int,
) -> np.ndarray:
    """Child-factor table sliced at X=x_index and the fixed parent context,
    broadcast into the joint (z..., y...) space."""
    fy = net.factor_for(child)
    slicer: list = []
    kept: list[int] = []
    for p in fy.parents:
        if p == x_name:
            slicer.append(x_index)
        elif p in u_by_name:
            slicer.append(u_by_name[p])
        else:
            slicer.append(slice(None))
            kept.append(z_vars.index(p))
    slicer.append(slice(None))
    kept.append(len(z_vars) + y_pos)
    arr = fy.values[tuple(slicer)]
    arr = np.transpose(arr, np.argsort(kept))
    shape = [1] * (len(z_vars) + n_y)
    for axis in sorted(kept):
        shape[axis] = -1
    sizes = z_dims + [0] * n_y
    sizes[len(z_vars) + y_pos] = fy.values.shape[-1]
    for axis in sorted(kept):
        shape[axis] = sizes[axis]
    return arr.reshape(shape)


def _ordered_value_pairs(row: np.ndarray):
    """Ordered index pairs (i1, i2) the domination hypothesis covers: i1
    strictly above i2, or tied within tolerance (then both orders occur)."""
    n = len(row)
    for i1 in range(n):
        for i2 in range(n):
            if i1 == i2:
                continue
            if row[i1] > row[i2] + EPS_UTIL or abs(row[i1] - row[i2]) <= EPS_UTIL:
                yield i1, i2


def dominates_children(
    net: UcpNet, name: str
) -> tuple[bool, list[DominationWitness], int]:
    """Exact domination test for one variable.

    Returns (holds, witnesses capped at WITNESS_CAP, total violation
    count). Vacuously true for variables without children.
    """
    fx, parents, children, z_vars = _extended_family(net, name)
    if not children:
        return True, [], 0
    if _family_size(net, name) > SIZE_LIMIT:
        raise SizeLimitError(
            f"extended family of {name!r} exceeds {SIZE_LIMIT} joint rows"
        )
    variables = net.variables
    x_dom = variables.domain(name)
    z_dims = [len(variables.domain(z)) for z in z_vars]
    y_dims = [len(variables.domain(c)) for c in children]
    witnesses: list[DominationWitness] = []
    total = 0
    parent_doms = [variables.domain(p) for p in parents]
    for u_combo in itertools.product(*(range(len(d)) for d in parent_doms)):
        u_by_name = dict(zip(parents, u_combo))
        row = fx.values[u_combo]
        swing_cache: dict[int, np.ndarray] = {}

        def swing_at(x_index: int) -> np.ndarray:
            if x_index not in swing_cache:
                acc = np.zeros(z_dims + y_dims)
                for y_pos, child in enumerate(children):
                    acc = acc + _child_swing(
                        net, name, child, u_by_name, x_index,
                        z_vars, z_dims, y_pos, len(children),
                    )
                swing_cache[x_index] = acc
            return swing_cache[x_index]

        for i1, i2 in _ordered_value_pairs(row):
            lhs = float(row[i1] - row[i2])
            diff = swing_at(i2) - swing_at(i1)
            bad = diff > lhs + EPS_UTIL
            count = int(bad.sum())
            if count == 0:
                continue
            total += count
            if len(witnesses) < WITNESS_CAP:
                context = {p: parent_doms[k][u_combo[k]] for k, p in enumerate(parents)}
                for pos in np.argwhere(bad):
                    if len(witnesses) >= WITNESS_CAP:
                        break
                    z_vals = {
                        z: variables.domain(z)[pos[k]] for k, z in enumerate(z_vars)
                    }
                    y_vals = {
                        c: variables.domain(c)[pos[len(z_vars) + k]]
                        for k, c in enumerate(children)
                    }
                    witnesses.append(
                        DominationWitness(
                            variable=name,
                            context=context,
                            x1=x_dom[i1],
                            x2=x_dom[i2],
                            y=y_vals,
                            z=z_vals,
                            lhs=lhs,
                            rhs=float(diff[tuple(pos)]),
                        )
                    )
    return total == 0, witnesses, total


def is_valid_ucp(net: UcpNet) -> ValidationReport:
    """Exact validity test: acyclic and every variable dominates its
    children. Aggregates all witnesses (capped per variable)."""
    if not check_acyclic(net):
        return ValidationReport(valid=False, acyclic=False, failures=(), violation_count=0)
    failures: list[DominationWitness] = []
    total = 0
    for name in net.variables.names:
        _, witnesses, count = dominates_children(net, name)
        failures.extend(witnesses)
        total += count
    return ValidationReport(
        valid=total == 0, acyclic=True, failures=tuple(failures), violation_count=total
    )


def sufficient_check(net: UcpNet) -> bool:
    """Cheap sufficient validity test, polynomial in the table sizes.

    For each variable X: the smallest same-row gap between two distinct
    values of X (its minspan) must cover the summed full table span of its
    children's factors. A child's full span bounds any swing a parent flip
    can cause in it, including swings between different rows, which a
    per-row span would not bound.
    """
    if not check_acyclic(net):
        return False
    for name in net.variables.names:
        children = net.children_of(name)
        if not children:
            continue
        fx = net.factor_for(name)
        flat = fx.values.reshape(-1, fx.values.shape[-1])
        n_vals = flat.shape[1]
        minspan = np.inf
        for i1 in range(n_vals):
            for i2 in range(i1 + 1, n_vals):
                gap = float(np.abs(flat[:, i1] - flat[:, i2]).min())
                minspan = min(minspan, gap)
        child_spans = sum(net.factor_for(c).span() for c in children)
        if minspan < child_spans - EPS_UTIL:
            return False
    return True


# --- additive decompositions -------------------------------------------------


@dataclass(frozen=True, eq=False)
class GaiFactor:
    """One factor of an additive decomposition: a (possibly overlapping)
    scope and a total table over it, axes in scope order."""

    scope: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        if len(set(self.scope)) != len(self.scope):
            raise InvalidModelError(f"scope {self.scope!r} has duplicates")
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    @classmethod
    def from_rows(
        cls, variables: VariableTable, scope: Sequence[str], rows: Mapping[str, float]
    ) -> "GaiFactor":
        scope = tuple(scope)
        shape = tuple(len(variables.domain(v)) for v in scope)
        values = np.full(shape, np.nan)
        for key, util in rows.items():
            bound = key if isinstance(key, dict) else None
            if bound is None:
                from .model import parse_assignment_key

                bound = parse_assignment_key(key)
            if set(bound) != set(scope):
                raise InvalidModelError(
                    f"row {key!r} does not bind exactly the scope {scope!r}"
                )
            idx = tuple(variables.value_index(v, bound[v]) for v in scope)
            values[idx] = float(util)
        if np.isnan(values).any():
            raise InvalidModelError(f"table over scope {scope!r} is not total")
        return cls(scope, values)


@dataclass(frozen=True, eq=False)
class GaiDecomposition:
    variables: VariableTable
    factors: tuple[GaiFactor, ...]

    def __post_init__(self):
        covered = {v for f in self.factors for v in f.scope}
        if covered != set(self.variables.names):
            missing = set(self.variables.names) - covered
            raise InvalidModelError(f"scopes do not cover variables: missing {sorted(missing)}")

    def total(self, outcome: Mapping[str, str]) -> float:
        idx = {
            n: self.variables.value_index(n, outcome[n]) for n in self.variables.names
        }
        return float(
            sum(f.values[tuple(idx[v] for v in f.scope)] for f in self.factors)
        )


def topology_from_gai(gai: GaiDecomposition, ordering: Sequence[str]) -> UcpNet:
    """Orient an additive decomposition into a directed net.

    Under the given variable ordering, each factor's last scope variable
    becomes the child and the prior scope variables its parents; variables
    that are last in no factor get a constant-zero parentless factor.
    Fails if two factors end at the same variable. The result reproduces
    the decomposition's utilities by construction but is not necessarily a
    valid net; run :func:`is_valid_ucp` on it.
    """
    variables = gai.variables
    if sorted(ordering) != sorted(variables.names):
        raise InvalidAssignmentError("ordering must be a permutation of the variables")
    position = {n: i for i, n in enumerate(ordering)}
    last_of: dict[str, int] = {}
    for fi, f in enumerate(gai.factors):
        last = max(f.scope, key=position.__getitem__)
        if last in last_of:
            raise DuplicateLastVariableError(last, (last_of[last], fi))
        last_of[last] = fi
    factors: list[Factor] = []
    for name in variables.names:
        if name in last_of:
            g = gai.factors[last_of[name]]
            child_axis = g.scope.index(name)
            parents = tuple(v for v in g.scope if v != name)
            values = np.moveaxis(g.values, child_axis, -1)
            factors.append(Factor(name, parents, values))
        else:
            factors.append(Factor(name, (), np.zeros(len(variables.domain(name)))))
    return UcpNet(variables, tuple(factors))


# --- brute-force semantic oracles --------------------------------------------


def cpi_oracle(
    variables: VariableTable,
    full_utility: Mapping[str, float],
    x_vars: Sequence[str],
    y_vars: Sequence[str],
    z_vars: Sequence[str],
) -> bool:
    """Brute-force conditional preferential independence of X from Y given Z.

    ``full_utility`` maps canonical outcome keys to utilities. For every
    fixed z, the weak preference between any two X-assignments must not
    depend on the Y-assignment. X, Y, Z must partition the variables
    (Y and Z may be empty). Intended for small variable counts.
    """
    x_vars, y_vars, z_vars = tuple(x_vars), tuple(y_vars), tuple(z_vars)
    if not x_vars:
        raise InvalidAssignmentError("X must be nonempty")
    pieces = list(x_vars) + list(y_vars) + list(z_vars)
    if len(set(pieces)) != len(pieces) or set(pieces) != set(variables.names):
        raise InvalidAssignmentError("X, Y, Z must partition the variables")
    if not y_vars:
        return True

    def utility(*parts: Mapping[str, str]) -> float:
        merged: dict[str, str] = {}
        for p in parts:
            merged.update(p)
        return full_utility[assignment_key(merged)]

    x_space = [dict(zip(x_vars, combo)) for combo in
               itertools.product(*(variables.domain(v) for v in x_vars))]
    y_space = [dict(zip(y_vars, combo)) for combo in
               itertools.product(*(variables.domain(v) for v in y_vars))]
    z_space = [dict(zip(z_vars, combo)) for combo in
               itertools.product(*(variables.domain(v) for v in z_vars))] or [{}]

    for z in z_space:
        for x1, x2 in itertools.permutations(x_space, 2):
            first = None
            for y in y_space:
                pref = utility(x1, z, y) >= utility(x2, z, y) - EPS_UTIL
                if first is None:
                    first = pref
                elif pref != first:
                    return False
    return True


def cp_satisfaction_oracle(
    net: UcpNet, full_utility: Mapping[str, float], name: str
) -> bool:
    """Brute-force check that one variable's factor row orderings hold
    ceteris paribus: whenever its factor ranks x1 at or above x2 in some
    parent context, every completion of that context must weakly prefer x1.
    """
    variables = net.variables
    fx = net.factor_for(name)
    others = [v for v in variables.names if v != name and v not in fx.parents]
    x_dom = variables.domain(name)
    parent_doms = [variables.domain(p) for p in fx.parents]
    for u_combo in itertools.product(*(range(len(d)) for d in parent_doms)):
        row = fx.values[u_combo]
        context = {p: parent_doms[k][u_combo[k]] for k, p in enumerate(fx.parents)}
        for i1, i2 in _ordered_value_pairs(row):
            for rest in itertools.product(*(variables.domain(v) for v in others)):
                ctx = dict(zip(others, rest))
                o1 = {**context, **ctx, name: x_dom[i1]}
                o2 = {**context, **ctx, name: x_dom[i2]}
                if (
                    full_utility[assignment_key(o1)]
                    < full_utility[assignment_key(o2)] - EPS_UTIL
                ):
                    return False
    return True


def family_semantics_hold(
    net: UcpNet, full_utility: Mapping[str, float], name: str
) -> bool:
    """Full semantic condition for one family: the factor's conditional
    orderings hold ceteris paribus and the variable's preferences are
    independent of everything outside its parent set."""
    fx = net.factor_for(name)
    rest = [v for v in net.variables.names if v != name and v not in fx.parents]
    return cp_satisfaction_oracle(net, full_utility, name) and cpi_oracle(
        net.variables, full_utility, (name,), tuple(rest), fx.parents
    )
