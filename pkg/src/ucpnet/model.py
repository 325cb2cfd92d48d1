"""Core domain types: variables, assignments, additive utility factors,
directed utility nets, and their normalized (value function + tradeoff
weight) form.

Nets and assignments are immutable after construction; every operation
here is a pure function and safe for concurrent shared reads.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Literal, Mapping, Sequence

import numpy as np

from .errors import (
    IncompleteWeightsError,
    InvalidAssignmentError,
    InvalidModelError,
)

# Absolute tolerance for utility equality. Factor tables are small sums of
# user-scale numbers, so an absolute cutoff is adequate.
EPS_UTIL = 1e-9

Assignment = Mapping[str, str]
WeightVector = Mapping[str, float]

Ordering = Literal["greater", "equal", "less"]


def assignment_key(bindings: Assignment) -> str:
    """Canonical text form of an assignment: ``Var=value`` pairs joined by
    ``;`` with variables sorted lexicographically. The empty assignment is
    the empty string."""
    return ";".join(f"{k}={bindings[k]}" for k in sorted(bindings))


def parse_assignment_key(text: str) -> dict[str, str]:
    """Inverse of :func:`assignment_key`; raises on malformed pairs."""
    bindings: dict[str, str] = {}
    if not text:
        return bindings
    for part in text.split(";"):
        name, sep, value = part.partition("=")
        if not sep or not name:
            raise InvalidAssignmentError(f"malformed assignment fragment {part!r}")
        if name in bindings:
            raise InvalidAssignmentError(f"variable {name!r} bound twice in {text!r}")
        bindings[name] = value
    return bindings


@dataclass(frozen=True)
class VariableTable:
    """Ordered finite-domain variables.

    Declaration order of variables and of values is fixed at construction
    and is the canonical order used for iteration, tie-breaking, and
    serialization everywhere in the package.
    """

    names: tuple[str, ...]
    domains: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if len(self.names) != len(self.domains):
            raise InvalidModelError("names and domains must align")
        if len(set(self.names)) != len(self.names):
            raise InvalidModelError("variable names must be unique")
        for name, dom in zip(self.names, self.domains):
            if len(dom) < 2:
                raise InvalidModelError(f"variable {name!r} needs at least 2 values")
            if len(set(dom)) != len(dom):
                raise InvalidModelError(f"variable {name!r} has duplicate values")
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(self.names)})
        object.__setattr__(
            self,
            "_value_index",
            tuple({v: i for i, v in enumerate(dom)} for dom in self.domains),
        )

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[str, Sequence[str]]]) -> "VariableTable":
        return cls(tuple(n for n, _ in pairs), tuple(tuple(d) for _, d in pairs))

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise InvalidAssignmentError(f"unknown variable {name!r}") from None

    def domain(self, name: str) -> tuple[str, ...]:
        return self.domains[self.index(name)]

    def value_index(self, name: str, value: str) -> int:
        vi = self._value_index[self.index(name)]
        try:
            return vi[value]
        except KeyError:
            raise InvalidAssignmentError(
                f"value {value!r} is not in the domain of {name!r}"
            ) from None

    def shape(self) -> tuple[int, ...]:
        return tuple(len(d) for d in self.domains)

    def to_indices(self, bindings: Assignment, *, complete: bool = False) -> dict[int, int]:
        """Map an assignment to ``{variable index: value index}``, validating
        names and values. With ``complete=True`` every variable must be bound."""
        out = {self.index(n): self.value_index(n, v) for n, v in bindings.items()}
        if complete and len(out) != len(self.names):
            missing = [n for n in self.names if n not in bindings]
            raise InvalidAssignmentError(f"assignment leaves variables unbound: {missing}")
        return out

    def outcome_indices(self, bindings: Assignment) -> tuple[int, ...]:
        by_var = self.to_indices(bindings, complete=True)
        return tuple(by_var[i] for i in range(len(self.names)))

    def to_assignment(self, indices: Sequence[int]) -> dict[str, str]:
        return {n: self.domains[i][indices[i]] for i, n in enumerate(self.names)}

    def outcomes(self) -> Iterator[dict[str, str]]:
        """All complete assignments in canonical order."""
        for combo in itertools.product(*(range(s) for s in self.shape())):
            yield self.to_assignment(combo)

    def completions(self, partial: Assignment) -> Iterator[dict[str, str]]:
        """All completions of a partial assignment, in canonical order."""
        fixed = self.to_indices(partial)
        ranges = [
            (fixed[i],) if i in fixed else tuple(range(len(self.domains[i])))
            for i in range(len(self.names))
        ]
        for combo in itertools.product(*ranges):
            yield self.to_assignment(combo)


@dataclass(frozen=True, eq=False)
class Factor:
    """One additive utility factor: a child variable, its parent list,
    and a total table over Dom(parents) x Dom(child).

    ``values`` is indexed as ``values[p1, ..., pk, c]`` with parent axes in
    ``parents`` order and value indices taken from the owning
    :class:`VariableTable`.
    """

    child: str
    parents: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        if self.child in self.parents:
            raise InvalidModelError(f"factor for {self.child!r} lists itself as parent")
        if len(set(self.parents)) != len(self.parents):
            raise InvalidModelError(f"factor for {self.child!r} has duplicate parents")
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        self.values.setflags(write=False)

    @classmethod
    def from_rows(
        cls,
        variables: VariableTable,
        child: str,
        parents: Sequence[str],
        rows: Mapping,
    ) -> "Factor":
        """Build a factor from ``{parent assignment: {child value: utility}}``.

        Row keys may be canonical key strings, mappings, or tuples of parent
        values in ``parents`` order. The table must be total.
        """
        parents = tuple(parents)
        shape = tuple(len(variables.domain(p)) for p in parents) + (
            len(variables.domain(child)),
        )
        values = np.full(shape, np.nan)
        child_dom = variables.domain(child)
        for key, row in rows.items():
            if isinstance(key, str):
                bound = parse_assignment_key(key)
            elif isinstance(key, tuple):
                if len(key) != len(parents):
                    raise InvalidModelError(
                        f"row key {key!r} does not match parents {parents!r}"
                    )
                bound = dict(zip(parents, key))
            else:
                bound = dict(key)
            if set(bound) != set(parents):
                raise InvalidModelError(
                    f"factor for {child!r}: row {assignment_key(bound)!r} does not "
                    f"bind exactly the parents {parents!r}"
                )
            idx = tuple(variables.value_index(p, bound[p]) for p in parents)
            for value, util in row.items():
                values[idx + (variables.value_index(child, value),)] = float(util)
        if np.isnan(values).any():
            hole = np.argwhere(np.isnan(values))[0]
            ctx = {p: variables.domain(p)[hole[i]] for i, p in enumerate(parents)}
            raise InvalidModelError(
                f"factor for {child!r} is not total: missing entry for parents "
                f"{assignment_key(ctx)!r}, value {child_dom[hole[-1]]!r}"
            )
        return cls(child, parents, values)

    def row(self, parent_value_indices: Sequence[int]) -> np.ndarray:
        """Utility vector over the child's domain for one parent context."""
        return self.values[tuple(parent_value_indices)]

    def rows(self, variables: VariableTable) -> Iterator[tuple[tuple[str, ...], np.ndarray]]:
        """Iterate ``(parent value labels, child utility vector)`` in canonical
        (declaration) order of the parent domains."""
        parent_doms = [variables.domain(p) for p in self.parents]
        for combo in itertools.product(*(range(len(d)) for d in parent_doms)):
            labels = tuple(parent_doms[i][c] for i, c in enumerate(combo))
            yield labels, self.values[combo]

    def span(self) -> float:
        return float(self.values.max() - self.values.min())

    def is_constant(self) -> bool:
        return self.values.size == 0 or float(self.values.max()) == float(self.values.min())


@dataclass(frozen=True, eq=False)
class UcpNet:
    """A quantified directed net: one factor per variable, parents given by
    each factor's scope.

    Construction checks shape only (one total factor per variable, known
    names). Acyclicity and the ceteris-paribus validity condition are
    checked by the validation module, not assumed here.
    """

    variables: VariableTable
    factors: tuple[Factor, ...]

    def __post_init__(self):
        if len(self.factors) != len(self.variables):
            raise InvalidModelError("need exactly one factor per variable")
        by_child = {f.child: f for f in self.factors}
        if set(by_child) != set(self.variables.names):
            raise InvalidModelError("factor children must cover the variables exactly")
        ordered = tuple(by_child[n] for n in self.variables.names)
        object.__setattr__(self, "factors", ordered)
        for f in ordered:
            for p in f.parents:
                if p not in self.variables:
                    raise InvalidModelError(
                        f"factor for {f.child!r} references unknown parent {p!r}"
                    )
        scopes = []
        for f in ordered:
            expect = tuple(len(self.variables.domain(p)) for p in f.parents) + (
                len(self.variables.domain(f.child)),
            )
            if f.values.shape != expect:
                raise InvalidModelError(
                    f"factor for {f.child!r} has table shape {f.values.shape}, "
                    f"expected {expect}"
                )
            scopes.append(tuple(self.variables.index(p) for p in f.parents))
        object.__setattr__(self, "_parent_idx", tuple(scopes))

    @classmethod
    def from_tables(
        cls,
        variables: VariableTable | Sequence[tuple[str, Sequence[str]]],
        tables: Mapping[str, tuple[Sequence[str], Mapping]],
    ) -> "UcpNet":
        """Convenience constructor: ``tables[child] = (parents, rows)``."""
        if not isinstance(variables, VariableTable):
            variables = VariableTable.from_pairs(variables)
        factors = tuple(
            Factor.from_rows(variables, child, parents, rows)
            for child, (parents, rows) in tables.items()
        )
        return cls(variables, factors)

    def factor_for(self, name: str) -> Factor:
        return self.factors[self.variables.index(name)]

    def parent_indices(self, var_index: int) -> tuple[int, ...]:
        return self._parent_idx[var_index]

    def edges(self) -> list[tuple[str, str]]:
        return [(p, f.child) for f in self.factors for p in f.parents]

    def children_of(self, name: str) -> list[str]:
        return [f.child for f in self.factors if name in f.parents]

    def utility_of_indices(self, outcome: Sequence[int]) -> float:
        """Sum of factor entries at an index-encoded complete outcome.

        Accumulates in variable declaration order; callers relying on exact
        float reproducibility get the same summation order every time.
        """
        total = 0.0
        for i, f in enumerate(self.factors):
            idx = tuple(outcome[j] for j in self._parent_idx[i]) + (outcome[i],)
            total += float(f.values[idx])
        return total


def evaluate_utility(net: UcpNet, outcome: Assignment) -> float:
    """Total utility of a complete outcome: the sum of each factor looked up
    at the outcome's restriction to that factor's scope."""
    return net.utility_of_indices(net.variables.outcome_indices(outcome))


def compare_outcomes(net: UcpNet, o1: Assignment, o2: Assignment) -> Ordering:
    """Order two complete outcomes by utility, treating differences within
    ``EPS_UTIL`` as equality."""
    u1 = evaluate_utility(net, o1)
    u2 = evaluate_utility(net, o2)
    if abs(u1 - u2) <= EPS_UTIL:
        return "equal"
    return "greater" if u1 > u2 else "less"


def utility_grid(net: UcpNet) -> np.ndarray:
    """Dense utility table over all outcomes, axes in variable declaration
    order. Element-wise accumulation order matches ``evaluate_utility``."""
    shape = net.variables.shape()
    total = np.zeros(shape)
    n = len(shape)
    for i, f in enumerate(net.factors):
        axes = net.parent_indices(i) + (i,)
        order = np.argsort(axes)
        arr = np.transpose(f.values, order)
        view_shape = [1] * n
        for a in sorted(axes):
            view_shape[a] = shape[a]
        total += arr.reshape(view_shape)
    return total


# --- normalized form -------------------------------------------------------


def pi_id(child: str, context: Assignment | str) -> str:
    """Identifier of the multiplicative tradeoff weight for one factor row."""
    key = context if isinstance(context, str) else assignment_key(context)
    return f"pi({child}|{key})" if key else f"pi({child})"


def sigma_id(child: str, context: Assignment | str) -> str:
    """Identifier of the additive tradeoff weight for one factor row."""
    key = context if isinstance(context, str) else assignment_key(context)
    return f"sigma({child}|{key})" if key else f"sigma({child})"


@dataclass(frozen=True, eq=False)
class ValueFamily:
    """Row-normalized value functions for one variable: same table layout as
    :class:`Factor` but each parent-context row is scaled into [0, 1]."""

    child: str
    parents: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        self.values.setflags(write=False)
        flat = self.values.reshape(-1, self.values.shape[-1])
        for row in flat:
            lo, hi = float(row.min()), float(row.max())
            if lo != 0.0 or (hi != 1.0 and hi != 0.0):
                raise InvalidModelError(
                    f"value function for {self.child!r} has a row with range "
                    f"[{lo}, {hi}]; rows must span [0, 1] (or be all zero)"
                )


@dataclass(frozen=True, eq=False)
class NormalizedUcpNet:
    """A net whose per-row utilities are split into fixed local value
    functions plus symbolic multiplicative/additive tradeoff weights.

    The weights themselves are *not* stored; they are identified by
    :func:`pi_id` / :func:`sigma_id` and supplied externally as a
    :data:`WeightVector`.
    """

    variables: VariableTable
    families: tuple[ValueFamily, ...]

    def __post_init__(self):
        by_child = {f.child: f for f in self.families}
        if set(by_child) != set(self.variables.names):
            raise InvalidModelError("need exactly one value family per variable")
        object.__setattr__(
            self, "families", tuple(by_child[n] for n in self.variables.names)
        )

    def family_for(self, name: str) -> ValueFamily:
        return self.families[self.variables.index(name)]

    def row_contexts(self, child: str) -> Iterator[tuple[dict[str, str], np.ndarray]]:
        """Iterate ``(parent assignment, value row)`` for one variable in
        canonical order."""
        fam = self.family_for(child)
        parent_doms = [self.variables.domain(p) for p in fam.parents]
        for combo in itertools.product(*(range(len(d)) for d in parent_doms)):
            ctx = {p: parent_doms[i][combo[i]] for i, p in enumerate(fam.parents)}
            yield ctx, fam.values[combo]

    def weight_ids(self) -> list[str]:
        """All pi/sigma identifiers in canonical order."""
        ids: list[str] = []
        for fam in self.families:
            for ctx, _ in self.row_contexts(fam.child):
                ids.append(pi_id(fam.child, ctx))
                ids.append(sigma_id(fam.child, ctx))
        return ids


def normalize_net(net: UcpNet) -> tuple[NormalizedUcpNet, dict[str, float]]:
    """Split a net into row-normalized value functions and the weight vector
    that reproduces it.

    For each factor row: pi = max - min, sigma = min, v = (f - min) / pi.
    Constant rows get v = 0, pi = 0, sigma = the constant; this keeps the
    round trip exact while staying inside [0, 1].
    """
    families = []
    weights: dict[str, float] = {}
    for f in net.factors:
        values = np.zeros_like(f.values)
        flat_src = f.values.reshape(-1, f.values.shape[-1])
        flat_dst = values.reshape(-1, values.shape[-1])
        parent_doms = [net.variables.domain(p) for p in f.parents]
        contexts = itertools.product(*parent_doms)
        for row_i, (src, ctx_values) in enumerate(zip(flat_src, contexts)):
            ctx = dict(zip(f.parents, ctx_values))
            lo, hi = float(src.min()), float(src.max())
            if hi > lo:
                flat_dst[row_i] = (src - lo) / (hi - lo)
                weights[pi_id(f.child, ctx)] = hi - lo
            else:
                flat_dst[row_i] = 0.0
                weights[pi_id(f.child, ctx)] = 0.0
            weights[sigma_id(f.child, ctx)] = lo
        families.append(ValueFamily(f.child, f.parents, values))
    return NormalizedUcpNet(net.variables, tuple(families)), weights


def instantiate_weights(nnet: NormalizedUcpNet, weights: WeightVector) -> UcpNet:
    """Rebuild a concrete net from a normalized one: each factor row becomes
    ``pi * v + sigma``. Raises if any identifier is missing."""
    factors = []
    for fam in nnet.families:
        values = np.empty_like(fam.values)
        flat_src = fam.values.reshape(-1, fam.values.shape[-1])
        flat_dst = values.reshape(-1, values.shape[-1])
        parent_doms = [nnet.variables.domain(p) for p in fam.parents]
        contexts = itertools.product(*parent_doms)
        for row_i, (src, ctx_values) in enumerate(zip(flat_src, contexts)):
            ctx = dict(zip(fam.parents, ctx_values))
            try:
                pi = float(weights[pi_id(fam.child, ctx)])
                sigma = float(weights[sigma_id(fam.child, ctx)])
            except KeyError as missing:
                raise IncompleteWeightsError(
                    f"weight vector is missing {missing.args[0]!r}"
                ) from None
            flat_dst[row_i] = pi * src + sigma
        factors.append(Factor(fam.child, fam.parents, values))
    return UcpNet(nnet.variables, tuple(factors))
