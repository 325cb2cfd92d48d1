"""Expected-utility action selection when actions induce distributions.

Actions either list an explicit outcome support or point at a Bayes net
(optionally with a per-action root assignment acting as a choice). For the
Bayes-net route, each nonconstant utility factor becomes a utility node
over its scope and expectations are taken against exact variable
elimination marginals. A staged procedure walks utility nodes in
topological order and stops as soon as remaining factor spans cannot
change the winner.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    InvalidAssignmentError,
    InvalidModelError,
    UnknownActionError,
    ZeroProbabilityError,
)
from .model import EPS_UTIL, Assignment, UcpNet, VariableTable, assignment_key

EPS_PROB = 1e-9


@dataclass(frozen=True, eq=False)
class BayesNet:
    """Discrete Bayes net over a variable table (which may extend the
    utility net's variables). CPT rows must be distributions."""

    variables: VariableTable
    parents: Mapping[str, tuple[str, ...]]
    cpts: Mapping[str, np.ndarray]

    def __post_init__(self):
        parents = {n: tuple(self.parents.get(n, ())) for n in self.variables.names}
        object.__setattr__(self, "parents", parents)
        cpts = {}
        for name in self.variables.names:
            if name not in self.cpts:
                raise InvalidModelError(f"missing CPT for {name!r}")
            arr = np.asarray(self.cpts[name], dtype=float)
            expect = tuple(
                len(self.variables.domain(p)) for p in parents[name]
            ) + (len(self.variables.domain(name)),)
            if arr.shape != expect:
                raise InvalidModelError(
                    f"CPT for {name!r} has shape {arr.shape}, expected {expect}"
                )
            if (arr < -EPS_PROB).any() or (arr > 1 + EPS_PROB).any():
                raise InvalidModelError(f"CPT for {name!r} has entries outside [0, 1]")
            sums = arr.sum(axis=-1)
            if np.abs(sums - 1.0).max() > EPS_PROB:
                raise InvalidModelError(f"CPT rows for {name!r} do not sum to 1")
            arr.setflags(write=False)
            cpts[name] = arr
        object.__setattr__(self, "cpts", cpts)
        if self._topo_order() is None:
            raise InvalidModelError("Bayes net has a directed cycle")

    def _topo_order(self) -> list[str] | None:
        remaining = {n: set(ps) for n, ps in self.parents.items()}
        order, ready = [], [n for n in self.variables.names if not remaining[n]]
        while ready:
            node = ready.pop(0)
            order.append(node)
            for child, ps in remaining.items():
                if node in ps:
                    ps.discard(node)
                    if not ps and child not in order and child not in ready:
                        ready.append(child)
            ready.sort(key=self.variables.index)
        return order if len(order) == len(self.variables) else None

    @classmethod
    def from_rows(
        cls,
        variables: VariableTable | Sequence[tuple[str, Sequence[str]]],
        cpt_rows: Mapping[str, tuple[Sequence[str], Mapping]],
    ) -> "BayesNet":
        """``cpt_rows[node] = (parents, {parent assignment: {value: prob}})``."""
        if not isinstance(variables, VariableTable):
            variables = VariableTable.from_pairs(variables)
        from .model import Factor

        parents = {}
        cpts = {}
        for node, (ps, rows) in cpt_rows.items():
            f = Factor.from_rows(variables, node, ps, rows)
            parents[node] = f.parents
            cpts[node] = f.values
        return cls(variables, parents, cpts)


@dataclass(frozen=True)
class ExplicitSupport:
    """A small explicit distribution: (outcome, probability) pairs over
    complete outcomes of the utility net's variables."""

    outcomes: tuple[tuple[dict[str, str], float], ...]

    def __post_init__(self):
        if not self.outcomes:
            raise InvalidModelError("explicit support must be nonempty")
        total = sum(p for _, p in self.outcomes)
        if abs(total - 1.0) > EPS_PROB:
            raise InvalidModelError(f"support probabilities sum to {total}, not 1")
        if any(p < -EPS_PROB for _, p in self.outcomes):
            raise InvalidModelError("support probabilities must be nonnegative")


@dataclass(frozen=True)
class BayesSpec:
    """A distribution given by a Bayes net plus an optional root assignment
    (the action's choice-node instantiation)."""

    bn: BayesNet
    assignment: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class Action:
    name: str
    spec: ExplicitSupport | BayesSpec


@dataclass(frozen=True)
class DecisionScenario:
    actions: tuple[Action, ...]

    def __post_init__(self):
        if not self.actions:
            raise InvalidModelError("a scenario needs at least one action")
        names = [a.name for a in self.actions]
        if len(set(names)) != len(names):
            raise InvalidModelError("action names must be unique")

    def action(self, name: str) -> Action:
        for a in self.actions:
            if a.name == name:
                return a
        raise UnknownActionError(f"no action named {name!r}")

    def names(self) -> list[str]:
        return [a.name for a in self.actions]


@dataclass(frozen=True)
class UtilityNode:
    """Influence-diagram utility variable carrying one net factor; its
    parents are exactly that factor's scope."""

    factor_index: int
    scope: tuple[str, ...]


def build_influence(net: UcpNet, bn: BayesNet) -> list[UtilityNode]:
    """One utility node per nonconstant factor, scoped on child + parents.
    Every utility-net variable must exist in the Bayes net."""
    missing = [n for n in net.variables.names if n not in bn.variables]
    if missing:
        raise InvalidModelError(f"Bayes net lacks utility-net variables: {missing}")
    nodes = []
    for i, f in enumerate(net.factors):
        if f.is_constant():
            continue
        nodes.append(UtilityNode(factor_index=i, scope=f.parents + (f.child,)))
    return nodes


# --- exact inference ---------------------------------------------------------


@dataclass
class _Potential:
    vars: tuple[str, ...]
    table: np.ndarray


def _multiply(a: _Potential, b: _Potential) -> _Potential:
    joint = tuple(dict.fromkeys(a.vars + b.vars))
    def expand(p: _Potential) -> np.ndarray:
        arr = p.table
        for v in joint:
            if v not in p.vars:
                arr = arr[..., None]
        order = [
            (p.vars + tuple(v for v in joint if v not in p.vars)).index(v)
            for v in joint
        ]
        return np.transpose(arr, order)
    return _Potential(joint, expand(a) * expand(b))


def _sum_out(p: _Potential, name: str) -> _Potential:
    axis = p.vars.index(name)
    return _Potential(
        p.vars[:axis] + p.vars[axis + 1:], p.table.sum(axis=axis)
    )


@dataclass(frozen=True)
class MarginalTable:
    """Exact joint marginal over a scope, conditioned on evidence."""

    vars: tuple[str, ...]
    table: np.ndarray
    max_table_size: int  # diagnostics: largest intermediate built during VE

    def prob(self, variables: VariableTable, bindings: Mapping[str, str]) -> float:
        idx = tuple(variables.value_index(v, bindings[v]) for v in self.vars)
        return float(self.table[idx])

    def items(self, variables: VariableTable) -> Iterator[tuple[dict[str, str], float]]:
        for combo in itertools.product(
            *(range(len(variables.domain(v))) for v in self.vars)
        ):
            bindings = {
                v: variables.domain(v)[combo[k]] for k, v in enumerate(self.vars)
            }
            yield bindings, float(self.table[combo])


def ve_marginal(
    bn: BayesNet, scope: Sequence[str], evidence: Assignment | None = None
) -> MarginalTable:
    """Exact Pr(scope | evidence) by variable elimination with a min-degree
    ordering over the moralized graph restricted to eliminable variables."""
    variables = bn.variables
    scope = tuple(scope)
    for v in scope:
        variables.index(v)
    evidence = dict(evidence or {})
    ev_idx = {v: variables.value_index(v, x) for v, x in evidence.items()}

    potentials: list[_Potential] = []
    for node in variables.names:
        vars_ = bn.parents[node] + (node,)
        table = bn.cpts[node]
        keep: list[str] = []
        slicer: list = []
        for v in vars_:
            if v in ev_idx:
                slicer.append(ev_idx[v])
            else:
                slicer.append(slice(None))
                keep.append(v)
        potentials.append(_Potential(tuple(keep), table[tuple(slicer)]))

    keep_vars = set(scope) | set(evidence)
    to_eliminate = [v for v in variables.names if v not in keep_vars]

    # Min-degree over the moral graph induced by the current potentials.
    neighbors: dict[str, set[str]] = {v: set() for v in to_eliminate}
    def touch(vs: Sequence[str]):
        elim = [v for v in vs if v in neighbors]
        for v in elim:
            neighbors[v].update(x for x in vs if x != v)
    for p in potentials:
        touch(p.vars)

    max_size = max((p.table.size for p in potentials), default=0)
    while to_eliminate:
        target = min(
            to_eliminate,
            key=lambda v: (len(neighbors[v]), variables.index(v)),
        )
        to_eliminate.remove(target)
        bucket = [p for p in potentials if target in p.vars]
        rest = [p for p in potentials if target not in p.vars]
        prod = bucket[0]
        for p in bucket[1:]:
            prod = _multiply(prod, p)
            max_size = max(max_size, prod.table.size)
        summed = _sum_out(prod, target)
        rest.append(summed)
        potentials = rest
        fill = set(summed.vars)
        touch(tuple(fill))
        for v in neighbors:
            neighbors[v].discard(target)

    result = _Potential((), np.array(1.0))
    for p in potentials:
        result = _multiply(result, p)
        max_size = max(max_size, result.table.size)
    for v in result.vars:
        if v not in scope:  # scope variables that are also evidence keep mass
            result = _sum_out(result, v)
    mass = float(result.table.sum())
    if mass <= 0.0:
        raise ZeroProbabilityError(
            f"evidence {assignment_key(evidence)!r} has probability zero"
        )
    table = result.table / mass

    # Expand to the full requested scope, point-massing evidence-bound vars.
    out_vars = tuple(v for v in variables.names if v in scope)
    arr = table
    have = result.vars
    for v in out_vars:
        if v not in have:
            size = len(variables.domain(v))
            point = np.zeros(size)
            point[ev_idx[v]] = 1.0
            arr = np.multiply.outer(arr, point)
            have = have + (v,)
    order = [have.index(v) for v in out_vars]
    return MarginalTable(out_vars, np.transpose(arr, order), max_size)


def full_joint(bn: BayesNet) -> np.ndarray:
    """Dense joint distribution, axes in declaration order. Oracle-grade."""
    p = _Potential((), np.array(1.0))
    for node in bn.variables.names:
        p = _multiply(p, _Potential(bn.parents[node] + (node,), bn.cpts[node]))
    order = [p.vars.index(v) for v in bn.variables.names]
    return np.transpose(p.table, order)


# --- expected values ---------------------------------------------------------


def factor_spans(net: UcpNet) -> dict[str, float]:
    """Per-factor utility spread (max minus min over the whole table); the
    error bound for dropping that factor from an action comparison. Sums
    over subsets give the subset bound."""
    return {f.child: f.span() for f in net.factors}


def _ev_term(action: Action, net: UcpNet, factor_index: int) -> float:
    """Expected contribution of a single factor under an action."""
    f = net.factors[factor_index]
    if isinstance(action.spec, ExplicitSupport):
        variables = net.variables
        total = 0.0
        for outcome, p in action.spec.outcomes:
            idx = variables.outcome_indices(outcome)
            pos = tuple(idx[variables.index(v)] for v in f.parents) + (
                idx[factor_index],
            )
            total += p * float(f.values[pos])
        return total
    if f.is_constant():
        return float(f.values.flat[0])
    scope = f.parents + (f.child,)
    marg = ve_marginal(action.spec.bn, scope, action.spec.assignment)
    # Align the factor axes with the marginal's variable order.
    order = [scope.index(v) for v in marg.vars]
    aligned = np.transpose(f.values, order)
    return float((marg.table * aligned).sum())


def ev_terms(scenario: DecisionScenario, action_name: str, net: UcpNet) -> dict[str, float]:
    """Per-factor expected-value terms for one action, keyed by child."""
    action = scenario.action(action_name)
    if isinstance(action.spec, ExplicitSupport):
        for outcome, _ in action.spec.outcomes:
            net.variables.outcome_indices(outcome)  # validates completeness
    return {
        f.child: _ev_term(action, net, i) for i, f in enumerate(net.factors)
    }


def expected_value(
    scenario: DecisionScenario, action_name: str, net: UcpNet
) -> float:
    """Exact expected utility of an action: support-weighted utilities for
    explicit actions, marginal-weighted utility nodes for Bayes-net ones."""
    return float(sum(ev_terms(scenario, action_name, net).values()))


def compile_to_support(
    spec: BayesSpec,
    variables: VariableTable | UcpNet,
    *,
    min_prob: float = 0.0,
) -> ExplicitSupport:
    """Flatten a Bayes-net action into an explicit support over the utility
    net's variables (exact joint via elimination of any extra variables)."""
    if isinstance(variables, UcpNet):
        variables = variables.variables
    marg = ve_marginal(spec.bn, variables.names, spec.assignment)
    outcomes = []
    for bindings, p in marg.items(spec.bn.variables):
        if p > min_prob:
            outcomes.append((bindings, p))
    return ExplicitSupport(tuple(outcomes))


def staged_decision(
    scenario: DecisionScenario,
    net: UcpNet,
    slack: float = 0.0,
) -> tuple[str, float, int]:
    """Incremental action selection over utility nodes in topological order.

    At stage k the partial expected values cover the first k factors. The
    current leader is declared optimal once its lead over every surviving
    action covers the summed spans of the factors not yet added; actions
    trailing by more than that are pruned. With ``slack > 0`` the procedure
    may also stop early, returning the leader together with its worst-case
    suboptimality bound (0 when proven optimal).

    Returns ``(action name, bound, stages used)``.
    """
    if slack < 0:
        raise InvalidAssignmentError("slack must be nonnegative")
    from .validation import topological_order

    order = topological_order(net)
    if order is None:
        raise InvalidModelError("utility net has a directed cycle")
    spans = factor_spans(net)
    remaining = [spans[name] for name in order]
    names = scenario.names()
    survivors = list(names)
    partial = {a: 0.0 for a in names}
    term_cache: dict[tuple[str, str], float] = {}

    def stage_result(k: int) -> tuple[str, float, int] | None:
        eps_rest = sum(remaining[k:])
        best = max(partial[a] for a in survivors)
        leaders = [a for a in survivors if best - partial[a] <= EPS_UTIL]
        star = leaders[0]
        others = [a for a in survivors if a not in leaders]
        # With several tied leaders, declare optimality only once the
        # remaining factors cannot separate them; tied actions stay in play
        # and the declaration-order first is returned.
        if all(partial[star] - partial[a] >= eps_rest for a in others) and (
            len(leaders) == 1 or eps_rest <= 0.0
        ):
            return star, 0.0, k
        bound = max(
            (partial[a] - partial[star] + eps_rest for a in survivors if a != star),
            default=0.0,
        )
        bound = max(bound, 0.0)
        if bound <= slack:
            return star, bound, k
        return None

    for k in range(len(order) + 1):
        done = stage_result(k)
        if done is not None:
            return done
        if k == len(order):
            break
        var = order[k]
        idx = net.variables.index(var)
        for a in survivors:
            key = (a, var)
            if key not in term_cache:
                term_cache[key] = _ev_term(scenario.action(a), net, idx)
            partial[a] += term_cache[key]
        eps_rest = sum(remaining[k + 1:])
        best = max(partial[a] for a in survivors)
        survivors = [
            a for a in survivors if best - partial[a] <= eps_rest + EPS_UTIL
        ]
    # Exhausted all stages: partial EVs are the full EVs.
    best = max(partial[a] for a in survivors)
    star = next(a for a in survivors if best - partial[a] <= EPS_UTIL)
    return star, 0.0, len(order)
