"""Weight-space management, minimax regret, and the greedy query loop.

A weight space is a polytope of tradeoff-weight instantiations: structural
domination constraints implied by the net topology, box bounds on every
weight, and whatever constraints user responses have added. Expected value
of an explicit-support action is linear in the weights, so pairwise
advantages, max regret, and minimax regret all reduce to small linear
programs. Queries are scored by their worst-case regret reduction and the
loop asks the best one until regret drops below the caller's threshold or
no query is worth its cost.

Each session applies responses serially; regret computations read a frozen
constraint snapshot and are safe to run concurrently.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .bayes import Action, DecisionScenario, ExplicitSupport
from .errors import (
    CompileFirstError,
    ContradictionError,
    ContradictoryQueryError,
    EmptyWeightSpaceError,
    InvalidModelError,
    SizeLimitError,
    ZeroProbabilityError,
)
from .lp import (
    FEAS_TOL,
    LinearConstraint,
    LinearExpr,
    bound_constraint,
    feasible,
    solve_lp,
)
from .model import (
    NormalizedUcpNet,
    assignment_key,
    pi_id,
    sigma_id,
)
from .validation import SIZE_LIMIT

DEFAULT_U_MAX = 100.0


def structural_constraints(nnet: NormalizedUcpNet) -> list[LinearConstraint]:
    """Linear domination constraints implied by the net topology.

    For each variable X, parent context u, and value pair ranked
    v(x1) >= v(x2) by the local value function (ties in both directions),
    and for every instantiation of X's children and their other parents,
    the weighted local drop of X must cover the children's total swing:

        pi_X^u (v(x1) - v(x2))
            >= sum over children Y of
               [pi_Y^(x2 ctx) v_Y^(x2 ctx)(y) + sigma_Y^(x2 ctx)]
             - [pi_Y^(x1 ctx) v_Y^(x1 ctx)(y) + sigma_Y^(x1 ctx)]

    Any weight vector satisfying all of these with strictly positive
    multiplicative weights instantiates a net that passes the exact
    validity check. At a pi = 0 boundary point the instantiated row
    degenerates to a tie, and a tie's reverse-direction condition (the
    children must be entirely unaffected) is not linear in the weights, so
    such points can fail the exact check; they are still legitimate
    members of the regret polytope, which is all the LPs need.
    """
    variables = nnet.variables
    constraints: list[LinearConstraint] = []
    seen: set = set()
    for fam in nnet.families:
        name = fam.child
        children = [f.child for f in nnet.families if name in f.parents]
        if not children:
            continue
        u_vars = fam.parents
        covered = set(u_vars) | {name}
        z_vars = sorted(
            {
                p
                for c in children
                for p in nnet.family_for(c).parents
                if p not in covered
            },
            key=variables.index,
        )
        fam_size = len(variables.domain(name))
        for v in itertools.chain(u_vars, children, z_vars):
            fam_size *= len(variables.domain(v))
        if fam_size > SIZE_LIMIT:
            raise SizeLimitError(
                f"extended family of {name!r} exceeds {SIZE_LIMIT} joint rows"
            )
        x_dom = variables.domain(name)
        for u_ctx, row in nnet.row_contexts(name):
            pairs = [
                (i1, i2)
                for i1 in range(len(x_dom))
                for i2 in range(len(x_dom))
                if i1 != i2 and row[i1] >= row[i2]
            ]
            z_space = [
                dict(zip(z_vars, combo))
                for combo in itertools.product(*(variables.domain(z) for z in z_vars))
            ] or [{}]
            y_space = [
                dict(zip(children, combo))
                for combo in itertools.product(
                    *(variables.domain(c) for c in children)
                )
            ]
            for i1, i2 in pairs:
                base = {pi_id(name, u_ctx): float(row[i1] - row[i2])}
                for z in z_space:
                    for y in y_space:
                        coeffs = dict(base)
                        for c in children:
                            cfam = nnet.family_for(c)
                            y_idx = variables.value_index(c, y[c])
                            for x_val, sign in ((x_dom[i2], -1.0), (x_dom[i1], 1.0)):
                                ctx = {}
                                for p in cfam.parents:
                                    if p == name:
                                        ctx[p] = x_val
                                    elif p in u_ctx:
                                        ctx[p] = u_ctx[p]
                                    else:
                                        ctx[p] = z[p]
                                ridx = tuple(
                                    variables.value_index(p, ctx[p])
                                    for p in cfam.parents
                                )
                                v_val = float(cfam.values[ridx + (y_idx,)])
                                pid, sid = pi_id(c, ctx), sigma_id(c, ctx)
                                coeffs[pid] = coeffs.get(pid, 0.0) + sign * v_val
                                coeffs[sid] = coeffs.get(sid, 0.0) + sign
                        expr = LinearExpr(
                            {k: v for k, v in coeffs.items() if v != 0.0}
                        )
                        key = expr.canonical()
                        if key in seen:
                            continue
                        seen.add(key)
                        constraints.append(
                            LinearConstraint(expr, ">=", 0.0, "structural")
                        )
    return constraints


@dataclass(frozen=True)
class WeightSpace:
    """A feasible polytope of weight instantiations for one normalized net."""

    nnet: NormalizedUcpNet
    constraints: tuple[LinearConstraint, ...]

    @classmethod
    def build(
        cls,
        nnet: NormalizedUcpNet,
        *,
        u_max: float = DEFAULT_U_MAX,
        bounds: Mapping[str, tuple[float, float]] | None = None,
        include_structural: bool = True,
        extra: Sequence[LinearConstraint] = (),
    ) -> "WeightSpace":
        """Assemble the initial constraint set: structural constraints (on
        by default), a finite box for every weight identifier, and any
        caller-supplied constraints. Multiplicative weights are kept
        nonnegative; a negative one would invert the elicited value
        ordering. Raises if the result is infeasible."""
        bounds = dict(bounds or {})
        constraints: list[LinearConstraint] = []
        if include_structural:
            constraints.extend(structural_constraints(nnet))
        for identifier in nnet.weight_ids():
            lo, hi = bounds.get(identifier, (0.0, u_max))
            constraints.extend(bound_constraint(identifier, lo, hi))
        constraints.extend(extra)
        space = cls(nnet, tuple(constraints))
        if not feasible(space.constraints):
            raise EmptyWeightSpaceError("initial weight space is infeasible")
        return space

    def identifiers(self) -> list[str]:
        return self.nnet.weight_ids()

    def with_constraint(self, constraint: LinearConstraint) -> "WeightSpace":
        return WeightSpace(self.nnet, self.constraints + (constraint,))

    def interval(self, identifier: str) -> tuple[float, float]:
        """Current feasible range of one weight (two LPs)."""
        obj = LinearExpr({identifier: 1.0})
        lo = solve_lp(obj, "min", self.constraints)
        hi = solve_lp(obj, "max", self.constraints)
        if lo.status != "optimal" or hi.status != "optimal":
            raise EmptyWeightSpaceError(f"cannot bound {identifier!r}: {lo.status}/{hi.status}")
        return lo.objective, hi.objective


def ev_linear_form(
    scenario: DecisionScenario, action_name: str, nnet: NormalizedUcpNet
) -> LinearExpr:
    """Expected value of an explicit-support action as a linear function of
    the tradeoff weights: per touched factor row, the pi coefficient is the
    probability-weighted local value and the sigma coefficient the total
    probability landing in that row."""
    action = scenario.action(action_name)
    if not isinstance(action.spec, ExplicitSupport):
        raise CompileFirstError(
            f"action {action_name!r} is distribution-backed; compile it to an "
            "explicit support first"
        )
    variables = nnet.variables
    coeffs: dict[str, float] = {}
    for outcome, p in action.spec.outcomes:
        idx = variables.to_indices(outcome, complete=True)
        for fam in nnet.families:
            ctx = {q: outcome[q] for q in fam.parents}
            ridx = tuple(idx[variables.index(q)] for q in fam.parents)
            v_val = float(fam.values[ridx + (idx[variables.index(fam.child)],)])
            pid, sid = pi_id(fam.child, ctx), sigma_id(fam.child, ctx)
            coeffs[pid] = coeffs.get(pid, 0.0) + p * v_val
            coeffs[sid] = coeffs.get(sid, 0.0) + p
    return LinearExpr(coeffs, 0.0)


def pairwise_max_advantage(
    scenario: DecisionScenario, i: str, j: str, space: WeightSpace
) -> float:
    """max over the weight space of EV(j) - EV(i)."""
    if i == j:
        return 0.0
    objective = ev_linear_form(scenario, j, space.nnet).minus(
        ev_linear_form(scenario, i, space.nnet)
    )
    sol = solve_lp(objective, "max", space.constraints)
    if sol.status == "infeasible":
        raise EmptyWeightSpaceError("weight space is empty")
    if sol.status == "unbounded":
        raise InvalidModelError("weight space is unbounded; bounds are required")
    return float(sol.objective)


@dataclass(frozen=True)
class RegretReport:
    max_regret: dict[str, float]
    recommended: str
    minimax_regret: float
    advantage: dict[tuple[str, str], float]

    def to_payload(self) -> dict:
        return {
            "max_regret": dict(self.max_regret),
            "recommended": self.recommended,
            "minimax_regret": self.minimax_regret,
            "advantage": [
                {"action": i, "versus": j, "value": v}
                for (i, j), v in self.advantage.items()
            ],
        }


def minimax_regret(scenario: DecisionScenario, space: WeightSpace) -> RegretReport:
    """Max regret per action via pairwise advantage LPs, and the action
    minimizing it (ties broken by scenario order). Regret against the best
    alternative is attained pairwise, and an action's regret against
    itself is zero, so max regret is never negative."""
    names = scenario.names()
    forms = {name: ev_linear_form(scenario, name, space.nnet) for name in names}
    advantage: dict[tuple[str, str], float] = {}
    for i in names:
        for j in names:
            if i == j:
                continue
            sol = solve_lp(forms[j].minus(forms[i]), "max", space.constraints)
            if sol.status == "infeasible":
                raise EmptyWeightSpaceError("weight space is empty")
            if sol.status == "unbounded":
                raise InvalidModelError("weight space is unbounded; bounds are required")
            advantage[(i, j)] = float(sol.objective)
    max_regret = {
        i: max((advantage[(i, j)] for j in names if j != i), default=0.0)
        for i in names
    }
    max_regret = {i: max(0.0, v) for i, v in max_regret.items()}
    recommended = min(names, key=lambda i: (max_regret[i], names.index(i)))
    return RegretReport(max_regret, recommended, max_regret[recommended], advantage)


# --- queries ------------------------------------------------------------------


@dataclass(frozen=True)
class QueryResponse:
    label: str
    constraint: LinearConstraint


@dataclass(frozen=True)
class Query:
    kind: str  # weight-bound-split | sigma-ratio | action-comparison
    text: str
    responses: tuple[QueryResponse, ...]
    cost: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.responses) < 2:
            raise InvalidModelError("a query needs at least two responses")
        if self.cost < 0:
            raise InvalidModelError("query cost must be nonnegative")


def bound_split_query(
    identifier: str, midpoint: float, *, variable: str, context: str, cost: float = 0.0
) -> Query:
    where = f" (given {context})" if context else ""
    kind_word = "importance" if identifier.startswith("pi") else "baseline"
    return Query(
        kind="weight-bound-split",
        text=f"Is the {kind_word} weight of {variable}{where} at most {midpoint:.6g}?",
        responses=(
            QueryResponse(
                f"yes ({identifier} <= {midpoint:.6g})",
                LinearConstraint(LinearExpr({identifier: 1.0}), "<=", midpoint, "user-response"),
            ),
            QueryResponse(
                f"no ({identifier} >= {midpoint:.6g})",
                LinearConstraint(LinearExpr({identifier: 1.0}), ">=", midpoint, "user-response"),
            ),
        ),
        cost=cost,
        meta={
            "identifier": identifier,
            "variable": variable,
            "context": context,
            "midpoint": midpoint,
        },
    )


def sigma_ratio_query(
    variable: str, ctx1: str, ctx2: str, k: float, *, cost: float = 0.0
) -> Query:
    s1, s2 = sigma_id(variable, ctx1), sigma_id(variable, ctx2)
    expr = LinearExpr({s1: 1.0, s2: -k})
    return Query(
        kind="sigma-ratio",
        text=(
            f"Is the baseline weight of {variable} given {ctx1 or 'no parents'} at "
            f"most {k:g} times the one given {ctx2 or 'no parents'}?"
        ),
        responses=(
            QueryResponse(f"yes ({s1} <= {k:g} * {s2})",
                          LinearConstraint(expr, "<=", 0.0, "user-response")),
            QueryResponse(f"no ({s1} >= {k:g} * {s2})",
                          LinearConstraint(expr, ">=", 0.0, "user-response")),
        ),
        cost=cost,
        meta={"variable": variable, "context1": ctx1, "context2": ctx2, "k": k},
    )


def action_comparison_query(
    scenario: DecisionScenario,
    nnet: NormalizedUcpNet,
    i: str,
    j: str,
    context: Mapping[str, str] | None = None,
    *,
    cost: float = 0.0,
) -> Query:
    """Ask which of two actions the user prefers, optionally in a fixed
    context. The context restricts each action's support to consistent
    outcomes (renormalized); an action with no mass on the context makes
    the comparison ill-posed."""
    context = dict(context or {})
    if context:
        expr_i = _conditional_ev(scenario, i, nnet, context)
        expr_j = _conditional_ev(scenario, j, nnet, context)
    else:
        expr_i = ev_linear_form(scenario, i, nnet)
        expr_j = ev_linear_form(scenario, j, nnet)
    gap = expr_i.minus(expr_j)
    ctx_text = f" given {assignment_key(context)}" if context else ""
    return Query(
        kind="action-comparison",
        text=f"Which action do you prefer{ctx_text}: {i} or {j}?",
        responses=(
            QueryResponse(f"prefer {i}", LinearConstraint(gap, ">=", 0.0, "user-response")),
            QueryResponse(f"prefer {j}", LinearConstraint(gap, "<=", 0.0, "user-response")),
        ),
        cost=cost,
        meta={
            "action_i": i,
            "action_j": j,
            "context": assignment_key(context),
            "supports": {
                name: [
                    {"outcome": assignment_key(o), "p": p}
                    for o, p in scenario.action(name).spec.outcomes
                ]
                for name in (i, j)
                if isinstance(scenario.action(name).spec, ExplicitSupport)
            },
        },
    )


def _conditional_ev(
    scenario: DecisionScenario,
    action_name: str,
    nnet: NormalizedUcpNet,
    context: Mapping[str, str],
) -> LinearExpr:
    action = scenario.action(action_name)
    if not isinstance(action.spec, ExplicitSupport):
        raise CompileFirstError(f"action {action_name!r} must be explicit")
    keep = [
        (o, p)
        for o, p in action.spec.outcomes
        if all(o[k] == v for k, v in context.items())
    ]
    mass = sum(p for _, p in keep)
    if mass <= 0.0:
        raise ZeroProbabilityError(
            f"action {action_name!r} has no mass on context {assignment_key(context)!r}"
        )
    restricted = DecisionScenario(
        (Action(action_name, ExplicitSupport(tuple((o, p / mass) for o, p in keep))),)
    )
    return ev_linear_form(restricted, action_name, nnet)


def build_query_pool(
    scenario: DecisionScenario,
    space: WeightSpace,
    costs: Mapping[str, float] | None = None,
) -> list[Query]:
    """The default finite pool: a bound split at each weight's current
    feasible midpoint, ratio questions between the baseline weights of a
    variable's parent contexts, and pairwise action comparisons in the
    empty context. Every response is linear in the weights."""
    costs = dict(costs or {})
    nnet = space.nnet
    pool: list[Query] = []
    for fam in nnet.families:
        for ctx, _ in nnet.row_contexts(fam.child):
            ctx_key = assignment_key(ctx)
            for identifier in (pi_id(fam.child, ctx), sigma_id(fam.child, ctx)):
                lo, hi = space.interval(identifier)
                if hi - lo <= 1e-9:
                    continue  # weight already pinned; a split cannot inform
                pool.append(
                    bound_split_query(
                        identifier,
                        (lo + hi) / 2.0,
                        variable=fam.child,
                        context=ctx_key,
                        cost=costs.get("weight-bound-split", 0.0),
                    )
                )
    for fam in nnet.families:
        contexts = [assignment_key(ctx) for ctx, _ in nnet.row_contexts(fam.child)]
        if len(contexts) < 2:
            continue
        for c1, c2 in itertools.combinations(contexts, 2):
            for k in (0.5, 1.0, 2.0):
                pool.append(
                    sigma_ratio_query(
                        fam.child, c1, c2, k, cost=costs.get("sigma-ratio", 0.0)
                    )
                )
    names = scenario.names()
    for i, j in itertools.combinations(names, 2):
        pool.append(
            action_comparison_query(
                scenario, nnet, i, j, cost=costs.get("action-comparison", 0.0)
            )
        )
    return pool


def apply_response(
    space: WeightSpace, query: Query, response_index: int
) -> WeightSpace:
    """Add the chosen response's constraint; the result must stay feasible."""
    response = query.responses[response_index]
    updated = space.with_constraint(response.constraint)
    if not feasible(updated.constraints):
        raise ContradictionError(
            f"response {response.label!r} contradicts the current constraints",
            constraints=updated.constraints,
        )
    return updated


def query_improvement(
    query: Query,
    scenario: DecisionScenario,
    space: WeightSpace,
    *,
    current_mmr: float | None = None,
) -> float:
    """Worst-case regret reduction of a query: current minimax regret minus
    the largest minimax regret over its feasible responses. Responses a
    truthful user could never give (infeasible ones) are skipped; a query
    with no feasible response is contradictory."""
    if current_mmr is None:
        current_mmr = minimax_regret(scenario, space).minimax_regret
    worst = None
    for response in query.responses:
        candidate = space.with_constraint(response.constraint)
        if not feasible(candidate.constraints):
            continue
        mmr = minimax_regret(scenario, candidate).minimax_regret
        worst = mmr if worst is None else max(worst, mmr)
    if worst is None:
        raise ContradictoryQueryError(f"every response of {query.text!r} is infeasible")
    return current_mmr - worst


def select_query(
    pool: Sequence[Query],
    scenario: DecisionScenario,
    space: WeightSpace,
    *,
    current_mmr: float | None = None,
) -> Query | None:
    """The pool query with maximal worst-case improvement, or None when no
    query's improvement exceeds its cost. LP noise must not count as
    improvement, hence the feasibility-tolerance margin."""
    if current_mmr is None:
        current_mmr = minimax_regret(scenario, space).minimax_regret
    best: Query | None = None
    best_mi = None
    for query in pool:
        try:
            mi = query_improvement(query, scenario, space, current_mmr=current_mmr)
        except ContradictoryQueryError:
            continue
        if mi <= query.cost + FEAS_TOL:
            continue
        if best_mi is None or mi > best_mi:
            best, best_mi = query, mi
    return best


# --- the loop -----------------------------------------------------------------


@dataclass(frozen=True)
class StepResult:
    kind: str  # ask | recommend | stop
    query: Query | None = None
    action: str | None = None
    minimax_regret: float | None = None
    reason: str | None = None


@dataclass
class ElicitationSession:
    """State of one greedy elicitation run: the shrinking weight space, the
    scenario, the threshold, and the applied-response history."""

    scenario: DecisionScenario
    space: WeightSpace
    tau: float = 0.0
    costs: dict[str, float] = field(default_factory=dict)
    report: RegretReport | None = None
    pending: Query | None = None
    history: list[dict] = field(default_factory=list)
    status: str = "awaiting-response"

    def current_report(self) -> RegretReport:
        if self.report is None:
            self.report = minimax_regret(self.scenario, self.space)
        return self.report

    def step(self) -> StepResult:
        """Advance: recommend once regret is under the threshold, stop when
        no query is worth asking, otherwise surface the best query."""
        report = self.current_report()
        if report.minimax_regret <= self.tau:
            self.status = "recommended"
            self.pending = None
            return StepResult(
                "recommend", action=report.recommended,
                minimax_regret=report.minimax_regret,
            )
        if self.pending is not None:
            return StepResult("ask", query=self.pending)
        pool = build_query_pool(self.scenario, self.space, self.costs)
        query = select_query(
            pool, self.scenario, self.space, current_mmr=report.minimax_regret
        )
        if query is None:
            self.status = "stopped"
            return StepResult(
                "stop", action=report.recommended,
                minimax_regret=report.minimax_regret, reason="no-useful-query",
            )
        self.pending = query
        return StepResult("ask", query=query)

    def answer(self, response_index: int) -> RegretReport:
        """Apply a response to the pending query and refresh the report."""
        if self.pending is None:
            raise InvalidModelError("no pending query")
        query = self.pending
        self.space = apply_response(self.space, query, response_index)
        self.pending = None
        self.report = minimax_regret(self.scenario, self.space)
        self.history.append(
            {
                "kind": query.kind,
                "text": query.text,
                "response_index": response_index,
                "response": query.responses[response_index].label,
                "constraint": query.responses[response_index].constraint,
                "mmr_after": self.report.minimax_regret,
            }
        )
        return self.report
