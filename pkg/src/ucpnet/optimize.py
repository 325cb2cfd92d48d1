"""Outcome optimization: the linear-time forward sweep and an exhaustive
enumeration oracle for cross-checking it."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import InvalidAssignmentError, SizeLimitError, ValidityRequiredError
from .model import Assignment, UcpNet, utility_grid
from .validation import SIZE_LIMIT, is_valid_ucp, sufficient_check, topological_order


def forward_sweep(
    net: UcpNet,
    evidence: Assignment | None = None,
    *,
    order: Sequence[str] | None = None,
    validate: bool = True,
) -> dict[str, str]:
    """Greedy topological instantiation: fix the evidence, then set each
    remaining variable to the value its factor ranks highest given the
    already-chosen parents (ties broken by declaration order).

    On a valid net the result maximizes utility over all completions of
    the evidence; that guarantee is why an invalid net is an error rather
    than a best-effort answer (pass ``validate=False`` to experiment).
    """
    variables = net.variables
    evidence = dict(evidence or {})
    fixed = variables.to_indices(evidence)
    if validate:
        # The cheap span test settles most well-formed nets; fall back to
        # the exact check only when it is inconclusive.
        if not sufficient_check(net) and not is_valid_ucp(net).valid:
            raise ValidityRequiredError(
                "forward sweep requires a valid net; run validation for a report"
            )
    if order is None:
        order_list = topological_order(net)
        if order_list is None:
            raise ValidityRequiredError("net has a directed cycle")
    else:
        order_list = list(order)
        if sorted(order_list) != sorted(variables.names):
            raise InvalidAssignmentError("order must be a permutation of the variables")
        seen: set[str] = set()
        for name in order_list:
            if any(p not in seen for p in net.factor_for(name).parents):
                raise InvalidAssignmentError(f"order is not topological at {name!r}")
            seen.add(name)
    chosen: dict[int, int] = dict(fixed)
    for name in order_list:
        vi = variables.index(name)
        if vi in chosen:
            continue
        f = net.factor_for(name)
        row = f.values[tuple(chosen[variables.index(p)] for p in f.parents)]
        chosen[vi] = int(np.argmax(row))
    return variables.to_assignment([chosen[i] for i in range(len(variables))])


def brute_force_optimize(
    net: UcpNet, evidence: Assignment | None = None
) -> dict[str, str]:
    """Enumerate every completion of the evidence and return the first
    utility maximizer in canonical outcome order. Oracle-grade but
    exponential; refuses beyond SIZE_LIMIT completions."""
    variables = net.variables
    evidence = dict(evidence or {})
    fixed = variables.to_indices(evidence)
    free_size = 1
    for i, dom in enumerate(variables.domains):
        if i not in fixed:
            free_size *= len(dom)
    if free_size > SIZE_LIMIT:
        raise SizeLimitError(f"{free_size} completions exceed the limit {SIZE_LIMIT}")
    grid = utility_grid(net)
    slicer = tuple(
        fixed[i] if i in fixed else slice(None) for i in range(len(variables))
    )
    sub = grid[slicer]
    flat_best = int(np.argmax(sub))
    free_axes = [i for i in range(len(variables)) if i not in fixed]
    free_idx = np.unravel_index(flat_best, sub.shape) if free_axes else ()
    combo = list(range(len(variables)))
    for i in range(len(variables)):
        combo[i] = fixed[i] if i in fixed else int(free_idx[free_axes.index(i)])
    return variables.to_assignment(combo)
