"""JSON document formats for nets, scenarios, and decompositions.

All documents carry ``format_version: 1`` and a ``kind`` tag; unknown
fields are rejected so fixtures double as golden tests. Assignments are
encoded as canonical key strings ("Var=value" pairs joined by ";",
variables sorted by name) and serialization is deterministic: saving the
same model twice yields byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping

from .bayes import Action, BayesNet, BayesSpec, DecisionScenario, ExplicitSupport
from .errors import DocumentError
from .model import (
    Factor,
    NormalizedUcpNet,
    UcpNet,
    ValueFamily,
    VariableTable,
    assignment_key,
    parse_assignment_key,
)
from .validation import GaiDecomposition, GaiFactor

FORMAT_VERSION = 1

KIND_UCP = "ucp-net"
KIND_NORMALIZED = "normalized-ucp-net"
KIND_SCENARIO = "scenario"
KIND_GAI = "gai"


def _require(condition: bool, message: str, *, path=None, where=None):
    if not condition:
        raise DocumentError(message, path=path, where=where)


def _check_fields(obj: dict, allowed: set[str], required: set[str], *, path, where):
    _require(isinstance(obj, dict), "expected an object", path=path, where=where)
    unknown = set(obj) - allowed
    _require(not unknown, f"unknown fields {sorted(unknown)}", path=path, where=where)
    missing = required - set(obj)
    _require(not missing, f"missing fields {sorted(missing)}", path=path, where=where)


def _parse_variables(items, *, path) -> VariableTable:
    _require(isinstance(items, list) and items, "variables must be a nonempty array", path=path, where="variables")
    pairs = []
    for entry in items:
        _check_fields(entry, {"name", "values"}, {"name", "values"}, path=path, where="variables")
        pairs.append((entry["name"], list(entry["values"])))
    try:
        return VariableTable.from_pairs(pairs)
    except Exception as exc:
        raise DocumentError(str(exc), path=path, where="variables") from exc


def _check_edges(edges, factors_parents: dict[str, tuple[str, ...]], *, path):
    declared = {tuple(e) for e in edges}
    implied = {
        (p, child) for child, parents in factors_parents.items() for p in parents
    }
    _require(
        declared == implied,
        f"edges do not match factor scopes: declared {sorted(declared)}, "
        f"implied {sorted(implied)}",
        path=path,
        where="edges",
    )


def _load_json(path: str | Path) -> dict:
    text = Path(path).read_text()
    if not text.strip():
        raise DocumentError("empty document", path=str(path))
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(
            f"invalid JSON: {exc.msg}", path=str(path),
            where=f"line {exc.lineno} column {exc.colno}",
        ) from exc


def _doc_kind(doc: dict, *, path) -> str:
    _require(isinstance(doc, dict), "top-level document must be an object", path=path)
    _require("format_version" in doc, "missing format_version", path=path)
    _require(
        doc["format_version"] == FORMAT_VERSION,
        f"unsupported format_version {doc['format_version']!r}",
        path=path,
    )
    _require("kind" in doc, "missing kind", path=path)
    return doc["kind"]


def net_from_document(doc: dict, *, path=None) -> UcpNet | NormalizedUcpNet:
    kind = _doc_kind(doc, path=path)
    if kind == KIND_UCP:
        _check_fields(
            doc,
            {"format_version", "kind", "variables", "edges", "factors"},
            {"format_version", "kind", "variables", "edges", "factors"},
            path=path, where="document",
        )
        variables = _parse_variables(doc["variables"], path=path)
        factors = []
        parents_by_child: dict[str, tuple[str, ...]] = {}
        for entry in doc["factors"]:
            _check_fields(entry, {"child", "parents", "rows"}, {"child", "parents", "rows"}, path=path, where="factors")
            try:
                f = Factor.from_rows(variables, entry["child"], entry["parents"], entry["rows"])
            except Exception as exc:
                raise DocumentError(str(exc), path=path, where=f"factor {entry.get('child')!r}") from exc
            factors.append(f)
            parents_by_child[f.child] = f.parents
        _check_edges(doc["edges"], parents_by_child, path=path)
        try:
            return UcpNet(variables, tuple(factors))
        except Exception as exc:
            raise DocumentError(str(exc), path=path) from exc
    if kind == KIND_NORMALIZED:
        _check_fields(
            doc,
            {"format_version", "kind", "variables", "edges", "value_functions", "weight_bounds"},
            {"format_version", "kind", "variables", "edges", "value_functions"},
            path=path, where="document",
        )
        variables = _parse_variables(doc["variables"], path=path)
        families = []
        parents_by_child = {}
        for entry in doc["value_functions"]:
            _check_fields(entry, {"child", "parents", "rows"}, {"child", "parents", "rows"}, path=path, where="value_functions")
            try:
                f = Factor.from_rows(variables, entry["child"], entry["parents"], entry["rows"])
                families.append(ValueFamily(f.child, f.parents, f.values))
            except Exception as exc:
                raise DocumentError(str(exc), path=path, where=f"value function {entry.get('child')!r}") from exc
            parents_by_child[entry["child"]] = tuple(entry["parents"])
        _check_edges(doc["edges"], parents_by_child, path=path)
        try:
            return NormalizedUcpNet(variables, tuple(families))
        except Exception as exc:
            raise DocumentError(str(exc), path=path) from exc
    raise DocumentError(f"expected a net document, got kind {kind!r}", path=path)


def weight_bounds_from_document(doc: dict) -> dict[str, tuple[float, float]]:
    """Optional per-identifier (lo, hi) bounds carried by normalized-net
    documents."""
    out = {}
    for identifier, pair in (doc.get("weight_bounds") or {}).items():
        if not (isinstance(pair, list) and len(pair) == 2):
            raise DocumentError(f"weight_bounds[{identifier!r}] must be [lo, hi]")
        out[identifier] = (float(pair[0]), float(pair[1]))
    return out


def load_net(path: str | Path) -> UcpNet | NormalizedUcpNet:
    return net_from_document(_load_json(path), path=str(path))


def net_to_document(model: UcpNet | NormalizedUcpNet, *, weight_bounds=None) -> dict:
    variables = [
        {"name": n, "values": list(model.variables.domain(n))}
        for n in model.variables.names
    ]
    if isinstance(model, UcpNet):
        edges = sorted((p, f.child) for f in model.factors for p in f.parents)
        factors = []
        for f in model.factors:
            rows = {}
            for labels, row in f.rows(model.variables):
                key = assignment_key(dict(zip(f.parents, labels)))
                rows[key] = {
                    v: float(row[k])
                    for k, v in enumerate(model.variables.domain(f.child))
                }
            factors.append(
                {
                    "child": f.child,
                    "parents": list(f.parents),
                    "rows": {k: rows[k] for k in sorted(rows)},
                }
            )
        return {
            "format_version": FORMAT_VERSION,
            "kind": KIND_UCP,
            "variables": variables,
            "edges": [list(e) for e in edges],
            "factors": factors,
        }
    edges = sorted((p, fam.child) for fam in model.families for p in fam.parents)
    value_functions = []
    for fam in model.families:
        rows = {}
        for ctx, row in model.row_contexts(fam.child):
            rows[assignment_key(ctx)] = {
                v: float(row[k])
                for k, v in enumerate(model.variables.domain(fam.child))
            }
        value_functions.append(
            {
                "child": fam.child,
                "parents": list(fam.parents),
                "rows": {k: rows[k] for k in sorted(rows)},
            }
        )
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": KIND_NORMALIZED,
        "variables": variables,
        "edges": [list(e) for e in edges],
        "value_functions": value_functions,
    }
    if weight_bounds:
        doc["weight_bounds"] = {
            k: [float(lo), float(hi)] for k, (lo, hi) in sorted(weight_bounds.items())
        }
    return doc


def save_net(model: UcpNet | NormalizedUcpNet, path: str | Path, *, weight_bounds=None) -> None:
    dump_document(net_to_document(model, weight_bounds=weight_bounds), path)


def dump_document(doc: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


# --- Bayes nets and scenarios --------------------------------------------------


def bayes_net_from_document(doc: dict, *, path=None) -> BayesNet:
    _check_fields(doc, {"variables", "cpts"}, {"variables", "cpts"}, path=path, where="bayes net")
    variables = _parse_variables(doc["variables"], path=path)
    rows = {}
    for entry in doc["cpts"]:
        _check_fields(entry, {"node", "parents", "rows"}, {"node", "parents", "rows"}, path=path, where="cpts")
        rows[entry["node"]] = (entry["parents"], entry["rows"])
    try:
        return BayesNet.from_rows(variables, rows)
    except Exception as exc:
        raise DocumentError(str(exc), path=path, where="cpts") from exc


def bayes_net_to_document(bn: BayesNet) -> dict:
    variables = [
        {"name": n, "values": list(bn.variables.domain(n))} for n in bn.variables.names
    ]
    cpts = []
    for node in bn.variables.names:
        f = Factor(node, bn.parents[node], bn.cpts[node])
        rows = {}
        for labels, row in f.rows(bn.variables):
            key = assignment_key(dict(zip(f.parents, labels)))
            rows[key] = {
                v: float(row[k]) for k, v in enumerate(bn.variables.domain(node))
            }
        cpts.append({"node": node, "parents": list(f.parents), "rows": {k: rows[k] for k in sorted(rows)}})
    return {"variables": variables, "cpts": cpts}


def scenario_from_document(
    doc: dict, *, path=None, extra_bayes_nets: Mapping[str, BayesNet] | None = None
) -> DecisionScenario:
    kind = _doc_kind(doc, path=path)
    _require(kind == KIND_SCENARIO, f"expected a scenario document, got {kind!r}", path=path)
    _check_fields(
        doc,
        {"format_version", "kind", "actions", "bayes_nets"},
        {"format_version", "kind", "actions"},
        path=path, where="document",
    )
    nets = dict(extra_bayes_nets or {})
    for name, sub in (doc.get("bayes_nets") or {}).items():
        nets[name] = bayes_net_from_document(sub, path=path)
    actions = []
    for entry in doc["actions"]:
        _require(isinstance(entry, dict) and "name" in entry, "action needs a name", path=path, where="actions")
        if "support" in entry:
            _check_fields(entry, {"name", "support"}, {"name", "support"}, path=path, where=f"action {entry['name']!r}")
            outcomes = []
            for item in entry["support"]:
                _check_fields(item, {"outcome", "p"}, {"outcome", "p"}, path=path, where=f"action {entry['name']!r}")
                outcomes.append((parse_assignment_key(item["outcome"]), float(item["p"])))
            try:
                spec = ExplicitSupport(tuple(outcomes))
            except Exception as exc:
                raise DocumentError(str(exc), path=path, where=f"action {entry['name']!r}") from exc
        elif "bayes_net" in entry:
            _check_fields(entry, {"name", "bayes_net", "assignment"}, {"name", "bayes_net"}, path=path, where=f"action {entry['name']!r}")
            ref = entry["bayes_net"]
            _require(ref in nets, f"unknown bayes net {ref!r}", path=path, where=f"action {entry['name']!r}")
            assignment = parse_assignment_key(entry.get("assignment", ""))
            spec = BayesSpec(nets[ref], assignment)
        else:
            raise DocumentError(
                "action needs either a support or a bayes_net reference",
                path=path, where=f"action {entry['name']!r}",
            )
        actions.append(Action(entry["name"], spec))
    try:
        return DecisionScenario(tuple(actions))
    except Exception as exc:
        raise DocumentError(str(exc), path=path) from exc


def load_scenario(path: str | Path, *, extra_bayes_nets=None) -> DecisionScenario:
    return scenario_from_document(
        _load_json(path), path=str(path), extra_bayes_nets=extra_bayes_nets
    )


def scenario_to_document(scenario: DecisionScenario) -> dict:
    actions = []
    nets: dict[str, dict] = {}
    for a in scenario.actions:
        if isinstance(a.spec, ExplicitSupport):
            actions.append(
                {
                    "name": a.name,
                    "support": [
                        {"outcome": assignment_key(o), "p": float(p)}
                        for o, p in a.spec.outcomes
                    ],
                }
            )
        else:
            ref = f"bn_{a.name}"
            nets[ref] = bayes_net_to_document(a.spec.bn)
            actions.append(
                {
                    "name": a.name,
                    "bayes_net": ref,
                    "assignment": assignment_key(a.spec.assignment),
                }
            )
    doc = {"format_version": FORMAT_VERSION, "kind": KIND_SCENARIO, "actions": actions}
    if nets:
        doc["bayes_nets"] = nets
    return doc


# --- additive decompositions ----------------------------------------------------


def gai_from_document(doc: dict, *, path=None) -> GaiDecomposition:
    kind = _doc_kind(doc, path=path)
    _require(kind == KIND_GAI, f"expected a gai document, got {kind!r}", path=path)
    _check_fields(
        doc,
        {"format_version", "kind", "variables", "factors"},
        {"format_version", "kind", "variables", "factors"},
        path=path, where="document",
    )
    variables = _parse_variables(doc["variables"], path=path)
    factors = []
    for i, entry in enumerate(doc["factors"]):
        _check_fields(entry, {"scope", "rows"}, {"scope", "rows"}, path=path, where=f"factor {i}")
        try:
            factors.append(GaiFactor.from_rows(variables, entry["scope"], entry["rows"]))
        except Exception as exc:
            raise DocumentError(str(exc), path=path, where=f"factor {i}") from exc
    try:
        return GaiDecomposition(variables, tuple(factors))
    except Exception as exc:
        raise DocumentError(str(exc), path=path) from exc


def load_gai(path: str | Path) -> GaiDecomposition:
    return gai_from_document(_load_json(path), path=str(path))
