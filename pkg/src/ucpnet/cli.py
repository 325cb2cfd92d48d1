"""Command-line interface.

Exit codes: 0 success, 1 domain errors (invalid net, infeasible weight
space, contradictions), 2 usage or document errors. Domain failures are
printed to stderr as ``error[<code>]: message``. Set UCP_LOG to a logging
level name for diagnostics.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import io as docio
from .bayes import BayesSpec, DecisionScenario, ExplicitSupport, Action, staged_decision
from .elicit import ElicitationSession, WeightSpace, minimax_regret
from .errors import DocumentError, UcpError
from .lp import LinearConstraint, LinearExpr
from .model import (
    NormalizedUcpNet,
    UcpNet,
    assignment_key,
    compare_outcomes,
    evaluate_utility,
    normalize_net,
    parse_assignment_key,
)
from .optimize import brute_force_optimize, forward_sweep
from .validation import is_valid_ucp, sufficient_check, topology_from_gai

log = logging.getLogger("ucpnet")


def _setup_logging():
    level = os.environ.get("UCP_LOG", "").upper()
    if level:
        logging.basicConfig(level=getattr(logging, level, logging.WARNING))


def _load_ucp(path: str) -> UcpNet:
    model = docio.load_net(path)
    if not isinstance(model, UcpNet):
        raise DocumentError("this command needs a quantified net, not a normalized one", path=path)
    return model


def _load_normalized(path: str) -> tuple[NormalizedUcpNet, dict]:
    model = docio.load_net(path)
    doc = docio._load_json(path)
    bounds = docio.weight_bounds_from_document(doc)
    if isinstance(model, UcpNet):
        nnet, _ = normalize_net(model)
        return nnet, bounds
    return model, bounds


def _parse_evidence(text: str | None) -> dict[str, str]:
    if not text:
        return {}
    return parse_assignment_key(text.replace(",", ";"))


def _load_scenario(
    path: str, bayes_path: str | None = None, *, flatten_for=None
) -> DecisionScenario:
    """Load a scenario; with ``flatten_for`` (a variable table), Bayes-net
    actions are compiled down to explicit supports."""
    extra = {}
    if bayes_path:
        bn = docio.bayes_net_from_document(docio._load_json(bayes_path), path=bayes_path)
        extra["shared"] = bn
        extra[Path(bayes_path).stem] = bn
    scenario = docio.load_scenario(path, extra_bayes_nets=extra)
    if flatten_for is None:
        return scenario
    from .bayes import compile_to_support

    actions = []
    for a in scenario.actions:
        if isinstance(a.spec, BayesSpec):
            actions.append(Action(a.name, compile_to_support(a.spec, flatten_for)))
        else:
            actions.append(a)
    return DecisionScenario(tuple(actions))


def _constraints_from_file(path: str) -> list[LinearConstraint]:
    raw = docio._load_json(path)
    if not isinstance(raw, list):
        raise DocumentError("constraints file must be a JSON array", path=path)
    out = []
    for i, entry in enumerate(raw):
        try:
            out.append(
                LinearConstraint(
                    LinearExpr({k: float(v) for k, v in entry["coeffs"].items()},
                               float(entry.get("constant", 0.0))),
                    entry["sense"],
                    float(entry["rhs"]),
                    entry.get("label", "other"),
                )
            )
        except (KeyError, TypeError) as exc:
            raise DocumentError(f"bad constraint entry {i}: {exc}", path=path) from exc
    return out


def _cmd_validate(args) -> int:
    net = _load_ucp(args.net)
    report = is_valid_ucp(net)
    print(report.summary())
    for w in report.failures[:10]:
        print(
            f"  witness: {w.variable} given {assignment_key(w.context) or '{}'}: "
            f"f({w.x1}) - f({w.x2}) = {w.lhs:.6g} < {w.rhs:.6g} "
            f"at {assignment_key({**w.y, **w.z})}"
        )
    print(f"span test: {'holds' if sufficient_check(net) else 'inconclusive'}")
    return 0 if report.valid else 1


def _cmd_eval(args) -> int:
    net = _load_ucp(args.net)
    print(evaluate_utility(net, parse_assignment_key(args.outcome)))
    return 0


def _cmd_compare(args) -> int:
    net = _load_ucp(args.net)
    print(compare_outcomes(net, parse_assignment_key(args.o1), parse_assignment_key(args.o2)))
    return 0


def _cmd_optimize(args) -> int:
    net = _load_ucp(args.net)
    evidence = _parse_evidence(args.evidence)
    if args.brute_force:
        outcome = brute_force_optimize(net, evidence)
    else:
        outcome = forward_sweep(net, evidence, validate=not args.force)
    print(assignment_key(outcome))
    print(evaluate_utility(net, outcome))
    return 0


def _cmd_decide(args) -> int:
    net = _load_ucp(args.net)
    scenario = _load_scenario(
        args.scenario, args.bayes,
        flatten_for=net.variables if args.compile else None,
    )
    action, bound, stages = staged_decision(scenario, net, slack=args.slack)
    print(f"action: {action}")
    print(f"bound: {bound}")
    print(f"stages: {stages}")
    return 0


def _cmd_regret(args) -> int:
    nnet, doc_bounds = _load_normalized(args.net)
    scenario = _load_scenario(args.scenario, flatten_for=nnet.variables)
    extra = _constraints_from_file(args.constraints) if args.constraints else []
    space = WeightSpace.build(
        nnet,
        u_max=args.u_max,
        bounds=doc_bounds,
        include_structural=not args.no_structural,
        extra=extra,
    )
    report = minimax_regret(scenario, space)
    for name in scenario.names():
        print(f"MR({name}) = {report.max_regret[name]:.6g}")
    print(f"recommended: {report.recommended} (MMR = {report.minimax_regret:.6g})")
    return 0


def _cmd_elicit(args) -> int:
    nnet, doc_bounds = _load_normalized(args.net)
    scenario = _load_scenario(args.scenario, flatten_for=nnet.variables)
    costs = {}
    if args.costs:
        costs = {k: float(v) for k, v in docio._load_json(args.costs).items()}
    space = WeightSpace.build(
        nnet, u_max=args.u_max, bounds=doc_bounds,
        include_structural=not args.no_structural,
    )
    session = ElicitationSession(scenario, space, tau=args.tau, costs=costs)
    script = None
    if args.script:
        script = docio._load_json(args.script)
        if not isinstance(script, list):
            raise DocumentError("script must be a JSON array of response indices", path=args.script)
    step_no = 0
    while True:
        result = session.step()
        if result.kind == "recommend":
            print(f"recommend: {result.action} (MMR = {result.minimax_regret:.6g})")
            return 0
        if result.kind == "stop":
            print(f"stop: {result.reason}; best: {result.action} (MMR = {result.minimax_regret:.6g})")
            return 0
        query = result.query
        print(f"[{step_no}] {query.text}")
        for i, resp in enumerate(query.responses):
            print(f"    {i}: {resp.label}")
        if script is not None:
            if step_no >= len(script):
                print("stop: script exhausted")
                return 0
            choice = int(script[step_no])
        else:
            choice = int(input("response index> "))
        report = session.answer(choice)
        print(f"    -> chose {choice}; MMR = {report.minimax_regret:.6g}")
        step_no += 1


def _cmd_gai2ucp(args) -> int:
    gai = docio.load_gai(args.gai)
    ordering = [v.strip() for v in args.order.split(",") if v.strip()]
    net = topology_from_gai(gai, ordering)
    doc = docio.net_to_document(net)
    if args.output:
        docio.dump_document(doc, args.output)
    else:
        print(json.dumps(doc, indent=2))
    report = is_valid_ucp(net)
    print(
        f"validity: {'valid' if report.valid else report.summary()}",
        file=sys.stderr,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ucpnet", description="Directed utility network toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="exact validity check plus the cheap span test")
    p.add_argument("net")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("eval", help="utility of a complete outcome")
    p.add_argument("net")
    p.add_argument("outcome", help='canonical key, e.g. "A=a;B=b;C=cbar;D=dbar"')
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("compare", help="order two outcomes by utility")
    p.add_argument("net")
    p.add_argument("o1")
    p.add_argument("o2")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("optimize", help="best outcome given evidence")
    p.add_argument("net")
    p.add_argument("--evidence", help="comma-separated k=v pairs", default=None)
    p.add_argument("--force", action="store_true", help="skip the validity gate")
    p.add_argument("--brute-force", action="store_true", help="use exhaustive enumeration")
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("decide", help="staged expected-utility action selection")
    p.add_argument("net")
    p.add_argument("scenario")
    p.add_argument("--bayes", help="shared Bayes net document", default=None)
    p.add_argument("--slack", type=float, default=0.0)
    p.add_argument("--compile", action="store_true",
                   help="flatten Bayes-net actions to explicit supports first")
    p.set_defaults(func=_cmd_decide)

    p = sub.add_parser("regret", help="minimax regret over the weight space")
    p.add_argument("net", help="normalized net document (a quantified net is normalized)")
    p.add_argument("scenario")
    p.add_argument("--constraints", help="JSON array of extra linear constraints", default=None)
    p.add_argument("--u-max", type=float, default=100.0)
    p.add_argument("--no-structural", action="store_true")
    p.set_defaults(func=_cmd_regret)

    p = sub.add_parser("elicit", help="interactive or scripted elicitation loop")
    p.add_argument("net")
    p.add_argument("scenario")
    p.add_argument("--tau", type=float, default=0.0)
    p.add_argument("--costs", help="JSON object: query kind -> cost", default=None)
    p.add_argument("--script", help="JSON array of response indices", default=None)
    p.add_argument("--u-max", type=float, default=100.0)
    p.add_argument("--no-structural", action="store_true")
    p.set_defaults(func=_cmd_elicit)

    p = sub.add_parser("gai2ucp", help="orient an additive decomposition into a net")
    p.add_argument("gai")
    p.add_argument("--order", required=True, help="comma-separated variable ordering")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=_cmd_gai2ucp)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DocumentError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return 2
    except UcpError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
