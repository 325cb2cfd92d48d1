"""Session-oriented web service for interactive elicitation.

One session = one normalized net + scenario + shrinking weight space.
Clients poll the pending query, submit a response index, and read back the
updated regret report; the service recomputes regret synchronously so the
report a client receives always reflects its own response. Responses are
versioned by transcript length: submitting against a stale query id yields
409 and no state change. Every applied response is snapshotted to disk, so
a session can be reconstructed by replay.

Session ids are unguessable random tokens; possession is the only
authentication. This is a desk-scale tool, not a hardened product.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import secrets
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import io as docio
from .bayes import Action, BayesSpec, DecisionScenario, compile_to_support
from .elicit import ElicitationSession, Query, WeightSpace
from .errors import (
    ContradictionError,
    DocumentError,
    EmptyWeightSpaceError,
    UcpError,
)
from .model import NormalizedUcpNet, UcpNet, normalize_net

log = logging.getLogger("ucpnet.service")


def _constraint_payload(constraint) -> dict:
    return {
        "coeffs": {k: float(v) for k, v in sorted(constraint.expr.coeffs.items())},
        "constant": float(constraint.expr.constant),
        "sense": constraint.sense,
        "rhs": float(constraint.rhs),
    }


def query_payload(query: Query, query_id: int) -> dict:
    return {
        "query_id": query_id,
        "kind": query.kind,
        "text": query.text,
        "cost": query.cost,
        "meta": query.meta,
        "responses": [
            {
                "index": i,
                "label": r.label,
                "constraint": _constraint_payload(r.constraint),
            }
            for i, r in enumerate(query.responses)
        ],
    }


@dataclass
class SessionRuntime:
    id: str
    session: ElicitationSession
    initial_mmr: float
    lock: threading.Lock = field(default_factory=threading.Lock)

    def status(self) -> str:
        return self.session.status

    def version(self) -> int:
        return len(self.session.history)

    def record_payload(self) -> dict:
        report = self.session.current_report()
        return {
            "id": self.id,
            "status": self.status(),
            "tau": self.session.tau,
            "responses_applied": self.version(),
            "report": report.to_payload(),
        }

    def pending_payload(self) -> dict | None:
        if self.session.pending is None:
            return None
        return query_payload(self.session.pending, self.version())

    def transcript_payload(self) -> dict:
        return {
            "id": self.id,
            "initial_mmr": self.initial_mmr,
            "events": [
                {
                    "query_id": i,
                    "kind": e["kind"],
                    "text": e["text"],
                    "response_index": e["response_index"],
                    "response_label": e["response"],
                    "constraint": _constraint_payload(e["constraint"]),
                    "mmr_after": e["mmr_after"],
                }
                for i, e in enumerate(self.session.history)
            ],
        }


class SessionStore:
    def __init__(self, data_dir: str | os.PathLike | None = None):
        self.data_dir = Path(data_dir) if data_dir else None
        if self.data_dir:
            self.data_dir.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, SessionRuntime] = {}
        self._lock = threading.Lock()

    def create(self, body: dict) -> SessionRuntime:
        net_doc = body.get("net")
        scenario_doc = body.get("scenario")
        if not isinstance(net_doc, dict) or not isinstance(scenario_doc, dict):
            raise DocumentError("body must carry net and scenario documents")
        config = body.get("config") or {}
        if not isinstance(config, dict):
            raise DocumentError("config must be an object")

        model = docio.net_from_document(net_doc)
        if isinstance(model, UcpNet):
            nnet, _ = normalize_net(model)
        else:
            nnet = model
        bounds = docio.weight_bounds_from_document(net_doc)
        for identifier, pair in (config.get("bounds") or {}).items():
            if not (isinstance(pair, list) and len(pair) == 2):
                raise DocumentError(f"config.bounds[{identifier!r}] must be [lo, hi]")
            bounds[identifier] = (float(pair[0]), float(pair[1]))
        scenario = docio.scenario_from_document(scenario_doc)
        actions = []
        for a in scenario.actions:
            if isinstance(a.spec, BayesSpec):
                actions.append(Action(a.name, compile_to_support(a.spec, nnet.variables)))
            else:
                actions.append(a)
        scenario = DecisionScenario(tuple(actions))

        space = WeightSpace.build(
            nnet,
            u_max=float(config.get("u_max", 100.0)),
            bounds=bounds,
            include_structural=bool(config.get("include_structural", True)),
        )
        session = ElicitationSession(
            scenario,
            space,
            tau=float(config.get("tau", 0.0)),
            costs={k: float(v) for k, v in (config.get("costs") or {}).items()},
        )
        session.step()  # settles status and the pending query, if any
        runtime = SessionRuntime(
            id=secrets.token_urlsafe(16),
            session=session,
            initial_mmr=session.current_report().minimax_regret,
        )
        with self._lock:
            self._sessions[runtime.id] = runtime
        self._snapshot(runtime, created={"net": net_doc, "scenario": scenario_doc, "config": config})
        return runtime

    def get(self, session_id: str) -> SessionRuntime | None:
        with self._lock:
            return self._sessions.get(session_id)

    def _snapshot(self, runtime: SessionRuntime, created: dict | None = None):
        if not self.data_dir:
            return
        path = self.data_dir / f"{runtime.id}.json"
        doc: dict = {"id": runtime.id, "initial_mmr": runtime.initial_mmr}
        if created is not None:
            doc["created"] = created
        elif path.exists():
            doc["created"] = json.loads(path.read_text())["created"]
        doc["transcript"] = runtime.transcript_payload()["events"]
        path.write_text(json.dumps(doc, indent=2) + "\n")

    def submit(self, runtime: SessionRuntime, query_id: int, response_index: int) -> dict:
        with runtime.lock:
            if runtime.status() != "awaiting-response" or runtime.session.pending is None:
                raise StaleQuery("session is not awaiting a response")
            if query_id != runtime.version():
                raise StaleQuery(f"query {query_id} is stale; session is at {runtime.version()}")
            pending = runtime.session.pending
            if not (0 <= response_index < len(pending.responses)):
                raise DocumentError(f"response_index {response_index} out of range")
            runtime.session.answer(response_index)
            runtime.session.step()
            self._snapshot(runtime)
            return runtime.record_payload()


class StaleQuery(Exception):
    pass


def replay_transcript(store_file: str | Path) -> SessionRuntime:
    """Rebuild a session purely from its on-disk snapshot: re-create from
    the stored documents, then re-apply each recorded response index."""
    doc = json.loads(Path(store_file).read_text())
    store = SessionStore(None)
    runtime = store.create(doc["created"])
    for event in doc["transcript"]:
        store.submit(runtime, runtime.version(), event["response_index"])
    return runtime


def create_app(data_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="ucpnet elicitation service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    store = SessionStore(data_dir)
    app.state.store = store

    def error_response(status: int, code: str, message: str) -> JSONResponse:
        return JSONResponse({"error": code, "message": message}, status_code=status)

    @app.get("/healthz")
    def healthz():
        return {"ok": True}

    @app.post("/sessions")
    async def create_session(request: Request):
        try:
            body = await request.json()
        except Exception:
            return error_response(400, "malformed", "request body is not valid JSON")
        if not isinstance(body, dict):
            return error_response(400, "malformed", "request body must be an object")
        try:
            runtime = store.create(body)
        except DocumentError as exc:
            return error_response(400, exc.code, str(exc))
        except (EmptyWeightSpaceError, ContradictionError) as exc:
            return error_response(422, exc.code, str(exc))
        except UcpError as exc:
            return error_response(422, exc.code, str(exc))
        return JSONResponse(runtime.record_payload(), status_code=201)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        runtime = store.get(session_id)
        if runtime is None:
            return error_response(404, "unknown-session", "no such session")
        return runtime.record_payload()

    @app.get("/sessions/{session_id}/query")
    def get_query(session_id: str):
        runtime = store.get(session_id)
        if runtime is None:
            return error_response(404, "unknown-session", "no such session")
        payload = runtime.record_payload()
        payload["query"] = runtime.pending_payload()
        return payload

    @app.post("/sessions/{session_id}/responses")
    async def submit_response(session_id: str, request: Request):
        runtime = store.get(session_id)
        if runtime is None:
            return error_response(404, "unknown-session", "no such session")
        try:
            body = await request.json()
        except Exception:
            return error_response(400, "malformed", "request body is not valid JSON")
        if (
            not isinstance(body, dict)
            or not isinstance(body.get("query_id"), int)
            or not isinstance(body.get("response_index"), int)
        ):
            return error_response(400, "malformed", "need integer query_id and response_index")
        try:
            payload = store.submit(runtime, body["query_id"], body["response_index"])
        except StaleQuery as exc:
            return error_response(409, "stale-query", str(exc))
        except ContradictionError as exc:
            return error_response(422, exc.code, str(exc))
        except DocumentError as exc:
            return error_response(400, exc.code, str(exc))
        except UcpError as exc:
            return error_response(422, exc.code, str(exc))
        return payload

    @app.get("/sessions/{session_id}/transcript")
    def get_transcript(session_id: str):
        runtime = store.get(session_id)
        if runtime is None:
            return error_response(404, "unknown-session", "no such session")
        return runtime.transcript_payload()

    return app


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ucpnet-service")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8420)
    parser.add_argument("--data-dir", default=None, help="transcript snapshot directory")
    args = parser.parse_args(argv)
    level = os.environ.get("UCP_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))

    import uvicorn

    uvicorn.run(create_app(args.data_dir), host=args.host, port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    main()
