"""Local HTTP/JSON session service for interactive proving.

Each session loads one source file, builds a proof tree per contracted
function, and exposes goal inspection, rule application, the automated
strategy, undo, and proof-file export. State lives in memory; proofs are
persisted through the proof-file endpoint only.
"""

from __future__ import annotations

import logging
import os
import sys
import threading
import uuid
from dataclasses import dataclass, field
from typing import Optional

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import calculus as ca
from . import logic as lg
from .frontend import FrontendError, normalize, parse_unit
from .prover import (ProofState, ProverError, Settings, all_rules, auto,
                     fn_obligation, replay, save_proof)

SCHEMA_VERSION = 1
UNDO_DEPTH = 100

log = logging.getLogger("rustproof.service")


class SessionError(Exception):
    def __init__(self, status: int, error: str, reason: str) -> None:
        super().__init__(reason)
        self.status = status
        self.error = error
        self.reason = reason


class CreateSessionBody(BaseModel):
    source: str
    overflow: str = "check"


class ApplyBody(BaseModel):
    rule: str
    path: list[int]
    inputs: dict = {}
    revision: Optional[int] = None


class AutoBody(BaseModel):
    budget: Optional[int] = None
    revision: Optional[int] = None


class UndoBody(BaseModel):
    revision: Optional[int] = None


@dataclass
class Session:
    id: str
    source: str
    mode: str
    unit: object
    proofs: dict[str, ProofState]
    revision: int = 1
    undo_stack: list[dict[str, bytes]] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def snapshot(self) -> dict[str, bytes]:
        return {fn: save_proof(ps, self.source) for fn, ps in self.proofs.items()}

    def restore(self, snap: dict[str, bytes]) -> None:
        for fn, blob in snap.items():
            self.proofs[fn] = replay(
                self.source, blob,
                lambda settings, fn=fn: fn_obligation(self.unit, fn,
                                                      settings.get("mode", self.mode)))


def _new_session(body: CreateSessionBody) -> Session:
    if body.overflow not in ("check", "ignore"):
        raise SessionError(422, "BadRequest",
                           "overflow must be 'check' or 'ignore'")
    try:
        unit = normalize(parse_unit(body.source))
    except FrontendError as exc:
        raise SessionError(422, "ParseError", str(exc))
    if unit.errors:
        raise SessionError(422, "ParseError",
                           "; ".join(str(d) for d in unit.errors))
    proofs: dict[str, ProofState] = {}
    for fn in unit.functions:
        ob = fn_obligation(unit, fn.name, body.overflow)
        proofs[fn.name] = ProofState(ob.sequent, ob.ctx,
                                     Settings(mode=body.overflow))
    return Session(id=uuid.uuid4().hex[:12], source=body.source,
                   mode=body.overflow, unit=unit, proofs=proofs)


def _formula_tree(f: lg.Node) -> dict:
    return {"kind": type(f).__name__, "text": lg.pretty(f),
            "children": [_formula_tree(c) for c in lg.children(f)]}


def _goal_json(sid: str, fn: str, ps: ProofState, nid: int) -> dict:
    seq = ps.nodes[nid].sequent
    return {
        "id": f"{sid}:{fn}:{nid}",
        "function": fn,
        "pretty": lg.pretty_sequent(seq),
        "reason": ps.nodes[nid].reason,
        "ante": [{"path": [0, i], "text": lg.pretty(f), "tree": _formula_tree(f)}
                 for i, f in enumerate(seq.ante)],
        "succ": [{"path": [1, i], "text": lg.pretty(f), "tree": _formula_tree(f)}
                 for i, f in enumerate(seq.succ)],
    }


def _tree_json(sid: str, fn: str, ps: ProofState, nid: int) -> dict:
    n = ps.nodes[nid]
    return {
        "id": f"{sid}:{fn}:{nid}",
        "rule": n.rule,
        "branch": n.branch_label,
        "pretty": lg.pretty_sequent(n.sequent),
        "children": [_tree_json(sid, fn, ps, c) for c in n.children],
    }


def _status(ps: ProofState) -> str:
    return "Closed" if ps.closed else "Open"


class _Registry:
    def __init__(self) -> None:
        self.sessions: dict[str, Session] = {}

    def get(self, sid: str) -> Session:
        s = self.sessions.get(sid)
        if s is None:
            raise SessionError(404, "NotFound", f"unknown session {sid}")
        return s

    def goal(self, gid: str) -> tuple[Session, str, int]:
        parts = gid.split(":")
        if len(parts) != 3 or not parts[2].isdigit():
            raise SessionError(404, "NotFound", f"malformed goal id {gid}")
        s = self.get(parts[0])
        fn, nid = parts[1], int(parts[2])
        if fn not in s.proofs or nid not in s.proofs[fn].nodes:
            raise SessionError(404, "NotFound", f"unknown goal {gid}")
        return s, fn, nid


def create_app() -> FastAPI:
    app = FastAPI(title="rustproof session service")
    reg = _Registry()
    app.state.registry = reg

    @app.exception_handler(SessionError)
    async def _session_error(_, exc: SessionError):
        log.warning("request failed: %s %s", exc.error, exc.reason)
        return JSONResponse(status_code=exc.status,
                            content={"error": exc.error, "reason": exc.reason})

    @app.get("/schema")
    def schema():
        return {
            "schema_version": SCHEMA_VERSION,
            "revision": 0,
            "endpoints": {
                "POST /sessions": "{source, overflow?} -> {session_id, functions, revision}",
                "GET /sessions/{id}/goals": "open goals with pretty sequents and trees",
                "GET /sessions/{id}/tree": "full proof trees per function",
                "GET /goals/{gid}/rules": "applicable rules at ?side=&index=",
                "POST /goals/{gid}/apply": "{rule, path, inputs?, revision?} -> new goal ids",
                "POST /sessions/{id}/auto": "{budget?, revision?} -> per-function status",
                "POST /sessions/{id}/undo": "revert the last mutating step",
                "GET /sessions/{id}/proof": "proof-file JSON per function",
            },
        }

    @app.post("/sessions")
    def create_session(body: CreateSessionBody):
        s = _new_session(body)
        reg.sessions[s.id] = s
        log.info("session %s created (%d functions)", s.id, len(s.proofs))
        return {"session_id": s.id,
                "functions": list(s.proofs),
                "revision": s.revision}

    @app.get("/sessions/{sid}/goals")
    def goals(sid: str):
        s = reg.get(sid)
        out = []
        for fn, ps in s.proofs.items():
            out.extend(_goal_json(sid, fn, ps, nid) for nid in ps.open_goals())
        return {"revision": s.revision,
                "status": {fn: _status(ps) for fn, ps in s.proofs.items()},
                "goals": out}

    @app.get("/sessions/{sid}/tree")
    def tree(sid: str):
        s = reg.get(sid)
        return {"revision": s.revision,
                "trees": {fn: _tree_json(sid, fn, ps, 0)
                          for fn, ps in s.proofs.items()}}

    @app.get("/goals/{gid}/rules")
    def rules(gid: str, side: int = 1, index: int = 0):
        s, fn, nid = reg.goal(gid)
        ps = s.proofs[fn]
        if ps.nodes[nid].rule is not None:
            raise SessionError(422, "NotApplicable", "goal is not an open leaf")
        schemas = all_rules(ps.nodes[nid].sequent, (side, index), ps.ctx)
        return {"revision": s.revision,
                "rules": [{"name": r.name, "needs": list(r.needs),
                           "description": r.description} for r in schemas]}

    @app.post("/goals/{gid}/apply")
    def apply(gid: str, body: ApplyBody):
        s, fn, nid = reg.goal(gid)
        with s.lock:
            if body.revision is not None and body.revision != s.revision:
                raise SessionError(409, "StaleRevision",
                                   f"expected revision {s.revision}")
            if len(body.path) != 2:
                raise SessionError(422, "BadRequest", "path must be [side, index]")
            snap = s.snapshot()
            ps = s.proofs[fn]
            try:
                new_ids = ps.apply(nid, body.rule, tuple(body.path), body.inputs)
            except ca.MissingSpec as exc:
                raise SessionError(422, "MissingSpec", str(exc))
            except (ca.NotApplicable, ca.CalculusError, ProverError) as exc:
                raise SessionError(422, "NotApplicable", str(exc))
            s.undo_stack.append(snap)
            del s.undo_stack[:-UNDO_DEPTH]
            s.revision += 1
            return {"revision": s.revision,
                    "goals": [f"{s.id}:{fn}:{g}" for g in new_ids],
                    "status": {fn: _status(ps)}}

    @app.post("/sessions/{sid}/auto")
    def run_auto(sid: str, body: AutoBody):
        s = reg.get(sid)
        with s.lock:
            if body.revision is not None and body.revision != s.revision:
                raise SessionError(409, "StaleRevision",
                                   f"expected revision {s.revision}")
            snap = s.snapshot()
            results = {}
            for fn, ps in s.proofs.items():
                r = auto(ps, body.budget)
                results[fn] = {"status": _status(ps), "steps": r.steps,
                               "open": [f"{s.id}:{fn}:{g}" for g in ps.open_goals()]}
            s.undo_stack.append(snap)
            del s.undo_stack[:-UNDO_DEPTH]
            s.revision += 1
            return {"revision": s.revision, "results": results}

    @app.post("/sessions/{sid}/undo")
    def undo(sid: str, body: UndoBody = UndoBody()):
        s = reg.get(sid)
        with s.lock:
            if body.revision is not None and body.revision != s.revision:
                raise SessionError(409, "StaleRevision",
                                   f"expected revision {s.revision}")
            if not s.undo_stack:
                raise SessionError(422, "NotApplicable", "nothing to undo")
            s.restore(s.undo_stack.pop())
            s.revision += 1
            return {"revision": s.revision,
                    "status": {fn: _status(ps) for fn, ps in s.proofs.items()}}

    @app.get("/sessions/{sid}/proof")
    def proof(sid: str):
        import json as _json
        s = reg.get(sid)
        return {"revision": s.revision,
                "proofs": {fn: _json.loads(save_proof(ps, s.source))
                           for fn, ps in s.proofs.items()}}

    return app


def serve(port: Optional[int] = None) -> None:
    """Run the service on localhost until interrupted."""
    import uvicorn

    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    port = port if port is not None else int(os.environ.get("RUSTPROOF_PORT", "8715"))
    uvicorn.run(create_app(), host="127.0.0.1", port=port, log_config=None)
