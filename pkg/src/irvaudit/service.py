"""HTTP audit service.

Request bodies are parsed by hand so status codes stay strict: malformed
JSON is 400, schema or domain problems are 422, submitting to a finished
session is 409, unknown ids are 404. Values that must survive JSON
round-trips losslessly (log-domain TSMs) travel as decimal strings with
12 significant digits. Sessions snapshot to disk after every accepted
ballot when a state directory is configured, so a restarted service can
reconstruct any session from its id.
"""

from __future__ import annotations

import json
import os
import secrets
import threading

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .contest import ContestFormatError, contest_from_dict
from .controller import (
    AuditConfig,
    AuditSession,
    AuditSetup,
    SnapshotError,
    TerminalStateError,
)


def _num(x: float) -> str:
    return f"{x:.12g}"


class SessionBox:
    """One live session plus its lock and persistence hook."""

    def __init__(self, sid: str, session: AuditSession, state_dir: str | None) -> None:
        self.sid = sid
        self.session = session
        self.lock = threading.Lock()
        self.state_dir = state_dir

    def persist(self) -> None:
        if self.state_dir is None:
            return
        path = os.path.join(self.state_dir, f"{self.sid}.json")
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(self.session.snapshot(), fh)
        os.replace(tmp, path)

    def view(self) -> dict:
        session = self.session
        setup = session.setup
        labels = setup.candidates
        nodes = []
        for row in session.frontier_view():
            nodes.append(
                {
                    "suffix": row["suffix"],
                    "log_i": _num(row["log_i"]),
                    "score_log": _num(row["score_log"]),
                    "watch_size": row["watch_size"],
                    "progress": row["progress"],
                }
            )
        events = [
            {"draw": i + 1, "ranking": [labels[c] for c in ranking]}
            for i, ranking in enumerate(session.store.history)
        ]
        return {
            "id": self.sid,
            "status": session.status,
            "contest_name": setup.contest_name,
            "candidates": list(labels),
            "reported_winner": labels[setup.reported_winner],
            "total_cards": setup.total_cards,
            "ballots_accepted": session.t,
            "alpha": session.config.alpha,
            "config": session.config.to_dict(),
            "frontier": nodes,
            "frontier_size": len(nodes),
            "events": events,
        }


def create_app(state_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="irvaudit service")
    boxes: dict[str, SessionBox] = {}
    registry_lock = threading.Lock()
    if state_dir is not None:
        os.makedirs(state_dir, exist_ok=True)

    def error(code: int, name: str, detail: str) -> JSONResponse:
        return JSONResponse({"error": name, "detail": detail}, status_code=code)

    async def read_json(request: Request):
        raw = await request.body()
        if not raw:
            return None, error(400, "bad_json", "empty request body")
        try:
            return json.loads(raw), None
        except json.JSONDecodeError as exc:
            return None, error(400, "bad_json", f"invalid JSON: {exc.msg}")

    def get_box(sid: str) -> SessionBox | None:
        with registry_lock:
            box = boxes.get(sid)
            if box is not None:
                return box
            if state_dir is None:
                return None
            path = os.path.join(state_dir, f"{sid}.json")
            if not os.path.exists(path):
                return None
            try:
                with open(path) as fh:
                    session = AuditSession.restore(json.load(fh))
            except (OSError, SnapshotError, json.JSONDecodeError):
                return None
            box = SessionBox(sid, session, state_dir)
            boxes[sid] = box
            return box

    @app.post("/sessions")
    async def create_session(request: Request):
        data, err = await read_json(request)
        if err is not None:
            return err
        if not isinstance(data, dict):
            return error(422, "invalid_body", "expected a JSON object")
        try:
            contest = contest_from_dict(data.get("contest"))
        except ContestFormatError as exc:
            return error(422, "invalid_contest", str(exc))
        winner = None
        if data.get("reported_winner") is not None:
            try:
                winner = contest.index_of(data["reported_winner"])
            except KeyError as exc:
                return error(422, "invalid_winner", str(exc.args[0]))
        try:
            config = AuditConfig.from_dict(data.get("config") or {})
            setup = AuditSetup.from_contest(contest, winner)
            session = AuditSession(setup, config)
        except (TypeError, ValueError) as exc:
            return error(422, "invalid_config", str(exc))
        sid = secrets.token_urlsafe(12)
        box = SessionBox(sid, session, state_dir)
        with registry_lock:
            boxes[sid] = box
        box.persist()
        return JSONResponse(box.view(), status_code=201)

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        box = get_box(sid)
        if box is None:
            return error(404, "unknown_session", f"no session {sid}")
        with box.lock:
            return box.view()

    @app.post("/sessions/{sid}/ballots")
    async def submit_ballot(sid: str, request: Request):
        box = get_box(sid)
        if box is None:
            return error(404, "unknown_session", f"no session {sid}")
        data, err = await read_json(request)
        if err is not None:
            return err
        if not isinstance(data, dict) or not isinstance(data.get("ranking"), list):
            return error(422, "invalid_ballot", "expected {'ranking': [labels...]}")
        session = box.session
        labels = session.setup.candidates
        index = {label: i for i, label in enumerate(labels)}
        ranking = []
        for label in data["ranking"]:
            if label not in index:
                return error(422, "invalid_ballot", f"unknown candidate {label!r}")
            ranking.append(index[label])
        if len(set(ranking)) != len(ranking):
            return error(422, "invalid_ballot", "ranking repeats a candidate")
        with box.lock:
            try:
                report = session.process_ballot(tuple(ranking))
            except TerminalStateError as exc:
                return error(409, "terminal", str(exc))
            except ValueError as exc:
                return error(422, "invalid_ballot", str(exc))
            box.persist()
            payload = report.to_dict(labels)
            payload["min_log_i"] = _num(report.min_log_i)
            payload["max_log_i"] = _num(report.max_log_i)
            payload["min_progress"] = report.min_progress(session.config.alpha)
            return {"report": payload, "session": box.view()}

    @app.post("/sessions/{sid}/escalate")
    def escalate(sid: str):
        box = get_box(sid)
        if box is None:
            return error(404, "unknown_session", f"no session {sid}")
        with box.lock:
            try:
                box.session.escalate()
            except TerminalStateError as exc:
                return error(409, "terminal", str(exc))
            box.persist()
            return box.view()

    return app
