"""HTTP front for the session manager.

JSON request/response everywhere; the event stream is additionally exposed
as a server-sent-event push channel mirroring the polled endpoint. Request
and response shapes are published by the framework's own OpenAPI docs at
/docs and /openapi.json.
"""

from __future__ import annotations

import time

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel

from ..canonical import canonical_dumps
from .service import GatewayError, SessionManager


class StartSession(BaseModel):
    scenario: str
    instruction: str | None = None
    planner: str = "scripted"
    executor: str = "oracle"
    step_delay_s: float = 0.0


class DisturbanceBody(BaseModel):
    kind: str
    payload: dict
    trigger: str | dict = "immediate"


class CritiqueBody(BaseModel):
    text: str


class AbortBody(BaseModel):
    reason: str | None = None


def create_app(manager: SessionManager | None = None) -> FastAPI:
    manager = manager if manager is not None else SessionManager()
    app = FastAPI(title="kitchenloop gateway")
    app.state.manager = manager

    @app.exception_handler(GatewayError)
    async def _gateway_error(_request: Request, exc: GatewayError):
        return JSONResponse({"error": str(exc)}, status_code=exc.code)

    @app.get("/scenarios")
    def scenarios():
        rows = [
            {
                "id": sid,
                "instruction": entry.scenario.instruction,
                "kitchen": entry.scenario.kitchen,
                "step_budget": entry.step_budget,
                "retry_budget": entry.retry_budget,
            }
            for sid, entry in sorted(manager.catalog.items())
        ]
        return {"scenarios": rows}

    @app.post("/sessions", status_code=201)
    def start_session(body: StartSession):
        session = manager.start(
            body.scenario,
            instruction=body.instruction,
            planner=body.planner,
            executor=body.executor,
            step_delay_s=body.step_delay_s,
        )
        return session.snapshot()

    @app.get("/sessions")
    def list_sessions():
        return {"sessions": [s.snapshot() for s in manager.sessions()]}

    @app.get("/sessions/{session_id}")
    def session_snapshot(session_id: str):
        return manager.session(session_id).snapshot()

    @app.get("/sessions/{session_id}/events")
    def session_events(session_id: str, since: int = -1):
        return manager.events(session_id, since)

    @app.get("/sessions/{session_id}/stream")
    def session_stream(session_id: str, since: int = -1):
        session = manager.session(session_id)

        def gen():
            cursor = since
            while True:
                for ev in session.log.events(cursor):
                    cursor = ev.index
                    yield f"id: {ev.index}\ndata: {canonical_dumps(ev.to_doc())}\n\n"
                if not session.live and not session.log.events(cursor):
                    yield f"event: end\ndata: {canonical_dumps({'status': session.status})}\n\n"
                    return
                time.sleep(0.05)

        return StreamingResponse(gen(), media_type="text/event-stream",
                                 headers={"Cache-Control": "no-store"})

    @app.post("/sessions/{session_id}/disturbance")
    def post_disturbance(session_id: str, body: DisturbanceBody):
        return manager.post_disturbance(session_id, body.model_dump())

    @app.post("/sessions/{session_id}/critique")
    def post_critique(session_id: str, body: CritiqueBody):
        return manager.post_critique(session_id, body.text)

    @app.post("/sessions/{session_id}/abort")
    def post_abort(session_id: str, body: AbortBody | None = None):
        reason = body.reason if body is not None else None
        return manager.abort(session_id, reason)

    return app
