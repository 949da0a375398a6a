"""Resource-oriented HTTP API over the session manager."""

from __future__ import annotations

from fastapi import FastAPI, Header, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from tcmflow.service.manager import (
    AnswerCountMismatch,
    PhaseViolation,
    SessionManager,
    UnknownSession,
)


class CreateSessionRequest(BaseModel):
    complaint: str = Field(min_length=1)
    submitted_at: str | None = None


class PostAnswersRequest(BaseModel):
    answers: list[str]


def create_app(manager: SessionManager, api_token: str | None = None,
               static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="tcmflow", version="0.1.0")
    # the console may be served from any static host
    from fastapi.middleware.cors import CORSMiddleware

    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])

    def check_token(token: str | None) -> None:
        if api_token is not None and token != api_token:
            raise HTTPException(status_code=401, detail="invalid or missing API token")

    @app.exception_handler(UnknownSession)
    async def unknown_session(_, exc: UnknownSession):
        return JSONResponse(status_code=404, content={"error": "unknown_session",
                                                      "detail": str(exc)})

    @app.exception_handler(PhaseViolation)
    async def phase_violation(_, exc: PhaseViolation):
        return JSONResponse(status_code=409, content={"error": "phase_violation",
                                                      "detail": str(exc)})

    @app.exception_handler(AnswerCountMismatch)
    async def answer_mismatch(_, exc: AnswerCountMismatch):
        return JSONResponse(status_code=422, content={"error": "answer_count_mismatch",
                                                      "detail": str(exc)})

    @app.get("/v1/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.post("/v1/sessions", status_code=201)
    def create_session(req: CreateSessionRequest,
                       x_api_token: str | None = Header(default=None)) -> dict:
        check_token(x_api_token)
        if not req.complaint.strip():
            raise HTTPException(status_code=422, detail="complaint must be non-empty")
        return manager.create_session(req.complaint, req.submitted_at)

    @app.post("/v1/sessions/{session_id}/answers")
    def post_answers(session_id: str, req: PostAnswersRequest,
                     x_api_token: str | None = Header(default=None)) -> dict:
        check_token(x_api_token)
        return manager.post_answer(session_id, req.answers)

    @app.get("/v1/sessions/{session_id}")
    def get_session(session_id: str,
                    x_api_token: str | None = Header(default=None)) -> dict:
        check_token(x_api_token)
        return manager.get_state(session_id)

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")

    return app
