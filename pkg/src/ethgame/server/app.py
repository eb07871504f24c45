"""HTTP facade over ExperimentService.

Thin by design: handlers parse, authenticate, delegate, and serialize.
Domain rejections (GameError) become 409 with the error code in the body,
so a client can distinguish "you can't do that now" from a malformed
request (422, from the model layer).
"""

from __future__ import annotations

from typing import Literal, Optional

from fastapi import Depends, FastAPI, Header, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from ..errors import GameError
from .export import render_tables
from .service import ExperimentService, UnknownSubject


class RegisterBody(BaseModel):
    name: str = Field(min_length=1, max_length=200)


class LocBody(BaseModel):
    answers: list[bool]


class StrategyBody(BaseModel):
    period: int
    strategy: Literal["Long", "Holding", "Short"]


class DecisionBody(BaseModel):
    action: Literal["Buy", "Hold", "Sell"]
    period: Optional[int] = None
    day: Optional[int] = None


class SelectionBody(BaseModel):
    mode: Literal["Automated", "Discretion"]


class SurveyBody(BaseModel):
    answers: list[int]


def _bearer(header: Optional[str]) -> str:
    if not header or not header.startswith("Bearer "):
        raise HTTPException(status_code=401, detail="missing bearer token")
    return header[len("Bearer ") :]


def create_app(service: ExperimentService, admin_token: str) -> FastAPI:
    app = FastAPI(title="trading game server", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(GameError)
    def game_error(request: Request, exc: GameError):
        return JSONResponse(
            status_code=409,
            content={"error": {"code": exc.code, "message": str(exc)}},
        )

    @app.exception_handler(UnknownSubject)
    def unknown_subject(request: Request, exc: UnknownSubject):
        return JSONResponse(
            status_code=404, content={"error": {"code": "UNKNOWN_SUBJECT"}}
        )

    def require_admin(authorization: Optional[str] = Header(default=None)):
        if _bearer(authorization) != admin_token:
            raise HTTPException(status_code=401, detail="bad admin token")

    def subject_auth(
        subject_id: str, authorization: Optional[str] = Header(default=None)
    ) -> str:
        token = _bearer(authorization)
        if token != service.token_for(subject_id):
            raise HTTPException(status_code=401, detail="bad subject token")
        return subject_id

    @app.post("/experiments", dependencies=[Depends(require_admin)])
    def create_experiment():
        return service.create_experiment()

    @app.post("/subjects", status_code=201)
    def register(body: RegisterBody):
        return service.register_subject(body.name)

    @app.get("/subjects/{subject_id}/state")
    def state(subject_id: str = Depends(subject_auth)):
        return service.state(subject_id)

    @app.get("/subjects/{subject_id}/loc")
    def loc_items(subject_id: str = Depends(subject_auth)):
        return {"items": service.loc_items_view(subject_id)}

    @app.post("/subjects/{subject_id}/loc")
    def loc_submit(body: LocBody, subject_id: str = Depends(subject_auth)):
        return service.submit_loc(subject_id, body.answers)

    @app.get("/subjects/{subject_id}/chart")
    def chart(subject_id: str = Depends(subject_auth)):
        return service.chart(subject_id)

    @app.post("/subjects/{subject_id}/strategy")
    def strategy(body: StrategyBody, subject_id: str = Depends(subject_auth)):
        return service.choose_strategy(subject_id, body.period, body.strategy)

    @app.post("/subjects/{subject_id}/decision")
    def decision(body: DecisionBody, subject_id: str = Depends(subject_auth)):
        return service.submit_decision(
            subject_id, body.action, period=body.period, day=body.day
        )

    @app.post("/subjects/{subject_id}/selection")
    def selection(body: SelectionBody, subject_id: str = Depends(subject_auth)):
        return service.select_mode(subject_id, body.mode)

    @app.get("/subjects/{subject_id}/results")
    def results(subject_id: str = Depends(subject_auth)):
        return {"sessions": service.results(subject_id)}

    @app.post("/subjects/{subject_id}/survey")
    def survey(body: SurveyBody, subject_id: str = Depends(subject_auth)):
        return service.submit_survey(subject_id, body.answers)

    @app.get("/admin/export", dependencies=[Depends(require_admin)])
    def export():
        return {"tables": render_tables(service.snapshot())}

    @app.get("/admin/progress", dependencies=[Depends(require_admin)])
    def progress():
        return {"subjects": service.progress()}

    return app
