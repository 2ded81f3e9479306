"""HTTP face of the mission service, consumed by the operator console."""

from __future__ import annotations

import base64
import binascii

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, JSONResponse, PlainTextResponse
from pydantic import BaseModel

from ..candidates import ConfigurationError
from .missions import DecisionAction, InputError, MissionService, StateError


class CreateMissionBody(BaseModel):
    instruction: str
    observation: str | None = None  # base64 PNG; omitted -> rendered from the scene


class DecisionBody(BaseModel):
    action: str
    candidate_id: int | None = None


def create_app(service: MissionService) -> FastAPI:
    app = FastAPI(title="mission service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(InputError)
    async def _input_error(request: Request, err: InputError):
        return JSONResponse(status_code=400, content={"detail": str(err)})

    @app.exception_handler(ConfigurationError)
    async def _config_error(request: Request, err: ConfigurationError):
        return JSONResponse(status_code=400, content={"detail": str(err)})

    @app.exception_handler(StateError)
    async def _state_error(request: Request, err: StateError):
        return JSONResponse(status_code=409, content={"detail": str(err)})

    @app.exception_handler(KeyError)
    async def _missing(request: Request, err: KeyError):
        return JSONResponse(status_code=404, content={"detail": str(err.args[0]) if err.args else "not found"})

    @app.post("/missions")
    def create_mission(body: CreateMissionBody):
        observation = None
        if body.observation is not None:
            try:
                observation = base64.b64decode(body.observation, validate=True)
            except (binascii.Error, ValueError) as err:
                raise InputError(f"observation is not valid base64: {err}") from err
        mission = service.create(body.instruction, observation)
        return service.view(mission.id)

    @app.get("/missions")
    def list_missions():
        return [service.summary(mission_id) for mission_id in service.list_ids()]

    @app.get("/missions/{mission_id}")
    def get_mission(mission_id: str):
        return service.view(mission_id)

    @app.post("/missions/{mission_id}/advance")
    def advance(mission_id: str):
        service.advance(mission_id)
        return service.view(mission_id)

    @app.post("/missions/{mission_id}/decision")
    def decide(mission_id: str, body: DecisionBody):
        try:
            action = DecisionAction(body.action)
        except ValueError as err:
            raise InputError(f"unknown action {body.action!r}") from err
        service.decide(mission_id, action, body.candidate_id)
        return service.view(mission_id)

    @app.get("/missions/{mission_id}/candidates/{candidate_id}/frames/{frame}")
    def candidate_frame(mission_id: str, candidate_id: int, frame: int):
        path = service.candidate_frame_path(mission_id, candidate_id, frame)
        return FileResponse(path, media_type="image/png")

    @app.get("/missions/{mission_id}/trajectory")
    def trajectory(mission_id: str):
        return PlainTextResponse(service.trajectory_text(mission_id))

    return app


__all__ = ["create_app"]
