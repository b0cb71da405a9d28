"""HTTP front door for annotation campaigns.

JSON API consumed by the browser UI:

    GET  /api/session?annotator=ID        -> session info (idempotent)
    GET  /api/session/{sid}/next          -> pair payload or {"done": true}
    POST /api/session/{sid}/choice        -> record {pair_id, choice}
    GET  /api/image/{ref}                 -> PNG bytes
    GET  /api/progress                    -> campaign progress

Pair payloads and image refs never reveal which SR method produced an
image. A static UI bundle, when present, is served from the root path.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import FileResponse, Response
from pydantic import BaseModel

from .campaign import Campaign, DuplicateChoiceError, OutOfOrderError, Session


class ChoiceBody(BaseModel):
    pair_id: str
    choice: str


def _session_info(session: Session) -> dict:
    return {
        "session_id": session.session_id,
        "annotator": session.annotator,
        "cursor": session.cursor,
        "total": len(session.order),
    }


def create_app(campaign: Campaign, ui_dir: Path | str | None = None) -> FastAPI:
    app = FastAPI(title="sreval annotation service")

    def _session(session_id: str) -> Session:
        try:
            return campaign.session_by_id(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown session") from None

    @app.get("/api/session")
    def start_session(annotator: str = Query(min_length=1)):
        return _session_info(campaign.start_session(annotator))

    @app.get("/api/session/{session_id}/next")
    def next_pair(session_id: str):
        session = _session(session_id)
        payload = campaign.next_pair(session)
        if payload is None:
            return {"done": True, "total": len(session.order)}
        return payload

    @app.post("/api/session/{session_id}/choice")
    def submit_choice(session_id: str, body: ChoiceBody):
        session = _session(session_id)
        if body.choice not in ("left", "right"):
            raise HTTPException(status_code=422, detail="choice must be left or right")
        try:
            cursor = campaign.submit_choice(session, body.pair_id, body.choice)
        except DuplicateChoiceError:
            raise HTTPException(status_code=409, detail="duplicate choice") from None
        except OutOfOrderError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        return {"ok": True, "cursor": cursor}

    @app.get("/api/image/{ref}")
    def serve_image(ref: str):
        try:
            data = campaign.serve_image(ref)
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown image ref") from None
        return Response(content=data, media_type="image/png")

    @app.get("/api/progress")
    def progress():
        return campaign.progress()

    if ui_dir is not None:
        ui_dir = Path(ui_dir)
        index = ui_dir / "index.html"

        @app.get("/")
        def ui_index():
            if not index.exists():
                raise HTTPException(status_code=404, detail="UI bundle not built")
            return FileResponse(index)

        @app.get("/{asset_path:path}")
        def ui_asset(asset_path: str):
            target = (ui_dir / asset_path).resolve()
            if not target.is_relative_to(ui_dir.resolve()) or not target.is_file():
                raise HTTPException(status_code=404, detail="not found")
            return FileResponse(target)

    return app


def run(campaign: Campaign, host: str, port: int, ui_dir: Path | str | None = None) -> None:
    import uvicorn

    uvicorn.run(create_app(campaign, ui_dir), host=host, port=port)
