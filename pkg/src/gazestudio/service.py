"""HTTP service backing the reading UI: session recording, processing, artifacts.

Sessions follow the read-then-decide cycle: samples are appended while the
reader looks at the image, the grade decision closes the session and persists
the track pair to disk. Attention maps are rendered on demand, either from
the raw track or after fixation filtering with the currently calibrated
threshold; the GAMAP1 body carries a JSON sidecar in the X-Attention-Meta
header.
"""
from __future__ import annotations

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

from fastapi import FastAPI, HTTPException, Query, Response
from fastapi.responses import FileResponse
from pydantic import BaseModel, Field

from .attention_maps import KernelConfig, gamap_bytes, render_gaze_map
from .datasets import load_manifest
from .errors import GazeStudioError, NoValidWindows
from .segmentation import (
    DEFAULT_STRIDE,
    DEFAULT_WINDOW,
    PowerLawFitConfig,
    attention_levels,
    calibrate_threshold,
    filter_fixations,
)
from .tracks import GazeSample, GazeTrack, load_track, save_track

CONFIG_ENV_VAR = "GAZE_STUDIO_CONFIG"


@dataclass
class ServiceConfig:
    data_dir: Path
    sessions_dir: Path
    healthy_dir: Path | None = None
    window: int = DEFAULT_WINDOW
    stride: int = DEFAULT_STRIDE
    kernel: KernelConfig = field(default_factory=KernelConfig)
    fit: PowerLawFitConfig = field(default_factory=PowerLawFitConfig)
    host: str = "127.0.0.1"
    port: int = 8000


def load_service_config(path: Path | str) -> ServiceConfig:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    base = Path(path).parent
    def _resolve(p):
        return (base / p).resolve() if not Path(p).is_absolute() else Path(p)
    kernel = KernelConfig(**payload.get("kernel", {}))
    fit = PowerLawFitConfig(**payload.get("powerlaw", {}))
    return ServiceConfig(
        data_dir=_resolve(payload["data_dir"]),
        sessions_dir=_resolve(payload["sessions_dir"]),
        healthy_dir=_resolve(payload["healthy_dir"]) if payload.get("healthy_dir") else None,
        window=int(payload.get("window", DEFAULT_WINDOW)),
        stride=int(payload.get("stride", DEFAULT_STRIDE)),
        kernel=kernel,
        fit=fit,
        host=payload.get("bind", {}).get("host", "127.0.0.1"),
        port=int(payload.get("bind", {}).get("port", 8000)),
    )


def resolve_config_path(cli_path: str | None) -> Path:
    env_path = os.environ.get(CONFIG_ENV_VAR)
    if env_path:
        return Path(env_path)
    if cli_path:
        return Path(cli_path)
    raise GazeStudioError(f"no service config: pass --config or set {CONFIG_ENV_VAR}")


class SessionCreate(BaseModel):
    reader_id: str
    image_id: str


class SamplePoint(BaseModel):
    t_ms: float = Field(ge=0)
    x: float
    y: float


class SampleBatch(BaseModel):
    seq: int = Field(ge=0)
    samples: list[SamplePoint]


class DecisionBody(BaseModel):
    grade: int = Field(ge=0, le=4)


def _keep_ranges(keep) -> list:
    """Boolean mask to [start, end) index runs; compact sidecar form."""
    ranges = []
    start = None
    for i, flag in enumerate(keep):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            ranges.append([start, i])
            start = None
    if start is not None:
        ranges.append([start, len(keep)])
    return ranges


@dataclass
class Session:
    session_id: str
    reader_id: str
    image_id: str
    created_at: float
    image_width: int
    image_height: int
    samples: list = field(default_factory=list)
    decision: int | None = None
    state: str = "open"
    last_seq: int = -1


def create_app(config: ServiceConfig) -> FastAPI:
    app = FastAPI(title="gazestudio")
    config.sessions_dir.mkdir(parents=True, exist_ok=True)
    manifest = load_manifest(config.data_dir / "manifest.json", check_files=False)
    sessions: dict[str, Session] = {}
    lock = threading.Lock()
    state = {"gamma_th": None}

    def _healthy_tracks():
        dirs = [d for d in (config.healthy_dir, config.sessions_dir) if d and d.is_dir()]
        tracks = []
        for d in dirs:
            for path in sorted(d.glob("*.gaze.jsonl")):
                try:
                    track = load_track(path)
                except GazeStudioError:
                    continue
                if track.decision == 0:
                    tracks.append(track)
        return tracks

    def _calibrate() -> float | None:
        try:
            gamma_th = calibrate_threshold(
                _healthy_tracks(), config.fit, window=config.window, stride=config.stride
            )
        except NoValidWindows:
            return None
        state["gamma_th"] = gamma_th
        return gamma_th

    _calibrate()

    def _get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session

    def _image_path(image_id: str) -> Path:
        try:
            entry = manifest.entry(image_id)
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown image")
        return manifest.resolve(entry.image_path)

    @app.post("/sessions")
    def create_session(body: SessionCreate):
        path = _image_path(body.image_id)
        from PIL import Image

        with Image.open(path) as img:
            width, height = img.size
        session = Session(
            session_id=uuid.uuid4().hex,
            reader_id=body.reader_id,
            image_id=body.image_id,
            created_at=time.time(),
            image_width=width,
            image_height=height,
        )
        with lock:
            sessions[session.session_id] = session
        return {
            "session_id": session.session_id,
            "image_url": f"/images/{body.image_id}",
            "image_width": width,
            "image_height": height,
        }

    @app.post("/sessions/{session_id}/samples")
    def append_samples(session_id: str, body: Union[SampleBatch, list[SamplePoint]]):
        session = _get_session(session_id)
        with lock:
            if session.state != "open":
                raise HTTPException(status_code=409, detail="session is closed")
            if isinstance(body, SampleBatch):
                if body.seq <= session.last_seq:
                    return {"appended": 0, "total": len(session.samples), "duplicate": True}
                points = body.samples
                seq = body.seq
            else:
                points = body
                seq = session.last_seq + 1
            last_t = session.samples[-1].t if session.samples else -1.0
            for p in points:
                if p.t_ms <= last_t:
                    raise HTTPException(
                        status_code=422, detail=f"t_ms must increase (got {p.t_ms} after {last_t})"
                    )
                last_t = p.t_ms
            for p in points:
                session.samples.append(
                    GazeSample(
                        t=p.t_ms,
                        x=min(max(p.x, 0.0), float(session.image_width)),
                        y=min(max(p.y, 0.0), float(session.image_height)),
                    )
                )
            session.last_seq = seq
            return {"appended": len(points), "total": len(session.samples), "duplicate": False}

    @app.post("/sessions/{session_id}/decision")
    def decide(session_id: str, body: DecisionBody):
        session = _get_session(session_id)
        with lock:
            if session.state != "open" or session.decision is not None:
                raise HTTPException(status_code=409, detail="session already decided")
            if not session.samples:
                raise HTTPException(status_code=409, detail="no samples recorded")
            session.decision = body.grade
            session.state = "closed"
            track = _session_track(session)
            save_track(track, config.sessions_dir / f"{session.session_id}.gaze.jsonl")
        return {"session_id": session.session_id, "grade": body.grade, "samples": len(session.samples)}

    def _session_track(session: Session) -> GazeTrack:
        return GazeTrack(
            samples=list(session.samples),
            image_id=session.image_id,
            reader_id=session.reader_id,
            decision=session.decision if session.decision is not None else 0,
            image_width=session.image_width,
            image_height=session.image_height,
        )

    @app.get("/sessions/{session_id}/attention")
    def attention(session_id: str, processed: bool = Query(default=False)):
        session = _get_session(session_id)
        if session.state != "closed":
            raise HTTPException(status_code=409, detail="session still open")
        track = _session_track(session)
        if processed:
            gamma_th = state["gamma_th"]
            if gamma_th is None:
                raise HTTPException(status_code=409, detail="service not calibrated")
            try:
                series = attention_levels(
                    track, config.fit, window=config.window, stride=config.stride
                )
            except GazeStudioError as exc:
                raise HTTPException(status_code=409, detail=str(exc))
            mask, kept = filter_fixations(track, series, gamma_th)
            points = kept.xy()
            meta = {
                "gamma_th": gamma_th,
                "kept_fraction": mask.kept_fraction(),
                "kept_ranges": _keep_ranges(mask.keep),
            }
        else:
            points = track.xy()
            meta = {"gamma_th": None, "kept_fraction": 1.0}
        amap = render_gaze_map(points, session.image_width, session.image_height, config.kernel)
        return Response(
            content=gamap_bytes(amap),
            media_type="application/octet-stream",
            headers={"X-Attention-Meta": json.dumps(meta)},
        )

    @app.get("/images/{image_id}")
    def image(image_id: str):
        path = _image_path(image_id)
        if not path.exists():
            raise HTTPException(status_code=404, detail="image file missing")
        return FileResponse(path, media_type="image/png")

    @app.get("/manifest")
    def manifest_json():
        return json.loads((config.data_dir / "manifest.json").read_text(encoding="utf-8"))

    @app.post("/calibrate")
    def calibrate():
        gamma_th = _calibrate()
        if gamma_th is None:
            raise HTTPException(status_code=409, detail="no healthy tracks available")
        return {"gamma_th": gamma_th}

    app.state.config = config
    app.state.sessions = sessions
    app.state.calibration = state
    return app
