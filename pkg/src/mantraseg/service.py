"""HTTP service over a loaded checkpoint and scene manifest.

The model snapshot is loaded once and never mutated; request handling is
read-only, so concurrent queries match serial execution.  Point data goes
out as base64-encoded little-endian float32 arrays to keep payloads small.
"""

from __future__ import annotations

import base64
import threading
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .checkpoint import load_checkpoint
from .errors import InvalidLabel
from .labels import normalize_label
from .manifest import load_manifest
from .model import ModelState
from .query import run_query
from .scene import Scene


def _b64_f32(arr: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(arr, dtype="<f4").tobytes()).decode("ascii")


@dataclass
class ServiceContext:
    state: ModelState | None = None
    scenes: dict[str, Scene] = field(default_factory=dict)
    sources: dict[str, str] = field(default_factory=dict)
    model_version: str = "unloaded"
    request_count: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock)

    @classmethod
    def load(cls, ckpt_path, manifest_path) -> "ServiceContext":
        state = load_checkpoint(ckpt_path)
        manifest = load_manifest(manifest_path)
        scenes = {e.scene_id: manifest.load_scene(e) for e in manifest.entries}
        sources = {e.scene_id: e.source_id for e in manifest.entries}
        return cls(
            state=state,
            scenes=scenes,
            sources=sources,
            model_version=f"mantraseg-ckpt-v1-epoch{state.epoch}",
        )

    def count_request(self) -> None:
        with self._lock:
            self.request_count += 1


class QueryRequest(BaseModel):
    scene_id: str
    labels: list[str] = Field(min_length=1)


def create_app(context: ServiceContext, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="mantraseg query service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.get("/health")
    def health():
        context.count_request()
        if context.state is None:
            return JSONResponse(
                status_code=503, content={"status": "loading", "model_version": None}
            )
        return {"status": "ok", "model_version": context.model_version}

    @app.get("/scenes")
    def scenes():
        context.count_request()
        return [
            {
                "scene_id": scene_id,
                "source_id": context.sources.get(scene_id, scene.source_id),
                "point_count": scene.n,
            }
            for scene_id, scene in context.scenes.items()
        ]

    @app.get("/scenes/{scene_id}")
    def scene_data(scene_id: str):
        context.count_request()
        scene = context.scenes.get(scene_id)
        if scene is None:
            raise HTTPException(status_code=404, detail=f"unknown scene {scene_id!r}")
        return {
            "scene_id": scene_id,
            "source_id": context.sources.get(scene_id, scene.source_id),
            "point_count": scene.n,
            "xyz": _b64_f32(scene.xyz),
            "rgb": _b64_f32(scene.rgb),
        }

    @app.post("/query")
    def query(request: QueryRequest):
        context.count_request()
        if context.state is None:
            raise HTTPException(status_code=503, detail="model not loaded")
        scene = context.scenes.get(request.scene_id)
        if scene is None:
            raise HTTPException(status_code=404, detail=f"unknown scene {request.scene_id!r}")
        try:
            labels = [normalize_label(name) for name in request.labels]
        except InvalidLabel as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        result = run_query(context.state, scene, labels)
        return {
            "scene_id": request.scene_id,
            "labels": list(result.labels),
            "assignments": result.assignments.tolist(),
            "colors": {name: list(rgb) for name, rgb in result.colors.items()},
            "timing_ms": result.timing_ms,
        }

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app
