"""Session-oriented HTTP API for interactive segmentation.

A session holds one uploaded image, the current seed mask, and the state of
at most one run at a time.  Runs execute on a background thread; clients
poll GET /state, which always returns an internally consistent snapshot
(contour and component count computed from the same field).  Sessions are
in-memory with TTL eviction; there is no persistence.
"""

from __future__ import annotations

import io
import json
import threading
import time
import uuid
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field, ValidationError

from . import engine
from .edgemap import EdgeStopForm, EdgeStopParams, MollifierParams, build_edge_map
from .engine import SegmentationParams, Snapshot, initial_circle
from .grid import GridField, GridSpec
from .ingest import (
    Image,
    IngestError,
    MaskConflictError,
    SeedMask,
    image_to_field,
    labels_from_rgb,
    rasterize_strokes,
)
from .solver import SolverParams

MAX_UPLOAD = 16 * 1024 * 1024
SESSION_TTL = 3600.0
SNAPSHOT_RING = 32


class RunParams(BaseModel):
    """Wire form of SegmentationParams, all fields optional but validated."""

    epsilon: float = Field(default=1e-4, gt=0)
    lam: float = Field(default=100.0, gt=0, alias="lambda")
    gForm: str = "inverse_sqrt"
    sigma: float | None = Field(default=None, gt=0)
    tau: float | None = Field(default=None, gt=0)
    omega: float = Field(default=1.2, gt=0, lt=2)
    tol: float = Field(default=1e-9, gt=0)
    maxSweeps: int = Field(default=2000, ge=1)
    finalTime: float | None = Field(default=None, gt=0)
    stepCount: int | None = Field(default=None, ge=1)
    steadyTol: float = Field(default=1e-6, gt=0)
    delta: float | None = Field(default=None, gt=0)
    bigM: float = Field(default=1e6, gt=0)
    initCircle: tuple[float, float, float] | None = None

    model_config = {"populate_by_name": True}

    def to_params(self) -> SegmentationParams:
        return SegmentationParams(
            epsilon=self.epsilon,
            lam=self.lam,
            form=EdgeStopForm(self.gForm),
            sigma=self.sigma,
            tau=self.tau,
            solver=SolverParams(self.omega, self.tol, self.maxSweeps),
            final_time=self.finalTime if (self.finalTime or self.stepCount) else 1.0,
            step_count=self.stepCount,
            steady_tol=self.steadyTol,
            delta=self.delta,
            big_m=self.bigM,
        )


@dataclass
class Session:
    id: str
    image: Image
    spec: GridSpec
    i0: GridField
    g0_stats: dict
    mask: SeedMask
    created: float = field(default_factory=time.monotonic)
    touched: float = field(default_factory=time.monotonic)
    status: str = "idle"  # idle | running | done | failed
    run_id: str | None = None
    step: int = 0
    error: str | None = None
    latest: Snapshot | None = None
    history: list = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse({"error": message}, status_code=status)


def create_app() -> FastAPI:
    app = FastAPI(title="seedseg session service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    sessions: dict[str, Session] = {}
    sessions_lock = threading.Lock()

    def evict():
        now = time.monotonic()
        with sessions_lock:
            for sid in [s for s, v in sessions.items()
                        if now - v.touched > SESSION_TTL]:
                del sessions[sid]

    def get_session(sid: str) -> Session | None:
        evict()
        with sessions_lock:
            sess = sessions.get(sid)
        if sess is not None:
            sess.touched = time.monotonic()
        return sess

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        body = await request.body()
        if len(body) > MAX_UPLOAD:
            return _error(413, f"upload exceeds {MAX_UPLOAD} bytes")
        if not body:
            return _error(400, "empty body")
        import tempfile

        suffix = ".pgm" if body[:2] == b"P5" else ".png"
        try:
            with tempfile.NamedTemporaryFile(suffix=suffix) as tmp:
                tmp.write(body)
                tmp.flush()
                from .ingest import load_image

                img = load_image(tmp.name)
        except IngestError as exc:
            return _error(400, str(exc))
        spec = GridSpec(img.width / img.height, 1.0, img.width, img.height)
        i0 = image_to_field(img, spec, "bilinear")
        em = build_edge_map(i0, MollifierParams(spec.h1), EdgeStopParams())
        g0 = em.g0.values
        sess = Session(
            id=uuid.uuid4().hex,
            image=img,
            spec=spec,
            i0=i0,
            g0_stats={"min": float(g0.min()), "max": float(g0.max()),
                      "mean": float(g0.mean())},
            mask=SeedMask.all_free(spec),
        )
        with sessions_lock:
            sessions[sess.id] = sess
        return {"id": sess.id, "width": img.width, "height": img.height}

    @app.put("/sessions/{sid}/seeds")
    async def put_seeds(sid: str, request: Request):
        sess = get_session(sid)
        if sess is None:
            return _error(404, "unknown session")
        if sess.status == "running":
            return _error(409, "a run is active")
        body = await request.body()
        ctype = request.headers.get("content-type", "")
        try:
            if ctype.startswith("image/png") or body[:8] == b"\x89PNG\r\n\x1a\n":
                from PIL import Image as PILImage

                img = PILImage.open(io.BytesIO(body))
                if img.mode not in ("RGB", "RGBA"):
                    return _error(422, f"seed mask must be RGB, got {img.mode}")
                rgb = np.asarray(img.convert("RGB"), dtype=np.uint8)
                if rgb.shape[:2] != sess.spec.node_shape:
                    return _error(
                        422,
                        f"mask is {rgb.shape[1]}x{rgb.shape[0]}, grid wants "
                        f"{sess.spec.N1 + 1}x{sess.spec.N2 + 1}",
                    )
                mask = SeedMask(sess.spec, labels_from_rgb(rgb))
            else:
                payload = json.loads(body)
                mask = rasterize_strokes(payload["strokes"], sess.spec)
        except MaskConflictError as exc:
            return _error(422, str(exc))
        except (KeyError, ValueError, json.JSONDecodeError) as exc:
            return _error(422, f"malformed seeds payload: {exc}")
        inside, outside = mask.inside, mask.outside
        if (inside & outside).any():
            return _error(422, "inside/outside overlap after rasterization")
        sess.mask = mask
        return Response(status_code=204)

    @app.post("/sessions/{sid}/run", status_code=202)
    async def start_run(sid: str, request: Request):
        sess = get_session(sid)
        if sess is None:
            return _error(404, "unknown session")
        if sess.status == "running":
            return _error(409, "a run is active")
        try:
            payload = await request.json() if await request.body() else {}
            rp = RunParams.model_validate(payload)
            params = rp.to_params()
        except (ValidationError, ValueError, json.JSONDecodeError) as exc:
            return _error(422, f"invalid run parameters: {exc}")
        if rp.initCircle is not None:
            u_ini = initial_circle(rp.initCircle[:2], rp.initCircle[2], sess.spec)
        else:
            u_ini = initial_circle(
                (sess.spec.L1 / 2, sess.spec.L2 / 2),
                0.25 * min(sess.spec.L1, sess.spec.L2),
                sess.spec,
            )
        run_id = uuid.uuid4().hex
        sess.status = "running"
        sess.run_id = run_id
        sess.step = 0
        sess.error = None
        mask = sess.mask if (sess.mask.inside.any() or sess.mask.outside.any()) else None

        def observer(snap: Snapshot):
            with sess.lock:
                sess.latest = snap
                sess.step += 1
                sess.history.append(snap)
                if len(sess.history) > SNAPSHOT_RING:
                    sess.history.pop(0)

        def worker():
            try:
                snap, _ = engine.run(sess.i0, mask, u_ini, params,
                                     observer=observer)
                with sess.lock:
                    sess.latest = snap
                    sess.status = "done"
            except Exception as exc:  # surfaced via state, not a crash
                with sess.lock:
                    sess.status = "failed"
                    sess.error = str(exc)

        threading.Thread(target=worker, daemon=True).start()
        return {"runId": run_id}

    @app.get("/sessions/{sid}/state")
    async def get_state(sid: str):
        sess = get_session(sid)
        if sess is None:
            return _error(404, "unknown session")
        with sess.lock:
            snap = sess.latest
            status = sess.status
            step = sess.step
            error = sess.error
        state = {
            "status": status,
            "step": step,
            "time": snap.time if snap else 0.0,
            "diagnostics": {"g0": sess.g0_stats, "error": error},
        }
        if snap is not None:
            count, areas = snap.interior
            state["contour"] = json.loads(engine.contour_to_json(snap.contour))
            state["componentCount"] = count
            state["componentAreas"] = areas
            state["solver"] = {
                "sweeps": snap.report.sweeps,
                "sweepDiff": snap.report.sweep_diff,
                "complementarityResidual": snap.report.complementarity_residual,
                "converged": snap.report.converged,
            }
        else:
            state["contour"] = []
            state["componentCount"] = 0
        return state

    return app
