"""HTTP/WebSocket service exposing kinematics, collision queries,
trajectory verification, simulation jobs, and playback streaming.

Computation endpoints are stateless over an immutable
:class:`SessionState`; simulation sweeps run as jobs on a single worker so
results are deterministic.  The API exposes read-only state and
verification only, never motion commands.
"""

from __future__ import annotations

import asyncio
import json
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from pydantic import BaseModel, Field

from . import __version__
from .collision import (
    BoundingBoxModel,
    CollisionTable,
    TableRangeError,
    check_collision,
    query_table,
    read_table,
)
from .config import AXES, FacilityConfig
from .dsp import InstrumentModel, SweepConfig, synthesize_sweep, to_impulse_response
from .geometry import (
    AxisLimitError,
    BistaticConstellation,
    MachineState,
    MappingPolicy,
    ReachabilityError,
    bistatic_to_machine,
    forward_kinematics,
    machine_to_bistatic,
)
from .motion import plan_profile, sample_profile, verify_trajectory
from .scattering import Scene
from .scenefile import SceneFormatError, scene_from_dict
from .trajfile import TrajectoryParseError, parse as parse_trajectory


@dataclass(frozen=True)
class SessionState:
    cfg: FacilityConfig
    model: BoundingBoxModel
    table: Optional[CollisionTable] = None
    scenes: dict[str, Scene] = field(default_factory=dict)

    def __post_init__(self):
        if self.table is not None and self.table.geometry_hash != self.model.geometry_hash():
            raise ValueError("collision table geometry hash does not match the loaded model")


class StateBody(BaseModel):
    moving_az: float = 0.0
    moving_coel: float = 0.0
    static_coel: float = 0.0
    turntable: float = 0.0
    pol_tx: float = 0.0
    pol_rx: float = 0.0
    radial_tx: float = 3.44
    radial_rx: float = 3.44

    def to_state(self) -> MachineState:
        return MachineState(**self.model_dump())


class FkRequest(BaseModel):
    state: StateBody


class ConstellationBody(BaseModel):
    phi_ill: float
    theta_ill: float
    phi_obs: float
    theta_obs: float
    pol_ill: float = 0.0
    pol_obs: float = 0.0
    r_ill: float = 3.44
    r_obs: float = 3.44


class BistaticRequest(BaseModel):
    constellation: ConstellationBody
    current_state: Optional[StateBody] = None
    weights: dict[str, float] = Field(default_factory=dict)


class VerifyRequest(BaseModel):
    trajectory: str
    mode: str = "stepped"


class SweepRequest(BaseModel):
    scene: Optional[str] = None
    scene_inline: Optional[dict] = None
    constellation: ConstellationBody
    f_start_hz: float
    f_stop_hz: float
    f_step_hz: float
    pol: str = "theta"
    noise_floor_db: Optional[float] = None
    ideal_instrument: bool = False


def _pose_dict(pose) -> dict:
    return {
        "position": [float(x) for x in pose.position],
        "boresight": [float(x) for x in pose.boresight],
        "e_co": [float(x) for x in pose.polarization_basis[0]],
        "e_cx": [float(x) for x in pose.polarization_basis[1]],
    }


def _boxes_dict(boxset) -> list[dict]:
    return [
        {
            "center": [float(x) for x in boxset.centers[i]],
            "half_extents": [float(x) for x in boxset.halves[i]],
            "axes": [[float(x) for x in boxset.rots[i][:, j]] for j in range(3)],
        }
        for i in range(len(boxset))
    ]


def build_app(session: SessionState) -> FastAPI:
    app = FastAPI(title="birange service", version=__version__)
    jobs: dict[str, dict] = {}
    jobs_lock = threading.Lock()
    executor = ThreadPoolExecutor(max_workers=1)

    def collision_flag(state: MachineState) -> Optional[bool]:
        if session.table is not None:
            try:
                return query_table(session.table, state)
            except TableRangeError:
                return check_collision(state, session.model, session.cfg)
        return None

    @app.get("/capabilities")
    def capabilities():
        cfg = session.cfg
        return {
            "version": __version__,
            "axes": {
                a: (None if cfg.limit(a) is None else list(cfg.limit(a))) for a in AXES
            },
            "config": {
                "focal_height": cfg.focal_height,
                "boom_radius_nominal": cfg.boom_radius_nominal,
                "probe_aperture_radius": cfg.probe_aperture_radius,
                "turntable_diameter": cfg.turntable_diameter,
                "clearance": cfg.clearance,
            },
            "collision_enabled": session.table is not None,
            "table": (
                None
                if session.table is None
                else {
                    "geometry_hash": session.table.geometry_hash.hex(),
                    "grids": {
                        a: {"min": g.min, "max": g.max, "step": g.step, "n": g.n}
                        for a, g in session.table.grids.items()
                    },
                    "colliding_fraction": session.table.colliding_fraction,
                }
            ),
            "scenes": sorted(session.scenes),
        }

    @app.post("/fk")
    def fk(req: FkRequest):
        state = req.state.to_state()
        try:
            tx, rx = forward_kinematics(state, session.cfg)
        except AxisLimitError as e:
            raise HTTPException(status_code=422, detail={"error": "axis_limit", "message": str(e), "axis": e.axis})
        bist = machine_to_bistatic(state, session.cfg)
        off = session.cfg.offset
        boxes_tx = session.model.tx_boxes(
            state.moving_az + off("moving_az"), state.moving_coel + off("moving_coel")
        )
        boxes_rx = session.model.rx_boxes(state.static_coel + off("static_coel"))
        return {
            "tx": _pose_dict(tx),
            "rx": _pose_dict(rx),
            "bistatic": bist.normalized().__dict__,
            "colliding": collision_flag(state),
            "boxes": {"tx": _boxes_dict(boxes_tx), "rx": _boxes_dict(boxes_rx)},
        }

    @app.post("/bistatic")
    def bistatic(req: BistaticRequest):
        policy = MappingPolicy(
            current=(req.current_state or StateBody()).to_state(), weights=req.weights
        )
        try:
            state = bistatic_to_machine(
                BistaticConstellation(**req.constellation.model_dump()), policy, session.cfg
            )
        except ReachabilityError as e:
            raise HTTPException(status_code=422, detail={"error": "unreachable", "message": str(e)})
        return {"state": state.as_dict()}

    @app.post("/trajectory/verify")
    def verify(req: VerifyRequest):
        if req.mode not in ("stepped", "continuous"):
            raise HTTPException(status_code=400, detail={"error": "bad_mode", "message": req.mode})
        try:
            traj = parse_trajectory(req.trajectory, session.cfg)
        except TrajectoryParseError as e:
            raise HTTPException(
                status_code=400,
                detail={
                    "error": "parse",
                    "message": str(e),
                    "line": e.line,
                    "column": e.column,
                },
            )
        if session.table is None:
            raise HTTPException(
                status_code=409,
                detail={"error": "no_table", "message": "no collision table loaded"},
            )
        report = verify_trajectory(
            traj, table=session.table, mode=req.mode, cfg=session.cfg
        )
        return report.to_dict()

    def _run_sweep(req: SweepRequest) -> dict:
        if req.scene_inline is not None:
            scene = scene_from_dict(req.scene_inline)
        elif req.scene is not None:
            if req.scene not in session.scenes:
                raise KeyError(f"unknown scene {req.scene!r}")
            scene = session.scenes[req.scene]
        else:
            scene = None
        sweep = SweepConfig(req.f_start_hz, req.f_stop_hz, req.f_step_hz,
                            noise_floor_db=req.noise_floor_db)
        instrument = InstrumentModel.ideal() if req.ideal_instrument else InstrumentModel()
        rec = synthesize_sweep(
            scene,
            BistaticConstellation(**req.constellation.model_dump()),
            sweep,
            instrument,
            pol=req.pol,
        )
        ir = to_impulse_response(rec, window="hann")
        return {
            "freqs_hz": [float(x) for x in rec.freqs_hz],
            "re": [float(x) for x in rec.values.real],
            "im": [float(x) for x in rec.values.imag],
            "impulse_mag_db": [float(x) for x in ir.magnitude_db()],
            "path_m": [float(x) for x in ir.path_m],
        }

    @app.post("/simulate/sweep")
    def simulate(req: SweepRequest):
        job_id = uuid.uuid4().hex
        with jobs_lock:
            jobs[job_id] = {"status": "queued", "result": None, "error": None}

        def work():
            try:
                result = _run_sweep(req)
                with jobs_lock:
                    jobs[job_id].update(status="done", result=result)
            except (KeyError, ValueError, SceneFormatError) as e:
                with jobs_lock:
                    jobs[job_id].update(status="error", error=str(e))

        with jobs_lock:
            jobs[job_id]["status"] = "running"
        executor.submit(work)
        return {"job_id": job_id}

    @app.get("/jobs/{job_id}")
    def job_status(job_id: str):
        with jobs_lock:
            if job_id not in jobs:
                raise HTTPException(status_code=404, detail={"error": "unknown_job"})
            j = dict(jobs[job_id])
        return j

    @app.websocket("/playback")
    async def playback(ws: WebSocket):
        await ws.accept()
        try:
            setup = json.loads(await ws.receive_text())
            traj = parse_trajectory(setup["trajectory"], session.cfg)
            dt = float(setup.get("dt", 0.05))
            pace = bool(setup.get("pace", True))
            if dt <= 0:
                raise ValueError("dt must be > 0")
        except (KeyError, ValueError, TrajectoryParseError) as e:
            await ws.send_text(json.dumps({"error": str(e)}))
            await ws.close()
            return

        # pre-sample the full trajectory timeline (legs share boundary states)
        frames: list[tuple[float, MachineState, dict]] = []
        clock = 0.0
        if len(traj.waypoints) == 1:
            frames.append((0.0, traj.waypoints[0], {a: 0.0 for a in AXES}))
        for i in range(1, len(traj.waypoints)):
            prof = plan_profile(traj.waypoints[i - 1], traj.waypoints[i], cfg=session.cfg)
            leg = sample_profile(prof, dt)
            if frames:
                leg = leg[1:]
            for (t, s, v) in leg:
                frames.append((clock + t, s, v))
            clock += prof.duration
        if not frames:
            await ws.send_text(json.dumps({"error": "empty trajectory"}))
            await ws.close()
            return
        times = [f[0] for f in frames]

        ctrl_q: asyncio.Queue = asyncio.Queue()

        async def reader():
            try:
                while True:
                    msg = await ws.receive_text()
                    await ctrl_q.put(json.loads(msg))
            except (WebSocketDisconnect, RuntimeError):
                await ctrl_q.put({"cmd": "_closed"})

        reader_task = asyncio.create_task(reader())
        cursor = 0
        paused = False
        closed = False

        def apply_ctrl(ctrl: dict):
            nonlocal paused, cursor, closed
            cmd = ctrl.get("cmd")
            if cmd == "_closed":
                closed = True
            elif cmd == "pause":
                paused = True
            elif cmd == "resume":
                paused = False
            elif cmd == "seek_time":
                want = float(ctrl.get("t", 0.0))
                cursor = min(
                    int(np.searchsorted(times, want, side="left")), len(frames) - 1
                )

        try:
            while cursor < len(frames) and not closed:
                while not closed:
                    if paused:
                        apply_ctrl(await ctrl_q.get())
                    else:
                        try:
                            apply_ctrl(ctrl_q.get_nowait())
                        except asyncio.QueueEmpty:
                            break
                if closed:
                    break
                t, s, v = frames[cursor]
                await ws.send_text(
                    json.dumps(
                        {
                            "t": t,
                            "state": s.as_dict(),
                            "velocities": v,
                            "colliding": collision_flag(s),
                            "done": cursor == len(frames) - 1,
                        }
                    )
                )
                cursor += 1
                if pace and cursor < len(frames):
                    await asyncio.sleep(min(dt, 0.05))
            if not closed:
                await ws.close()
        finally:
            reader_task.cancel()

    @app.exception_handler(Exception)
    async def internal_error(request, exc):
        from fastapi.responses import JSONResponse

        err_id = uuid.uuid4().hex[:12]
        return JSONResponse(
            status_code=500, content={"error": "internal", "id": err_id}
        )

    return app


def make_session(
    cfg: Optional[FacilityConfig] = None,
    table_path=None,
    scenes: Optional[dict[str, Scene]] = None,
) -> SessionState:
    cfg = cfg or FacilityConfig()
    model = BoundingBoxModel.from_config(cfg)
    table = read_table(table_path) if table_path else None
    return SessionState(cfg=cfg, model=model, table=table, scenes=scenes or {})
