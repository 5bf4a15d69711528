"""WebSocket session service backing the manual-alignment console.

One message channel per client; JSON text frames shaped
{"type": ..., "session": ..., "payload": ...}.  Request types: create,
reset, step, history.  Replies echo the type; observation frames follow as
a separate frame-batch message (PNG-compressed 8-bit grayscale plus raw
per-frame totals).  Sessions are isolated environment instances and may be
driven concurrently.
"""

from __future__ import annotations

import asyncio
import base64
import io
import json
import time
import uuid
from dataclasses import dataclass, field, replace

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from PIL import Image

from ..action_space import ACTION_DIM, raw_to_physical
from ..env import EpisodeConfig, InterferometerEnv
from ..randomization import RandomizationConfig
from .config import AppConfig


class ProtocolError(Exception):
    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(message)


def frames_to_png_b64(frames: np.ndarray) -> list[str]:
    """Lossless PNG encoding of [0, 1] frames as 8-bit grayscale."""
    encoded = []
    for frame in frames:
        img = Image.fromarray(np.round(np.asarray(frame) * 255).astype(np.uint8), mode="L")
        buf = io.BytesIO()
        img.save(buf, format="PNG")
        encoded.append(base64.b64encode(buf.getvalue()).decode("ascii"))
    return encoded


@dataclass
class Session:
    env: InterferometerEnv
    history: list = field(default_factory=list)
    seq: int = 0
    lock: asyncio.Lock = field(default_factory=asyncio.Lock)
    last_obs: np.ndarray | None = None

    def snapshot(self, reward=None, done=False, unsafe=False) -> dict:
        info_vis = self.env.visibility()
        return {
            "seq": self.seq,
            "step": self.env.step_count,
            "control_state": self.env.control_state.values.tolist(),
            "control_bounds": self.env.cfg.bounds.tolist(),
            "visibility": info_vis,
            "reward": reward,
            "done": done,
            "terminated_unsafe": unsafe,
            "episode_radius": self.env.episode_radius,
            "wall_time": time.time(),
        }


def make_app(base_cfg: AppConfig, static_dir=None) -> FastAPI:
    app = FastAPI(title="mzi-align session service")
    sessions: dict[str, Session] = {}

    def session_env_config(payload: dict) -> EpisodeConfig:
        # sessions always observe frames; "randomization: off" gives the
        # deterministic environment used by scripted console tests
        cfg = replace(base_cfg.env, obs_mode="frames")
        if payload.get("randomization") == "off":
            cfg = replace(cfg, randomization=RandomizationConfig.all_off(),
                          actuator_noise=False)
        if "seed" in payload:
            cfg = replace(cfg, seed=int(payload["seed"]))
        return cfg

    def get_session(sid) -> Session:
        if not sid or sid not in sessions:
            raise ProtocolError("unknown_session", f"no such session: {sid!r}")
        return sessions[sid]

    def observation_message(sid: str, session: Session) -> dict:
        frames = session.last_obs
        totals = frames.reshape(frames.shape[0], -1).mean(axis=1)
        return {
            "type": "frame-batch",
            "session": sid,
            "payload": {
                "seq": session.seq,
                "step": session.env.step_count,
                "frames_png": frames_to_png_b64(frames),
                "totals": [float(t) for t in totals],
                "shape": list(frames.shape),
            },
        }

    def parse_action(payload: dict, bounds: np.ndarray) -> np.ndarray:
        action = payload.get("action")
        if not isinstance(action, (list, tuple)) or len(action) != ACTION_DIM:
            raise ProtocolError("bad_action", "action must be a list of 5 numbers")
        try:
            vec = np.asarray([float(x) for x in action], dtype=float)
        except (TypeError, ValueError):
            raise ProtocolError("bad_action", "action components must be numbers")
        if not np.all(np.isfinite(vec)):
            raise ProtocolError("bad_action", "action components must be finite")
        units = payload.get("units", "physical")
        if units == "raw":
            return raw_to_physical(vec, bounds)
        if units == "physical":
            if np.any(np.abs(vec) > bounds):
                raise ProtocolError("bad_action",
                                    "physical deltas exceed per-step deflection limits")
            return vec
        raise ProtocolError("bad_action", f"unknown units {units!r}")

    async def handle(message: dict) -> list[dict]:
        mtype = message.get("type")
        payload = message.get("payload") or {}
        sid = message.get("session")

        if mtype == "create":
            sid = uuid.uuid4().hex[:12]
            env = InterferometerEnv(session_env_config(payload))
            session = Session(env=env)
            obs, _ = env.reset(seed=payload.get("seed"))
            session.last_obs = obs
            session.seq += 1
            snap = session.snapshot()
            session.history.append(snap)
            sessions[sid] = session
            return [{"type": "create", "session": sid, "payload": snap},
                    observation_message(sid, session)]

        session = get_session(sid)
        async with session.lock:
            if mtype == "reset":
                obs, _ = session.env.reset(seed=payload.get("seed"))
                session.last_obs = obs
                session.seq += 1
                snap = session.snapshot()
                session.history.append(snap)
                return [{"type": "reset", "session": sid, "payload": snap},
                        observation_message(sid, session)]

            if mtype == "step":
                vec = parse_action(payload, session.env.cfg.bounds)
                if session.env.done:
                    raise ProtocolError("episode_done", "episode finished; reset the session")
                res = session.env.step(vec)
                session.last_obs = res.observation
                session.seq += 1
                snap = session.snapshot(reward=res.reward, done=res.done,
                                        unsafe=res.info["terminated_unsafe"])
                snap["visibility"] = res.info["visibility_noiseless"]
                snap["action"] = vec.tolist()
                session.history.append(snap)
                return [{"type": "step", "session": sid, "payload": snap},
                        observation_message(sid, session)]

            if mtype == "history":
                return [{"type": "history", "session": sid,
                         "payload": {"records": session.history}}]

        raise ProtocolError("bad_type", f"unknown message type {mtype!r}")

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    message = json.loads(raw)
                except json.JSONDecodeError:
                    await ws.send_text(json.dumps(
                        {"type": "error", "session": None,
                         "payload": {"code": "bad_json", "message": "unparseable message"}}))
                    continue
                try:
                    replies = await handle(message)
                except ProtocolError as exc:
                    replies = [{"type": "error", "session": message.get("session"),
                                "payload": {"code": exc.code, "message": str(exc)}}]
                for reply in replies:
                    await ws.send_text(json.dumps(reply))
        except WebSocketDisconnect:
            pass

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "sessions": len(sessions)}

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")

    return app


def serve(cfg: AppConfig, port: int | None = None, static_dir=None) -> None:
    import uvicorn

    uvicorn.run(make_app(cfg, static_dir=static_dir), host="127.0.0.1",
                port=port or cfg.harness.port, log_level="warning")
