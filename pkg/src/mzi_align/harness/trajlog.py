"""Line-delimited trajectory logs: a self-describing header followed by one
JSON record per environment step.  Floats round-trip exactly through repr,
so replays can compare bit-for-bit."""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np


@dataclass
class TrajectoryRecord:
    episode: int
    step: int
    ctrl_before: list
    ctrl_after: list
    raw_action: list
    physical_action: list
    reward: float
    visibility: float
    visibility_frames: float
    done: bool
    terminated_unsafe: bool
    draws_digest: str
    timestamp: float

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, line: str) -> "TrajectoryRecord":
        return cls(**json.loads(line))


def draws_digest(draws) -> str:
    if draws is None:
        return "-"
    payload = (draws.brightness, draws.cyclic_shift, draws.duty,
               tuple(np.asarray(draws.phase_offsets).tolist()), draws.pixel_noise_seed)
    return hashlib.sha256(repr(payload).encode()).hexdigest()[:12]


class TrajectoryWriter:
    def __init__(self, path, header: dict):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("w")
        self._fh.write(json.dumps({"type": "header", "created": time.time(), **header}) + "\n")

    def write(self, record: TrajectoryRecord) -> None:
        self._fh.write(record.to_json() + "\n")

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_trajectories(path) -> tuple[dict, list[TrajectoryRecord]]:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ValueError(f"empty trajectory log {path}")
    header = json.loads(lines[0])
    if header.get("type") != "header":
        raise ValueError(f"{path} does not start with a trajectory header")
    records = [TrajectoryRecord.from_json(line) for line in lines[1:]]
    return header, records
