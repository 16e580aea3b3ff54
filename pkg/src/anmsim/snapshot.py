"""Versioned single-line JSON state records.

One snapshot per line when streamed (JSONL).  Numbers are written with 17
significant digits so a parse of the emitted text reproduces every float
bit-exactly; key order is fixed by construction for stable diffs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import MalformedDocument

SNAPSHOT_VERSION = 1

_FIELDS = ("dev_p", "dev_q", "soc", "gen_p_max", "bus_v_mag", "bus_v_ang",
           "branch_s", "aux")


@dataclass(frozen=True, eq=False)
class StateSnapshot:
    step: int
    time_hours: float
    dev_p: np.ndarray
    dev_q: np.ndarray
    soc: np.ndarray
    gen_p_max: np.ndarray
    bus_v_mag: np.ndarray
    bus_v_ang: np.ndarray
    branch_s: np.ndarray
    aux: np.ndarray
    reward: float
    e_loss: float
    penalty: float
    done: bool
    version: int = SNAPSHOT_VERSION

    def __eq__(self, other):
        if not isinstance(other, StateSnapshot):
            return NotImplemented
        scalars = (self.version == other.version and self.step == other.step
                   and self.time_hours == other.time_hours
                   and self.reward == other.reward
                   and self.e_loss == other.e_loss
                   and self.penalty == other.penalty
                   and self.done == other.done)
        return scalars and all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in _FIELDS)


def _num(x: float) -> str:
    return format(float(x), ".17g")


def _arr(xs) -> str:
    return "[" + ",".join(_num(x) for x in xs) + "]"


def snapshot_to_json(snap: StateSnapshot) -> str:
    """One line, fixed key order, 17 significant digits per number."""
    parts = [
        f'"version":{snap.version}',
        f'"step":{snap.step}',
        f'"time_hours":{_num(snap.time_hours)}',
    ]
    for f in _FIELDS:
        parts.append(f'"{f}":{_arr(getattr(snap, f))}')
    parts += [
        f'"reward":{_num(snap.reward)}',
        f'"e_loss":{_num(snap.e_loss)}',
        f'"penalty":{_num(snap.penalty)}',
        f'"done":{"true" if snap.done else "false"}',
    ]
    return "{" + ",".join(parts) + "}"


def snapshot_from_json(text: str) -> StateSnapshot:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"invalid snapshot line: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedDocument("snapshot line must be an object")
    try:
        if doc["version"] != SNAPSHOT_VERSION:
            raise MalformedDocument(
                f"unsupported snapshot version {doc['version']}")
        arrays = {f: np.asarray(doc[f], dtype=float) for f in _FIELDS}
        return StateSnapshot(
            step=int(doc["step"]),
            time_hours=float(doc["time_hours"]),
            reward=float(doc["reward"]),
            e_loss=float(doc["e_loss"]),
            penalty=float(doc["penalty"]),
            done=bool(doc["done"]),
            **arrays,
        )
    except KeyError as exc:
        raise MalformedDocument(f"snapshot line missing field {exc}") from exc


def read_snapshots(path) -> list[StateSnapshot]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(snapshot_from_json(line))
    return out
