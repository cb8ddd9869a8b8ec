"""Core value types shared by the simulator, controllers and search engine.

Everything here is an immutable value; simulation steps return new SimState
objects, which makes saving a snapshot on a tree node and resuming from it
trivially exact.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable

import numpy as np

from .geometry import wrap_angle


@dataclass(frozen=True, slots=True)
class KinematicState:
    """Planar pose plus speed and the last applied steering angle."""
    x: float
    y: float
    theta: float
    v: float
    steer: float = 0.0


@dataclass(frozen=True, slots=True)
class Waypoint:
    """Target path point: position, target driving direction, target speed."""
    x: float
    y: float
    theta: float
    v: float

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(self.theta))
        if self.v < 0.0:
            raise ValueError(f"waypoint target speed must be >= 0, got {self.v}")


@dataclass(frozen=True, slots=True)
class CollisionEvent:
    """One logged footprint overlap between a vehicle pair."""
    time: float
    tick: int
    first: int
    second: int
    rel_speed: float
    surface_ratio: float
    side: str

    def involves(self, index: int) -> bool:
        return index == self.first or index == self.second

    def involves_any(self, indices: Iterable[int]) -> bool:
        return any(self.involves(i) for i in indices)


@dataclass(frozen=True, slots=True)
class SimState:
    """Complete resumable snapshot: clock, vehicle states, controller states,
    and every collision logged since the scenario start."""
    clock: float
    tick: int
    vehicles: tuple[KinematicState, ...]
    controller_states: tuple[Any, ...]
    collisions: tuple[CollisionEvent, ...] = ()

    def wrecked(self) -> frozenset[int]:
        out = set()
        for ev in self.collisions:
            out.add(ev.first)
            out.add(ev.second)
        return frozenset(out)

    def first_collision_involving(self, indices: Iterable[int]) -> CollisionEvent | None:
        idx = tuple(indices)
        for ev in self.collisions:
            if ev.involves_any(idx):
                return ev
        return None


# column order of TraceSegment.states
STATE_COLS = ("x", "y", "theta", "v", "steer")
INPUT_COLS = ("accel", "steer_cmd")


@dataclass(frozen=True, eq=False)
class TraceSegment:
    """Fixed-step record of one (partial) closed-loop simulation.

    Row k holds the state reached after step k and the saturated controls
    applied during that step. `collisions` lists only events that occurred
    within this segment.
    """
    dt: float
    start_state: SimState
    times: np.ndarray        # (T,)
    states: np.ndarray       # (T, n_vehicles, 5) columns per STATE_COLS
    inputs: np.ndarray       # (T, n_vehicles, 2) columns per INPUT_COLS
    collisions: tuple[CollisionEvent, ...]
    final_state: SimState

    @property
    def n_ticks(self) -> int:
        return len(self.times)

    @property
    def duration(self) -> float:
        return self.final_state.clock - self.start_state.clock

    def kinematics_at(self, row: int, vehicle: int) -> KinematicState:
        x, y, th, v, steer = self.states[row, vehicle]
        return KinematicState(float(x), float(y), float(th), float(v), float(steer))


def empty_trace(start: SimState, dt: float) -> TraceSegment:
    n = len(start.vehicles)
    return TraceSegment(
        dt=dt,
        start_state=start,
        times=np.empty(0),
        states=np.empty((0, n, 5)),
        inputs=np.empty((0, n, 2)),
        collisions=(),
        final_state=start,
    )


def concat_traces(traces: list[TraceSegment]) -> TraceSegment:
    """Join back-to-back segments into one continuous trace."""
    if not traces:
        raise ValueError("need at least one trace segment")
    if len(traces) == 1:
        return traces[0]
    collisions: list[CollisionEvent] = []
    for t in traces:
        collisions.extend(t.collisions)
    return TraceSegment(
        dt=traces[0].dt,
        start_state=traces[0].start_state,
        times=np.concatenate([t.times for t in traces]),
        states=np.concatenate([t.states for t in traces]),
        inputs=np.concatenate([t.inputs for t in traces]),
        collisions=tuple(collisions),
        final_state=traces[-1].final_state,
    )
