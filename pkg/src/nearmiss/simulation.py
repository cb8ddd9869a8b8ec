"""Closed-loop planar simulation of all scenario vehicles.

Kinematic bicycle integration at a fixed step, separating-axis collision
detection after every step, and resumable partial simulations that stop at
the first ego-involved collision.
"""
from __future__ import annotations

import math
from dataclasses import replace
from typing import Mapping, Sequence

import numpy as np

from . import controllers, geometry
from .geometry import wrap_angle
from .scenario import ROLE_CONSTANT, ROLE_EGO, ROLE_TRACKED, ScenarioConfig, VehicleSpec
from .state import (CollisionEvent, KinematicState, SimState, TraceSegment,
                    Waypoint)


def step(state: SimState, controls: Sequence[tuple[float, float]],
         specs: Sequence[VehicleSpec], dt: float) -> SimState:
    """Advance every vehicle by one kinematic bicycle step.

    Controls are (accel, steer) per vehicle and are saturated to the vehicle
    limits before integration. New footprint overlaps are appended to the
    collision log and both participants are frozen at v = 0.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    wrecked = state.wrecked()
    new_kins: list[KinematicState] = []
    for i, (kin, spec) in enumerate(zip(state.vehicles, specs)):
        if i in wrecked:
            new_kins.append(replace(kin, steer=0.0))
            continue
        accel = min(max(controls[i][0], -spec.max_decel), spec.max_accel)
        steer = min(max(controls[i][1], -spec.max_steer), spec.max_steer)
        x = kin.x + kin.v * math.cos(kin.theta) * dt
        y = kin.y + kin.v * math.sin(kin.theta) * dt
        theta = wrap_angle(kin.theta + kin.v / spec.wheelbase * math.tan(steer) * dt)
        v = min(max(kin.v + accel * dt, 0.0), spec.max_speed)
        new_kins.append(KinematicState(x, y, theta, v, steer))

    clock = state.clock + dt
    tick = state.tick + 1
    events = list(state.collisions)
    logged_pairs = {(ev.first, ev.second) for ev in events}
    ego_count = _ego_count(specs)
    n = len(specs)
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) in logged_pairs:
                continue
            a, b = new_kins[i], new_kins[j]
            sa, sb = specs[i], specs[j]
            contact = geometry.rect_contact(a.x, a.y, a.theta, sa.length, sa.width,
                                            b.x, b.y, b.theta, sb.length, sb.width)
            if contact is None:
                continue
            rel = math.hypot(a.v * math.cos(a.theta) - b.v * math.cos(b.theta),
                             a.v * math.sin(a.theta) - b.v * math.sin(b.theta))
            ratio = geometry.surface_ratio(contact, sa.length, sa.width)
            events.append(CollisionEvent(time=clock, tick=tick, first=i, second=j,
                                         rel_speed=rel, surface_ratio=ratio,
                                         side=contact.side))
    # freeze every vehicle involved in any collision
    frozen = {idx for ev in events for idx in (ev.first, ev.second)}
    for idx in frozen:
        if new_kins[idx].v != 0.0:
            new_kins[idx] = replace(new_kins[idx], v=0.0)
    return SimState(clock=clock, tick=tick, vehicles=tuple(new_kins),
                    controller_states=state.controller_states,
                    collisions=tuple(events))


def _ego_count(specs: Sequence[VehicleSpec]) -> int:
    return sum(1 for s in specs if s.role == ROLE_EGO)


def run_partial(start: SimState, segments: Mapping[int, Sequence[Waypoint]],
                config: ScenarioConfig, duration: float) -> TraceSegment:
    """Simulate the closed loop for `duration` seconds from a saved state.

    `segments` maps tracked-agent vehicle indices to their fresh target
    waypoint lists; their waypoint progress restarts at the first point.
    The run stops early at the first collision involving an ego vehicle.
    """
    if duration <= 0.0:
        raise ValueError("duration must be positive")
    specs = config.vehicles
    p = config.search
    n_steps = int(round(duration / p.dt_sim))
    if n_steps < 1:
        raise ValueError("duration shorter than one simulation step")
    for idx in config.tracked_agent_indices:
        if idx not in segments:
            raise ValueError(f"missing target segment for tracked agent index {idx}")

    # fresh target paths: waypoint progress restarts; missing controller
    # states (hand-built snapshots) fall back to their reset values
    ctrls = list(start.controller_states)
    for idx in config.tracked_agent_indices:
        ctrls[idx] = controllers.AgentControllerState()
    for idx in config.ego_indices:
        if ctrls[idx] is None:
            ctrls[idx] = controllers.initial_ego_state(
                start.vehicles[idx].y, config.road.lane_centers)
    state = replace(start, controller_states=tuple(ctrls))
    actual_start = state

    n_veh = len(specs)
    ego_indices = config.ego_indices
    lane_centers = config.road.lane_centers
    lane_width = config.road.lane_width

    times = np.empty(n_steps)
    states_arr = np.empty((n_steps, n_veh, 5))
    inputs_arr = np.empty((n_steps, n_veh, 2))
    rows = 0
    for _ in range(n_steps):
        wrecked = state.wrecked()
        ctrls = list(state.controller_states)
        controls: list[tuple[float, float]] = [(0.0, 0.0)] * n_veh
        for i, spec in enumerate(specs):
            if i in wrecked:
                continue
            if spec.role == ROLE_EGO:
                accel, steer, ctrl = controllers.ego_tick(
                    state, i, specs, spec.controller, lane_centers,
                    lane_width, p.dt_ttc)
                ctrls[i] = ctrl
                controls[i] = (accel, steer)
            elif spec.role == ROLE_TRACKED:
                kin = state.vehicles[i]
                accel, steer, ctrl = controllers.track_waypoints(
                    kin, segments[i], ctrls[i], spec.controller,
                    spec.wheelbase, spec.max_speed, spec.max_accel,
                    spec.max_decel, spec.max_steer)
                ctrls[i] = ctrl
                controls[i] = (accel, steer)
            else:  # constant-speed straight line
                kin = state.vehicles[i]
                cp: controllers.AgentConstParams = spec.controller
                accel = cp.k_p * (cp.target_speed - kin.v)
                controls[i] = (min(max(accel, -spec.max_decel), spec.max_accel), 0.0)
        state = step(replace(state, controller_states=tuple(ctrls)),
                     controls, specs, p.dt_sim)
        times[rows] = state.clock
        for i, kin in enumerate(state.vehicles):
            states_arr[rows, i] = (kin.x, kin.y, kin.theta, kin.v, kin.steer)
            inputs_arr[rows, i] = controls[i]
        rows += 1
        new_events = state.collisions[len(actual_start.collisions):]
        if any(ev.involves_any(ego_indices) for ev in new_events):
            break

    return TraceSegment(
        dt=p.dt_sim,
        start_state=actual_start,
        times=times[:rows].copy(),
        states=states_arr[:rows].copy(),
        inputs=inputs_arr[:rows].copy(),
        collisions=state.collisions[len(actual_start.collisions):],
        final_state=state,
    )


def time_to_collision(state: SimState, ego: int, agent: int,
                      specs: Sequence[VehicleSpec], horizon: float,
                      dt_ttc: float):
    """Projected time to footprint overlap under frozen speeds and headings.

    Returns (ttc, projected ContactInfo on the ego, projected relative speed)
    or None when no overlap occurs within the horizon.
    """
    if horizon <= 0.0:
        raise ValueError("horizon must be positive")
    a, b = state.vehicles[ego], state.vehicles[agent]
    sa, sb = specs[ego], specs[agent]
    return geometry.ttc_first_overlap(
        a.x, a.y, a.theta, a.v, sa.length, sa.width,
        b.x, b.y, b.theta, b.v, sb.length, sb.width,
        horizon, dt_ttc)


def export_trace_csv(trace: TraceSegment, names: Sequence[str], path) -> None:
    """Write a trace as delimited text: one row per tick, collision events as
    a `#collision,`-prefixed footer block."""
    cols = ["time"]
    for name in names:
        cols += [f"{name}_{c}" for c in ("x", "y", "theta", "v", "steer", "accel")]
    lines = [",".join(cols)]
    for k in range(trace.n_ticks):
        row = [repr(float(trace.times[k]))]
        for i in range(len(names)):
            x, y, th, v, steer = trace.states[k, i]
            accel = trace.inputs[k, i, 0]
            row += [repr(float(val)) for val in (x, y, th, v, steer, accel)]
        lines.append(",".join(row))
    for ev in trace.collisions:
        lines.append(f"#collision,{ev.time!r},{names[ev.first]},{names[ev.second]},"
                     f"{ev.rel_speed!r},{ev.surface_ratio!r},{ev.side}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
