"""Boundary-collision cost: (1 + S) * (v_coll^2 + ttc_min^2).

Low values mean the trace sits near the frontier between a collision and a
near miss: small impact surface, small relative speed, small minimum
time-to-collision. Traces with no projected collision at all get a sentinel
cost strictly above anything attainable so the ordering stays sound.
"""
from __future__ import annotations

from dataclasses import dataclass

from . import geometry
from .scenario import ScenarioConfig
from .state import SimState, TraceSegment


@dataclass(frozen=True, slots=True)
class CostReport:
    """Per-trace evaluation of the boundary-collision cost."""
    value: float          # J
    surface_ratio: float  # S in [0, 1]
    rel_speed: float      # v_coll, m/s
    ttc_min: float        # s; 0 for collisions
    collided: bool
    at_time: float        # trace time of the collision / closest projection
    no_risk: bool = False  # no collision and no projected overlap anywhere


def cost_formula(surface_ratio: float, rel_speed: float, ttc: float) -> float:
    return (1.0 + surface_ratio) * (rel_speed * rel_speed + ttc * ttc)


def max_cost(config: ScenarioConfig) -> float:
    """Sentinel strictly above any attainable cost for this scenario."""
    v_rel = 2.0 * max(spec.max_speed for spec in config.vehicles)
    h = config.search.ttc_horizon
    return 2.0 * (v_rel * v_rel + h * h) + 1.0


def _projection_report(vehicles, specs, ego_indices, agent_indices,
                       horizon, dt_ttc):
    """Best (smallest-ttc) constant-velocity projection over ego-agent pairs
    for one snapshot of vehicle states. Returns (ttc, S, v) or None."""
    best = None
    for e in ego_indices:
        a = vehicles[e]
        sa = specs[e]
        for j in agent_indices:
            b = vehicles[j]
            sb = specs[j]
            hit = geometry.ttc_first_overlap(
                a.x, a.y, a.theta, a.v, sa.length, sa.width,
                b.x, b.y, b.theta, b.v, sb.length, sb.width,
                horizon, dt_ttc)
            if hit is None:
                continue
            t, contact, rel = hit
            if best is None or t < best[0]:
                s = geometry.surface_ratio(contact, sa.length, sa.width)
                best = (t, s, rel)
    return best


def cost(trace: TraceSegment, config: ScenarioConfig, ego_index: int = 0) -> CostReport:
    """Evaluate one simulated trace.

    With an ego collision the first such event fixes S and v_coll and
    ttc_min is 0. Otherwise every tick is scanned and the cost is taken at
    the instant of smallest projected time-to-collision against any agent.
    """
    if trace.n_ticks == 0:
        raise ValueError("cannot evaluate an empty trace")
    specs = config.vehicles
    ego_indices = (ego_index,)
    agent_indices = config.agent_indices
    p = config.search

    for ev in trace.collisions:
        if ev.involves_any(ego_indices):
            j = cost_formula(ev.surface_ratio, ev.rel_speed, 0.0)
            return CostReport(value=j, surface_ratio=ev.surface_ratio,
                              rel_speed=ev.rel_speed, ttc_min=0.0,
                              collided=True, at_time=ev.time)

    best = None
    best_time = trace.times[0] if trace.n_ticks else 0.0
    for k in range(trace.n_ticks):
        kins = [trace.kinematics_at(k, i) for i in range(len(specs))]
        hit = _projection_report(kins, specs, ego_indices, agent_indices,
                                 p.ttc_horizon, p.dt_ttc)
        if hit is not None and (best is None or hit[0] < best[0]):
            best = hit
            best_time = float(trace.times[k])
    if best is None:
        return CostReport(value=max_cost(config), surface_ratio=0.0,
                          rel_speed=0.0, ttc_min=p.ttc_horizon, collided=False,
                          at_time=float(trace.times[-1]), no_risk=True)
    t, s, rel = best
    return CostReport(value=cost_formula(s, rel, t), surface_ratio=s,
                      rel_speed=rel, ttc_min=t, collided=False,
                      at_time=best_time)


def state_cost(state: SimState, config: ScenarioConfig, ego_index: int = 0) -> CostReport:
    """Instantaneous cost of a single snapshot (used for tree roots)."""
    specs = config.vehicles
    ego_indices = (ego_index,)
    p = config.search
    first = state.first_collision_involving(ego_indices)
    if first is not None:
        j = cost_formula(first.surface_ratio, first.rel_speed, 0.0)
        return CostReport(value=j, surface_ratio=first.surface_ratio,
                          rel_speed=first.rel_speed, ttc_min=0.0,
                          collided=True, at_time=first.time)
    hit = _projection_report(state.vehicles, specs, ego_indices,
                             config.agent_indices, p.ttc_horizon, p.dt_ttc)
    if hit is None:
        return CostReport(value=max_cost(config), surface_ratio=0.0,
                          rel_speed=0.0, ttc_min=p.ttc_horizon, collided=False,
                          at_time=state.clock, no_risk=True)
    t, s, rel = hit
    return CostReport(value=cost_formula(s, rel, t), surface_ratio=s,
                      rel_speed=rel, ttc_min=t, collided=False,
                      at_time=state.clock)
