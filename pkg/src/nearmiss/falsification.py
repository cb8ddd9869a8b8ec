"""Stochastic-optimization falsification baseline.

Agent behavior is reduced to a fixed-dimension parameter vector: the sampled
initial-state axes of each agent plus lateral offsets and target speeds at a
fixed set of longitudinal stations. Simulated annealing minimizes the same
boundary-collision cost over full fixed-duration simulations.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .cost import CostReport, cost
from .errors import ConfigError
from .scenario import ScenarioConfig, sample_initial_states
from .simulation import run_partial
from .state import KinematicState, SimState, TraceSegment, Waypoint

_AXES = ("x", "y", "theta", "v")


@dataclass(frozen=True)
class ParamSpace:
    """Layout and bounds of the falsification parameter vector."""
    names: tuple[str, ...]
    lows: np.ndarray
    highs: np.ndarray
    # per tracked agent: (vehicle index, sampled init axes, first param index)
    init_slots: tuple[tuple[int, tuple[str, ...], int], ...]
    # per tracked agent: (vehicle index, first lateral index, first speed index)
    path_slots: tuple[tuple[int, int, int], ...]
    stations: tuple[float, ...]

    @property
    def dimension(self) -> int:
        return len(self.lows)


def build_param_space(config: ScenarioConfig, n_control_points: int | None = None
                      ) -> ParamSpace:
    """Parameter layout: sampled init axes for every agent, then per tracked
    agent one lateral offset and one target speed per station."""
    n_cp = config.falsification.n_control_points if n_control_points is None \
        else n_control_points
    if n_cp < 1:
        raise ConfigError("need at least one control point")
    length = config.road.length
    stations = tuple((i + 1) * length / (n_cp + 1) for i in range(n_cp))
    names: list[str] = []
    lows: list[float] = []
    highs: list[float] = []
    init_slots = []
    path_slots = []
    for idx in config.agent_indices:
        spec = config.vehicles[idx]
        box = config.init_sampling[spec.name]
        axes = tuple(a for a in _AXES if getattr(box, a)[0] < getattr(box, a)[1])
        if axes:
            init_slots.append((idx, axes, len(lows)))
            for a in axes:
                lo, hi = getattr(box, a)
                names.append(f"{spec.name}.init.{a}")
                lows.append(lo)
                highs.append(hi)
    wspace = config.waypoint_space
    for idx in config.tracked_agent_indices:
        spec = config.vehicles[idx]
        lat0 = len(lows)
        for i in range(n_cp):
            names.append(f"{spec.name}.lat.{i}")
            lows.append(wspace.y[0])
            highs.append(wspace.y[1])
        spd0 = len(lows)
        for i in range(n_cp):
            names.append(f"{spec.name}.speed.{i}")
            lows.append(wspace.v[0])
            highs.append(wspace.v[1])
        path_slots.append((idx, lat0, spd0))
    return ParamSpace(names=tuple(names), lows=np.array(lows),
                      highs=np.array(highs), init_slots=tuple(init_slots),
                      path_slots=tuple(path_slots), stations=stations)


def decode(params: np.ndarray, space: ParamSpace, config: ScenarioConfig,
           base_state: SimState) -> tuple[SimState, dict[int, tuple[Waypoint, ...]]]:
    """Instantiate a parameter vector: initial state plus full waypoint lists.

    Station waypoints carry the heading toward the next waypoint (the last
    one repeats the previous heading).
    """
    params = np.asarray(params, dtype=float)
    if params.shape != (space.dimension,):
        raise ValueError(f"expected {space.dimension} parameters")
    if np.any(params < space.lows - 1e-9) or np.any(params > space.highs + 1e-9):
        raise ValueError("parameter vector leaves its bounds")
    kins = list(base_state.vehicles)
    for idx, axes, start in space.init_slots:
        values = dict(zip(axes, params[start:start + len(axes)]))
        kin = kins[idx]
        kins[idx] = KinematicState(
            x=values.get("x", kin.x), y=values.get("y", kin.y),
            theta=values.get("theta", kin.theta), v=values.get("v", kin.v))
    state = replace(base_state, vehicles=tuple(kins))

    n_cp = len(space.stations)
    segments: dict[int, tuple[Waypoint, ...]] = {}
    for idx, lat0, spd0 in space.path_slots:
        lats = params[lat0:lat0 + n_cp]
        speeds = params[spd0:spd0 + n_cp]
        headings = []
        for i in range(n_cp - 1):
            headings.append(math.atan2(lats[i + 1] - lats[i],
                                       space.stations[i + 1] - space.stations[i]))
        headings.append(headings[-1] if headings else 0.0)
        segments[idx] = tuple(
            Waypoint(space.stations[i], float(lats[i]), headings[i], float(speeds[i]))
            for i in range(n_cp))
    return state, segments


def encode(space: ParamSpace, init_values: dict[int, dict[str, float]],
           laterals: dict[int, Sequence[float]],
           speeds: dict[int, Sequence[float]]) -> np.ndarray:
    """Inverse of decode for the parameterized quantities."""
    params = np.empty(space.dimension)
    for idx, axes, start in space.init_slots:
        for k, a in enumerate(axes):
            params[start + k] = init_values[idx][a]
    n_cp = len(space.stations)
    for idx, lat0, spd0 in space.path_slots:
        params[lat0:lat0 + n_cp] = laterals[idx]
        params[spd0:spd0 + n_cp] = speeds[idx]
    return params


def _reflect(values: np.ndarray, lows: np.ndarray, highs: np.ndarray) -> np.ndarray:
    """Fold proposals back into bounds by reflection."""
    span = highs - lows
    out = values.copy()
    open_axes = span > 0.0
    z = np.mod(out[open_axes] - lows[open_axes], 2.0 * span[open_axes])
    z = np.where(z > span[open_axes], 2.0 * span[open_axes] - z, z)
    out[open_axes] = lows[open_axes] + z
    out[~open_axes] = lows[~open_axes]
    return out


@dataclass
class FalsifyResult:
    best_params: np.ndarray
    best_report: CostReport
    best_trace: TraceSegment
    evaluations: int
    seed: int
    wall_time: float
    history: list[float] = field(default_factory=list)   # incumbent best cost per eval
    termination: str = "budget"

    def summary(self) -> dict:
        return {
            "best_cost": self.best_report.value,
            "cost_report": {
                "value": self.best_report.value,
                "surface_ratio": self.best_report.surface_ratio,
                "rel_speed": self.best_report.rel_speed,
                "ttc_min": self.best_report.ttc_min,
                "collided": self.best_report.collided,
                "at_time": self.best_report.at_time,
                "no_risk": self.best_report.no_risk,
            },
            "evaluations": self.evaluations,
            "seed": self.seed,
            "termination": self.termination,
        }


def falsify(config: ScenarioConfig, n_control_points: int | None = None,
            max_evals: int | None = None, time_budget: float | None = None,
            seed: int | None = None,
            objective: Callable[[np.ndarray], CostReport] | None = None
            ) -> FalsifyResult:
    """Simulated annealing over the fixed waypoint parameterization.

    Proposals are Gaussian per coordinate (sigma = a fraction of each
    interval, reflected at the bounds), acceptance is Metropolis on the
    trace cost, cooling is geometric every `cooling_interval` evaluations.
    The first evaluations double as temperature calibration samples. Stops
    on the evaluation budget or the wall-clock budget, whichever comes
    first; at least one of the two must be given.
    """
    fp = config.falsification
    p = config.search
    used_seed = config.rng_seed if seed is None else seed
    rng = np.random.default_rng(used_seed)
    space = build_param_space(config, n_control_points)
    evals_cap = fp.max_evals if max_evals is None else max_evals
    if evals_cap is None and time_budget is None:
        time_budget = p.time_budget
    if evals_cap is not None and evals_cap < 1:
        raise ConfigError("evaluation budget must be >= 1")

    base_state = sample_initial_states(config, rng)
    duration = p.max_nodes * p.dt_expand

    best_trace: list[TraceSegment | None] = [None]

    if objective is None:
        def objective(params: np.ndarray) -> CostReport:
            state0, segments = decode(params, space, config, base_state)
            trace = run_partial(state0, segments, config, duration)
            best_trace[0] = trace
            return cost(trace, config)

    start_wall = time.perf_counter()
    evals = 0
    history: list[float] = []
    termination = "evals"

    def out_of_budget() -> bool:
        nonlocal termination
        if evals_cap is not None and evals >= evals_cap:
            termination = "evals"
            return True
        if time_budget is not None and time.perf_counter() - start_wall > time_budget:
            termination = "time_budget"
            return True
        return False

    def sample_uniform() -> np.ndarray:
        u = rng.uniform(size=space.dimension)
        return space.lows + u * (space.highs - space.lows)

    best_params = None
    best_report = None
    best_kept_trace = None
    cur_params = None
    cur_cost = math.inf
    calib_costs: list[float] = []

    # calibration phase: random samples seed the incumbent and T0
    while len(calib_costs) < fp.t0_samples and not out_of_budget():
        params = sample_uniform()
        report = objective(params)
        evals += 1
        calib_costs.append(report.value)
        if best_report is None or report.value < best_report.value:
            best_params, best_report = params, report
            best_kept_trace = best_trace[0]
        if report.value < cur_cost:
            cur_params, cur_cost = params, report.value
        history.append(best_report.value)

    t = max(float(np.std(calib_costs)), 1e-9) if len(calib_costs) > 1 else 1.0
    t_ref = t
    sigma = fp.sigma_fraction * (space.highs - space.lows)

    while not out_of_budget():
        # proposal width anneals with the temperature so the chain can
        # actually settle into a minimum late in the run
        scale = max(t / t_ref, 0.02)
        proposal = _reflect(
            cur_params + rng.normal(size=space.dimension) * sigma * scale,
            space.lows, space.highs)
        report = objective(proposal)
        evals += 1
        if report.value < best_report.value:
            best_params, best_report = proposal, report
            best_kept_trace = best_trace[0]
        if (report.value < cur_cost
                or rng.random() < math.exp((cur_cost - report.value) / t)):
            cur_params, cur_cost = proposal, report.value
        history.append(best_report.value)
        if evals % fp.cooling_interval == 0:
            t *= fp.cooling

    if best_params is None:
        raise ConfigError("no evaluations executed; increase the budget")
    if best_kept_trace is None:
        # objective injected by tests: synthesize the trace for the best params
        state0, segments = decode(best_params, space, config, base_state)
        best_kept_trace = run_partial(state0, segments, config, duration)
    return FalsifyResult(best_params=best_params, best_report=best_report,
                         best_trace=best_kept_trace, evaluations=evals,
                         seed=used_seed, wall_time=time.perf_counter() - start_wall,
                         history=history, termination=termination)
