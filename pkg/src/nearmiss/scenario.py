"""Scenario data model: vehicles, road, sampling spaces, search parameters,
and the geometric construction of agent target path segments."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .controllers import (AgentConstParams, AgentControllerState,
                          AgentTrackParams, EgoControlParams, SensorSpec,
                          initial_ego_state)
from .errors import ConfigError
from .geometry import wrap_angle
from .state import SimState, KinematicState, Waypoint

ROLE_EGO = "ego"
ROLE_TRACKED = "agent_tracked"
ROLE_CONSTANT = "agent_constant"
ROLES = (ROLE_EGO, ROLE_TRACKED, ROLE_CONSTANT)


@dataclass(frozen=True, slots=True)
class IntervalBox:
    """Axis-aligned box over (x, y, theta, v); degenerate axes are allowed."""
    x: tuple[float, float]
    y: tuple[float, float]
    theta: tuple[float, float]
    v: tuple[float, float]

    def __post_init__(self):
        for name in ("x", "y", "theta", "v"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ConfigError(f"interval {name} has lower > upper: [{lo}, {hi}]")

    def sample(self, rng: np.random.Generator) -> tuple[float, float, float, float]:
        return tuple(float(rng.uniform(lo, hi)) if lo < hi else lo
                     for lo, hi in (self.x, self.y, self.theta, self.v))

    def contains_xy(self, x: float, y: float, tol: float = 0.0) -> bool:
        return (self.x[0] - tol <= x <= self.x[1] + tol
                and self.y[0] - tol <= y <= self.y[1] + tol)


@dataclass(frozen=True, slots=True)
class RoadSpec:
    """Straight multi-lane road, lanes stacked symmetrically about y = 0."""
    lanes: int
    lane_width: float
    length: float

    def __post_init__(self):
        if self.lanes < 1 or self.lane_width <= 0 or self.length <= 0:
            raise ConfigError("road needs lanes >= 1 and positive dimensions")

    @property
    def lane_centers(self) -> tuple[float, ...]:
        off = 0.5 * (self.lanes - 1)
        return tuple((i - off) * self.lane_width for i in range(self.lanes))

    @property
    def half_width(self) -> float:
        return 0.5 * self.lanes * self.lane_width


@dataclass(frozen=True, slots=True)
class VehicleSpec:
    """Physical footprint, actuation limits and controller parameters."""
    name: str
    role: str
    length: float = 4.5
    width: float = 1.8
    wheelbase: float = 2.7
    max_speed: float = 30.0
    max_accel: float = 4.0
    max_decel: float = 8.0
    max_steer: float = 0.6
    sensors: tuple[SensorSpec, ...] = ()
    controller: EgoControlParams | AgentTrackParams | AgentConstParams | None = None

    def __post_init__(self):
        if self.role not in ROLES:
            raise ConfigError(f"unknown vehicle role {self.role!r}")
        if not (self.length > 0 and self.width > 0 and 0 < self.wheelbase <= self.length):
            raise ConfigError(f"bad dimensions for vehicle {self.name!r}")
        if min(self.max_speed, self.max_accel, self.max_decel, self.max_steer) <= 0:
            raise ConfigError(f"actuation limits must be positive for {self.name!r}")
        if self.role != ROLE_EGO and self.sensors:
            raise ConfigError(f"only ego vehicles carry sensors ({self.name!r})")
        if self.controller is None:
            default = {ROLE_EGO: EgoControlParams, ROLE_TRACKED: AgentTrackParams,
                       ROLE_CONSTANT: AgentConstParams}[self.role]
            object.__setattr__(self, "controller", default())
        expected = {ROLE_EGO: EgoControlParams, ROLE_TRACKED: AgentTrackParams,
                    ROLE_CONSTANT: AgentConstParams}[self.role]
        if not isinstance(self.controller, expected):
            raise ConfigError(f"vehicle {self.name!r} needs {expected.__name__}")


@dataclass(frozen=True, slots=True)
class SearchParams:
    """Knobs of the tree search, simulation stepping and cost projection."""
    dt_expand: float = 1.0        # partial-simulation length per expansion, s
    n_candidates: int = 5         # parent candidates simulated per iteration
    k_norm: float = 1.0           # transition-test cost normalization
    t0: float = 1e-3              # initial transition temperature
    alpha: float = 2.0            # temperature adaptation factor
    max_fails: int = 10           # consecutive rejections before reheating
    m_neighbors: int = 5          # nearest neighbors in the novelty sum
    max_reject: int = 10          # consecutive novelty rejections before forcing accept
    cost_threshold: float = 0.25  # stop when the best cost drops below this
    time_budget: float = 120.0    # wall-clock cap on the search loop, s
    max_nodes: int = 25           # stop when the tree reaches this size
    dt_sim: float = 0.01          # integration step, s
    dt_ttc: float = 0.05          # time-to-collision sweep step, s
    ttc_horizon: float = 10.0     # projection horizon, s
    cov_lambda: float = 1e-6      # Tikhonov term on the novelty covariance
    cov_refresh: int = 50         # recompute covariance every N insertions
    store_history: bool = False   # keep full traces on tree nodes

    def __post_init__(self):
        if self.dt_expand <= 0 or self.dt_sim <= 0 or self.dt_ttc <= 0:
            raise ConfigError("time steps must be positive")
        if self.n_candidates < 1:
            raise ConfigError("n_candidates must be >= 1")
        if self.max_nodes < 1:
            raise ConfigError("max_nodes must be >= 1")
        if self.ttc_horizon <= 0 or self.time_budget <= 0:
            raise ConfigError("horizons and budgets must be positive")


@dataclass(frozen=True, slots=True)
class FalsificationParams:
    """Simulated-annealing settings for the fixed-parameterization baseline.

    The cooling factor applies every `cooling_interval` evaluations and also
    shrinks the proposal width, so late evaluations refine locally.
    """
    n_control_points: int = 5
    sigma_fraction: float = 0.1   # proposal std as a fraction of each interval
    cooling: float = 0.9
    cooling_interval: int = 20    # evaluations between cooling steps
    t0_samples: int = 20          # random evaluations used to set T0
    max_evals: int | None = None  # optional deterministic evaluation budget

    def __post_init__(self):
        if self.n_control_points < 1:
            raise ConfigError("need at least one control point")
        if not 0.0 < self.cooling <= 1.0:
            raise ConfigError("cooling factor must be in (0, 1]")


@dataclass(frozen=True, slots=True)
class ReportParams:
    """Batch-report knobs: which agent counts as the designated adversary,
    trajectory label spacing, optional reference lines for the box plot."""
    adversary: str | None = None
    label_interval: float | None = None   # defaults to dt_expand
    reference_costs: dict | None = None   # method -> [min, mean, max]


@dataclass(frozen=True, slots=True)
class TargetPathSegment:
    """Immediate target path for one agent: two or three waypoints."""
    waypoints: tuple[Waypoint, ...]

    def __post_init__(self):
        if not 2 <= len(self.waypoints) <= 3:
            raise ValueError("a target path segment has 2 or 3 waypoints")
        for a, b in zip(self.waypoints, self.waypoints[1:]):
            if a.x == b.x and a.y == b.y:
                raise ValueError("consecutive waypoints must be distinct points")

    @property
    def length(self) -> float:
        return sum(math.hypot(b.x - a.x, b.y - a.y)
                   for a, b in zip(self.waypoints, self.waypoints[1:]))


@dataclass(frozen=True)
class ScenarioConfig:
    """Full description of a driving scenario and its search setup."""
    ego_specs: tuple[VehicleSpec, ...]
    agent_specs: tuple[VehicleSpec, ...]
    road: RoadSpec
    init_sampling: dict[str, IntervalBox]
    waypoint_space: IntervalBox
    d_leg: float = 15.0
    search: SearchParams = field(default_factory=SearchParams)
    falsification: FalsificationParams = field(default_factory=FalsificationParams)
    report: ReportParams = field(default_factory=ReportParams)
    rng_seed: int = 0

    def __post_init__(self):
        if not self.ego_specs or not self.agent_specs:
            raise ConfigError("need at least one ego and one agent vehicle")
        if self.d_leg <= 0:
            raise ConfigError("d_leg must be positive")
        names = [s.name for s in self.vehicles]
        if len(set(names)) != len(names):
            raise ConfigError("vehicle names must be unique")
        for spec in self.vehicles:
            if spec.name not in self.init_sampling:
                raise ConfigError(f"missing init_sampling entry for {spec.name!r}")
        for spec in self.ego_specs:
            if spec.role != ROLE_EGO:
                raise ConfigError(f"{spec.name!r} listed as ego but has role {spec.role}")
        for spec in self.agent_specs:
            if spec.role == ROLE_EGO:
                raise ConfigError(f"{spec.name!r} listed as agent but has role ego")
        if self.report.adversary is not None and self.report.adversary not in names:
            raise ConfigError(f"unknown adversary vehicle {self.report.adversary!r}")

    @property
    def vehicles(self) -> tuple[VehicleSpec, ...]:
        return self.ego_specs + self.agent_specs

    @property
    def ego_indices(self) -> tuple[int, ...]:
        return tuple(range(len(self.ego_specs)))

    @property
    def agent_indices(self) -> tuple[int, ...]:
        n = len(self.ego_specs)
        return tuple(range(n, n + len(self.agent_specs)))

    @property
    def tracked_agent_indices(self) -> tuple[int, ...]:
        return tuple(i for i in self.agent_indices
                     if self.vehicles[i].role == ROLE_TRACKED)

    def index_of(self, name: str) -> int:
        for i, spec in enumerate(self.vehicles):
            if spec.name == name:
                return i
        raise KeyError(name)

    @property
    def adversary_index(self) -> int:
        if self.report.adversary is not None:
            return self.index_of(self.report.adversary)
        tracked = self.tracked_agent_indices
        return tracked[0] if tracked else self.agent_indices[0]


# ---------------------------------------------------------------------------
# sampling operations


def sample_initial_states(config: ScenarioConfig, rng: np.random.Generator) -> SimState:
    """Draw every vehicle's initial (x, y, theta, v) uniformly from its box
    and reset all controller states."""
    kins = []
    ctrls = []
    centers = config.road.lane_centers
    for spec in config.vehicles:
        x, y, theta, v = config.init_sampling[spec.name].sample(rng)
        kins.append(KinematicState(x, y, theta, v))
        if spec.role == ROLE_EGO:
            ctrls.append(initial_ego_state(y, centers))
        elif spec.role == ROLE_TRACKED:
            ctrls.append(AgentControllerState())
        else:
            ctrls.append(None)
    return SimState(clock=0.0, tick=0, vehicles=tuple(kins),
                    controller_states=tuple(ctrls))


def sample_waypoint(space: IntervalBox, rng: np.random.Generator) -> Waypoint:
    """Uniform waypoint from the sampling space; heading normalized."""
    return Waypoint(*space.sample(rng))


def build_path_segment(w: Waypoint, d_leg: float, space: IntervalBox) -> TargetPathSegment:
    """Extend a waypoint into a target path segment of total length d_leg.

    The endpoint lies at d_leg along the waypoint heading. When that leaves
    the sampling box, the segment breaks at the boundary and a second leg
    carries the remaining length along the boundary, heading chosen closest
    to the waypoint heading (ties toward positive rotation). A second exit
    truncates the segment at the box corner.
    """
    if d_leg <= 0.0:
        raise ValueError("d_leg must be positive")
    xlo, xhi = space.x
    ylo, yhi = space.y
    dx, dy = math.cos(w.theta), math.sin(w.theta)

    tx = math.inf if dx == 0.0 else ((xhi - w.x) / dx if dx > 0.0 else (xlo - w.x) / dx)
    ty = math.inf if dy == 0.0 else ((yhi - w.y) / dy if dy > 0.0 else (ylo - w.y) / dy)
    t_hit = min(tx, ty)

    if t_hit >= d_leg:
        end = Waypoint(w.x + d_leg * dx, w.y + d_leg * dy, w.theta, w.v)
        return TargetPathSegment((w, end))

    bx, by = w.x + t_hit * dx, w.y + t_hit * dy
    if tx <= ty:
        candidates = (0.5 * math.pi, -0.5 * math.pi)   # vertical boundary runs along y
        bx = xhi if dx > 0.0 else xlo                  # snap onto the hit boundary
        by = min(max(by, ylo), yhi)
    else:
        candidates = (0.0, math.pi)
        by = yhi if dy > 0.0 else ylo
        bx = min(max(bx, xlo), xhi)
    turns = [wrap_angle(c - w.theta) for c in candidates]
    if abs(abs(turns[0]) - abs(turns[1])) < 1e-12:
        heading2 = candidates[0] if turns[0] > 0.0 else candidates[1]
    else:
        heading2 = candidates[0] if abs(turns[0]) < abs(turns[1]) else candidates[1]

    remaining = d_leg - t_hit
    unit = {0.0: (1.0, 0.0), math.pi: (-1.0, 0.0),
            0.5 * math.pi: (0.0, 1.0), -0.5 * math.pi: (0.0, -1.0)}[heading2]
    ex = min(max(bx + remaining * unit[0], xlo), xhi)
    ey = min(max(by + remaining * unit[1], ylo), yhi)

    mid = Waypoint(bx, by, heading2, w.v)
    end = Waypoint(ex, ey, heading2, w.v)
    if math.hypot(end.x - mid.x, end.y - mid.y) < 1e-12:
        # second leg has no room (boundary corner); stop at the break point
        if math.hypot(mid.x - w.x, mid.y - w.y) < 1e-12:
            raise ValueError("waypoint pinned at a boundary corner")
        return TargetPathSegment((w, mid))
    if math.hypot(mid.x - w.x, mid.y - w.y) < 1e-12:
        # waypoint already on the boundary: turn immediately
        return TargetPathSegment((w, end))
    return TargetPathSegment((w, mid, end))
