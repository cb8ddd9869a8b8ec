"""Vehicle controllers: sector sensing, the multi-mode ego collision-avoidance
supervisor, Stanley lane keeping, speed tracking, and the agents' move-to-pose
waypoint tracker.

All controllers are pure functions from (state, report) to controls plus a new
controller-state value; nothing here owns mutable state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Sequence

from . import geometry
from .geometry import wrap_angle
from .state import KinematicState, SimState

if TYPE_CHECKING:  # pragma: no cover
    from .scenario import VehicleSpec
    from .state import Waypoint

# occupancy/risk zones around the ego vehicle
FRONT = "front"
FRONT_LEFT = "front_left"
FRONT_RIGHT = "front_right"
LEFT = "left"
RIGHT = "right"
REAR_LEFT = "rear_left"
REAR_RIGHT = "rear_right"
ZONES = (FRONT, FRONT_LEFT, FRONT_RIGHT, LEFT, RIGHT, REAR_LEFT, REAR_RIGHT)

_MIRROR_ZONE = {
    FRONT: FRONT,
    FRONT_LEFT: FRONT_RIGHT,
    FRONT_RIGHT: FRONT_LEFT,
    LEFT: RIGHT,
    RIGHT: LEFT,
    REAR_LEFT: REAR_RIGHT,
    REAR_RIGHT: REAR_LEFT,
}

# ego controller modes
NORMAL = "normal"
BRAKE_STRAIGHT = "brake_straight"
BRAKE_LEFT = "brake_left"
BRAKE_RIGHT = "brake_right"
ACCEL_STRAIGHT = "accel_straight"
ACCEL_LEFT = "accel_left"
ACCEL_RIGHT = "accel_right"
MODES = (NORMAL, BRAKE_STRAIGHT, BRAKE_LEFT, BRAKE_RIGHT,
         ACCEL_STRAIGHT, ACCEL_LEFT, ACCEL_RIGHT)

_MIRROR_MODE = {
    NORMAL: NORMAL,
    BRAKE_STRAIGHT: BRAKE_STRAIGHT,
    BRAKE_LEFT: BRAKE_RIGHT,
    BRAKE_RIGHT: BRAKE_LEFT,
    ACCEL_STRAIGHT: ACCEL_STRAIGHT,
    ACCEL_LEFT: ACCEL_RIGHT,
    ACCEL_RIGHT: ACCEL_LEFT,
}

# zone a maneuver moves into; entering it while occupied aborts the maneuver
MANEUVER_ZONE = {
    BRAKE_LEFT: REAR_LEFT,
    BRAKE_RIGHT: REAR_RIGHT,
    ACCEL_LEFT: FRONT_LEFT,
    ACCEL_RIGHT: FRONT_RIGHT,
    ACCEL_STRAIGHT: FRONT,
}


@dataclass(frozen=True, slots=True)
class SensorSpec:
    """One sector sensor in the ego body frame."""
    zone: str                    # which report zone this sensor feeds
    offset_x: float              # mount position, body frame, m
    offset_y: float
    boresight: float             # center of the field of view, body frame, rad
    fov: float                   # full opening angle, rad
    range_m: float

    def __post_init__(self):
        if not 0.0 < self.fov <= geometry.TWO_PI:
            raise ValueError(f"sensor fov must be in (0, 2*pi], got {self.fov}")
        if self.range_m <= 0.0:
            raise ValueError("sensor range must be positive")
        if self.zone not in (FRONT, LEFT, RIGHT, REAR_LEFT, REAR_RIGHT):
            raise ValueError(f"unknown sensor zone {self.zone!r}")


@dataclass(frozen=True, slots=True)
class EgoControlParams:
    """Gains and thresholds for the ego speed/steering/supervisor stack."""
    target_speed: float = 15.0
    k_p: float = 1.0             # proportional speed gain
    stanley_k: float = 2.5       # cross-track gain
    stanley_eps: float = 0.1     # softening speed in the cross-track term
    cooldown: float = 1.0        # s without risk before returning to normal
    ttc_risk: float = 3.0        # front zones: risk when ttc below this, s
    rear_risk_fraction: float = 0.5  # rear/side zones: risk within this fraction of range


@dataclass(frozen=True, slots=True)
class AgentTrackParams:
    """Gains for the move-to-pose waypoint tracker.

    The speed gain needs to be stiff enough that the vehicle arrives at a
    waypoint near the commanded creep speed; a soft gain carries several m/s
    into the capture ring and orbits instead of settling.
    """
    k_rho: float = 1.0
    k_alpha: float = 4.0
    k_beta: float = -1.5
    k_p: float = 3.0
    capture_radius: float = 1.0

    def __post_init__(self):
        if not (self.k_rho > 0.0 and self.k_beta < 0.0 and self.k_alpha > self.k_rho):
            raise ValueError("move-to-pose gains must satisfy k_rho > 0, "
                             "k_beta < 0, k_alpha > k_rho")


@dataclass(frozen=True, slots=True)
class AgentConstParams:
    """Constant-speed straight-line agent."""
    target_speed: float = 15.0
    k_p: float = 1.0


@dataclass(frozen=True, slots=True)
class ZoneInfo:
    occupied: bool = False
    risk: bool = False
    target: int | None = None              # nearest occupant vehicle index
    rel_pos: tuple[float, float] | None = None   # ego body frame, m
    rel_vel: tuple[float, float] | None = None   # ego body frame, m/s
    distance: float | None = None          # sensor mount to footprint, m


@dataclass(frozen=True, slots=True)
class OccupancyReport:
    zones: dict[str, ZoneInfo]

    def occupied(self, zone: str) -> bool:
        return self.zones[zone].occupied

    def risk(self, zone: str) -> bool:
        return self.zones[zone].risk


@dataclass(frozen=True, slots=True)
class EgoControllerState:
    mode: str = NORMAL
    last_risk_time: float | None = None
    maneuver_zone: str | None = None
    ref_lane_y: float = 0.0


@dataclass(frozen=True, slots=True)
class AgentControllerState:
    waypoint_index: int = 0


def nearest_lane_center(y: float, lane_centers: Sequence[float]) -> float:
    return min(lane_centers, key=lambda c: (abs(y - c), c))


def initial_ego_state(y: float, lane_centers: Sequence[float]) -> EgoControllerState:
    return EgoControllerState(ref_lane_y=nearest_lane_center(y, lane_centers))


def mirror_report(report: OccupancyReport) -> OccupancyReport:
    """Reflect a report across the vehicle's longitudinal axis (tests)."""
    zones = {}
    for name, info in report.zones.items():
        rp = (info.rel_pos[0], -info.rel_pos[1]) if info.rel_pos else None
        rv = (info.rel_vel[0], -info.rel_vel[1]) if info.rel_vel else None
        zones[_MIRROR_ZONE[name]] = replace(info, rel_pos=rp, rel_vel=rv)
    return OccupancyReport(zones)


def mirror_mode(mode: str) -> str:
    return _MIRROR_MODE[mode]


# ---------------------------------------------------------------------------
# sensing


def sense(state: SimState, ego_index: int, specs: Sequence["VehicleSpec"],
          params: EgoControlParams, ttc_dt: float = 0.05) -> OccupancyReport:
    """Build the per-zone occupancy/risk report for one ego vehicle.

    A target occupies a sensor's zone when any part of its footprint
    boundary lies inside the sensor's circular sector. Targets seen by the
    front sensor are split into front / front_left / front_right by the
    bearing interval of their footprint: straddling the boresight counts as
    front, otherwise the side of the interval decides. Front zones flag risk
    when the projected time-to-collision falls below `params.ttc_risk`; the
    remaining zones flag risk on proximity within
    `params.rear_risk_fraction` of the sensor range.
    """
    ego_spec = specs[ego_index]
    ego = state.vehicles[ego_index]
    cth, sth = math.cos(ego.theta), math.sin(ego.theta)

    best: dict[str, tuple] = {}
    risky: dict[str, bool] = {z: False for z in ZONES}

    def consider(zone, dist, target_idx, kin, is_risk):
        if is_risk:
            risky[zone] = True
        cur = best.get(zone)
        if cur is None or dist < cur[0]:
            dx, dy = kin.x - ego.x, kin.y - ego.y
            rel_pos = (dx * cth + dy * sth, -dx * sth + dy * cth)
            vx = kin.v * math.cos(kin.theta) - ego.v * cth
            vy = kin.v * math.sin(kin.theta) - ego.v * sth
            rel_vel = (vx * cth + vy * sth, -vx * sth + vy * cth)
            best[zone] = (dist, target_idx, rel_pos, rel_vel)

    for j, kin in enumerate(state.vehicles):
        if j == ego_index:
            continue
        spec = specs[j]
        half_diag = 0.5 * math.hypot(spec.length, spec.width)
        corners = None
        for sensor in ego_spec.sensors:
            apex_x = ego.x + sensor.offset_x * cth - sensor.offset_y * sth
            apex_y = ego.y + sensor.offset_x * sth + sensor.offset_y * cth
            reach = sensor.range_m + half_diag
            if (kin.x - apex_x) ** 2 + (kin.y - apex_y) ** 2 > reach * reach:
                continue
            if corners is None:
                corners = geometry.rect_corners(kin.x, kin.y, kin.theta,
                                                spec.length, spec.width)
            bore = ego.theta + sensor.boresight
            if not geometry.rect_touches_sector(corners, apex_x, apex_y, bore,
                                                0.5 * sensor.fov, sensor.range_m):
                continue
            dist = geometry.point_to_rect_distance(apex_x, apex_y, kin.x, kin.y,
                                                   kin.theta, spec.length, spec.width)
            if sensor.zone == FRONT:
                bearings = [wrap_angle(math.atan2(cy - apex_y, cx - apex_x) - bore)
                            for cx, cy in corners]
                bmin, bmax = min(bearings), max(bearings)
                if bmin <= 0.0 <= bmax or bmax - bmin > math.pi:
                    zone = FRONT
                elif bmin > 0.0:
                    zone = FRONT_LEFT
                else:
                    zone = FRONT_RIGHT
                hit = geometry.ttc_first_overlap(
                    ego.x, ego.y, ego.theta, ego.v, ego_spec.length, ego_spec.width,
                    kin.x, kin.y, kin.theta, kin.v, spec.length, spec.width,
                    params.ttc_risk, ttc_dt)
                consider(zone, dist, j, kin, hit is not None)
            else:
                consider(sensor.zone, dist, j, kin,
                         dist <= params.rear_risk_fraction * sensor.range_m)

    zones = {}
    for z in ZONES:
        if z in best:
            dist, idx, rel_pos, rel_vel = best[z]
            zones[z] = ZoneInfo(True, risky[z], idx, rel_pos, rel_vel, dist)
        else:
            zones[z] = ZoneInfo()
    return OccupancyReport(zones)


# ---------------------------------------------------------------------------
# low-level control laws


def move_to_pose(current: KinematicState, target: "Waypoint",
                 gains: AgentTrackParams, wheelbase: float,
                 max_speed: float, max_accel: float, max_decel: float,
                 max_steer: float) -> tuple[float, float]:
    """Polar-coordinate pose controller toward one waypoint.

    Commands a speed proportional to the remaining distance, capped by the
    waypoint target speed and the vehicle limit, and a steering angle derived
    from the commanded yaw rate.
    """
    dx = target.x - current.x
    dy = target.y - current.y
    rho = math.hypot(dx, dy)
    if rho == 0.0:
        raise ValueError("move-to-pose target coincides with current position")
    alpha = wrap_angle(math.atan2(dy, dx) - current.theta)
    beta = wrap_angle(target.theta - current.theta - alpha)
    v_cmd = min(gains.k_rho * rho, target.v, max_speed)
    omega = gains.k_alpha * alpha + gains.k_beta * beta
    v_eff = max(current.v, 0.1)
    steer = math.atan(omega * wheelbase / v_eff)
    steer = min(max(steer, -max_steer), max_steer)
    accel = gains.k_p * (v_cmd - current.v)
    accel = min(max(accel, -max_decel), max_accel)
    return accel, steer


def _waypoint_reached(current: KinematicState, wp: "Waypoint", ring: float,
                      corridor: float) -> bool:
    """Capture ring, or crossing the waypoint's half-plane near the path.

    The half-plane test rescues passes that the minimum turning radius makes
    impossible to bring inside the ring; without it the tracker orbits a
    missed waypoint forever.
    """
    dx, dy = wp.x - current.x, wp.y - current.y
    if dx * dx + dy * dy < ring * ring:
        return True
    c, s = math.cos(wp.theta), math.sin(wp.theta)
    along = -(dx * c + dy * s)
    cross = abs(dx * s - dy * c)
    return along > 0.0 and cross < corridor


def track_waypoints(current: KinematicState, waypoints: Sequence["Waypoint"],
                    ctrl: AgentControllerState, gains: AgentTrackParams,
                    wheelbase: float, max_speed: float, max_accel: float,
                    max_decel: float, max_steer: float
                    ) -> tuple[float, float, AgentControllerState]:
    """Advance through a waypoint list with the move-to-pose law.

    Intermediate waypoints advance on capture or pass-through; reaching the
    last one latches a done state (index one past the end) in which the
    vehicle brakes to a stop.
    """
    corridor = 1.5 * gains.capture_radius
    i = ctrl.waypoint_index
    n = len(waypoints)
    while i < n - 1 and _waypoint_reached(current, waypoints[i],
                                          gains.capture_radius, corridor):
        i += 1
    if i == n - 1 and _waypoint_reached(current, waypoints[i],
                                        0.5 * gains.capture_radius, corridor):
        i = n
    if i >= n:  # segment finished: brake to a stop
        accel = min(max(gains.k_p * (0.0 - current.v), -max_decel), max_accel)
        steer = 0.0
    else:
        accel, steer = move_to_pose(current, waypoints[i], gains, wheelbase,
                                    max_speed, max_accel, max_decel, max_steer)
    new_ctrl = ctrl if i == ctrl.waypoint_index else AgentControllerState(i)
    return accel, steer, new_ctrl


def ego_longitudinal(current: KinematicState, mode: str,
                     params: EgoControlParams, max_accel: float,
                     max_decel: float) -> float:
    """Speed control: P-law in normal mode, full braking/throttle otherwise."""
    if mode in (BRAKE_STRAIGHT, BRAKE_LEFT, BRAKE_RIGHT):
        return -max_decel
    if mode in (ACCEL_STRAIGHT, ACCEL_LEFT, ACCEL_RIGHT):
        return max_accel
    accel = params.k_p * (params.target_speed - current.v)
    return min(max(accel, -max_decel), max_accel)


def ego_lateral(current: KinematicState, ref_y: float, wheelbase: float,
                params: EgoControlParams, max_steer: float) -> float:
    """Stanley steering toward the straight reference line y = ref_y.

    Cross-track error is measured at the front axle and is positive when the
    vehicle is to the right of the reference.
    """
    fy = current.y + 0.5 * wheelbase * math.sin(current.theta)
    e = ref_y - fy
    psi = wrap_angle(-current.theta)
    steer = psi + math.atan(params.stanley_k * e / (current.v + params.stanley_eps))
    return min(max(steer, -max_steer), max_steer)


# ---------------------------------------------------------------------------
# collision-avoidance supervisor


def _threat_side_preference(report: OccupancyReport) -> str | None:
    """Escape direction for a central front threat: away from its lateral
    offset; None when the threat is dead ahead."""
    info = report.zones[FRONT]
    if info.rel_pos is None or info.rel_pos[1] == 0.0:
        return None
    return RIGHT if info.rel_pos[1] > 0.0 else LEFT


def _decide(report: OccupancyReport) -> str | None:
    """Decision table over the zone risk flags; None when no rule applies."""
    risk = report.risk
    occ = report.occupied

    if risk(FRONT) or (risk(FRONT_LEFT) and risk(FRONT_RIGHT)):
        left_free = not occ(REAR_LEFT)
        right_free = not occ(REAR_RIGHT)
        if left_free and right_free:
            pref = _threat_side_preference(report) if risk(FRONT) else None
            if pref == LEFT:
                return BRAKE_LEFT
            if pref == RIGHT:
                return BRAKE_RIGHT
            return BRAKE_STRAIGHT
        if left_free:
            return BRAKE_LEFT
        if right_free:
            return BRAKE_RIGHT
        return BRAKE_STRAIGHT

    if risk(FRONT_LEFT):
        return BRAKE_RIGHT if not occ(REAR_RIGHT) else BRAKE_STRAIGHT
    if risk(FRONT_RIGHT):
        return BRAKE_LEFT if not occ(REAR_LEFT) else BRAKE_STRAIGHT

    if risk(REAR_LEFT) and risk(REAR_RIGHT):
        if not occ(FRONT) and not occ(FRONT_LEFT) and not occ(FRONT_RIGHT):
            return ACCEL_STRAIGHT
        if not occ(FRONT) and not risk(FRONT_LEFT) and not risk(FRONT_RIGHT):
            return ACCEL_STRAIGHT
        return BRAKE_STRAIGHT
    if risk(REAR_LEFT):
        if not occ(FRONT) and not occ(FRONT_RIGHT):
            return ACCEL_RIGHT
        if not occ(FRONT) and not risk(FRONT_RIGHT):
            return ACCEL_STRAIGHT
        return BRAKE_RIGHT if not occ(REAR_RIGHT) else BRAKE_STRAIGHT
    if risk(REAR_RIGHT):
        if not occ(FRONT) and not occ(FRONT_LEFT):
            return ACCEL_LEFT
        if not occ(FRONT) and not risk(FRONT_LEFT):
            return ACCEL_STRAIGHT
        return BRAKE_LEFT if not occ(REAR_LEFT) else BRAKE_STRAIGHT
    return None


def supervisor_step(prev: EgoControllerState, report: OccupancyReport,
                    clock: float, params: EgoControlParams) -> EgoControllerState:
    """One tick of the mode supervisor.

    Fresh risks drive the decision table; without risk the current maneuver is
    held until `cooldown` seconds have passed since the last risk, then the
    mode returns to normal. A maneuver whose destination zone becomes
    occupied degrades to straight emergency braking. Side-zone risks have no
    entry in the decision table and do not reset the risk clock.
    """
    mode = _decide(report)
    last_risk = clock if mode is not None else prev.last_risk_time
    if mode is None:
        if (prev.mode != NORMAL and last_risk is not None
                and clock - last_risk < params.cooldown):
            mode = prev.mode
        else:
            mode = NORMAL

    zone = MANEUVER_ZONE.get(mode)
    if zone is not None and report.occupied(zone):
        mode = BRAKE_STRAIGHT
        zone = None
    return EgoControllerState(mode=mode, last_risk_time=last_risk,
                              maneuver_zone=zone, ref_lane_y=prev.ref_lane_y)


def _update_ref_lane(prev_mode: str, new_mode: str, y: float,
                     lane_centers: Sequence[float], lane_width: float,
                     ref_y: float) -> float:
    if new_mode == prev_mode:
        return ref_y
    if new_mode in (BRAKE_LEFT, ACCEL_LEFT):
        return nearest_lane_center(y, lane_centers) + lane_width
    if new_mode in (BRAKE_RIGHT, ACCEL_RIGHT):
        return nearest_lane_center(y, lane_centers) - lane_width
    if new_mode == NORMAL:
        return nearest_lane_center(y, lane_centers)
    return ref_y  # straight brake/accel keeps the current reference


def ego_tick(state: SimState, ego_index: int, specs: Sequence["VehicleSpec"],
             params: EgoControlParams, lane_centers: Sequence[float],
             lane_width: float, ttc_dt: float
             ) -> tuple[float, float, EgoControllerState]:
    """Full ego controller pass: sense, supervise, steer, accelerate."""
    spec = specs[ego_index]
    kin = state.vehicles[ego_index]
    prev: EgoControllerState = state.controller_states[ego_index]
    report = sense(state, ego_index, specs, params, ttc_dt)
    ctrl = supervisor_step(prev, report, state.clock, params)
    ref_y = _update_ref_lane(prev.mode, ctrl.mode, kin.y, lane_centers,
                             lane_width, prev.ref_lane_y)
    ctrl = replace(ctrl, ref_lane_y=ref_y)
    accel = ego_longitudinal(kin, ctrl.mode, params, spec.max_accel, spec.max_decel)
    steer = ego_lateral(kin, ref_y, spec.wheelbase, params, spec.max_steer)
    return accel, steer, ctrl
