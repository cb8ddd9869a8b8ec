"""Built-in scenario definitions.

`case1` puts one ego between two free-roaming adversary agents on a three-lane
road with everything sampled; `case2` pins most vehicles and lets a single
adversary attack an ego that is shielded by a platoon of constant-speed
vehicles in the neighboring lane, which riddles the cost landscape with
local minima.
"""
from __future__ import annotations

import math

from .controllers import (AgentConstParams, AgentTrackParams, EgoControlParams,
                          SensorSpec)
from .scenario import (FalsificationParams, IntervalBox, ReportParams, RoadSpec,
                       ScenarioConfig, SearchParams, VehicleSpec)


def standard_sensors(length: float, width: float, front_range: float,
                     front_fov: float, side_range: float,
                     rear_range: float) -> tuple[SensorSpec, ...]:
    """Five-sensor layout: long-range front cone, two side sensors, and two
    rear-corner sensors angled to scan behind the rear corners."""
    hl, hw = 0.5 * length, 0.5 * width
    quarter = 0.5 * math.pi
    return (
        SensorSpec("front", hl, 0.0, 0.0, front_fov, front_range),
        SensorSpec("left", 0.0, hw, quarter, quarter, side_range),
        SensorSpec("right", 0.0, -hw, -quarter, quarter, side_range),
        SensorSpec("rear_left", -hl, hw, 0.75 * math.pi, quarter, rear_range),
        SensorSpec("rear_right", -hl, -hw, -0.75 * math.pi, quarter, rear_range),
    )


def case1_config() -> ScenarioConfig:
    """Two adversary agents and one ego on a 3-lane straight road."""
    length, width = 4.5, 1.8
    ego = VehicleSpec(
        name="ego", role="ego",
        sensors=standard_sensors(length, width, front_range=60.0,
                                 front_fov=math.pi / 4, side_range=10.0,
                                 rear_range=10.0),
        controller=EgoControlParams(target_speed=15.0))
    a1 = VehicleSpec(name="a1", role="agent_tracked", controller=AgentTrackParams())
    a2 = VehicleSpec(name="a2", role="agent_tracked", controller=AgentTrackParams())
    road = RoadSpec(lanes=3, lane_width=3.5, length=300.0)
    init = {
        "ego": IntervalBox(x=(30.0, 50.0), y=(-1.75, 1.75),
                           theta=(-math.pi / 8, math.pi / 8), v=(10.0, 15.0)),
        "a1": IntervalBox(x=(0.0, 25.0), y=(-3.5, 3.5), theta=(0.0, 0.0),
                          v=(0.0, 15.0)),
        "a2": IntervalBox(x=(10.0, 20.0), y=(-3.5, 3.5), theta=(0.0, 0.0),
                          v=(0.0, 15.0)),
    }
    wspace = IntervalBox(x=(0.0, 300.0), y=(-3.5, 3.5),
                         theta=(-math.pi / 2, math.pi / 2), v=(0.0, 30.0))
    return ScenarioConfig(
        ego_specs=(ego,), agent_specs=(a1, a2), road=road, init_sampling=init,
        waypoint_space=wspace, d_leg=15.0,
        search=SearchParams(), falsification=FalsificationParams(),
        report=ReportParams(adversary="a1", reference_costs={
            "falsification": [0.0001, 12.4794, 100.6082],
            "rrt": [3.9124, 17.7190, 88.9793],
        }),
        rng_seed=0)


def case2_config() -> ScenarioConfig:
    """One adversary attacking an ego shielded by a constant-speed platoon."""
    length, width = 4.5, 1.8
    ego = VehicleSpec(
        name="ego", role="ego",
        sensors=standard_sensors(length, width, front_range=50.0,
                                 front_fov=math.pi / 8, side_range=5.0,
                                 rear_range=7.0),
        controller=EgoControlParams(target_speed=15.0))
    a1 = VehicleSpec(name="a1", role="agent_tracked", controller=AgentTrackParams())
    consts = tuple(
        VehicleSpec(name=f"a{i}", role="agent_constant",
                    controller=AgentConstParams(target_speed=15.0))
        for i in (2, 3, 4))
    road = RoadSpec(lanes=4, lane_width=3.5, length=300.0)
    init = {
        "ego": IntervalBox(x=(40.0, 40.0), y=(-5.25, -5.25), theta=(0.0, 0.0),
                           v=(15.0, 15.0)),
        "a1": IntervalBox(x=(45.0, 45.0), y=(1.25, 6.0), theta=(0.0, 0.0),
                          v=(5.0, 15.0)),
        "a2": IntervalBox(x=(25.0, 25.0), y=(-2.25, -1.75), theta=(0.0, 0.0),
                          v=(15.0, 15.0)),
        "a3": IntervalBox(x=(45.0, 45.0), y=(-2.25, -1.75), theta=(0.0, 0.0),
                          v=(15.0, 15.0)),
        "a4": IntervalBox(x=(65.0, 65.0), y=(-2.25, -1.75), theta=(0.0, 0.0),
                          v=(15.0, 15.0)),
    }
    wspace = IntervalBox(x=(0.0, 300.0), y=(-5.25, 5.25),
                         theta=(-math.pi / 2, math.pi / 2), v=(0.0, 30.0))
    return ScenarioConfig(
        ego_specs=(ego,), agent_specs=(a1,) + consts, road=road,
        init_sampling=init, waypoint_space=wspace, d_leg=15.0,
        search=SearchParams(), falsification=FalsificationParams(),
        report=ReportParams(adversary="a1", reference_costs={
            "falsification": [0.0043, 13.7134, 50.6017],
            "rrt": [4.8955, 10.2571, 15.0856],
        }),
        rng_seed=0)


def default_config() -> ScenarioConfig:
    """Minimal two-vehicle scenario used by --dump-default-config."""
    length, width = 4.5, 1.8
    ego = VehicleSpec(
        name="ego", role="ego",
        sensors=standard_sensors(length, width, front_range=60.0,
                                 front_fov=math.pi / 4, side_range=10.0,
                                 rear_range=10.0),
        controller=EgoControlParams(target_speed=15.0))
    agent = VehicleSpec(name="a1", role="agent_tracked",
                        controller=AgentTrackParams())
    road = RoadSpec(lanes=2, lane_width=3.5, length=200.0)
    init = {
        "ego": IntervalBox(x=(30.0, 40.0), y=(-1.75, -1.75), theta=(0.0, 0.0),
                           v=(10.0, 15.0)),
        "a1": IntervalBox(x=(0.0, 20.0), y=(1.75, 1.75), theta=(0.0, 0.0),
                          v=(5.0, 15.0)),
    }
    wspace = IntervalBox(x=(0.0, 200.0), y=(-3.5, 3.5),
                         theta=(-math.pi / 2, math.pi / 2), v=(0.0, 30.0))
    return ScenarioConfig(ego_specs=(ego,), agent_specs=(agent,), road=road,
                          init_sampling=init, waypoint_space=wspace,
                          report=ReportParams(adversary="a1"))
