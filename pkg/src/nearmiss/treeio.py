"""Search-tree persistence: a replayable JSON dump plus an edge-list CSV.

The JSON dump stores the scenario, the root snapshot and every edge's input
segments, which is enough to replay any node bit-identically. The CSV holds
the flat edge list (id, parent, sim_time, cost) for quick analysis.
"""
from __future__ import annotations

import json
from pathlib import Path

from .config_io import config_from_dict, config_to_dict
from .controllers import AgentControllerState, EgoControllerState
from .errors import ConfigError
from .rrt import SearchResult, SearchTree, TreeNode
from .scenario import ScenarioConfig
from .state import CollisionEvent, KinematicState, SimState, Waypoint
from .cost import CostReport


def _ctrl_to_dict(ctrl) -> dict | None:
    if ctrl is None:
        return None
    if isinstance(ctrl, EgoControllerState):
        return {"kind": "ego", "mode": ctrl.mode,
                "last_risk_time": ctrl.last_risk_time,
                "maneuver_zone": ctrl.maneuver_zone,
                "ref_lane_y": ctrl.ref_lane_y}
    if isinstance(ctrl, AgentControllerState):
        return {"kind": "agent", "waypoint_index": ctrl.waypoint_index}
    raise TypeError(f"unknown controller state {type(ctrl).__name__}")


def _ctrl_from_dict(doc: dict | None):
    if doc is None:
        return None
    if doc["kind"] == "ego":
        return EgoControllerState(mode=doc["mode"],
                                  last_risk_time=doc["last_risk_time"],
                                  maneuver_zone=doc["maneuver_zone"],
                                  ref_lane_y=doc["ref_lane_y"])
    return AgentControllerState(waypoint_index=doc["waypoint_index"])


def state_to_dict(state: SimState) -> dict:
    return {
        "clock": state.clock,
        "tick": state.tick,
        "vehicles": [[k.x, k.y, k.theta, k.v, k.steer] for k in state.vehicles],
        "controller_states": [_ctrl_to_dict(c) for c in state.controller_states],
        "collisions": [[ev.time, ev.tick, ev.first, ev.second, ev.rel_speed,
                        ev.surface_ratio, ev.side] for ev in state.collisions],
    }


def state_from_dict(doc: dict) -> SimState:
    return SimState(
        clock=doc["clock"],
        tick=doc["tick"],
        vehicles=tuple(KinematicState(*row) for row in doc["vehicles"]),
        controller_states=tuple(_ctrl_from_dict(c)
                                for c in doc["controller_states"]),
        collisions=tuple(CollisionEvent(time=r[0], tick=r[1], first=r[2],
                                        second=r[3], rel_speed=r[4],
                                        surface_ratio=r[5], side=r[6])
                         for r in doc["collisions"]),
    )


def _cost_to_dict(report: CostReport) -> dict:
    return {"value": report.value, "surface_ratio": report.surface_ratio,
            "rel_speed": report.rel_speed, "ttc_min": report.ttc_min,
            "collided": report.collided, "at_time": report.at_time,
            "no_risk": report.no_risk}


def dump_tree_json(result: SearchResult, config: ScenarioConfig, path) -> None:
    nodes = []
    for node in result.tree.nodes:
        entry = {
            "id": node.node_id,
            "parent": node.parent_id,
            "sim_time": node.sim_time,
            "cost": _cost_to_dict(node.cost),
            "terminal": node.terminal,
        }
        if node.segments is not None:
            entry["segments"] = {
                str(idx): [[w.x, w.y, w.theta, w.v] for w in wps]
                for idx, wps in node.segments.items()}
        nodes.append(entry)
    doc = {
        "config": config_to_dict(config),
        "seed": result.seed,
        "best_id": result.best_id,
        "root_state": state_to_dict(result.tree.node(0).state),
        "nodes": nodes,
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_tree_json(path) -> tuple[SearchTree, ScenarioConfig]:
    """Rebuild a replayable tree: node states beyond the root stay unset and
    are reconstructed by replaying edges."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load tree dump {path}: {exc}") from exc
    config = config_from_dict(doc["config"])
    root_state = state_from_dict(doc["root_state"])
    tree = SearchTree()
    for entry in doc["nodes"]:
        segments = None
        if "segments" in entry:
            segments = {int(idx): tuple(Waypoint(*row) for row in rows)
                        for idx, rows in entry["segments"].items()}
        c = entry["cost"]
        report = CostReport(value=c["value"], surface_ratio=c["surface_ratio"],
                            rel_speed=c["rel_speed"], ttc_min=c["ttc_min"],
                            collided=c["collided"], at_time=c["at_time"],
                            no_risk=c["no_risk"])
        node = TreeNode(node_id=entry["id"], parent_id=entry["parent"],
                        state=root_state if entry["parent"] is None else None,
                        sim_time=entry["sim_time"], cost=report,
                        segments=segments, terminal=entry["terminal"])
        tree.nodes.append(node)
    tree.best_id = doc["best_id"]
    return tree, config


def rehydrate_states(tree: SearchTree, config: ScenarioConfig) -> None:
    """Fill in node states by replaying edges top-down (parents precede
    children by construction)."""
    from .simulation import run_partial
    for node in tree.nodes:
        if node.state is not None or node.parent_id is None:
            continue
        parent = tree.node(node.parent_id)
        trace = run_partial(parent.state, node.segments, config,
                            config.search.dt_expand)
        node.state = trace.final_state


def dump_tree_csv(result: SearchResult, path) -> None:
    lines = ["id,parent,sim_time,cost"]
    for node in result.tree.nodes:
        parent = "" if node.parent_id is None else str(node.parent_id)
        lines.append(f"{node.node_id},{parent},{node.sim_time!r},{node.cost.value!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
