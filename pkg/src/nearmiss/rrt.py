"""Search tree over agent maneuvers and the main expansion loop.

Each iteration samples fresh target path segments for the tracked agents,
picks the best few stored configurations to resume from, runs one partial
simulation per candidate, and admits the cheapest outcome to the tree if it
passes the transition and novelty gates.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .acceptance import NoveltyState, TransitionState, is_novel, is_transition_ok
from .cost import CostReport, cost, state_cost
from .errors import ConfigError, UnknownNodeError
from .scenario import (ScenarioConfig, build_path_segment,
                       sample_initial_states, sample_waypoint)
from .simulation import run_partial
from .state import SimState, TraceSegment, Waypoint, concat_traces, empty_trace

ADDED = "added"
REJECTED_TRANSITION = "rejected_transition"
REJECTED_NOVELTY = "rejected_novelty"
NO_CANDIDATES = "no_candidates"


@dataclass
class TreeNode:
    node_id: int
    parent_id: int | None
    state: SimState
    sim_time: float
    cost: CostReport
    segments: dict[int, tuple[Waypoint, ...]] | None = None  # inputs that led here
    trace: TraceSegment | None = None                         # stored history (optional)
    terminal: bool = False                                    # ego collided; not expandable


@dataclass
class SearchTree:
    nodes: list[TreeNode] = field(default_factory=list)
    best_id: int = 0

    def add(self, node: TreeNode) -> None:
        self.nodes.append(node)
        if node.cost.value < self.nodes[self.best_id].cost.value:
            self.best_id = node.node_id

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def best(self) -> TreeNode:
        return self.nodes[self.best_id]

    def node(self, node_id: int) -> TreeNode:
        if not 0 <= node_id < len(self.nodes):
            raise UnknownNodeError(f"no tree node with id {node_id}")
        return self.nodes[node_id]


@dataclass(frozen=True, slots=True)
class IterationRecord:
    index: int
    outcome: str
    parent_id: int | None
    node_id: int | None
    cand_cost: float | None
    novelty: float | None
    temperature: float
    best_cost: float


@dataclass
class SearchResult:
    tree: SearchTree
    best_id: int
    iterations: list[IterationRecord]
    termination: str
    seed: int
    wall_time: float
    best_trace: TraceSegment

    @property
    def best_node(self) -> TreeNode:
        return self.tree.node(self.best_id)

    def summary(self) -> dict:
        best = self.best_node
        return {
            "best_cost": best.cost.value,
            "cost_report": {
                "value": best.cost.value,
                "surface_ratio": best.cost.surface_ratio,
                "rel_speed": best.cost.rel_speed,
                "ttc_min": best.cost.ttc_min,
                "collided": best.cost.collided,
                "at_time": best.cost.at_time,
                "no_risk": best.cost.no_risk,
            },
            "node_count": len(self.tree),
            "iterations": len(self.iterations),
            "seed": self.seed,
            "termination": self.termination,
        }


def select_candidates(tree: SearchTree,
                      segments: Mapping[int, Sequence[Waypoint]],
                      n: int) -> list[int]:
    """Rank expandable nodes for the freshly sampled segments.

    A node qualifies only when every tracked agent sits strictly behind the
    first waypoint of its segment with respect to that waypoint's heading.
    Qualifying nodes are ordered by the summed agent-to-waypoint distances;
    the closest `n` node ids are returned.
    """
    ranked: list[tuple[float, int]] = []
    for node in tree.nodes:
        if node.terminal:
            continue
        state = node.state
        total = 0.0
        ok = True
        for idx, wps in segments.items():
            w0 = wps[0]
            kin = state.vehicles[idx]
            if ((kin.x - w0.x) * math.cos(w0.theta)
                    + (kin.y - w0.y) * math.sin(w0.theta)) >= 0.0:
                ok = False
                break
            total += math.hypot(kin.x - w0.x, kin.y - w0.y)
        if ok:
            ranked.append((total, node.node_id))
    ranked.sort()
    return [node_id for _, node_id in ranked[:n]]


class SearchEngine:
    """Owns the tree, gate states and rng for one search run."""

    def __init__(self, config: ScenarioConfig, seed: int | None = None,
                 transition_enabled: bool = True, novelty_enabled: bool = True):
        self.config = config
        self.seed = config.rng_seed if seed is None else seed
        self.rng = np.random.default_rng(self.seed)
        self.transition_enabled = transition_enabled
        self.novelty_enabled = novelty_enabled
        p = config.search
        self.transition = TransitionState(temperature=p.t0, k_norm=p.k_norm,
                                          alpha=p.alpha, max_fails=p.max_fails)
        self.novelty = NoveltyState(m_neighbors=p.m_neighbors,
                                    max_reject=p.max_reject,
                                    cov_lambda=p.cov_lambda,
                                    cov_refresh=p.cov_refresh)
        root_state = sample_initial_states(config, self.rng)
        root = TreeNode(node_id=0, parent_id=None, state=root_state,
                        sim_time=0.0, cost=state_cost(root_state, config))
        self.tree = SearchTree()
        self.tree.add(root)
        self.iterations: list[IterationRecord] = []

    def sample_segments(self) -> dict[int, tuple[Waypoint, ...]]:
        segs: dict[int, tuple[Waypoint, ...]] = {}
        for idx in self.config.tracked_agent_indices:
            w = sample_waypoint(self.config.waypoint_space, self.rng)
            seg = build_path_segment(w, self.config.d_leg, self.config.waypoint_space)
            segs[idx] = seg.waypoints
        return segs

    def expand(self, segments: Mapping[int, tuple[Waypoint, ...]]) -> IterationRecord:
        """One expansion attempt with the given target segments."""
        p = self.config.search
        candidates = select_candidates(self.tree, segments, p.n_candidates)
        index = len(self.iterations)
        best_cost = self.tree.best.cost.value
        if not candidates:
            rec = IterationRecord(index, NO_CANDIDATES, None, None, None, None,
                                  self.transition.temperature, best_cost)
            self.iterations.append(rec)
            return rec

        evaluated: list[tuple[float, int, TraceSegment, CostReport]] = []
        for node_id in candidates:
            node = self.tree.node(node_id)
            trace = run_partial(node.state, segments, self.config, p.dt_expand)
            report = cost(trace, self.config)
            evaluated.append((report.value, node_id, trace, report))
        evaluated.sort(key=lambda item: (item[0], item[1]))
        c_cand, parent_id, trace, report = evaluated[0]
        parent = self.tree.node(parent_id)
        c_prev = parent.cost.value

        if self.transition_enabled:
            ok, self.transition = is_transition_ok(self.transition, c_prev,
                                                   c_cand, self.rng)
            if not ok:
                rec = IterationRecord(index, REJECTED_TRANSITION, parent_id, None,
                                      c_cand, None, self.transition.temperature,
                                      best_cost)
                self.iterations.append(rec)
                return rec

        eta = None
        if self.novelty_enabled:
            k_start = trace.start_state.tick + 1
            k_end = trace.final_state.tick
            ok, _ = is_novel(self.novelty, trace, self.config.ego_indices,
                             self.config.agent_indices, k_start, k_end,
                             c_prev, c_cand)
            eta = self.novelty.last_values[-1]
            if not ok:
                rec = IterationRecord(index, REJECTED_NOVELTY, parent_id, None,
                                      c_cand, eta, self.transition.temperature,
                                      best_cost)
                self.iterations.append(rec)
                return rec

        wrecked = trace.final_state.wrecked()
        tracked = self.config.tracked_agent_indices
        dead_end = (any(ev.involves_any(self.config.ego_indices)
                        for ev in trace.collisions)
                    or all(idx in wrecked for idx in tracked))
        node = TreeNode(
            node_id=len(self.tree),
            parent_id=parent_id,
            state=trace.final_state,
            sim_time=trace.final_state.clock,
            cost=report,
            segments=dict(segments),
            trace=trace if p.store_history else None,
            terminal=dead_end,
        )
        self.tree.add(node)
        rec = IterationRecord(index, ADDED, parent_id, node.node_id, c_cand, eta,
                              self.transition.temperature,
                              self.tree.best.cost.value)
        self.iterations.append(rec)
        return rec

    def run(self, time_budget: float | None = None,
            max_iterations: int | None = None) -> SearchResult:
        p = self.config.search
        budget = p.time_budget if time_budget is None else time_budget
        start = time.perf_counter()
        termination = None
        while True:
            if self.tree.best.cost.value < p.cost_threshold:
                termination = "cost_threshold"
                break
            if len(self.tree) >= p.max_nodes:
                termination = "max_nodes"
                break
            if time.perf_counter() - start > budget:
                termination = "time_budget"
                break
            if max_iterations is not None and len(self.iterations) >= max_iterations:
                termination = "max_iterations"
                break
            self.expand(self.sample_segments())
        wall = time.perf_counter() - start
        best_trace = replay(self.tree, self.tree.best_id, self.config)
        return SearchResult(tree=self.tree, best_id=self.tree.best_id,
                            iterations=self.iterations, termination=termination,
                            seed=self.seed, wall_time=wall, best_trace=best_trace)


def search(config: ScenarioConfig, seed: int | None = None,
           time_budget: float | None = None) -> SearchResult:
    """Run one full tree search and return the best configuration found."""
    if config is None:
        raise ConfigError("missing scenario configuration")
    return SearchEngine(config, seed=seed).run(time_budget=time_budget)


def replay(tree: SearchTree, node_id: int, config: ScenarioConfig) -> TraceSegment:
    """Root-to-node trace, from stored histories where present, otherwise by
    re-running each edge's partial simulation (bit-identical by determinism)."""
    node = tree.node(node_id)
    chain: list[TreeNode] = []
    while node.parent_id is not None:
        chain.append(node)
        node = tree.node(node.parent_id)
    chain.reverse()
    if not chain:
        return empty_trace(tree.node(node_id).state, config.search.dt_sim)
    pieces: list[TraceSegment] = []
    for child in chain:
        if child.trace is not None:
            pieces.append(child.trace)
            continue
        parent = tree.node(child.parent_id)
        pieces.append(run_partial(parent.state, child.segments, config,
                                  config.search.dt_expand))
    return concat_traces(pieces)
