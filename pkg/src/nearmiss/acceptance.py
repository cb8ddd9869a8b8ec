"""Probabilistic acceptance gates for tree expansion.

Two independent gates decide whether a freshly simulated configuration joins
the tree: a Metropolis-style transition test with adaptive temperature, and a
novelty test that compares the candidate's relative-state vectors against an
archive of everything seen so far using Mahalanobis nearest-neighbor sums.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .geometry import wrap_angle
from .state import SimState, TraceSegment

_T_FLOOR = 1e-300  # keeps the exponent finite after long accept streaks


@dataclass(frozen=True, slots=True)
class TransitionState:
    """Persistent state of the transition test."""
    temperature: float
    fails: int = 0
    k_norm: float = 1.0
    alpha: float = 2.0
    max_fails: int = 10


def is_transition_ok(ts: TransitionState, c_prev: float, c_cand: float,
                     rng: np.random.Generator) -> tuple[bool, TransitionState]:
    """Accept a candidate configuration based on the change in cost.

    Cost decreases are always accepted and leave the state untouched. Cost
    increases are accepted with probability exp((c_prev - c_cand) / (K*T));
    acceptance cools the temperature (T / alpha), and more than `max_fails`
    consecutive rejections reheat it (T * alpha).
    """
    if c_cand < c_prev:
        return True, ts
    t = max(ts.temperature, _T_FLOOR)
    if rng.random() < math.exp((c_prev - c_cand) / (ts.k_norm * t)):
        return True, replace(ts, temperature=ts.temperature / ts.alpha, fails=0)
    if ts.fails > ts.max_fails:
        return False, replace(ts, temperature=ts.temperature * ts.alpha, fails=0)
    return False, replace(ts, fails=ts.fails + 1)


class NoveltyState:
    """Archive of relative-state vectors plus the novelty decision state.

    The archive stores one 8-vector per (ego, agent, simulation tick):
    relative pose/speed and their one-step change. Neighbor queries for a
    vector at tick k only see vectors archived for earlier ticks. Distances
    are Mahalanobis under the archive's global sample covariance
    (Tikhonov-regularized, refreshed every `cov_refresh` insertions).
    """

    def __init__(self, m_neighbors: int = 5, max_reject: int = 10,
                 cov_lambda: float = 1e-6, cov_refresh: int = 50):
        self.m_neighbors = m_neighbors
        self.max_reject = max_reject
        self.cov_lambda = cov_lambda
        self.cov_refresh = cov_refresh
        self.last_values: deque[float] = deque(maxlen=10)
        self.num_rejections = 0
        self._vectors = np.empty((0, 8))
        self._ticks = np.empty(0, dtype=np.int64)
        self._pending: list[np.ndarray] = []
        self._pending_ticks: list[int] = []
        self._since_refresh = 0
        self._whitener = np.eye(8)

    # -- archive -----------------------------------------------------------

    @property
    def size(self) -> int:
        return len(self._ticks) + len(self._pending)

    def _flush(self) -> None:
        if self._pending:
            self._vectors = np.vstack([self._vectors, np.asarray(self._pending)])
            self._ticks = np.concatenate(
                [self._ticks, np.asarray(self._pending_ticks, dtype=np.int64)])
            self._pending.clear()
            self._pending_ticks.clear()

    def insert(self, vector: np.ndarray, tick: int) -> None:
        self._pending.append(np.asarray(vector, dtype=float))
        self._pending_ticks.append(tick)
        self._since_refresh += 1
        if self._since_refresh >= self.cov_refresh:
            self._flush()
            self._refresh_whitener()
            self._since_refresh = 0

    def _refresh_whitener(self) -> None:
        if len(self._vectors) < 2:
            self._whitener = np.eye(8)
            return
        cov = np.cov(self._vectors.T)
        cov = cov + self.cov_lambda * np.eye(8)
        try:
            inv = np.linalg.inv(cov)
            self._whitener = np.linalg.cholesky(inv)
        except np.linalg.LinAlgError:
            self._whitener = np.eye(8)

    def vectors_before(self, tick: int) -> np.ndarray:
        self._flush()
        return self._vectors[self._ticks < tick]


def novelty_value(x: np.ndarray, pool: np.ndarray, whitener: np.ndarray,
                  m_neighbors: int) -> float:
    """Sum of Mahalanobis distances from x to its nearest archived vectors.

    The sum runs over the m+1 closest pool members (all of them when the
    pool is smaller); an empty pool yields +inf, i.e. maximal novelty.
    """
    if len(pool) == 0:
        return math.inf
    proj = (pool - x) @ whitener
    d = np.sqrt(np.einsum("ij,ij->i", proj, proj))
    keep = m_neighbors + 1
    if len(d) <= keep:
        return float(d.sum())
    return float(np.partition(d, keep - 1)[:keep].sum())


def relative_state_vector(ego_now, agent_now, ego_prev, agent_prev) -> np.ndarray:
    """Relative pose/speed between an ego-agent pair plus its one-step change."""
    rel = (ego_now.x - agent_now.x, ego_now.y - agent_now.y,
           wrap_angle(ego_now.theta - agent_now.theta), ego_now.v - agent_now.v)
    prev = (ego_prev.x - agent_prev.x, ego_prev.y - agent_prev.y,
            wrap_angle(ego_prev.theta - agent_prev.theta), ego_prev.v - agent_prev.v)
    return np.array([rel[0], rel[1], rel[2], rel[3],
                     rel[0] - prev[0], rel[1] - prev[1],
                     wrap_angle(rel[2] - prev[2]), rel[3] - prev[3]])


def is_novel(ns: NoveltyState, trace: TraceSegment, ego_indices: Sequence[int],
             agent_indices: Sequence[int], k_start: int, k_end: int,
             c_prev: float, c_cand: float) -> tuple[bool, NoveltyState]:
    """Novelty gate over one partial-simulation trace.

    Every ego-agent relative-state vector of the trace is scored against the
    archive and then archived (accepted or not). The candidate is accepted on
    a clear cost improvement, after too many consecutive rejections, during
    the warm-up window, or when its peak novelty beats the mean of the last
    ten novelty values.
    """
    if k_end - k_start + 1 != trace.n_ticks:
        raise ValueError("tick range does not match the trace length")
    peak = -math.inf
    for e in ego_indices:
        for a in agent_indices:
            prev_e = trace.start_state.vehicles[e]
            prev_a = trace.start_state.vehicles[a]
            for row, k in enumerate(range(k_start, k_end + 1)):
                cur_e = trace.kinematics_at(row, e)
                cur_a = trace.kinematics_at(row, a)
                x = relative_state_vector(cur_e, cur_a, prev_e, prev_a)
                eta = novelty_value(x, ns.vectors_before(k), ns._whitener,
                                    ns.m_neighbors)
                if eta > peak:
                    peak = eta
                ns.insert(x, k)
                prev_e, prev_a = cur_e, cur_a
    ns.last_values.append(peak)

    accept = (c_cand < 0.9 * c_prev
              or ns.num_rejections > ns.max_reject
              or len(ns.last_values) < 10
              or peak > float(np.mean(ns.last_values)))
    if accept:
        ns.num_rejections = 0
    else:
        ns.num_rejections += 1
    return accept, ns
