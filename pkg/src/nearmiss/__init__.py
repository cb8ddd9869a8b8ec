"""Boundary-case collision test generation for simulated AV controllers.

Grows a search tree over adversarial agent maneuvers, guided by a cost that
rewards collisions (or near misses) that were barely unavoidable, and ships a
simulated-annealing falsification baseline over a fixed waypoint
parameterization for comparison.
"""
from .acceptance import NoveltyState, TransitionState, is_novel, is_transition_ok, novelty_value
from .config_io import dump_config, load_config, load_preset
from .cost import CostReport, cost, cost_formula, max_cost, state_cost
from .defaults import case1_config, case2_config, default_config
from .errors import ConfigError, NearMissError, UnknownNodeError
from .falsification import FalsifyResult, build_param_space, decode, encode, falsify
from .reporting import BatchReport, RunRecord, run_batch, run_single
from .rrt import SearchEngine, SearchResult, replay, search, select_candidates
from .scenario import (IntervalBox, RoadSpec, ScenarioConfig, SearchParams,
                       TargetPathSegment, VehicleSpec, build_path_segment,
                       sample_initial_states, sample_waypoint)
from .simulation import export_trace_csv, run_partial, step, time_to_collision
from .state import (CollisionEvent, KinematicState, SimState, TraceSegment,
                    Waypoint)

__version__ = "0.1.0"
