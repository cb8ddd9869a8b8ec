"""Batch experiment execution, statistics and figure/report emission.

A batch runs N independent searches of one method, classifies each best
trace (ego collision, adversary lane entry, agent-agent local minimum),
aggregates costs, and writes `report.json` plus per-run trace CSVs and
SVG figures into the output directory. Wall-clock timings are volatile and
go to a `timing.json` sidecar so `report.json` stays byte-reproducible for
a fixed seed.
"""
from __future__ import annotations

import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import matplotlib
import numpy as np

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "nearmiss"
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from . import geometry  # noqa: E402
from .config_io import config_to_dict  # noqa: E402
from .errors import ConfigError  # noqa: E402
from .falsification import falsify  # noqa: E402
from .rrt import search  # noqa: E402
from .scenario import ScenarioConfig  # noqa: E402
from .simulation import export_trace_csv  # noqa: E402
from .state import TraceSegment  # noqa: E402

METHOD_RRT = "rrt"
METHOD_FALSIFICATION = "falsification"
METHODS = (METHOD_RRT, METHOD_FALSIFICATION)


@dataclass(frozen=True, slots=True)
class RunRecord:
    """Outcome of one search run."""
    index: int
    seed: int
    method: str
    min_cost: float | None
    termination: str | None
    wall_time: float | None
    collided: bool = False
    lane_entry: bool = False
    local_minimum: bool = False
    nodes: int | None = None
    evaluations: int | None = None
    cost_report: dict | None = None
    error: str | None = None


@dataclass(frozen=True, slots=True)
class FiveNumber:
    """Box-plot statistics: Tukey whiskers around interpolated quartiles."""
    whisker_low: float
    q1: float
    median: float
    q3: float
    whisker_high: float


@dataclass
class BatchReport:
    method: str
    runs: int
    base_seed: int
    budget_s: float
    records: list[RunRecord] = field(default_factory=list)

    @property
    def costs(self) -> list[float]:
        return [r.min_cost for r in self.records if r.min_cost is not None]

    def aggregates(self) -> dict:
        costs = self.costs
        if not costs:
            return {"count": 0}
        five = five_number_summary(costs)
        return {
            "count": len(costs),
            "min": min(costs),
            "mean": sum(costs) / len(costs),
            "max": max(costs),
            "collisions": sum(r.collided for r in self.records),
            "lane_entries": sum(r.lane_entry for r in self.records),
            "local_minima": sum(r.local_minimum for r in self.records),
            "five_number": dataclasses.asdict(five),
        }


def quantile(values: Sequence[float], p: float) -> float:
    """Quantile with linear interpolation at position (n + 1) * p."""
    vals = sorted(values)
    n = len(vals)
    if n == 0:
        raise ValueError("no values")
    h = (n + 1) * p
    if h <= 1.0:
        return vals[0]
    if h >= n:
        return vals[-1]
    k = int(math.floor(h))
    frac = h - k
    return vals[k - 1] + frac * (vals[k] - vals[k - 1])


def five_number_summary(values: Sequence[float]) -> FiveNumber:
    q1 = quantile(values, 0.25)
    med = quantile(values, 0.5)
    q3 = quantile(values, 0.75)
    iqr = q3 - q1
    lo_fence = q1 - 1.5 * iqr
    hi_fence = q3 + 1.5 * iqr
    inside = [v for v in values if lo_fence <= v <= hi_fence]
    return FiveNumber(whisker_low=min(inside), q1=q1, median=med, q3=q3,
                      whisker_high=max(inside))


# ---------------------------------------------------------------------------
# per-run execution and classification


def classify_trace(trace: TraceSegment, config: ScenarioConfig) -> dict:
    """Collision / adversary-lane-entry / agent-agent-local-minimum flags."""
    ego_indices = config.ego_indices
    collided = any(ev.involves_any(ego_indices) for ev in trace.collisions)
    local_minimum = (len(trace.collisions) > 0
                     and not trace.collisions[0].involves_any(ego_indices))

    adv = config.adversary_index
    spec = config.vehicles[adv]
    ego0 = trace.start_state.vehicles[ego_indices[0]]
    from .controllers import nearest_lane_center
    band_center = nearest_lane_center(ego0.y, config.road.lane_centers)
    half = 0.5 * config.road.lane_width
    lane_entry = False
    for row in range(trace.n_ticks):
        x, y, th = trace.states[row, adv, 0:3]
        ys = [c[1] for c in geometry.rect_corners(x, y, th, spec.length, spec.width)]
        if min(ys) <= band_center + half and max(ys) >= band_center - half:
            lane_entry = True
            break
    return {"collided": collided, "lane_entry": lane_entry,
            "local_minimum": local_minimum}


def run_single(config: ScenarioConfig, method: str, seed: int,
               budget_s: float | None, index: int = 0
               ) -> tuple[RunRecord, TraceSegment | None]:
    """One search run plus classification of its best trace."""
    if method == METHOD_RRT:
        result = search(config, seed=seed, time_budget=budget_s)
        trace = result.best_trace
        summary = result.summary()
        flags = (classify_trace(trace, config) if trace.n_ticks
                 else {"collided": False, "lane_entry": False, "local_minimum": False})
        record = RunRecord(index=index, seed=seed, method=method,
                           min_cost=summary["best_cost"],
                           termination=summary["termination"],
                           wall_time=result.wall_time,
                           nodes=summary["node_count"],
                           evaluations=summary["iterations"],
                           cost_report=summary["cost_report"], **flags)
        return record, trace
    if method == METHOD_FALSIFICATION:
        result = falsify(config, seed=seed, time_budget=budget_s)
        trace = result.best_trace
        summary = result.summary()
        flags = classify_trace(trace, config)
        record = RunRecord(index=index, seed=seed, method=method,
                           min_cost=summary["best_cost"],
                           termination=summary["termination"],
                           wall_time=result.wall_time,
                           evaluations=summary["evaluations"],
                           cost_report=summary["cost_report"], **flags)
        return record, trace
    raise ConfigError(f"unknown method {method!r}; expected one of {METHODS}")


def _worker(args) -> tuple[RunRecord, TraceSegment | None]:
    config, method, seed, budget_s, index = args
    try:
        return run_single(config, method, seed, budget_s, index)
    except Exception as exc:  # recorded, batch continues
        return RunRecord(index=index, seed=seed, method=method, min_cost=None,
                         termination=None, wall_time=None,
                         error=f"{type(exc).__name__}: {exc}"), None


def run_batch(config: ScenarioConfig, method: str, runs: int, budget_s: float,
              base_seed: int, workers: int = 1, out_dir=None
              ) -> tuple[BatchReport, list[TraceSegment | None]]:
    """Execute `runs` independent searches with seeds base_seed..base_seed+runs-1."""
    if runs < 1:
        raise ConfigError("runs must be >= 1")
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}; expected one of {METHODS}")
    jobs = [(config, method, base_seed + i, budget_s, i) for i in range(runs)]
    if workers > 1 and runs > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_worker, jobs))
    else:
        outcomes = [_worker(job) for job in jobs]
    report = BatchReport(method=method, runs=runs, base_seed=base_seed,
                         budget_s=budget_s,
                         records=[rec for rec, _ in outcomes])
    traces = [trace for _, trace in outcomes]
    if out_dir is not None:
        write_outputs(report, traces, config, out_dir)
    return report, traces


# ---------------------------------------------------------------------------
# persistence


def report_to_dict(report: BatchReport, config: ScenarioConfig | None = None) -> dict:
    records = []
    for r in report.records:
        d = dataclasses.asdict(r)
        d.pop("wall_time")  # volatile; kept in timing.json
        records.append(d)
    out = {
        "method": report.method,
        "runs": report.runs,
        "base_seed": report.base_seed,
        "budget_s": report.budget_s,
        "records": records,
        "summary": report.aggregates(),
    }
    if config is not None:
        out["config"] = config_to_dict(config)
    return out


def report_from_dict(doc: dict) -> BatchReport:
    records = []
    for d in doc["records"]:
        d = dict(d)
        d.setdefault("wall_time", None)
        records.append(RunRecord(**d))
    return BatchReport(method=doc["method"], runs=doc["runs"],
                       base_seed=doc["base_seed"], budget_s=doc["budget_s"],
                       records=records)


def load_report(path) -> BatchReport:
    return report_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def write_outputs(report: BatchReport, traces: Sequence[TraceSegment | None],
                  config: ScenarioConfig, out_dir) -> None:
    """report.json, timing.json, per-run trace CSVs, box plot and trajectory SVGs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(
        json.dumps(report_to_dict(report, config), indent=2) + "\n",
        encoding="utf-8")
    timing = {"per_run_wall_s": {str(r.index): r.wall_time for r in report.records}}
    (out / "timing.json").write_text(json.dumps(timing, indent=2) + "\n",
                                     encoding="utf-8")
    names = [s.name for s in config.vehicles]
    for rec, trace in zip(report.records, traces):
        if trace is not None:
            export_trace_csv(trace, names, out / f"run_{rec.index}_trace.csv")
    emit_plots(report, traces, config, out)


# ---------------------------------------------------------------------------
# figures


def _save(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def emit_box_plot(reports: Sequence[BatchReport], config: ScenarioConfig, path) -> None:
    """Box-and-whisker plot of per-run minimum costs, one box per method,
    mean shown as a black diamond."""
    stats = []
    for rep in reports:
        costs = rep.costs
        if not costs:
            continue
        five = five_number_summary(costs)
        stats.append({
            "label": f"{rep.method} (n={len(costs)})",
            "whislo": five.whisker_low, "q1": five.q1, "med": five.median,
            "q3": five.q3, "whishi": five.whisker_high,
            "mean": sum(costs) / len(costs),
            "fliers": [v for v in costs
                       if v < five.whisker_low or v > five.whisker_high],
        })
    if not stats:
        raise ValueError("nothing to plot")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bxp(stats, showmeans=True,
           meanprops={"marker": "D", "markerfacecolor": "black",
                      "markeredgecolor": "black"})
    refs = config.report.reference_costs or {}
    for rep in reports:
        for value in refs.get(rep.method, []):
            ax.axhline(value, color="gray", linestyle=":", linewidth=0.8)
    ax.set_ylabel("minimum cost")
    ax.set_title("minimum cost per run")
    fig.tight_layout()
    _save(fig, path)


def emit_trajectory_plot(trace: TraceSegment, config: ScenarioConfig, path,
                         label_interval: float | None = None) -> None:
    """Road band with numbered, time-stamped vehicle footprints."""
    if label_interval is None:
        label_interval = config.report.label_interval or config.search.dt_expand
    road = config.road
    fig, ax = plt.subplots(figsize=(10, 4))
    hw = road.half_width
    ax.axhspan(-hw, hw, color="0.92", zorder=0)
    for k in range(road.lanes + 1):
        y = -hw + k * road.lane_width
        style = "-" if k in (0, road.lanes) else "--"
        ax.plot([0, road.length], [y, y], style, color="0.5", linewidth=0.8, zorder=1)

    colors = {}
    adv = config.adversary_index
    for i, spec in enumerate(config.vehicles):
        if i in config.ego_indices:
            colors[i] = "tab:orange"
        elif i == adv:
            colors[i] = "tab:red"
        else:
            colors[i] = "tab:blue"

    every = max(int(round(label_interval / trace.dt)), 1)
    label_rows = list(range(every - 1, trace.n_ticks, every))
    start = trace.start_state
    for i, spec in enumerate(config.vehicles):
        if trace.n_ticks:
            ax.plot(trace.states[:, i, 0], trace.states[:, i, 1],
                    color=colors[i], linewidth=0.8, alpha=0.6, zorder=2)
        poses = [(start.vehicles[i].x, start.vehicles[i].y,
                  start.vehicles[i].theta)]
        poses += [tuple(trace.states[row, i, 0:3]) for row in label_rows]
        for n, (x, y, th) in enumerate(poses):
            corners = geometry.rect_corners(x, y, th, spec.length, spec.width)
            poly = plt.Polygon(corners, closed=True, fill=False,
                               edgecolor=colors[i], linewidth=0.9, zorder=3)
            ax.add_patch(poly)
            if n > 0:
                ax.annotate(str(n), (x, y), color=colors[i], fontsize=7,
                            ha="center", va="center", zorder=4)
        ax.annotate(spec.name, (poses[0][0], poses[0][1] + 1.2),
                    color=colors[i], fontsize=8, ha="center", zorder=4)
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    pad = 8.0
    xs_all = ([start.vehicles[i].x for i in range(len(config.vehicles))]
              + (list(trace.states[:, :, 0].ravel()) if trace.n_ticks else []))
    ax.set_xlim(min(xs_all) - pad, max(xs_all) + pad)
    ax.set_ylim(-hw - 3, hw + 3)
    fig.tight_layout()
    _save(fig, path)


def emit_plots(report: BatchReport, traces: Sequence[TraceSegment | None],
               config: ScenarioConfig, out_dir) -> None:
    """All figures for one batch: box.svg plus traj_<i>.svg per run."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if report.costs:
        emit_box_plot([report], config, out / "box.svg")
    for rec, trace in zip(report.records, traces):
        if trace is not None:
            emit_trajectory_plot(trace, config, out / f"traj_{rec.index}.svg")
