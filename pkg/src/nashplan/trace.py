"""Trace CSV and summary JSON writers.

Every float goes through ``repr`` so a parsed trace reproduces the written
values bit for bit, and the summary metrics are computed from those same row
values.  That makes the summary exactly recomputable from the CSV.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable

from .sim import Scenario, SimResult

COLUMNS = (
    "tick",
    "time_s",
    "agent_id",
    "x",
    "y",
    "heading",
    "speed",
    "planned_x",
    "planned_y",
    "solver_ms",
    "equilibrium_kind",
)
FLOAT_COLUMNS = ("time_s", "x", "y", "heading", "speed", "planned_x", "planned_y", "solver_ms")


def trace_rows(result: SimResult, mask_timing: bool = False) -> list[dict]:
    """One row per (tick, agent).  ``mask_timing`` writes solver_ms as 0.0."""
    rows = []
    for t in range(result.ticks):
        ms = 0.0 if mask_timing else float(result.solver_time[t]) * 1000.0
        for i, aid in enumerate(result.agent_ids):
            x, y, h, v = (float(c) for c in result.poses[t, i])
            px, py = (float(c) for c in result.planned[t, i])
            rows.append(
                {
                    "tick": t,
                    "time_s": t * result.tick,
                    "agent_id": aid,
                    "x": x,
                    "y": y,
                    "heading": h,
                    "speed": v,
                    "planned_x": px,
                    "planned_y": py,
                    "solver_ms": ms,
                    "equilibrium_kind": result.kinds[t],
                }
            )
    return rows


def rows_to_csv(rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([repr(r[c]) if c in FLOAT_COLUMNS else r[c] for c in COLUMNS])
    return buf.getvalue()


def parse_csv(text: str) -> list[dict]:
    out = []
    for r in csv.DictReader(io.StringIO(text)):
        row = dict(r)
        row["tick"] = int(row["tick"])
        for c in FLOAT_COLUMNS:
            row[c] = float(row[c])
        out.append(row)
    return out


def metrics_from_rows(rows: list[dict], pair_threshold: dict[tuple[str, str], float]) -> dict:
    """Aggregate metrics derived only from trace rows.

    ``pair_threshold`` maps an (id, id) pair in either order to its collision
    distance.
    """
    by_tick: dict[int, list[dict]] = {}
    for r in rows:
        by_tick.setdefault(r["tick"], []).append(r)
    ticks = sorted(by_tick)
    solver = [by_tick[t][0]["solver_ms"] for t in ticks]
    kinds: dict[str, int] = {}
    for t in ticks:
        k = by_tick[t][0]["equilibrium_kind"]
        kinds[k] = kinds.get(k, 0) + 1
    min_d = math.inf
    collision = False
    for t in ticks:
        group = by_tick[t]
        for a in range(len(group)):
            for b in range(a + 1, len(group)):
                ra, rb = group[a], group[b]
                d = math.hypot(ra["x"] - rb["x"], ra["y"] - rb["y"])
                min_d = min(min_d, d)
                thr = pair_threshold.get((ra["agent_id"], rb["agent_id"]), pair_threshold.get((rb["agent_id"], ra["agent_id"])))
                if thr is not None and d < thr:
                    collision = True
    total = 0.0
    for s in solver:
        total += s
    return {
        "ticks": len(ticks),
        "agents": len(by_tick[ticks[0]]) if ticks else 0,
        "rows": len(rows),
        "total_solver_ms": total,
        "mean_solver_ms": total / len(solver) if solver else 0.0,
        "max_solver_ms": max(solver) if solver else 0.0,
        "min_distance": min_d if math.isfinite(min_d) else None,
        "collision": collision,
        "equilibrium_kinds": dict(sorted(kinds.items())),
    }


def pair_thresholds(scenario: Scenario) -> dict[tuple[str, str], float]:
    n = len(scenario.agents)
    return {
        (scenario.agents[i].id, scenario.agents[j].id): scenario.pair_threshold(i, j)
        for i in range(n)
        for j in range(i + 1, n)
    }


def build_summary(scenario: Scenario, result: SimResult, rows: list[dict]) -> dict:
    thresholds = pair_thresholds(scenario)
    return {
        "scenario": scenario.name,
        "planner": scenario.planner,
        "seed": scenario.seed,
        "noise_std": scenario.noise_std,
        "duration_s": scenario.duration,
        "tick_s": scenario.tick,
        "collision_threshold_m": {f"{a}|{b}": v for (a, b), v in thresholds.items()},
        "metrics": metrics_from_rows(rows, thresholds),
        "tracking": result.tracking,
        "all_done": result.all_done,
        "error": result.error,
    }


def thresholds_from_summary(summary: dict) -> dict[tuple[str, str], float]:
    return {tuple(k.split("|", 1)): v for k, v in summary["collision_threshold_m"].items()}


def atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_trace(out_dir: str | Path, scenario: Scenario, result: SimResult, mask_timing: bool = False) -> tuple[Path, Path]:
    out = Path(out_dir)
    rows = trace_rows(result, mask_timing)
    csv_path, json_path = out / "trace.csv", out / "summary.json"
    atomic_write(csv_path, rows_to_csv(rows))
    atomic_write(json_path, json.dumps(build_summary(scenario, result, rows), indent=2) + "\n")
    return csv_path, json_path
