"""Planner runtime comparison over randomized trials."""

from __future__ import annotations

import statistics
from dataclasses import replace
from typing import Optional, Sequence

from .sim import DMPC, NASH, Scenario, TrialSummary, randomized_trials

ROW_FIELDS = (
    "planner",
    "trials",
    "completed",
    "mean_tick_ms",
    "max_tick_ms",
    "mean_scenario_s",
    "max_scenario_s",
    "divergences",
    "collisions",
    "errors",
)


def _row(summary: TrialSummary, trials: int) -> dict:
    ticks = summary.tick_times
    scen = summary.scenario_times
    return {
        "planner": summary.planner,
        "trials": trials,
        "completed": len(summary.results),
        "mean_tick_ms": statistics.fmean(ticks) * 1000.0 if ticks else None,
        "max_tick_ms": max(ticks) * 1000.0 if ticks else None,
        "mean_scenario_s": statistics.fmean(scen) if scen else None,
        "max_scenario_s": max(scen) if scen else None,
        "divergences": summary.divergences,
        "collisions": summary.collisions,
        "errors": len(summary.errors),
    }


def run_bench(scenario: Scenario, trials: int, planners: Sequence[str], seed: Optional[int] = None) -> dict:
    """Run ``trials`` randomized trials per planner and tabulate timing.

    The same master seed is used for every planner so they see identical
    initial conditions.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rows = []
    for p in planners:
        rows.append(_row(randomized_trials(replace(scenario, planner=p), trials, seed=seed), trials))
    by = {r["planner"]: r for r in rows}
    ratio = None
    if NASH in by and DMPC in by and by[NASH]["mean_scenario_s"] and by[DMPC]["mean_scenario_s"] is not None:
        ratio = by[DMPC]["mean_scenario_s"] / by[NASH]["mean_scenario_s"]
    return {
        "scenario": scenario.name,
        "duration_s": scenario.duration,
        "trials": trials,
        "seed": scenario.seed if seed is None else seed,
        "rows": [{k: r[k] for k in ROW_FIELDS} for r in rows],
        "dmpc_over_nash": ratio,
    }


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def format_table(report: dict) -> str:
    head = list(ROW_FIELDS)
    body = [[_fmt(r[k]) for k in head] for r in report["rows"]]
    widths = [max(len(h), *(len(b[i]) for b in body)) for i, h in enumerate(head)]
    lines = [
        f"scenario {report['scenario']}  trials {report['trials']}  seed {report['seed']}  duration {report['duration_s']} s",
        "  ".join(h.ljust(w) for h, w in zip(head, widths)),
        "  ".join("-" * w for w in widths),
    ]
    lines += ["  ".join(c.ljust(w) for c, w in zip(b, widths)) for b in body]
    if report["dmpc_over_nash"] is not None:
        lines.append(f"dmpc/nash mean scenario time ratio: {report['dmpc_over_nash']:.2f}")
    return "\n".join(lines) + "\n"
