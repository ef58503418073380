"""JSON problem/controller files and CSV trace export.

Matrices are stored row-major and dimension-tagged:
``{"rows": r, "cols": c, "data": [[...], ...]}``.  Agent ids in files are
1-based; the conversion to the 0-based internal labels happens exactly
once, here.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any

import numpy as np

from .lti import StateSpace
from .runtime import SimTrace
from .synthesis import AgentModel, ControllerRealization, GainLibrary, Problem

__all__ = [
    "matrix_to_json",
    "matrix_from_json",
    "save_problem",
    "load_problem",
    "save_controller",
    "load_controller",
    "save_trace_csv",
    "save_summary_json",
]


def matrix_to_json(a: np.ndarray) -> dict:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    return {"rows": a.shape[0], "cols": a.shape[1], "data": a.tolist()}


def matrix_from_json(obj: Any, name: str = "matrix") -> np.ndarray:
    if not isinstance(obj, dict) or not {"rows", "cols", "data"} <= set(obj):
        raise ValueError(f"{name}: expected an object with rows/cols/data")
    a = np.asarray(obj["data"], dtype=float)
    if a.ndim != 2 or a.shape != (obj["rows"], obj["cols"]):
        raise ValueError(
            f"{name}: data shape {a.shape} does not match "
            f"({obj['rows']}, {obj['cols']})"
        )
    return a


def save_problem(problem: Problem, path, options: dict | None = None) -> None:
    """Write a problem file (graph edges 1-based, topological order)."""
    g = problem.graph
    edges = [
        [int(j) + 1, int(i) + 1]
        for i in range(g.n_agents)
        for j in g.strict_ancestors(i)
    ]
    doc = {
        "graph": {"N": g.n_agents, "edges": edges},
        "agents": [
            {
                "A": matrix_to_json(a.A),
                "B1": matrix_to_json(a.B1),
                "B2": matrix_to_json(a.B2),
                "C2": matrix_to_json(a.C2),
                "D21": matrix_to_json(a.D21),
            }
            for a in problem.agents
        ],
        "cost": {
            "C1": matrix_to_json(problem.C1),
            "D12": matrix_to_json(problem.D12),
        },
    }
    if options:
        doc["options"] = options
    Path(path).write_text(json.dumps(doc, indent=1))


def load_problem(path) -> tuple[Problem, dict]:
    """Parse a problem file; returns the problem and its options block.

    Raises ValueError on malformed content (missing keys, bad shapes,
    non-integer ids); graph cycles surface as CycleError.
    """
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict):
        raise ValueError("problem file must be a JSON object")
    try:
        graph_doc = doc["graph"]
        n_agents = int(graph_doc["N"])
        raw_edges = graph_doc.get("edges", [])
        agents_doc = doc["agents"]
        cost_doc = doc["cost"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"problem file missing section: {exc}") from exc
    edges = []
    for e in raw_edges:
        if len(e) != 2:
            raise ValueError(f"edge {e} must be a pair")
        src, dst = int(e[0]), int(e[1])
        if not (1 <= src <= n_agents and 1 <= dst <= n_agents):
            raise ValueError(f"edge {e} out of range for N={n_agents}")
        edges.append((src - 1, dst - 1))
    agents = []
    for idx, a in enumerate(agents_doc):
        agents.append(
            AgentModel(
                A=matrix_from_json(a["A"], f"agent{idx}.A"),
                B1=matrix_from_json(a["B1"], f"agent{idx}.B1"),
                B2=matrix_from_json(a["B2"], f"agent{idx}.B2"),
                C2=matrix_from_json(a["C2"], f"agent{idx}.C2"),
                D21=matrix_from_json(a["D21"], f"agent{idx}.D21"),
            )
        )
    if len(agents) != n_agents:
        raise ValueError(f"{len(agents)} agents listed for N={n_agents}")
    c1 = matrix_from_json(cost_doc["C1"], "cost.C1")
    d12 = matrix_from_json(cost_doc["D12"], "cost.D12")
    problem = Problem.from_parts(n_agents, edges, agents, c1, d12)
    options = doc.get("options", {})
    if not isinstance(options, dict):
        raise ValueError("options must be an object")
    return problem, options


def save_controller(
    realization: ControllerRealization,
    gains: GainLibrary,
    path,
) -> None:
    """Export a controller realization with its gain library."""
    ss = realization.ss
    doc = {
        "form": realization.form,
        "A": matrix_to_json(ss.A),
        "B": matrix_to_json(ss.B),
        "C": matrix_to_json(ss.C),
        "D": matrix_to_json(ss.D),
        "state_blocks": [
            {"copy": i, "agent": j, "size": s}
            for i, j, s in realization.state_blocks
        ],
        "gains": [
            {
                "X": matrix_to_json(gains.X[i]),
                "F": matrix_to_json(gains.F[i]),
                "Y": matrix_to_json(gains.Y[i]),
                "L": matrix_to_json(gains.L[i]),
            }
            for i in range(len(gains.X))
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1))


def load_controller(path) -> tuple[str, StateSpace, list[dict]]:
    """Re-load an exported controller; returns (form, realization, gains)."""
    doc = json.loads(Path(path).read_text())
    try:
        form = str(doc["form"])
        ss = StateSpace(
            matrix_from_json(doc["A"], "A"),
            matrix_from_json(doc["B"], "B"),
            matrix_from_json(doc["C"], "C"),
            matrix_from_json(doc["D"], "D"),
        )
        gains = [
            {key: matrix_from_json(g[key], f"gains[{i}].{key}")
             for key in ("X", "F", "Y", "L")}
            for i, g in enumerate(doc.get("gains", []))
        ]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"controller file missing field: {exc}") from exc
    return form, ss, gains


def save_trace_csv(trace: SimTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(trace.column_names())
        writer.writerows(trace.as_array().tolist())


def save_summary_json(summary: dict, path) -> None:
    Path(path).write_text(json.dumps(summary, indent=1, sort_keys=True))
