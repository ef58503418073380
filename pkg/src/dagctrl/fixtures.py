"""Reference problems used by tests, docs, and the committed example files.

Both fixtures use the canonical scalar agent: unit-gain dynamics at pole
-1, independent unit process and measurement noise channels, and a cost
that weights every state and input equally.
"""

from __future__ import annotations

import numpy as np

from .synthesis import AgentModel, Problem

__all__ = ["scalar_agent", "two_agent_chain", "five_agent_tree"]


def scalar_agent() -> AgentModel:
    """Scalar agent: pole at -1, w = (process noise, measurement noise)."""
    return AgentModel(
        A=[[-1.0]],
        B1=[[1.0, 0.0]],
        B2=[[1.0]],
        C2=[[1.0]],
        D21=[[0.0, 1.0]],
    )


def _equal_weight_cost(n: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    c1 = np.vstack([np.eye(n), np.zeros((m, n))])
    d12 = np.vstack([np.zeros((n, m)), np.eye(m)])
    return c1, d12


def two_agent_chain() -> Problem:
    """Two scalar agents, information flowing 0 -> 1."""
    c1, d12 = _equal_weight_cost(2, 2)
    return Problem.from_parts(
        n_agents=2,
        edges=[(0, 1)],
        agents=[scalar_agent(), scalar_agent()],
        C1=c1,
        D12=d12,
    )


def five_agent_tree() -> Problem:
    """Five scalar agents: 0 feeds 1, 2, 3; 3 feeds 4 (closure adds 0 -> 4).

    Descendant subtree sizes are 5, 1, 1, 2, 1, so the minimal controller
    carries 10 states.
    """
    c1, d12 = _equal_weight_cost(5, 5)
    return Problem.from_parts(
        n_agents=5,
        edges=[(0, 1), (0, 2), (0, 3), (3, 4)],
        agents=[scalar_agent() for _ in range(5)],
        C1=c1,
        D12=d12,
    )
