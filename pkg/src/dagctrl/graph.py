"""Information-sharing graph and block-index bookkeeping.

The communication structure is a transitively closed DAG over agents
0..N-1.  Its adjacency matrix ``S`` uses the receiver convention:
``S[i, j] == 1`` means agent i sees agent j's information, i.e. j is an
ancestor of i (every agent sees itself, so the diagonal is 1).  After
topological relabeling ``S`` is unit lower triangular, which is the order
assumed by every formula downstream.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CycleError, DimensionError

__all__ = [
    "InfoGraph",
    "BlockDims",
    "Relatives",
    "transitive_closure",
    "relabel_topological",
    "relatives",
    "selector",
    "block_submatrix",
]


def transitive_closure(adj: np.ndarray) -> np.ndarray:
    """Smallest transitively closed superset of a unit-diagonal relation.

    Boolean Floyd-Warshall; idempotent.  Raises CycleError if the
    off-diagonal part of the relation has a directed cycle (a cycle would
    have to be merged into a single agent before calling this, which is a
    modeling decision we refuse to make silently).
    """
    adj = np.asarray(adj, dtype=bool)
    n = adj.shape[0]
    if adj.shape != (n, n):
        raise DimensionError(f"adjacency must be square, got {adj.shape}")
    strict = adj & ~np.eye(n, dtype=bool)
    closed = strict.copy()
    for k in range(n):
        closed |= np.outer(closed[:, k], closed[k, :])
    if closed.diagonal().any():
        cyclic = np.flatnonzero(closed.diagonal())
        raise CycleError(f"directed cycle through agents {cyclic.tolist()}")
    return closed | np.eye(n, dtype=bool)


def relabel_topological(adj: np.ndarray) -> tuple[tuple[int, ...], np.ndarray]:
    """Permutation making a transitively closed adjacency lower triangular.

    Returns ``(perm, relabeled)`` where ``perm[original] = new`` and
    ``relabeled[i, j] = adj[perm^-1(i), perm^-1(j)]``.  Ancestors come
    first; ties between incomparable agents break by ascending original
    index, so the result is deterministic.
    """
    adj = transitive_closure(adj)
    n = adj.shape[0]
    # Kahn's algorithm on the ancestor relation with a min-heap for ties.
    remaining = adj & ~np.eye(n, dtype=bool)
    indegree = remaining.sum(axis=1)  # number of strict ancestors left
    ready = [i for i in range(n) if indegree[i] == 0]
    heapq.heapify(ready)
    order: list[int] = []
    while ready:
        i = heapq.heappop(ready)
        order.append(i)
        for j in np.flatnonzero(remaining[:, i]):
            indegree[j] -= 1
            if indegree[j] == 0:
                heapq.heappush(ready, int(j))
    if len(order) != n:
        raise CycleError("relation is not acyclic")  # unreachable after closure
    perm = tuple(int(np.flatnonzero(np.array(order) == i)[0]) for i in range(n))
    relabeled = adj[np.ix_(order, order)]
    return perm, relabeled


@dataclass(frozen=True)
class InfoGraph:
    """Transitively closed DAG in topological order.

    ``adj`` is the boolean adjacency with unit diagonal, lower triangular
    in the stored (relabeled) order.  ``perm`` maps an original agent label
    to its stored index; it is the identity when the input was already
    topologically ordered.
    """

    n_agents: int
    adj: np.ndarray
    perm: tuple[int, ...]

    def __post_init__(self):
        adj = np.asarray(self.adj, dtype=bool)
        object.__setattr__(self, "adj", adj)
        n = self.n_agents
        if adj.shape != (n, n):
            raise DimensionError(f"adjacency shape {adj.shape} != ({n}, {n})")
        if not adj.diagonal().all():
            raise ValueError("every agent must see itself (unit diagonal)")
        if np.triu(adj, 1).any():
            raise ValueError("adjacency must be lower triangular; relabel first")
        two_step = (adj.astype(int) @ adj.astype(int)) > 0
        if not np.array_equal(two_step, adj):
            raise ValueError("adjacency must be transitively closed")
        adj.setflags(write=False)

    @classmethod
    def from_adjacency(cls, adj: np.ndarray) -> "InfoGraph":
        """Close, relabel and wrap an arbitrary unit-diagonal adjacency."""
        perm, relabeled = relabel_topological(adj)
        return cls(relabeled.shape[0], relabeled, perm)

    @classmethod
    def from_edges(cls, n_agents: int, edges: Sequence[tuple[int, int]]) -> "InfoGraph":
        """Build from information-flow edges ``(src, dst)``, 0-based.

        An edge ``(k, i)`` means agent k's information reaches agent i.
        """
        adj = np.eye(n_agents, dtype=bool)
        for src, dst in edges:
            if not (0 <= src < n_agents and 0 <= dst < n_agents):
                raise IndexError(f"edge ({src}, {dst}) out of range for N={n_agents}")
            adj[dst, src] = True
        return cls.from_adjacency(adj)

    def original_order(self) -> tuple[int, ...]:
        """Inverse of ``perm``: original label of each stored index."""
        inv = [0] * self.n_agents
        for orig, new in enumerate(self.perm):
            inv[new] = orig
        return tuple(inv)

    def _check_index(self, i: int) -> None:
        if not 0 <= i < self.n_agents:
            raise IndexError(f"agent {i} out of range for N={self.n_agents}")

    def descendants(self, i: int) -> tuple[int, ...]:
        """Agents that receive i's information, i included, ascending."""
        self._check_index(i)
        return tuple(int(j) for j in np.flatnonzero(self.adj[:, i]))

    def ancestors(self, i: int) -> tuple[int, ...]:
        """Agents whose information i receives, i included, ascending."""
        self._check_index(i)
        return tuple(int(j) for j in np.flatnonzero(self.adj[i, :]))

    def strict_descendants(self, i: int) -> tuple[int, ...]:
        return tuple(j for j in self.descendants(i) if j != i)

    def strict_ancestors(self, i: int) -> tuple[int, ...]:
        return tuple(j for j in self.ancestors(i) if j != i)

    def adjacency_inverse(self) -> np.ndarray:
        """Exact integer inverse of the adjacency over the reals.

        A unit lower-triangular 0/1 matrix has an integer inverse with unit
        diagonal; it weights ancestor contributions when information shared
        along overlapping paths must not be double counted.
        """
        s = self.adj.astype(float)
        inv = np.linalg.inv(s)
        rounded = np.rint(inv)
        if not np.allclose(s @ rounded, np.eye(self.n_agents), atol=1e-12):
            raise ValueError("adjacency inverse failed integrality check")
        return rounded.astype(int)


@dataclass(frozen=True)
class Relatives:
    """The four index sets of one agent, each ascending."""

    descendants: tuple[int, ...]
    ancestors: tuple[int, ...]
    strict_descendants: tuple[int, ...]
    strict_ancestors: tuple[int, ...]


def relatives(graph: InfoGraph, i: int) -> Relatives:
    """All descendant/ancestor sets of agent ``i`` in one shot."""
    return Relatives(
        descendants=graph.descendants(i),
        ancestors=graph.ancestors(i),
        strict_descendants=graph.strict_descendants(i),
        strict_ancestors=graph.strict_ancestors(i),
    )


@dataclass(frozen=True)
class BlockDims:
    """Per-agent dimensions of states, inputs, measurements and noise."""

    n: tuple[int, ...]
    m: tuple[int, ...]
    p: tuple[int, ...]
    q: tuple[int, ...]

    def __post_init__(self):
        for name in ("n", "m", "p", "q"):
            dims = tuple(int(d) for d in getattr(self, name))
            object.__setattr__(self, name, dims)
            if any(d <= 0 for d in dims):
                raise ValueError(f"all {name}_i must be positive, got {dims}")
        lengths = {len(self.n), len(self.m), len(self.p), len(self.q)}
        if len(lengths) != 1:
            raise DimensionError("n, m, p, q must have one entry per agent")

    @property
    def n_agents(self) -> int:
        return len(self.n)

    @property
    def total_n(self) -> int:
        return sum(self.n)

    @property
    def total_m(self) -> int:
        return sum(self.m)

    @property
    def total_p(self) -> int:
        return sum(self.p)

    @property
    def total_q(self) -> int:
        return sum(self.q)

    @staticmethod
    def offsets(dims: Sequence[int]) -> np.ndarray:
        """Prefix sums: block k spans ``offsets[k]:offsets[k+1]``."""
        return np.concatenate([[0], np.cumsum(dims)])


def selector(dims: Sequence[int], idx: Sequence[int]) -> np.ndarray:
    """Block columns of the identity picking the blocks in ``idx``.

    Shape (sum(dims), sum(dims[i] for i in idx)); ``selector(d, idx).T @ X``
    extracts block rows, ``X @ selector(d, idx)`` block columns.
    """
    dims = [int(d) for d in dims]
    offs = BlockDims.offsets(dims)
    total = int(offs[-1])
    cols: list[np.ndarray] = []
    for i in idx:
        if not 0 <= i < len(dims):
            raise IndexError(f"block index {i} out of range for {len(dims)} blocks")
        block = np.zeros((total, dims[i]))
        block[offs[i]:offs[i + 1], :] = np.eye(dims[i])
        cols.append(block)
    if not cols:
        return np.zeros((total, 0))
    return np.hstack(cols)


def block_submatrix(
    x: np.ndarray,
    dims_r: Sequence[int],
    rows: Sequence[int],
    dims_c: Sequence[int],
    cols: Sequence[int],
) -> np.ndarray:
    """Submatrix of a conformally partitioned block matrix.

    Equals ``selector(dims_r, rows).T @ x @ selector(dims_c, cols)`` but is
    assembled by direct indexing.
    """
    x = np.asarray(x)
    if x.shape != (sum(dims_r), sum(dims_c)):
        raise DimensionError(
            f"matrix shape {x.shape} does not match block partition "
            f"({sum(dims_r)}, {sum(dims_c)})"
        )
    offs_r = BlockDims.offsets(dims_r)
    offs_c = BlockDims.offsets(dims_c)
    ridx = np.concatenate(
        [np.arange(offs_r[i], offs_r[i + 1]) for i in rows]
    ) if len(rows) else np.zeros(0, dtype=int)
    cidx = np.concatenate(
        [np.arange(offs_c[j], offs_c[j + 1]) for j in cols]
    ) if len(cols) else np.zeros(0, dtype=int)
    return x[np.ix_(ridx, cidx)]
