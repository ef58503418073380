"""Construction of the jointly optimal decentralized controller.

Given dynamically decoupled agents on a transitively closed DAG, the
optimal output-feedback controller admits several equivalent state-space
realizations.  This module builds all of them from per-subtree Riccati
gains:

* ``build_P`` / ``build_K_lemma`` -- the column-wise construction
  ``K = P (I + GP - diag(GP))^-1`` assembled with realization algebra,
* ``build_K_state`` -- the lifted form whose state stacks one copy of the
  global state per agent (each copy is that agent's estimate of the world
  given its ancestors' measurements),
* ``build_K_innovation`` -- the similarity-transformed dual whose state
  tracks estimate improvements as information accumulates down the DAG,
* ``build_K_minimal`` -- either lifted form compressed onto the blocks an
  agent actually needs (state dimension = sum of descendant-subtree dims),
* ``build_P2`` -- an alternative realization of P used by the verification
  suite to cross-check the lifted algebra,
* ``centralized_lqg`` -- the classical two-Riccati controller, kept as the
  cost lower bound.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
import scipy.linalg

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import DagctrlError, DimensionError
from .graph import BlockDims, InfoGraph, block_submatrix, selector
from .lti import (
    FourBlockPlant,
    StateSpace,
    block_diagonal_part,
    check_riccati_assumptions,
    inverse_of_eye_plus,
    is_hurwitz,
    series,
    solve_are,
    subtract,
)

__all__ = [
    "AgentModel",
    "Problem",
    "GainLibrary",
    "BarredSymbols",
    "ControllerRealization",
    "ValidationReport",
    "validate",
    "compute_gains",
    "build_P",
    "build_K_lemma",
    "build_barred",
    "build_K_state",
    "build_K_innovation",
    "build_K_minimal",
    "build_P2",
    "centralized_lqg",
    "FORMS",
]

FORMS = ("lemma", "state", "innovation", "minimal-state", "minimal-innovation")


@dataclass(frozen=True)
class AgentModel:
    """One agent's local dynamics and measurement model."""

    A: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    C2: np.ndarray
    D21: np.ndarray

    def __post_init__(self):
        for name in ("A", "B1", "B2", "C2", "D21"):
            object.__setattr__(
                self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            )
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise DimensionError("agent A must be square")
        if self.B1.shape[0] != n or self.B2.shape[0] != n:
            raise DimensionError("agent B1/B2 row count must match A")
        if self.C2.shape[1] != n:
            raise DimensionError("agent C2 column count must match A")
        if self.D21.shape != (self.C2.shape[0], self.B1.shape[1]):
            raise DimensionError("agent D21 shape must be (p_i, q_i)")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B2.shape[1]

    @property
    def p(self) -> int:
        return self.C2.shape[0]

    @property
    def q(self) -> int:
        return self.B1.shape[1]


@dataclass(frozen=True)
class Problem:
    """Decentralized synthesis problem in topological agent order.

    ``agents[i]`` belongs to node i of ``graph`` (already relabeled); the
    cost rows z = C1 x + D12 u may couple all agents.
    """

    graph: InfoGraph
    agents: tuple[AgentModel, ...]
    C1: np.ndarray
    D12: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "C1", np.atleast_2d(np.asarray(self.C1, dtype=float)))
        object.__setattr__(self, "D12", np.atleast_2d(np.asarray(self.D12, dtype=float)))
        if len(self.agents) != self.graph.n_agents:
            raise DimensionError(
                f"{len(self.agents)} agents for a graph of {self.graph.n_agents}"
            )
        dims = self.dims
        if self.C1.shape[1] != dims.total_n:
            raise DimensionError("C1 column count must equal the global state dim")
        if self.D12.shape != (self.C1.shape[0], dims.total_m):
            raise DimensionError("D12 must be (cost rows) x (global input dim)")

    @property
    def dims(self) -> BlockDims:
        return BlockDims(
            n=tuple(a.n for a in self.agents),
            m=tuple(a.m for a in self.agents),
            p=tuple(a.p for a in self.agents),
            q=tuple(a.q for a in self.agents),
        )

    @classmethod
    def from_parts(
        cls,
        n_agents: int,
        edges: Sequence[tuple[int, int]],
        agents: Sequence[AgentModel],
        C1,
        D12,
    ) -> "Problem":
        """Assemble from data in original labeling, relabeling as needed.

        Agents and the block columns of C1/D12 are permuted into the
        topological order chosen by the graph.
        """
        graph = InfoGraph.from_edges(n_agents, edges)
        order = graph.original_order()
        orig_agents = list(agents)
        relabeled = tuple(orig_agents[k] for k in order)
        C1 = np.atleast_2d(np.asarray(C1, dtype=float))
        D12 = np.atleast_2d(np.asarray(D12, dtype=float))
        orig_n = [a.n for a in orig_agents]
        orig_m = [a.m for a in orig_agents]
        if C1.shape[1] != sum(orig_n):
            raise DimensionError("C1 column count must equal the global state dim")
        # permute cost block-columns from original to relabeled agent order
        sel_n = selector(orig_n, order)
        sel_m = selector(orig_m, order)
        return cls(graph, relabeled, C1 @ sel_n, D12 @ sel_m)

    # global block-diagonal aggregations ------------------------------------

    @property
    def A(self) -> np.ndarray:
        return scipy.linalg.block_diag(*(a.A for a in self.agents))

    @property
    def B1(self) -> np.ndarray:
        return scipy.linalg.block_diag(*(a.B1 for a in self.agents))

    @property
    def B2(self) -> np.ndarray:
        return scipy.linalg.block_diag(*(a.B2 for a in self.agents))

    @property
    def C2(self) -> np.ndarray:
        return scipy.linalg.block_diag(*(a.C2 for a in self.agents))

    @property
    def D21(self) -> np.ndarray:
        return scipy.linalg.block_diag(*(a.D21 for a in self.agents))

    @property
    def plant(self) -> FourBlockPlant:
        return FourBlockPlant(
            A=self.A, B1=self.B1, B2=self.B2,
            C1=self.C1, C2=self.C2, D12=self.D12, D21=self.D21,
        )

    def control_subproblem(self, i: int) -> tuple[np.ndarray, ...]:
        """The (A, B, C, D) tuple of agent i's descendant-subtree regulator."""
        desc = self.graph.descendants(i)
        dims = self.dims
        a = block_submatrix(self.A, dims.n, desc, dims.n, desc)
        b = block_submatrix(self.B2, dims.n, desc, dims.m, desc)
        c = self.C1 @ selector(dims.n, desc)
        d = self.D12 @ selector(dims.m, desc)
        return a, b, c, d


@dataclass(frozen=True)
class ValidationReport:
    """Aggregated admissibility diagnostics for a problem."""

    items: tuple[tuple[str, bool, str], ...]  # (check name, ok, detail)

    @property
    def ok(self) -> bool:
        return all(ok for _, ok, _ in self.items)

    def failures(self) -> list[str]:
        return [name for name, ok, _ in self.items if not ok]

    def __str__(self) -> str:
        lines = []
        for name, ok, detail in self.items:
            lines.append(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        return "\n".join(lines)


def validate(problem: Problem, tols: Tolerances = DEFAULT_TOLERANCES) -> ValidationReport:
    """Check nominal stability and Riccati admissibility of the data.

    Per agent: A_ii Hurwitz and the estimation tuple admissible; globally:
    the regulator tuple (A, B2, C1, D12) admissible.
    """
    items: list[tuple[str, bool, str]] = []
    for i, agent in enumerate(problem.agents):
        hur = is_hurwitz(agent.A, tols.hurwitz_margin)
        items.append(
            (f"agent{i}.A_hurwitz", hur,
             f"spectral abscissa {np.max(np.linalg.eigvals(agent.A).real):.3g}")
        )
    ctl = check_riccati_assumptions(
        problem.A, problem.B2, problem.C1, problem.D12, tols
    )
    for chk in ctl.checks:
        items.append((f"control.{chk.name}", chk.ok, chk.detail))
    for i, agent in enumerate(problem.agents):
        est = check_riccati_assumptions(
            agent.A.T, agent.C2.T, agent.B1.T, agent.D21.T, tols
        )
        for chk in est.checks:
            items.append((f"agent{i}.estimation.{chk.name}", chk.ok, chk.detail))
    return ValidationReport(tuple(items))


# ---------------------------------------------------------------------------
# gains


@dataclass(frozen=True)
class GainLibrary:
    """Per-agent Riccati gains plus their zero-padded global liftings.

    ``F[i]`` regulates agent i's descendant subtree (m_desc(i) x n_desc(i));
    ``L[i]`` is agent i's local estimator injection (n_i x p_i).
    ``F_padded[i]`` and ``L_padded[i]`` are the m x n and n x p liftings
    with zeros outside the blocks they touch, and ``F_bar`` / ``L_bar`` are
    their block-diagonal stackings over all agents (mN x nN, nN x pN).
    """

    X: tuple[np.ndarray, ...]
    F: tuple[np.ndarray, ...]
    Y: tuple[np.ndarray, ...]
    L: tuple[np.ndarray, ...]
    F_padded: tuple[np.ndarray, ...]
    L_padded: tuple[np.ndarray, ...]

    @property
    def F_bar(self) -> np.ndarray:
        return scipy.linalg.block_diag(*self.F_padded)

    @property
    def L_bar(self) -> np.ndarray:
        return scipy.linalg.block_diag(*self.L_padded)


def compute_gains(problem: Problem, tols: Tolerances = DEFAULT_TOLERANCES) -> GainLibrary:
    """Solve every agent's regulator and estimator Riccati equation.

    Agent i's control gain comes from the subtree problem restricted to its
    descendants; its estimator gain from the local (dualized) measurement
    model.  The padded liftings place each gain inside global-size matrices
    with exact zeros elsewhere.
    """
    g = problem.graph
    dims = problem.dims
    xs, fs, ys, ls = [], [], [], []
    for i, agent in enumerate(problem.agents):
        try:
            sol = solve_are(*problem.control_subproblem(i), tols=tols)
        except DagctrlError as exc:
            raise type(exc)(f"agent {i} control Riccati solve failed: {exc}") from exc
        xs.append(sol.X)
        fs.append(sol.F)
        try:
            est = solve_are(agent.A.T, agent.C2.T, agent.B1.T, agent.D21.T, tols=tols)
        except DagctrlError as exc:
            raise type(exc)(f"agent {i} estimation Riccati solve failed: {exc}") from exc
        ys.append(est.X)
        ls.append(est.F.T)

    f_padded, l_padded = [], []
    for i in range(g.n_agents):
        desc = g.descendants(i)
        anc = g.ancestors(i)
        e_m = selector(dims.m, desc)
        e_n = selector(dims.n, desc)
        f_padded.append(e_m @ fs[i] @ e_n.T)
        l_anc = scipy.linalg.block_diag(*(ls[j] for j in anc))
        e_n_anc = selector(dims.n, anc)
        e_p_anc = selector(dims.p, anc)
        l_padded.append(e_n_anc @ l_anc @ e_p_anc.T)
    return GainLibrary(
        X=tuple(xs), F=tuple(fs), Y=tuple(ys), L=tuple(ls),
        F_padded=tuple(f_padded), L_padded=tuple(l_padded),
    )


# ---------------------------------------------------------------------------
# column construction (P) and the masked-inverse controller


def build_P(problem: Problem, gains: GainLibrary) -> StateSpace:
    """Column-wise core map P: block column i turns y_i into u over
    the descendants of i.

    Column i is an observer-regulator pair on agent i's descendant subtree
    driven by y_i alone; the aggregate keeps one state block per column, so
    the state dimension is the sum of the descendant-subtree dimensions.
    """
    g, dims = problem.graph, problem.dims
    a_blocks, b_blocks, c_cols = [], [], []
    for i in range(g.n_agents):
        desc = g.descendants(i)
        n_desc = sum(dims.n[j] for j in desc)
        a_sub = block_submatrix(problem.A, dims.n, desc, dims.n, desc)
        b2_sub = block_submatrix(problem.B2, dims.n, desc, dims.m, desc)
        # C2 block row i over the descendant columns: [C2_ii 0 ... 0]
        c2_row = block_submatrix(problem.C2, dims.p, [i], dims.n, desc)
        inject = np.zeros((n_desc, dims.p[i]))
        inject[: dims.n[i], :] = gains.L[i]
        a_blocks.append(a_sub + b2_sub @ gains.F[i] + inject @ c2_row)
        b_blocks.append(-inject)
        c_cols.append(selector(dims.m, desc) @ gains.F[i])
    return StateSpace(
        scipy.linalg.block_diag(*a_blocks),
        scipy.linalg.block_diag(*b_blocks),
        np.hstack(c_cols),
        np.zeros((dims.total_m, dims.total_p)),
    )


@dataclass(frozen=True)
class ControllerRealization:
    """A controller realization tagged with its construction form.

    ``state_blocks`` maps each state block to (copy agent, modeled agent,
    size): block (i, j) holds copy i's estimate of agent j's state.
    """

    ss: StateSpace
    form: str
    state_blocks: tuple[tuple[int, int, int], ...]

    @property
    def n_states(self) -> int:
        return self.ss.n_states


def _p_state_blocks(problem: Problem) -> tuple[tuple[int, int, int], ...]:
    g, dims = problem.graph, problem.dims
    blocks = []
    for i in range(g.n_agents):
        for j in g.descendants(i):
            blocks.append((i, j, dims.n[j]))
    return tuple(blocks)


def build_K_lemma(problem: Problem, gains: GainLibrary) -> ControllerRealization:
    """Optimal controller as ``P (I + GP - diag(GP))^-1``.

    Assembled purely from realization primitives: a cascade for GP, the
    block-diagonal masking for diag(GP), a feedthrough inversion (well
    posed since GP is strictly proper), and a final cascade with P.  The
    result is deliberately left unreduced.
    """
    dims = problem.dims
    p_sys = build_P(problem, gains)
    gp = series(p_sys, problem.plant.measurement_path)
    off_diag = subtract(gp, block_diagonal_part(gp, dims.p, dims.p))
    inv = inverse_of_eye_plus(off_diag)
    k = series(inv, p_sys)
    blocks = ((-1, -1, k.n_states),)  # interconnection state, no block meaning
    return ControllerRealization(ss=k, form="lemma", state_blocks=blocks)


# ---------------------------------------------------------------------------
# lifted (one-copy-per-agent) realizations


@dataclass(frozen=True)
class BarredSymbols:
    """Kronecker liftings shared by the one-copy-per-agent realizations.

    ``A_bar = I_N (x) A`` etc. stack N copies of the global matrices;
    ``Sn = S (x) I_n`` routes copies along the DAG; ``ones_p = 1_N (x) I_p``
    broadcasts the physical measurement to every copy.  ``E_desc`` selects,
    within each copy, the blocks belonging to that agent's descendants.
    """

    A_bar: np.ndarray
    B_bar: np.ndarray
    C_bar: np.ndarray
    Sm: np.ndarray
    Sn: np.ndarray
    Sp: np.ndarray
    Sn_inv: np.ndarray
    ones_m: np.ndarray
    ones_p: np.ndarray
    F_bar: np.ndarray
    L_bar: np.ndarray
    E_desc: np.ndarray


def build_barred(problem: Problem, gains: GainLibrary) -> BarredSymbols:
    """Materialize every Kronecker-lifted symbol densely."""
    g, dims = problem.graph, problem.dims
    n_agents = g.n_agents
    s = g.adj.astype(float)
    s_inv = g.adjacency_inverse().astype(float)
    eye_n = np.eye(n_agents)
    ones = np.ones((n_agents, 1))
    e_desc = scipy.linalg.block_diag(
        *(selector(dims.n, g.descendants(i)) for i in range(n_agents))
    )
    return BarredSymbols(
        A_bar=np.kron(eye_n, problem.A),
        B_bar=np.kron(eye_n, problem.B2),
        C_bar=np.kron(eye_n, problem.C2),
        Sm=np.kron(s, np.eye(dims.total_m)),
        Sn=np.kron(s, np.eye(dims.total_n)),
        Sp=np.kron(s, np.eye(dims.total_p)),
        Sn_inv=np.kron(s_inv, np.eye(dims.total_n)),
        ones_m=np.kron(ones, np.eye(dims.total_m)),
        ones_p=np.kron(ones, np.eye(dims.total_p)),
        F_bar=gains.F_bar,
        L_bar=gains.L_bar,
        E_desc=e_desc,
    )


def _full_state_blocks(problem: Problem) -> tuple[tuple[int, int, int], ...]:
    dims = problem.dims
    return tuple(
        (i, j, dims.n[j])
        for i in range(problem.graph.n_agents)
        for j in range(problem.graph.n_agents)
    )


def build_K_state(problem: Problem, gains: GainLibrary) -> ControllerRealization:
    """Lifted realization in state-estimate coordinates.

    Copy i of the global state is agent i's estimate of the world given
    its ancestors' measurements; the DAG routing matrices recombine the
    copies into the actual input.
    """
    bar = build_barred(problem, gains)
    a = bar.A_bar + bar.L_bar @ bar.C_bar + bar.B_bar @ bar.Sm @ bar.F_bar @ bar.Sn_inv
    b = -bar.L_bar @ bar.ones_p
    c = bar.ones_m.T @ bar.F_bar @ bar.Sn_inv
    ss = StateSpace(a, b, c, np.zeros((c.shape[0], b.shape[1])))
    return ControllerRealization(ss, "state", _full_state_blocks(problem))


def build_K_innovation(problem: Problem, gains: GainLibrary) -> ControllerRealization:
    """Lifted realization in innovation coordinates.

    Related to the state form by the exact similarity x -> (S (x) I_n) x;
    each copy now carries the improvement over its ancestors' estimates.
    """
    bar = build_barred(problem, gains)
    a = bar.A_bar + bar.Sn_inv @ bar.L_bar @ bar.Sp @ bar.C_bar + bar.B_bar @ bar.F_bar
    b = -bar.Sn_inv @ bar.L_bar @ bar.ones_p
    c = bar.ones_m.T @ bar.F_bar
    ss = StateSpace(a, b, c, np.zeros((c.shape[0], b.shape[1])))
    return ControllerRealization(ss, "innovation", _full_state_blocks(problem))


def build_K_minimal(
    problem: Problem,
    gains: GainLibrary,
    form: Literal["state", "innovation"] = "state",
) -> ControllerRealization:
    """Compress a lifted realization onto the blocks agents actually store.

    Copy i keeps only the sub-blocks for i's descendants (the rest are
    unobservable), giving state dimension sum_i n_desc(i) and a transition
    matrix whose block sparsity follows the adjacency.
    """
    if form == "state":
        full = build_K_state(problem, gains)
    elif form == "innovation":
        full = build_K_innovation(problem, gains)
    else:
        raise ValueError(f"unknown minimal base form: {form!r}")
    e = build_barred(problem, gains).E_desc
    ss = StateSpace(
        e.T @ full.ss.A @ e,
        e.T @ full.ss.B,
        full.ss.C @ e,
        full.ss.D,
    )
    return ControllerRealization(ss, f"minimal-{form}", _p_state_blocks(problem))


def build_controller(
    problem: Problem, gains: GainLibrary, form: str
) -> ControllerRealization:
    """Dispatch on the realization form name (see ``FORMS``)."""
    if form == "lemma":
        return build_K_lemma(problem, gains)
    if form == "state":
        return build_K_state(problem, gains)
    if form == "innovation":
        return build_K_innovation(problem, gains)
    if form == "minimal-state":
        return build_K_minimal(problem, gains, "state")
    if form == "minimal-innovation":
        return build_K_minimal(problem, gains, "innovation")
    raise ValueError(f"unknown controller form: {form!r} (choose from {FORMS})")


def build_P2(problem: Problem, gains: GainLibrary) -> StateSpace:
    """Alternative lifted realization of P used as a consistency oracle.

    Uses the locally injected estimator gains together with a routed
    correction of the measurement broadcast; its transfer must coincide
    with ``build_P`` even though the realization looks nothing alike.
    """
    g, dims = problem.graph, problem.dims
    bar = build_barred(problem, gains)
    l_tilde = scipy.linalg.block_diag(
        *(
            selector(dims.n, [i]) @ gains.L[i] @ selector(dims.p, [i]).T
            for i in range(g.n_agents)
        )
    )
    # ones_p' with its per-copy own-block part removed, copy k losing block k
    p_eye = np.eye(dims.total_p)
    strip = np.hstack(
        [
            p_eye - selector(dims.p, [k]) @ selector(dims.p, [k]).T
            for k in range(g.n_agents)
        ]
    )
    l_x = bar.Sn_inv @ bar.L_bar @ (bar.Sp - bar.ones_p @ strip)
    a = bar.A_bar + bar.B_bar @ bar.F_bar + l_x @ bar.C_bar
    b = -l_tilde @ bar.ones_p
    c = bar.ones_m.T @ bar.F_bar
    return StateSpace(a, b, c, np.zeros((c.shape[0], b.shape[1])))


def centralized_lqg(problem: Problem, tols: Tolerances = DEFAULT_TOLERANCES) -> StateSpace:
    """Classical two-Riccati controller with full information sharing.

    Solves the global regulator and (block-diagonal) estimator problems
    and returns the observer-regulator realization.  Serves as the cost
    lower bound for every information-constrained controller.
    """
    reg = solve_are(problem.A, problem.B2, problem.C1, problem.D12, tols=tols)
    est = solve_are(problem.A.T, problem.C2.T, problem.B1.T, problem.D21.T, tols=tols)
    f = reg.F
    l = est.F.T
    a = problem.A + problem.B2 @ f + l @ problem.C2
    return StateSpace(a, -l, f, np.zeros((f.shape[0], l.shape[1])))
