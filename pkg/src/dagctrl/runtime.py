"""Per-agent controllers, DAG message passing, and closed-loop simulation.

Each agent i stores only the slice of its world estimate covering its own
descendant subtree.  Within a step it receives (state estimate, partial
input) payloads from its strict ancestors, weights ancestor estimates with
its integer inverse-adjacency row (so information arriving along multiple
paths is not double counted), assembles its actuation, and transmits its
own payloads downstream.  The closed loop can be simulated either as this
message-passing network or as the equivalent monolithic system, and the
two integrations stay independent so they can be checked against each
other.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import DivergenceError, MissingAncestorError
from .graph import block_submatrix, selector
from .synthesis import GainLibrary, Problem, build_controller, compute_gains

__all__ = [
    "AgentController",
    "Message",
    "SimTrace",
    "derive_agent_controllers",
    "compute_partial_input",
    "assemble_input",
    "network_rhs",
    "simulate",
]


@dataclass(frozen=True)
class AgentController:
    """Agent i's local controller data.

    The local state covers the descendant subtree of i, own block first
    (i precedes its descendants in topological order).  ``inv_row`` holds
    the integer inverse-adjacency weights over the ancestors, and
    ``embed_state`` / ``embed_input`` map ancestor subtree payloads into
    local subtree coordinates.
    """

    index: int
    descendants: tuple[int, ...]
    ancestors: tuple[int, ...]
    strict_ancestors: tuple[int, ...]
    m_own: int
    A_loc: np.ndarray           # subtree dynamics
    B2_loc: np.ndarray          # subtree actuation map
    C2_own: np.ndarray          # own measurement map
    F_loc: np.ndarray           # subtree regulator gain
    inject: np.ndarray          # estimator injection lifted to the subtree
    inv_row: dict[int, int]
    embed_state: dict[int, np.ndarray]
    embed_input: dict[int, np.ndarray]

    @property
    def n_local(self) -> int:
        return self.A_loc.shape[0]

    @property
    def m_local(self) -> int:
        return self.B2_loc.shape[1]

    @property
    def n_own(self) -> int:
        return self.C2_own.shape[1]

    @property
    def message_floats(self) -> int:
        """Numbers transmitted per step to each strict descendant."""
        return self.n_local + self.m_local


@dataclass(frozen=True)
class Message:
    """Payload an agent broadcasts to its strict descendants each step."""

    sender: int
    state_estimate: np.ndarray
    partial_input: np.ndarray

    @property
    def size(self) -> int:
        return self.state_estimate.size + self.partial_input.size


def derive_agent_controllers(
    problem: Problem, gains: GainLibrary
) -> list[AgentController]:
    """Split the optimal controller into its per-agent implementations."""
    g, dims = problem.graph, problem.dims
    s_inv = g.adjacency_inverse()
    controllers = []
    for i, agent in enumerate(problem.agents):
        desc = g.descendants(i)
        a_loc = block_submatrix(problem.A, dims.n, desc, dims.n, desc)
        b2_loc = block_submatrix(problem.B2, dims.n, desc, dims.m, desc)
        n_loc = sum(dims.n[j] for j in desc)
        inject = np.zeros((n_loc, dims.p[i]))
        inject[: dims.n[i], :] = gains.L[i]
        embed_state, embed_input, inv_row = {}, {}, {}
        for k in g.ancestors(i):
            desc_k = g.descendants(k)
            embed_state[k] = selector(dims.n, desc).T @ selector(dims.n, desc_k)
            inv_row[k] = int(s_inv[i, k])
        for k in g.strict_ancestors(i):
            desc_k = g.descendants(k)
            embed_input[k] = selector(dims.m, desc).T @ selector(dims.m, desc_k)
        controllers.append(
            AgentController(
                index=i,
                descendants=desc,
                ancestors=g.ancestors(i),
                strict_ancestors=g.strict_ancestors(i),
                m_own=dims.m[i],
                A_loc=a_loc,
                B2_loc=b2_loc,
                C2_own=agent.C2,
                F_loc=gains.F[i],
                inject=inject,
                inv_row=inv_row,
                embed_state=embed_state,
                embed_input=embed_input,
            )
        )
    return controllers


def compute_partial_input(
    ctrl: AgentController, states: dict[int, np.ndarray]
) -> np.ndarray:
    """Agent's own partial-input summand from ancestor state estimates.

    Each ancestor's subtree estimate is restricted to this agent's subtree
    and weighted by the integer inverse-adjacency entry before the local
    regulator gain is applied.
    """
    acc = np.zeros(ctrl.n_local)
    for k in ctrl.ancestors:
        if k not in states:
            raise MissingAncestorError(
                f"agent {ctrl.index} missing state payload from ancestor {k}"
            )
        acc += ctrl.inv_row[k] * (ctrl.embed_state[k] @ states[k])
    return ctrl.F_loc @ acc


def assemble_input(
    ctrl: AgentController,
    own_partial: np.ndarray,
    received: dict[int, np.ndarray],
) -> tuple[np.ndarray, np.ndarray]:
    """Total subtree input and the agent's own actuation slice.

    Adds the overlapping part of every strict ancestor's partial input to
    the agent's own summand; the actuation is the leading (own) block.
    """
    nu = own_partial.copy()
    for k in ctrl.strict_ancestors:
        if k not in received:
            raise MissingAncestorError(
                f"agent {ctrl.index} missing partial input from ancestor {k}"
            )
        nu += ctrl.embed_input[k] @ received[k]
    return nu, nu[: ctrl.m_own]


class NetworkState(NamedTuple):
    """Derivatives and signals of one synchronous network evaluation."""

    dx: np.ndarray
    dxi: list[np.ndarray]
    u: np.ndarray
    y: np.ndarray
    z: np.ndarray
    messages: dict[int, Message]


def network_rhs(
    problem: Problem,
    controllers: list[AgentController],
    x: np.ndarray,
    xi: list[np.ndarray],
    w: np.ndarray,
    y_bias: np.ndarray | None = None,
) -> NetworkState:
    """One synchronous evaluation of the plant/controller network.

    Measurements are formed first, then agents are swept in topological
    order exchanging messages (sharing is instantaneous, so one sweep per
    evaluation), then all derivatives are evaluated.  ``y_bias`` is an
    optional additive corruption of the measurements as seen by the
    controllers, used by the information-locality checks.
    """
    dims = problem.dims
    offs_n = np.cumsum([0, *dims.n])
    offs_m = np.cumsum([0, *dims.m])
    offs_p = np.cumsum([0, *dims.p])
    offs_q = np.cumsum([0, *dims.q])

    y = np.empty(dims.total_p)
    for i, agent in enumerate(problem.agents):
        xi_plant = x[offs_n[i]:offs_n[i + 1]]
        wi = w[offs_q[i]:offs_q[i + 1]]
        y[offs_p[i]:offs_p[i + 1]] = agent.C2 @ xi_plant + agent.D21 @ wi
    y_seen = y if y_bias is None else y + y_bias

    u = np.empty(dims.total_m)
    dxi: list[np.ndarray] = [np.empty(0)] * len(controllers)
    messages: dict[int, Message] = {}
    for i, ctrl in enumerate(controllers):
        states = {k: messages[k].state_estimate for k in ctrl.strict_ancestors}
        states[i] = xi[i]
        own_partial = compute_partial_input(ctrl, states)
        received = {k: messages[k].partial_input for k in ctrl.strict_ancestors}
        nu, u_own = assemble_input(ctrl, own_partial, received)
        messages[i] = Message(i, xi[i], own_partial)
        u[offs_m[i]:offs_m[i + 1]] = u_own
        y_own = y_seen[offs_p[i]:offs_p[i + 1]]
        innovation = y_own - ctrl.C2_own @ xi[i][: ctrl.n_own]
        dxi[i] = ctrl.A_loc @ xi[i] + ctrl.B2_loc @ nu - ctrl.inject @ innovation

    dx = np.empty(dims.total_n)
    for i, agent in enumerate(problem.agents):
        xi_plant = x[offs_n[i]:offs_n[i + 1]]
        wi = w[offs_q[i]:offs_q[i + 1]]
        ui = u[offs_m[i]:offs_m[i + 1]]
        dx[offs_n[i]:offs_n[i + 1]] = agent.A @ xi_plant + agent.B1 @ wi + agent.B2 @ ui
    z = problem.C1 @ x + problem.D12 @ u
    return NetworkState(dx=dx, dxi=dxi, u=u, y=y, z=z, messages=messages)


@dataclass
class SimTrace:
    """Uniformly sampled closed-loop trajectory with running average cost."""

    t: np.ndarray
    x: np.ndarray                   # plant state, (T, n)
    controller_state: np.ndarray    # stacked estimates, (T, n_k)
    u: np.ndarray
    y: np.ndarray
    z: np.ndarray
    running_cost: np.ndarray        # (1/t) integral of |z|^2 so far
    mode: str
    state_labels: tuple[str, ...] = field(default_factory=tuple)

    @property
    def final_cost(self) -> float:
        return float(self.running_cost[-1])

    def column_names(self) -> list[str]:
        names = ["t"]
        names += [f"x{i}" for i in range(self.x.shape[1])]
        if self.state_labels:
            names += list(self.state_labels)
        else:
            names += [f"k{i}" for i in range(self.controller_state.shape[1])]
        names += [f"u{i}" for i in range(self.u.shape[1])]
        names += [f"y{i}" for i in range(self.y.shape[1])]
        names += [f"z{i}" for i in range(self.z.shape[1])]
        names += ["running_cost"]
        return names

    def as_array(self) -> np.ndarray:
        return np.column_stack(
            [self.t, self.x, self.controller_state, self.u, self.y, self.z,
             self.running_cost]
        )


def _steps(horizon: float, dt: float) -> int:
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = round(horizon / dt)
    if n < 1 or abs(n * dt - horizon) > 1e-9 * max(1.0, horizon):
        raise ValueError(f"horizon {horizon} is not a positive multiple of dt {dt}")
    return int(n)


def _network_labels(problem: Problem) -> tuple[str, ...]:
    labels = []
    for i in range(problem.graph.n_agents):
        for j in problem.graph.descendants(i):
            for c in range(problem.dims.n[j]):
                labels.append(f"xi{i}_{j}_{c}")
    return tuple(labels)


def _labels_from_blocks(
    blocks: tuple[tuple[int, int, int], ...], n_k: int
) -> tuple[str, ...]:
    if blocks and blocks[0][0] >= 0:
        out = []
        for i, j, size in blocks:
            out.extend(f"k{i}_{j}_{c}" for c in range(size))
        return tuple(out)
    return tuple(f"k{i}" for i in range(n_k))


def _simulate_monolithic_noise(
    problem: Problem,
    form: str,
    x0: np.ndarray,
    noise_seed: int,
    n_steps: int,
    dt: float,
    store_every: int,
    y_bias: np.ndarray | None,
    gains: GainLibrary,
    tols: Tolerances,
) -> SimTrace:
    """Euler-Maruyama on the monolithic closed loop, processed in blocks.

    Identical recursion and noise stream as the generic path, but the
    per-step work is two matrix-vector products, with outputs and the cost
    integral batched per block so long horizons stay cheap in time and
    memory.
    """
    dims = problem.dims
    n, q = dims.total_n, dims.total_q
    plant = problem.plant
    ctrl = build_controller(problem, gains, form)
    n_k = ctrl.ss.n_states
    a_cl = np.block([
        [plant.A, plant.B2 @ ctrl.ss.C],
        [ctrl.ss.B @ plant.C2, ctrl.ss.A],
    ])
    b_cl = np.vstack([plant.B1, ctrl.ss.B @ plant.D21])
    c_z = np.hstack([plant.C1, plant.D12 @ ctrl.ss.C])
    n_cl = n + n_k

    step_mat = np.eye(n_cl) + dt * a_cl
    bias_term = np.zeros(n_cl)
    if y_bias is not None:
        bias_term[n:] = dt * (ctrl.ss.B @ y_bias)
    rng = np.random.default_rng(noise_seed)
    sqrt_dt = np.sqrt(dt)

    stored_steps = sorted(set(range(0, n_steps + 1, store_every)) | {n_steps})
    n_stored = len(stored_steps)
    t_col = np.array([s * dt for s in stored_steps])
    v_col = np.zeros((n_stored, n_cl))
    w_col = np.zeros((n_stored, q))
    cost_col = np.zeros(n_stored)
    next_slot = 0

    v = np.concatenate([x0, np.zeros(n_k)])
    cost_acc = 0.0
    guard = tols.divergence_limit
    block = 65536
    v_buf = np.empty((block + 1, n_cl))
    for start in range(0, n_steps, block):
        size = min(block, n_steps - start)
        e = rng.standard_normal((size, q))
        drive = (e @ b_cl.T) * sqrt_dt + bias_term
        v_buf[0] = v
        for j in range(size):
            v_buf[j + 1] = step_mat @ v_buf[j] + drive[j]
        z_blk = v_buf[:size] @ c_z.T
        contrib = np.einsum("ij,ij->i", z_blk, z_blk) * dt
        prefix = np.concatenate([[0.0], np.cumsum(contrib)[:-1]])
        while next_slot < n_stored and stored_steps[next_slot] < start + size:
            j = stored_steps[next_slot] - start
            v_col[next_slot] = v_buf[j]
            w_col[next_slot] = e[j] / sqrt_dt
            cost_col[next_slot] = cost_acc + prefix[j]
            next_slot += 1
        cost_acc += float(np.sum(contrib))
        v = v_buf[size].copy()
        if np.linalg.norm(v) > guard:
            raise DivergenceError(
                f"state norm exceeded {guard:.1g} near step {start + size}; "
                "unstable loop or too large a step"
            )
    if next_slot < n_stored:  # final sample, no further step taken
        v_col[next_slot] = v
        cost_col[next_slot] = cost_acc
        next_slot += 1

    with np.errstate(invalid="ignore", divide="ignore"):
        running = np.where(t_col > 0, cost_col / t_col, 0.0)
    x_traj = v_col[:, :n]
    k_traj = v_col[:, n:]
    u_traj = k_traj @ ctrl.ss.C.T
    y_traj = x_traj @ plant.C2.T + w_col @ plant.D21.T
    z_traj = x_traj @ plant.C1.T + u_traj @ plant.D12.T
    return SimTrace(
        t=t_col, x=x_traj, controller_state=k_traj, u=u_traj, y=y_traj,
        z=z_traj, running_cost=running, mode="monolithic",
        state_labels=_labels_from_blocks(ctrl.state_blocks, n_k),
    )


def simulate(
    problem: Problem,
    mode: str = "network",
    form: str = "minimal-state",
    x0: np.ndarray | None = None,
    w: Callable[[float], np.ndarray] | None = None,
    noise_seed: int | None = None,
    horizon: float = 10.0,
    dt: float = 1e-3,
    store_every: int = 1,
    y_bias: np.ndarray | None = None,
    gains: GainLibrary | None = None,
    tols: Tolerances = DEFAULT_TOLERANCES,
) -> SimTrace:
    """Integrate the closed loop and record a trace.

    Deterministic runs (``noise_seed`` is None) use fixed-step fourth-order
    Runge-Kutta on the disturbance ``w`` (a callable of time, default
    zero).  With ``noise_seed`` set, the exogenous input is white noise
    simulated by the Euler-Maruyama rule with Gaussian increments of
    variance dt.  ``mode`` selects the message-passing network or the
    monolithic closed loop built from the realization ``form``; the two
    are integrated independently and must agree to integration accuracy.

    ``store_every`` thins the recorded samples (the running cost still
    accumulates every step); ``y_bias`` additively corrupts the
    measurements seen by the controllers.
    """
    if mode not in ("network", "monolithic"):
        raise ValueError(f"unknown mode {mode!r}")
    if noise_seed is not None and w is not None:
        raise ValueError("pass either a deterministic disturbance or a noise seed")
    dims = problem.dims
    n, m, p, q = dims.total_n, dims.total_m, dims.total_p, dims.total_q
    n_z = problem.C1.shape[0]
    n_steps = _steps(horizon, dt)
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).reshape(n)
    if gains is None:
        gains = compute_gains(problem, tols)
    if mode == "monolithic" and noise_seed is not None:
        return _simulate_monolithic_noise(
            problem, form, x0, noise_seed, n_steps, dt, store_every,
            y_bias, gains, tols,
        )

    if mode == "network":
        controllers = derive_agent_controllers(problem, gains)
        torn = np.cumsum([0] + [c.n_local for c in controllers])
        n_k = int(torn[-1])

        def split(vk: np.ndarray) -> list[np.ndarray]:
            return [vk[torn[i]:torn[i + 1]] for i in range(len(controllers))]

        def rhs(xv, kv, wv):
            out = network_rhs(problem, controllers, xv, split(kv), wv, y_bias)
            return out.dx, np.concatenate(out.dxi), out

        labels = _network_labels(problem)
    else:
        ctrl = build_controller(problem, gains, form)
        n_k = ctrl.ss.n_states
        a_k, b_k, c_k = ctrl.ss.A, ctrl.ss.B, ctrl.ss.C
        plant = problem.plant

        def rhs(xv, kv, wv):
            y = plant.C2 @ xv + plant.D21 @ wv
            y_seen = y if y_bias is None else y + y_bias
            u = c_k @ kv
            dx = plant.A @ xv + plant.B1 @ wv + plant.B2 @ u
            dk = a_k @ kv + b_k @ y_seen
            z = plant.C1 @ xv + plant.D12 @ u
            return dx, dk, NetworkState(dx, [], u, y, z, {})

        labels = _labels_from_blocks(ctrl.state_blocks, n_k)

    x = x0.copy()
    k = np.zeros(n_k)
    w_of_t = (lambda t: np.zeros(q)) if w is None else w
    rng = np.random.default_rng(noise_seed) if noise_seed is not None else None
    sqrt_dt = np.sqrt(dt)

    stored_steps = sorted(set(range(0, n_steps + 1, store_every)) | {n_steps})
    n_stored = len(stored_steps)
    t_col = np.zeros(n_stored)
    x_col = np.zeros((n_stored, n))
    k_col = np.zeros((n_stored, n_k))
    u_col = np.zeros((n_stored, m))
    y_col = np.zeros((n_stored, p))
    z_col = np.zeros((n_stored, n_z))
    cost_col = np.zeros(n_stored)
    next_slot = 0
    cost_acc = 0.0
    guard = tols.divergence_limit

    for step in range(n_steps + 1):
        t = step * dt
        if rng is None:
            wv = w_of_t(t)
        elif step < n_steps:
            wv = rng.standard_normal(q) / sqrt_dt
        else:
            wv = np.zeros(q)
        dxv, dkv, out = rhs(x, k, wv)
        if next_slot < n_stored and step == stored_steps[next_slot]:
            t_col[next_slot] = t
            x_col[next_slot] = x
            k_col[next_slot] = k
            u_col[next_slot] = out.u
            y_col[next_slot] = out.y
            z_col[next_slot] = out.z
            cost_col[next_slot] = cost_acc / t if t > 0 else 0.0
            next_slot += 1
        if step == n_steps:
            break
        cost_acc += float(out.z @ out.z) * dt
        if rng is None:
            k2x, k2k, _ = rhs(x + 0.5 * dt * dxv, k + 0.5 * dt * dkv, w_of_t(t + 0.5 * dt))
            k3x, k3k, _ = rhs(x + 0.5 * dt * k2x, k + 0.5 * dt * k2k, w_of_t(t + 0.5 * dt))
            k4x, k4k, _ = rhs(x + dt * k3x, k + dt * k3k, w_of_t(t + dt))
            x = x + (dt / 6.0) * (dxv + 2 * k2x + 2 * k3x + k4x)
            k = k + (dt / 6.0) * (dkv + 2 * k2k + 2 * k3k + k4k)
        else:
            x = x + dt * dxv
            k = k + dt * dkv
        if np.linalg.norm(x) > guard or (n_k and np.linalg.norm(k) > guard):
            raise DivergenceError(
                f"state norm exceeded {guard:.1g} at t={t + dt:.4g}; "
                "unstable loop or too large a step"
            )

    return SimTrace(
        t=t_col, x=x_col, controller_state=k_col, u=u_col, y=y_col, z=z_col,
        running_cost=cost_col, mode=mode, state_labels=labels,
    )
