"""Continuous-time state-space algebra and matrix-equation solvers.

Everything downstream trades in the ``StateSpace`` quadruple (A, B, C, D)
representing ``D + C (sI - A)^-1 B``.  This module provides transfer
evaluation, stability tests, Lyapunov and algebraic Riccati solvers, squared
H2 norms, realization interconnections (series, parallel, diagonal masking,
feedthrough inversion, plant-controller feedback) and exact removal of
jointly uncontrollable/unobservable modes.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import (
    AssumptionError,
    DimensionError,
    ImaginaryAxisError,
    NonzeroFeedthroughError,
    NotHurwitzError,
    NumericalError,
    SingularError,
    WellPosednessError,
)
from .graph import BlockDims

__all__ = [
    "StateSpace",
    "FourBlockPlant",
    "RiccatiSolution",
    "RiccatiAssumptionReport",
    "eval_transfer",
    "is_hurwitz",
    "solve_lyapunov",
    "h2_norm_sq",
    "solve_are",
    "check_riccati_assumptions",
    "series",
    "add",
    "subtract",
    "block_diagonal_part",
    "inverse_of_eye_plus",
    "connect_feedback",
    "remove_uncontrollable_unobservable",
    "markov_parameters",
]

log = logging.getLogger(__name__)


def _as_matrix(x) -> np.ndarray:
    return np.atleast_2d(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class StateSpace:
    """Realization (A, B, C, D) of ``D + C (sI - A)^-1 B``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        A = _as_matrix(self.A)
        nx = A.shape[0]
        B = _as_matrix(self.B)
        if B.size == 0:  # disambiguate empties like [] while keeping (0, k)
            B = B.reshape(nx, B.shape[1] if B.shape[0] == nx else 0)
        C = _as_matrix(self.C)
        if C.size == 0:
            C = C.reshape(C.shape[0] if C.shape[1] == nx else 0, nx)
        D = _as_matrix(self.D)
        if D.size == 0:
            D = D.reshape(C.shape[0], B.shape[1])
        for name, mat in (("A", A), ("B", B), ("C", C), ("D", D)):
            if not np.all(np.isfinite(mat)):
                raise ValueError(f"{name} contains non-finite entries")
        if A.shape != (nx, nx):
            raise DimensionError(f"A must be square, got {A.shape}")
        if B.shape[0] != nx:
            raise DimensionError(f"B has {B.shape[0]} rows, expected {nx}")
        if C.shape[1] != nx:
            raise DimensionError(f"C has {C.shape[1]} cols, expected {nx}")
        if D.shape != (C.shape[0], B.shape[1]):
            raise DimensionError(
                f"D shape {D.shape} != ({C.shape[0]}, {B.shape[1]})"
            )
        for name, mat in (("A", A), ("B", B), ("C", C), ("D", D)):
            mat.setflags(write=False)
            object.__setattr__(self, name, mat)

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.B.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.C.shape[0]

    @classmethod
    def static_gain(cls, D) -> "StateSpace":
        D = _as_matrix(D)
        return cls(
            np.zeros((0, 0)), np.zeros((0, D.shape[1])),
            np.zeros((D.shape[0], 0)), D,
        )

    @classmethod
    def zero(cls, n_outputs: int, n_inputs: int) -> "StateSpace":
        return cls.static_gain(np.zeros((n_outputs, n_inputs)))


@dataclass(frozen=True)
class FourBlockPlant:
    """Open-loop map (w, u) -> (z, y) with zero w->z and u->y feedthrough.

    A, B1, B2, C2, D21 are block diagonal over the agents (each agent's
    dynamics are independent); the cost rows C1, D12 may couple everything.
    """

    A: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    C1: np.ndarray
    C2: np.ndarray
    D12: np.ndarray
    D21: np.ndarray

    def __post_init__(self):
        for name in ("A", "B1", "B2", "C1", "C2", "D12", "D21"):
            object.__setattr__(self, name, _as_matrix(getattr(self, name)))
        n = self.A.shape[0]
        checks = {
            "B1": self.B1.shape[0] == n,
            "B2": self.B2.shape[0] == n,
            "C1": self.C1.shape[1] == n,
            "C2": self.C2.shape[1] == n,
            "D12": self.D12.shape == (self.C1.shape[0], self.B2.shape[1]),
            "D21": self.D21.shape == (self.C2.shape[0], self.B1.shape[1]),
        }
        bad = [k for k, ok in checks.items() if not ok]
        if bad:
            raise DimensionError(f"nonconforming plant blocks: {bad}")

    @property
    def measurement_path(self) -> StateSpace:
        """The u -> y subsystem (strictly proper by construction)."""
        n_y, n_u = self.C2.shape[0], self.B2.shape[1]
        return StateSpace(self.A, self.B2, self.C2, np.zeros((n_y, n_u)))

    @property
    def disturbance_path(self) -> StateSpace:
        """The w -> z subsystem with the loop open (u = 0)."""
        n_z, n_w = self.C1.shape[0], self.B1.shape[1]
        return StateSpace(self.A, self.B1, self.C1, np.zeros((n_z, n_w)))


# ---------------------------------------------------------------------------
# transfer evaluation and spectra


def eval_transfer(sys: StateSpace, s: complex) -> np.ndarray:
    """Evaluate ``D + C (sI - A)^-1 B`` by LU solve, never explicit inverse.

    Raises SingularError when sI - A is numerically singular (estimated
    condition number beyond the configured limit).
    """
    n = sys.n_states
    if n == 0:
        return sys.D.astype(complex)
    m = s * np.eye(n, dtype=complex) - sys.A
    with warnings.catch_warnings():
        # singularity is detected explicitly below via the condition estimate
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(m, check_finite=False)
    if not np.all(np.isfinite(lu)):
        raise SingularError(f"sI - A singular at s={s}")
    anorm = np.linalg.norm(m, 1)
    rcond, _ = scipy.linalg.lapack.zgecon(lu, anorm)
    limit = DEFAULT_TOLERANCES.singular_cond_limit
    if rcond <= 0 or 1.0 / rcond > limit:
        raise SingularError(
            f"sI - A has condition {np.inf if rcond <= 0 else 1.0 / rcond:.3g} "
            f"> {limit:.3g} at s={s}"
        )
    x = scipy.linalg.lu_solve((lu, piv), sys.B.astype(complex), check_finite=False)
    return sys.D + sys.C @ x


def is_hurwitz(a: np.ndarray, tol: float = DEFAULT_TOLERANCES.hurwitz_margin) -> bool:
    """True iff every eigenvalue has real part < -tol (vacuous for 0x0)."""
    a = _as_matrix(a)
    if a.shape[0] == 0:
        return True
    try:
        eig = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericalError(f"eigenvalue computation failed: {exc}") from exc
    return bool(np.max(eig.real) < -tol)


def spectral_abscissa(a: np.ndarray) -> float:
    a = _as_matrix(a)
    if a.shape[0] == 0:
        return -np.inf
    return float(np.max(np.linalg.eigvals(a).real))


# ---------------------------------------------------------------------------
# Lyapunov / H2


def solve_lyapunov(
    a: np.ndarray, q: np.ndarray, tols: Tolerances = DEFAULT_TOLERANCES
) -> np.ndarray:
    """Solve ``A' P + P A + Q = 0`` for symmetric P; A must be Hurwitz.

    The residual is verified against ``lyap_residual_rtol`` relative to Q.
    """
    a = _as_matrix(a)
    q = _as_matrix(q)
    if a.shape[0] == 0:
        return np.zeros((0, 0))
    if not is_hurwitz(a, tols.hurwitz_margin):
        raise NotHurwitzError(
            f"Lyapunov solve needs Hurwitz A (spectral abscissa "
            f"{spectral_abscissa(a):.3g})"
        )
    p = scipy.linalg.solve_continuous_lyapunov(a.T, -q)
    p = 0.5 * (p + p.T)
    residual = np.linalg.norm(a.T @ p + p @ a + q, "fro")
    scale = max(1.0, np.linalg.norm(q, "fro"))
    if residual > tols.lyap_residual_rtol * scale:
        raise NumericalError(
            f"Lyapunov residual {residual:.3g} exceeds "
            f"{tols.lyap_residual_rtol:.1g} * {scale:.3g}"
        )
    return p


def h2_norm_sq(sys: StateSpace, tols: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Squared H2 norm via the observability Lyapunov equation.

    Requires zero feedthrough and Hurwitz A; equals the white-noise
    steady-state output power ``trace(B' Q_o B)``.
    """
    if np.any(sys.D != 0):
        raise NonzeroFeedthroughError("H2 norm requires D = 0")
    if not is_hurwitz(sys.A, tols.hurwitz_margin):
        raise NotHurwitzError("H2 norm requires a Hurwitz A matrix")
    if sys.n_states == 0:
        return 0.0
    q_o = solve_lyapunov(sys.A, sys.C.T @ sys.C, tols)
    return float(np.trace(sys.B.T @ q_o @ sys.B))


# ---------------------------------------------------------------------------
# algebraic Riccati equation


@dataclass(frozen=True)
class RiccatiSolution:
    """Stabilizing solution X with gain F = -(D'D)^-1 B'X."""

    X: np.ndarray
    F: np.ndarray
    residual: float


@dataclass(frozen=True)
class AssumptionCheck:
    name: str
    ok: bool
    metric: float
    detail: str


@dataclass(frozen=True)
class RiccatiAssumptionReport:
    """Diagnostics for the three solvability conditions of the ARE."""

    orthogonal_weights: AssumptionCheck   # C'D = 0 and D'D > 0
    stabilizable: AssumptionCheck         # PBH on unstable eigenvalues
    no_invariant_zeros_on_axis: AssumptionCheck

    @property
    def ok(self) -> bool:
        return (
            self.orthogonal_weights.ok
            and self.stabilizable.ok
            and self.no_invariant_zeros_on_axis.ok
        )

    @property
    def checks(self) -> tuple[AssumptionCheck, ...]:
        return (
            self.orthogonal_weights,
            self.stabilizable,
            self.no_invariant_zeros_on_axis,
        )


def _hamiltonian(a, b, c, d):
    r = d.T @ d
    g = b @ np.linalg.solve(r, b.T)
    q = c.T @ c
    return np.block([[a, -g], [-q, -a.T]])


def check_riccati_assumptions(
    a, b, c, d, tols: Tolerances = DEFAULT_TOLERANCES
) -> RiccatiAssumptionReport:
    """Check the admissibility of (A, B, C, D) for the stabilizing ARE.

    The three conditions: C'D = 0 with D'D positive definite;
    (A, B) stabilizable (PBH over closed-right-half-plane eigenvalues);
    and the pencil [A - jwI, B; C, D] keeps full column rank for all real
    w, tested through the Hamiltonian spectrum and cross-checked by the
    smallest singular value of the pencil on a log-spaced frequency grid.
    """
    a, b, c, d = map(_as_matrix, (a, b, c, d))
    n = a.shape[0]

    cross = np.linalg.norm(c.T @ d, "fro")
    dtd = d.T @ d
    min_dd = float(np.min(np.linalg.eigvalsh(dtd))) if dtd.size else 0.0
    scale_cd = max(1.0, np.linalg.norm(c, "fro") * np.linalg.norm(d, "fro"))
    r1_ok = cross <= tols.orthogonality_atol * scale_cd and min_dd > tols.orthogonality_atol
    r1 = AssumptionCheck(
        "orthogonal_weights",
        bool(r1_ok),
        float(min(min_dd, tols.orthogonality_atol * scale_cd - cross)),
        f"|C'D|={cross:.3g}, min eig(D'D)={min_dd:.3g}",
    )

    eig_a = np.linalg.eigvals(a) if n else np.zeros(0, dtype=complex)
    pbh_scale = max(1.0, np.linalg.norm(a, "fro") + np.linalg.norm(b, "fro"))
    worst = np.inf
    for lam in eig_a[eig_a.real >= -tols.orthogonality_atol]:
        pencil = np.hstack([a - lam * np.eye(n), b]).astype(complex)
        worst = min(worst, float(np.linalg.svd(pencil, compute_uv=False)[-1]))
    r2_ok = worst == np.inf or worst > tols.pbh_rtol * pbh_scale
    r2 = AssumptionCheck(
        "stabilizable",
        bool(r2_ok),
        float(worst if worst < np.inf else pbh_scale),
        "PBH min singular value over unstable eigenvalues "
        f"{'n/a (A Hurwitz)' if worst == np.inf else f'{worst:.3g}'}",
    )

    # Rank of the pencil along the axis.  With D'D invertible the clean test
    # is the Hamiltonian spectrum staying off the imaginary axis.
    grid = np.concatenate([[0.0], np.logspace(-3, 3, 25)])
    min_sv = np.inf
    for w in grid:
        pencil = np.block([[a - 1j * w * np.eye(n), b], [c, d]])
        min_sv = min(min_sv, float(np.linalg.svd(pencil, compute_uv=False)[-1]))
    pencil_scale = max(
        1.0, np.linalg.norm(np.block([[a, b], [c, d]]), "fro")
    )
    pencil_ok = min_sv > tols.pbh_rtol * pencil_scale
    if min_dd > tols.orthogonality_atol:
        ham_eigs = np.linalg.eigvals(_hamiltonian(a, b, c, d))
        axis_dist = float(np.min(np.abs(ham_eigs.real))) if ham_eigs.size else np.inf
        r3_ok = axis_dist > tols.imag_axis_atol and pencil_ok
        detail = (
            f"Hamiltonian axis distance {axis_dist:.3g}, "
            f"pencil min sv {min_sv:.3g}"
        )
        metric = min(axis_dist, min_sv)
    else:
        r3_ok = pencil_ok
        detail = f"D'D singular; pencil min sv {min_sv:.3g}"
        metric = min_sv
    r3 = AssumptionCheck(
        "no_invariant_zeros_on_axis", bool(r3_ok), metric, detail
    )
    return RiccatiAssumptionReport(r1, r2, r3)


def solve_are(
    a,
    b,
    c,
    d,
    tols: Tolerances = DEFAULT_TOLERANCES,
    check_assumptions: bool = True,
    newton_polish: bool = False,
) -> RiccatiSolution:
    """Stabilizing solution of ``A'X + XA + C'C - XB(D'D)^-1B'X = 0``.

    Computed from the stable invariant subspace of the 2n x 2n Hamiltonian
    matrix via an ordered real Schur decomposition; ``newton_polish`` runs
    a few Newton steps (each one a Lyapunov solve) on top.  The returned
    gain ``F = -(D'D)^-1 B'X`` makes A + BF Hurwitz; both the residual and
    the closed-loop spectrum are verified before returning.
    """
    a, b, c, d = map(_as_matrix, (a, b, c, d))
    n = a.shape[0]
    if check_assumptions:
        report = check_riccati_assumptions(a, b, c, d, tols)
        if not report.ok:
            failed = [chk.name for chk in report.checks if not chk.ok]
            raise AssumptionError(
                f"Riccati assumptions violated: {failed}", report=report
            )

    r = d.T @ d
    ham = _hamiltonian(a, b, c, d)
    ham_eigs = np.linalg.eigvals(ham)
    if ham_eigs.size and np.min(np.abs(ham_eigs.real)) <= tols.imag_axis_atol:
        raise ImaginaryAxisError(
            "Hamiltonian eigenvalue within "
            f"{tols.imag_axis_atol:.1g} of the imaginary axis"
        )

    t, z, sdim = scipy.linalg.schur(ham, output="real", sort="lhp")
    if sdim != n:
        raise NumericalError(
            f"stable invariant subspace has dimension {sdim}, expected {n}"
        )
    z11 = z[:n, :n]
    z21 = z[n:, :n]
    try:
        x = np.linalg.solve(z11.T, z21.T).T
    except np.linalg.LinAlgError as exc:
        raise NumericalError("stable subspace basis is singular") from exc
    x = 0.5 * (x + x.T)

    q = c.T @ c
    g = b @ np.linalg.solve(r, b.T)

    def _residual(xm):
        return a.T @ xm + xm @ a + q - xm @ g @ xm

    def _scale(xm):
        return max(
            1.0,
            np.linalg.norm(q, "fro"),
            np.linalg.norm(a.T @ xm + xm @ a, "fro"),
            np.linalg.norm(xm @ g @ xm, "fro"),
        )

    if newton_polish:
        for _ in range(5):
            res = _residual(x)
            if np.linalg.norm(res, "fro") <= 0.01 * tols.are_residual_rtol * _scale(x):
                break
            f = -np.linalg.solve(r, b.T @ x)
            a_cl = a + b @ f
            if not is_hurwitz(a_cl, tols.hurwitz_margin):
                break
            x = x + solve_lyapunov(a_cl, res, tols)
            x = 0.5 * (x + x.T)

    f = -np.linalg.solve(r, b.T @ x)
    residual = float(np.linalg.norm(_residual(x), "fro"))
    if residual > tols.are_residual_rtol * _scale(x):
        raise NumericalError(
            f"Riccati residual {residual:.3g} exceeds "
            f"{tols.are_residual_rtol:.1g} * {_scale(x):.3g}"
        )
    if n and not is_hurwitz(a + b @ f, tols.hurwitz_margin):
        raise NumericalError("computed Riccati gain fails to stabilize")
    if n:
        min_eig = float(np.min(np.linalg.eigvalsh(x)))
        floor = -tols.rank_rtol * max(1.0, np.linalg.norm(x, "fro"))
        if min_eig < floor:
            raise NumericalError(f"Riccati solution indefinite (min eig {min_eig:.3g})")
        if min_eig <= tols.orthogonality_atol:
            log.info("Riccati solution is PSD but not strictly positive "
                     "(min eig %.3g); solution still stabilizing", min_eig)
    return RiccatiSolution(X=x, F=f, residual=residual)


# ---------------------------------------------------------------------------
# realization interconnections


def series(first: StateSpace, second: StateSpace) -> StateSpace:
    """Cascade: the transfer ``second(s) @ first(s)`` (first acts first)."""
    if second.n_inputs != first.n_outputs:
        raise DimensionError(
            f"cascade mismatch: {first.n_outputs} outputs into "
            f"{second.n_inputs} inputs"
        )
    n1, n2 = first.n_states, second.n_states
    a = np.block([
        [second.A, second.B @ first.C],
        [np.zeros((n1, n2)), first.A],
    ])
    b = np.vstack([second.B @ first.D, first.B])
    c = np.hstack([second.C, second.D @ first.C])
    d = second.D @ first.D
    return StateSpace(a, b, c, d)


def add(g1: StateSpace, g2: StateSpace) -> StateSpace:
    """Parallel sum ``g1(s) + g2(s)``."""
    if (g1.n_inputs, g1.n_outputs) != (g2.n_inputs, g2.n_outputs):
        raise DimensionError("parallel systems must share I/O dimensions")
    a = scipy.linalg.block_diag(g1.A, g2.A)
    b = np.vstack([g1.B, g2.B])
    c = np.hstack([g1.C, g2.C])
    return StateSpace(a, b, c, g1.D + g2.D)


def subtract(g1: StateSpace, g2: StateSpace) -> StateSpace:
    """Parallel difference ``g1(s) - g2(s)``."""
    neg = StateSpace(g2.A, g2.B, -g2.C, -g2.D)
    return add(g1, neg)


def block_diagonal_part(
    sys: StateSpace, out_dims: Sequence[int], in_dims: Sequence[int]
) -> StateSpace:
    """Realization of the block-diagonal part of a square block transfer.

    Block (i, i) keeps its own copy of the state driven by input block i
    and read through output block i; everything off-diagonal is masked
    away.  The state dimension grows by the number of blocks, which is the
    price of staying a plain realization operation.
    """
    if len(out_dims) != len(in_dims):
        raise DimensionError("need as many output blocks as input blocks")
    if sum(out_dims) != sys.n_outputs or sum(in_dims) != sys.n_inputs:
        raise DimensionError("block dims do not partition the I/O space")
    offs_out = BlockDims.offsets(out_dims)
    offs_in = BlockDims.offsets(in_dims)
    a_blocks, b_blocks, c_blocks, d_blocks = [], [], [], []
    for i in range(len(out_dims)):
        rows = slice(offs_out[i], offs_out[i + 1])
        cols = slice(offs_in[i], offs_in[i + 1])
        a_blocks.append(sys.A)
        b_blocks.append(sys.B[:, cols])
        c_blocks.append(sys.C[rows, :])
        d_blocks.append(sys.D[rows, cols])
    return StateSpace(
        scipy.linalg.block_diag(*a_blocks),
        scipy.linalg.block_diag(*b_blocks),
        scipy.linalg.block_diag(*c_blocks),
        scipy.linalg.block_diag(*d_blocks),
    )


def inverse_of_eye_plus(sys: StateSpace, tols: Tolerances = DEFAULT_TOLERANCES) -> StateSpace:
    """Realization of ``(I + sys)^-1`` for square ``sys``.

    Well-posed whenever I + D is invertible, which is automatic for the
    strictly proper interconnections built here; checked anyway.
    """
    if sys.n_inputs != sys.n_outputs:
        raise DimensionError("(I + G)^-1 needs a square transfer")
    m = np.eye(sys.n_inputs) + sys.D
    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond > tols.singular_cond_limit:
        raise WellPosednessError(
            f"I + D has condition {cond:.3g}; loop not well posed"
        )
    m_inv = np.linalg.solve(m, np.eye(sys.n_inputs))
    a = sys.A - sys.B @ m_inv @ sys.C
    b = sys.B @ m_inv
    c = -m_inv @ sys.C
    return StateSpace(a, b, c, m_inv)


def connect_feedback(plant: FourBlockPlant, controller: StateSpace) -> StateSpace:
    """Closed loop w -> z of the plant under output feedback u = K y.

    The controller must be strictly proper (D = 0); with the plant's zero
    u -> y feedthrough this keeps the loop well posed without any inverse.
    """
    if np.any(controller.D != 0):
        raise DimensionError("controller must be strictly proper (D = 0)")
    if controller.n_inputs != plant.C2.shape[0]:
        raise DimensionError("controller input dim != measurement dim")
    if controller.n_outputs != plant.B2.shape[1]:
        raise DimensionError("controller output dim != actuation dim")
    n, nk = plant.A.shape[0], controller.n_states
    a = np.block([
        [plant.A, plant.B2 @ controller.C],
        [controller.B @ plant.C2, controller.A],
    ])
    b = np.vstack([plant.B1, controller.B @ plant.D21])
    c = np.hstack([plant.C1, plant.D12 @ controller.C])
    d = np.zeros((plant.C1.shape[0], plant.B1.shape[1]))
    return StateSpace(a, b, c, d)


# ---------------------------------------------------------------------------
# exact mode elimination


def remove_uncontrollable_unobservable(
    sys: StateSpace,
    tol: float = DEFAULT_TOLERANCES.rank_rtol,
    grid: np.ndarray | None = None,
) -> StateSpace:
    """Drop modes whose Hankel singular value is numerically zero.

    Balanced-truncation machinery used purely as cleanup: only modes below
    ``tol`` times the largest Hankel value are removed, so the transfer
    function is preserved exactly (verified on a frequency grid to 1e-8
    relative).  Requires a Hurwitz A so the Gramians exist.
    """
    if not is_hurwitz(sys.A):
        raise NotHurwitzError("mode elimination needs a Hurwitz A matrix")
    if sys.n_states == 0:
        return sys
    wc = solve_lyapunov(sys.A.T, sys.B @ sys.B.T)
    wo = solve_lyapunov(sys.A, sys.C.T @ sys.C)

    def _factor(w):
        vals, vecs = np.linalg.eigh(w)
        vals = np.clip(vals, 0.0, None)
        return vecs * np.sqrt(vals)

    lc = _factor(wc)
    lo = _factor(wo)
    u, sv, vt = np.linalg.svd(lo.T @ lc)
    if sv.size == 0 or sv[0] <= 0.0:
        reduced = StateSpace(
            np.zeros((0, 0)),
            np.zeros((0, sys.n_inputs)),
            np.zeros((sys.n_outputs, 0)),
            sys.D,
        )
    else:
        keep = sv > tol * sv[0]
        k = int(np.count_nonzero(keep))
        s_half = np.sqrt(sv[:k])
        t_right = lc @ vt[:k, :].T / s_half
        t_left = (u[:, :k] / s_half).T @ lo.T
        reduced = StateSpace(
            t_left @ sys.A @ t_right,
            t_left @ sys.B,
            sys.C @ t_right,
            sys.D,
        )
    if grid is None:
        grid = np.logspace(-3, 3, 13)
    for w in grid:
        s = 1j * w
        orig = eval_transfer(sys, s)
        slim = eval_transfer(reduced, s)
        err = np.linalg.norm(orig - slim) / max(1.0, np.linalg.norm(orig))
        if err > 1e-8:
            raise NumericalError(
                f"mode elimination changed the transfer at w={w:.3g} "
                f"(relative error {err:.3g})"
            )
    return reduced


def markov_parameters(sys: StateSpace, count: int = 6) -> list[np.ndarray]:
    """The impulse-response coefficients ``C A^k B`` for k = 0..count-1."""
    out = []
    x = sys.B
    for _ in range(count):
        out.append(sys.C @ x)
        x = sys.A @ x
    return out
