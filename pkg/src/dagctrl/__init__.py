"""Optimal decentralized output-feedback control on a transitively closed DAG.

Synthesis of the jointly optimal controllers for dynamically decoupled
linear agents sharing information along a DAG, in every realization form
(monolithic and per-agent), plus simulation and verification tooling.
"""

from .config import DEFAULT_TOLERANCES, Tolerances, standard_grid
from .graph import BlockDims, InfoGraph, block_submatrix, relatives, selector, transitive_closure
from .lti import (
    FourBlockPlant,
    RiccatiSolution,
    StateSpace,
    check_riccati_assumptions,
    connect_feedback,
    eval_transfer,
    h2_norm_sq,
    is_hurwitz,
    markov_parameters,
    remove_uncontrollable_unobservable,
    solve_are,
    solve_lyapunov,
)
from .synthesis import (
    FORMS,
    AgentModel,
    ControllerRealization,
    GainLibrary,
    Problem,
    build_controller,
    build_K_innovation,
    build_K_lemma,
    build_K_minimal,
    build_K_state,
    build_P,
    build_P2,
    build_barred,
    centralized_lqg,
    compute_gains,
    validate,
)
from .runtime import (
    AgentController,
    Message,
    SimTrace,
    assemble_input,
    compute_partial_input,
    derive_agent_controllers,
    network_rhs,
    simulate,
)
from .verify import CheckReport, SuiteOptions, random_problem, run_suite

__version__ = "0.1.0"
