"""Quantum-walk evaluation of NAND formula trees.

Four decision procedures on desk-scale trees, cross-validated exactly
against a classical evaluator: continuous-time scattering off a runway,
the finite-tail spectral walk, the two-reflections discrete walk, and the
coined edge-state walk (long and two-site tails).
"""

from .formula import (
    FormulaError,
    NandTree,
    QueryLedger,
    all_assignments,
    assignment_with_value,
    evaluate,
    full_binary_tree,
    parse_formula,
    randomized_query_cost,
    to_nand,
    worst_case_assignment,
)
from .graphs import (
    AugmentedGraph,
    EdgeStateSpace,
    GraphError,
    Vertex,
    adjacency_matrix,
    build_edge_space,
    build_runway_graph,
    build_tail_graph,
)
from .spectral import (
    PhaseEstimate,
    SpectralDecomposition,
    SpectralError,
    StateVector,
    eig_hermitian,
    eig_unitary,
    evolve,
    qpe_simulate,
    spectral_overlap_profile,
)
from .scattering import (
    RunwaySplit,
    ScatteringResult,
    kernel_state_check,
    psi_start_runway,
    run_scattering_walk,
    scattering_coefficients,
    scattering_limit,
)
from .finite_tail import GapReport, decide_tail, gap_report, psi_start_tail
from .reflections import (
    ProjectionBoundReport,
    ReflectionPair,
    build_reflections,
    decide_reflections,
    projection_bound_check,
)
from .coined import (
    CoinedWalk,
    ShortTailCoin,
    build_coined_walk,
    build_short_tail_walk,
    decide_coined,
    psi_start_coined,
)
from .runner import (
    ExperimentConfig,
    ExperimentError,
    fit_power_law,
    report_to_csv,
    run_experiment,
)

__version__ = "0.1.0"
