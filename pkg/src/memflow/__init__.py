"""Continuous-time Boolean constraint dynamics with clause memories.

The package builds schoolbook multiplier circuits, encodes them as clause
systems whose satisfying assignments are factorizations, and evolves a
continuous relaxation of the constraints as a dynamical system with fast
and slow per-clause memory variables.  Analysis tools measure spatial and
temporal correlations over trajectory ensembles during the burst (search)
phase, and a low-dimensional toy-flow module verifies that the signed
count of threshold crossings over an instanton family is an integer
invariant of the observation times.
"""

__version__ = "0.1.0"

from .netlist import AND, FULL_ADDER, Gate, GateNetlist, build_multiplier, netlist_to_text
from .cnf import (
    ClauseSystem,
    EncodingError,
    DimacsError,
    encode_cnf,
    evaluate_assignment,
    decode_factors,
    export_dimacs,
    parse_dimacs,
)
from .litgraph import LiteralGraph, literal_graph, graph_distance, shortest_path
from .dynamics import (
    FlowParams,
    SystemState,
    Trajectory,
    InstantonPhase,
    FlowError,
    flow_field,
    clause_mismatch,
    step,
    integrate,
    initial_state,
    check_solution,
    detect_instanton_phase,
)
from .ensemble import (
    EnsembleConfig,
    Ensemble,
    CorrelationResult,
    CovarianceAccumulator,
    covariance_e2,
    run_ensemble,
    spatial_correlation,
    temporal_correlation,
    correlation_scales,
    analyze,
)
from .toyflow import (
    ToyFlow,
    CriticalPoint,
    InstantonFamily,
    TangencyError,
    ConvergenceError,
    logistic_product,
    spiral_sink,
    build_instanton_family,
    intersection_number,
    invariance_scan,
)
