"""Joint-sparse signal ensembles with full-common, partial-common and
innovation components: generation, Gaussian measurement, combinatorial
measurement bounds, weighted l1 joint recovery, and sequential correlation
search."""

from .model import (
    FULL_COMMON,
    INNOVATION,
    PARTIAL_COMMON,
    Component,
    ComponentSignal,
    CorrelationStructure,
    GroupLabel,
    LocationMap,
    SignalEnsemble,
    assemble_signals,
    build_structure,
    classify_component,
    ensemble_from_supports,
    generate_ensemble,
    joint_location_map,
    stacked_values,
)
from .sensing import (
    ExpandedMatrix,
    MeasurementSet,
    build_expanded_matrix,
    compress,
    draw_measurement_matrices,
    measure,
    zero_sensor_block,
)
from .bounds import (
    AmbiguousSolution,
    FeasibilityReport,
    SupportProfile,
    blocked_at,
    check_measurement_tuple,
    full_common_overlap,
    min_uniform_measurement,
    partial_common_overlap,
    rank_probe,
    recover_known_support,
    required_measurements,
)
from .l1solver import (
    L1Solution,
    SolverSettings,
    approx_l0,
    basis_pursuit,
    reweighted_l1,
    weighted_l1,
)
from .search import (
    RECOVERY_MODES,
    InnerPhaseResult,
    PhaseAborted,
    RecoveryResult,
    SearchResult,
    exclusion_score,
    final_recover,
    inner_phase,
    recover,
    sequential_correlation_search,
)
from .harness import (
    CurveRow,
    CurveTable,
    ExperimentConfig,
    NotBracketed,
    PartialSpec,
    TrialResult,
    aggregate,
    measurement_savings,
    read_curve_csv,
    run_sweep,
    run_trial,
    write_curve_csv,
    write_success_plot,
)

__version__ = "0.1.0"
