"""Accessibility-based state clustering and initial-state discovery.

Builds directed similarity matrices (exp(-transition time)), clusters them
with the K-Access alternating local search, scores clusterings for model
selection, measures exploration coverage of candidate initial-state sets,
and benchmarks the effect on a tabular episodic learner. A CLI (`kaccess`)
chains the stages into a reproducible pipeline.
"""

__version__ = "0.1.0"

from kaccess.cluster import (
    ClusteringResult,
    EmptyClusterError,
    KAccess,
    NonConvergenceError,
    assign,
    init_centroids,
    k_access,
    k_access_best_of,
    load_clustering_json,
    objective_g,
    save_clustering_json,
    update_centroids,
)
from kaccess.coverage import (
    CoverageReport,
    InitialStateSet,
    compare_initializations,
    coverage_report,
    effective_region,
    random_initial_set,
)
from kaccess.landscape import (
    ProbeProtocol,
    SettlingEnvironment,
    StateVector,
    estimate_matrix,
    load_environment_json,
    load_states_csv,
    probe_transition,
    sample_static_states,
    save_environment_json,
    save_states_csv,
)
from kaccess.matrix import (
    DEFAULT_FLOOR,
    UNREACHABLE,
    AccessibilityMatrix,
    InvariantViolationError,
    MatrixFormatError,
    ValidationReport,
    Violation,
    access_from_time,
    as_accessibility_matrix,
    load_matrix_csv,
    load_matrix_json,
    save_matrix_csv,
    save_matrix_json,
    validate_matrix,
)
from kaccess.quality import (
    QualityReport,
    SweepRecord,
    SweepResult,
    SweepRun,
    chord_edges,
    inter_accessibility,
    intra_accessibility,
    quality_index,
    sweep_k,
)
from kaccess.rl import (
    LearnerConfig,
    RecoveryTask,
    TrainingResult,
    action_targets,
    compare_training,
    episodes_to_success,
    evaluate_policy,
    run_training,
    standard_benchmark,
)
from kaccess.synthetic import (
    PlantedData,
    PlantedSpec,
    balanced_labels,
    brute_force_best_g,
    generate_planted,
    generate_planted_data,
    load_labels_csv,
    save_labels_csv,
)

__all__ = [
    "__version__",
    "AccessibilityMatrix",
    "ClusteringResult",
    "CoverageReport",
    "DEFAULT_FLOOR",
    "EmptyClusterError",
    "InitialStateSet",
    "InvariantViolationError",
    "KAccess",
    "LearnerConfig",
    "MatrixFormatError",
    "NonConvergenceError",
    "PlantedData",
    "PlantedSpec",
    "ProbeProtocol",
    "QualityReport",
    "RecoveryTask",
    "SettlingEnvironment",
    "StateVector",
    "SweepRecord",
    "SweepResult",
    "SweepRun",
    "TrainingResult",
    "UNREACHABLE",
    "ValidationReport",
    "Violation",
    "access_from_time",
    "action_targets",
    "as_accessibility_matrix",
    "assign",
    "balanced_labels",
    "brute_force_best_g",
    "chord_edges",
    "compare_initializations",
    "compare_training",
    "coverage_report",
    "effective_region",
    "episodes_to_success",
    "estimate_matrix",
    "evaluate_policy",
    "generate_planted",
    "generate_planted_data",
    "init_centroids",
    "inter_accessibility",
    "intra_accessibility",
    "k_access",
    "k_access_best_of",
    "load_clustering_json",
    "load_environment_json",
    "load_labels_csv",
    "load_matrix_csv",
    "load_matrix_json",
    "load_states_csv",
    "objective_g",
    "probe_transition",
    "quality_index",
    "random_initial_set",
    "run_training",
    "sample_static_states",
    "save_clustering_json",
    "save_environment_json",
    "save_labels_csv",
    "save_matrix_csv",
    "save_matrix_json",
    "save_states_csv",
    "standard_benchmark",
    "sweep_k",
    "update_centroids",
    "validate_matrix",
]
