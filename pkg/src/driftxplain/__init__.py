"""Model-agnostic explanations for concept drift in data streams.

The library locates characteristic samples of a detected change (local
peaks of sample density times identifiability, where identifiability
measures how well a sample's time segment can be told apart) and
contrasts each with its optimally assigned counterpart in every other
time segment. Synthetic generators with analytic ground truth and an
evaluation harness are included.
"""

from ._kernels import BACKEND
from .assign import (
    DISSIMILARITIES,
    AssignmentPair,
    AssignmentResult,
    CostMatrix,
    associate_all,
    build_cost_matrix,
    dissimilarity_matrix,
    feature_difference,
    hungarian,
)
from .core import (
    Dataset,
    TimedSample,
    entropy,
    entropy_rows,
    identifiability,
    identifiability_rows,
    mean_identifiability,
    validate_posterior,
)
from .dataio import (
    read_dataset_csv,
    read_reports_json,
    read_stream,
    read_truth_csv,
    write_dataset_csv,
    write_pairs_csv,
    write_reports_json,
    write_truth_csv,
)
from .errors import (
    DriftXplainError,
    EmptyBinError,
    InfeasibleAssignmentError,
    IngestionError,
    StreamError,
    UnsupportedConfigError,
    ValidationError,
)
from .evalharness import (
    CheckerboardResult,
    ExperimentGrid,
    GmmConfig,
    ResultRow,
    eval_benchmarks,
    eval_checkerboard,
    eval_identifiability,
    eval_prototypes,
    write_results_csv,
    write_results_json,
)
from .pipeline import (
    CLASSIFIERS,
    ExplanationReport,
    OracleDetector,
    StreamConfig,
    WindowMeanDetector,
    explain_dataset,
    explain_stream,
    summarize_report,
)
from .proto import (
    METHODS,
    CharacteristicSample,
    affinity_propagation,
    find_characteristic_samples,
    kmeans,
    mean_shift,
    prototype_quality,
    weighted_resample,
)
from .synth import (
    CheckerboardSpec,
    GmmMixture,
    GmmSpec,
    GroundTruth,
    analytic_characterizing,
    analytic_identifiability,
    analytic_posterior,
    build_mixture,
    cell_of_points,
    checkerboard_posterior,
    draw_checkerboard_spec,
    relabel_classification,
    relabel_regression,
    sample_checkerboard,
    sample_gmm,
    sample_uniform_box,
    stream_change_positions,
)
from .timeclf import (
    ForestConfig,
    ForestTimeClassifier,
    KnnConfig,
    KnnTimeClassifier,
    estimate_identifiability,
    fit_forest,
    fit_knn,
    identifiability_mse,
    predict_posterior,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CLASSIFIERS",
    "DISSIMILARITIES",
    "METHODS",
    "AssignmentPair",
    "AssignmentResult",
    "CharacteristicSample",
    "CheckerboardResult",
    "CheckerboardSpec",
    "CostMatrix",
    "Dataset",
    "DriftXplainError",
    "EmptyBinError",
    "ExperimentGrid",
    "ExplanationReport",
    "ForestConfig",
    "ForestTimeClassifier",
    "GmmConfig",
    "GmmMixture",
    "GmmSpec",
    "GroundTruth",
    "InfeasibleAssignmentError",
    "IngestionError",
    "KnnConfig",
    "KnnTimeClassifier",
    "OracleDetector",
    "ResultRow",
    "StreamConfig",
    "StreamError",
    "TimedSample",
    "UnsupportedConfigError",
    "ValidationError",
    "WindowMeanDetector",
    "affinity_propagation",
    "analytic_characterizing",
    "analytic_identifiability",
    "analytic_posterior",
    "associate_all",
    "build_cost_matrix",
    "build_mixture",
    "cell_of_points",
    "checkerboard_posterior",
    "dissimilarity_matrix",
    "draw_checkerboard_spec",
    "entropy",
    "entropy_rows",
    "estimate_identifiability",
    "eval_benchmarks",
    "eval_checkerboard",
    "eval_identifiability",
    "eval_prototypes",
    "explain_dataset",
    "explain_stream",
    "feature_difference",
    "find_characteristic_samples",
    "fit_forest",
    "fit_knn",
    "hungarian",
    "identifiability",
    "identifiability_mse",
    "identifiability_rows",
    "kmeans",
    "mean_identifiability",
    "mean_shift",
    "predict_posterior",
    "prototype_quality",
    "read_dataset_csv",
    "read_reports_json",
    "read_stream",
    "read_truth_csv",
    "relabel_classification",
    "relabel_regression",
    "sample_checkerboard",
    "sample_gmm",
    "sample_uniform_box",
    "stream_change_positions",
    "summarize_report",
    "validate_posterior",
    "weighted_resample",
    "write_dataset_csv",
    "write_pairs_csv",
    "write_reports_json",
    "write_results_csv",
    "write_results_json",
    "write_truth_csv",
]
