"""Interpretable metric learning for graph-based spike/no-spike classification.

Learns a PSD feature-weighting matrix M from a handful of labeled time bins,
builds a similarity graph whose edge weights follow exp of the negative
Mahalanobis distance, and classifies unlabeled bins by harmonic label
inference.  Trainers: gradient descent on the graph Laplacian regularizer, a
slow projected-subgradient reference for the large-margin objective, and a
fast per-row LP scheme with Gershgorin disc constraints.
"""

from .bench import RunConfig, predict_validation, run_trial, sweep, train_metric
from .errors import SpikeMetricError
from .gdpa import GdpaConfig, GdpaResult, check_balance, optimize_metric, train_gdpa
from .glmnn import GlmnnConfig, GlmnnProblem, build_problem, glmnn_objective
from .glr import GlrConfig, GlrResult, glr_gradient, glr_value, train_glr
from .graph import (
    GraphTopology,
    MetricMatrix,
    SimilarityGraph,
    assemble_laplacian,
    build_expanded_topology,
    build_train_topology,
    mahalanobis_distance,
)
from .infer import InferenceResult, infer_labels
from .ingest import (
    Dataset,
    FeatureTable,
    GroupLabels,
    SynthSpec,
    split_balanced,
    synth_generate,
)
from .interpret import ImportanceReport, SiftIndexMap, diag_importance
from .oracle import (
    OracleReport,
    brute_force_inference_check,
    knn_baseline,
    sdp_reference_solve,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "FeatureTable",
    "GdpaConfig",
    "GdpaResult",
    "GlmnnConfig",
    "GlmnnProblem",
    "GlrConfig",
    "GlrResult",
    "GraphTopology",
    "GroupLabels",
    "ImportanceReport",
    "InferenceResult",
    "MetricMatrix",
    "OracleReport",
    "RunConfig",
    "SiftIndexMap",
    "SimilarityGraph",
    "SpikeMetricError",
    "SynthSpec",
    "assemble_laplacian",
    "brute_force_inference_check",
    "build_expanded_topology",
    "build_problem",
    "build_train_topology",
    "check_balance",
    "diag_importance",
    "glmnn_objective",
    "glr_gradient",
    "glr_value",
    "infer_labels",
    "knn_baseline",
    "mahalanobis_distance",
    "optimize_metric",
    "predict_validation",
    "run_trial",
    "sdp_reference_solve",
    "split_balanced",
    "sweep",
    "synth_generate",
    "train_glr",
    "train_gdpa",
    "train_metric",
]
