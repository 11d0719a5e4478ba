"""Isolation forest anomaly detection with per-feature anomaly signatures."""

__version__ = "0.1.0"

from .clustering import ClusterConfig, ClusterReport, cluster_signatures, kmeans, top_anomalies
from .data_io import (
    SpectraPair,
    featurize_spectra,
    load_csv,
    load_model,
    load_spectra,
    save_csv,
    save_model,
)
from .dataset import Dataset
from .depth import expected_depth, expected_depth_table, harmonic
from .forest import ForestConfig, ForestModel, IsolationTree, build_tree, fit
from .scoring import (
    PathTrace,
    ScoreReport,
    SplitRecord,
    expected_path_depth,
    score,
    score_batch,
    score_samples,
    trace_path,
)
from .signature import (
    SignatureMatrix,
    SignatureVector,
    delta_signature,
    reconstruct_depth,
    signature,
    signature_batch,
)
