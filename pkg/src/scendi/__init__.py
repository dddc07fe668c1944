"""Prompt-aware diversity scoring for paired text/image embeddings.

Decomposes the kernel covariance of image features into a
prompt-driven part (explained by the paired text features) and a
model-driven remainder via the Schur complement, scores both with
matrix-based entropy, and edits embeddings by cancelling prompt
directions.
"""

__version__ = "0.1.0"

import os as _os

# Cap BLAS parallelism before numpy initializes; effective when this
# package is imported first (the CLI entry point guarantees that).
_threads = _os.environ.get("SCENDI_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .covariance import CovarianceBlocks, SchurDecomposition, blocks, gamma_star, schur_decompose
from .edit import Modifier, fit_modifier, load_modifier, modify, naive_modify, retrieve_topk, save_modifier
from .errors import FileFormatError, NumericalError, PSDViolationError, ScendiError, ValidationError
from .kernels import FeatureMatrix, KernelConfig, cosine_features, features_for, gram, median_sigma, rff_features
from .kpca import ClusterAssignment, kpca_clusters, schur_clusters
from .scores import DiversityReport, evaluate, rke, scendi, scendi_text, vendi
from .spectral import EigenSystem, clamp_psd, eigh, matrix_entropy, pseudoinverse

__all__ = [
    "CovarianceBlocks",
    "SchurDecomposition",
    "blocks",
    "gamma_star",
    "schur_decompose",
    "Modifier",
    "fit_modifier",
    "load_modifier",
    "modify",
    "naive_modify",
    "retrieve_topk",
    "save_modifier",
    "FileFormatError",
    "NumericalError",
    "PSDViolationError",
    "ScendiError",
    "ValidationError",
    "FeatureMatrix",
    "KernelConfig",
    "cosine_features",
    "features_for",
    "gram",
    "median_sigma",
    "rff_features",
    "ClusterAssignment",
    "kpca_clusters",
    "schur_clusters",
    "DiversityReport",
    "evaluate",
    "rke",
    "scendi",
    "scendi_text",
    "vendi",
    "EigenSystem",
    "clamp_psd",
    "eigh",
    "matrix_entropy",
    "pseudoinverse",
    "__version__",
]
