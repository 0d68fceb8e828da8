"""Integrated diffusion over multimodal datasets.

Build diffusion operators from data, denoise them at multiple scales,
pick per-modality timescales from spectral entropy, fuse the operators
into a single integrated walk, embed, and evaluate.
"""

from .datasets import (
    CoupledSpec,
    MultimodalSet,
    TreeSpec,
    load_csv,
    load_digits_subset,
    load_idx,
    load_matrix,
    make_coupled_features,
    make_noisy_pair,
    make_tree,
    save_csv,
    save_idx,
    save_matrix,
)
from .denoise import MgdConfig, MgdTelemetry, diffusion_denoise, mgd, spectral_cluster
from .embedding import Embedding, diffusion_map, embedding_distances, scatter_2d
from .errors import (
    AlignmentError,
    IntdiffError,
    NumericalError,
    ParseError,
    SizeError,
    ValidationError,
)
from .evaluation import (
    EvalReport,
    demap,
    denoise_modalities,
    knn_accuracy,
    mi_recovery_benchmark,
    mutual_information,
)
from .fusion import (
    FusionConfig,
    FusionStrategy,
    IntegratedOperator,
    alternating,
    fuse,
    fuse_baseline,
    integrated,
    load_operator,
    reduce_exponents,
    save_operator,
)
from .operators import (
    DataMatrix,
    DiffusionOperator,
    Kernel,
    KernelConfig,
    diffusion_operator,
    gaussian_kernel,
    pairwise_sq_dists,
    power,
    stationary_distribution,
)
from .spectral import (
    EigenSystem,
    EntropyCurve,
    eigendecompose,
    find_elbow,
    graph_filter,
    select_timescale,
    spectral_entropy,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentError",
    "CoupledSpec",
    "DataMatrix",
    "DiffusionOperator",
    "EigenSystem",
    "Embedding",
    "EntropyCurve",
    "EvalReport",
    "FusionConfig",
    "FusionStrategy",
    "IntdiffError",
    "IntegratedOperator",
    "Kernel",
    "KernelConfig",
    "MgdConfig",
    "MgdTelemetry",
    "MultimodalSet",
    "NumericalError",
    "ParseError",
    "SizeError",
    "TreeSpec",
    "ValidationError",
    "alternating",
    "demap",
    "denoise_modalities",
    "diffusion_denoise",
    "diffusion_map",
    "diffusion_operator",
    "eigendecompose",
    "embedding_distances",
    "find_elbow",
    "fuse",
    "fuse_baseline",
    "gaussian_kernel",
    "graph_filter",
    "integrated",
    "knn_accuracy",
    "load_csv",
    "load_digits_subset",
    "load_idx",
    "load_matrix",
    "load_operator",
    "make_coupled_features",
    "make_noisy_pair",
    "make_tree",
    "mgd",
    "mi_recovery_benchmark",
    "mutual_information",
    "pairwise_sq_dists",
    "power",
    "reduce_exponents",
    "save_csv",
    "save_idx",
    "save_matrix",
    "save_operator",
    "scatter_2d",
    "select_timescale",
    "spectral_cluster",
    "spectral_entropy",
    "stationary_distribution",
]
