"""Relevant information loss of deterministic systems."""

from .channel_lab import AdditiveChannel, Quantizer, grid_loss_report, quantizer_relevant_loss, uniform_closed_forms
from .estimators import (
    KnnEntropy,
    SampleSet,
    SourceSpec,
    conditional_divergence_J,
    knn_entropy,
    refined_partition_loss,
    thm1_hypothesis_check,
)
from .exceptions import ConvergenceError, NumericalError, SingularCovarianceError, ValidationError
from .ib_cluster import (
    AgglomerativeEnhancer,
    ClusteringState,
    ObjectiveParams,
    agglomerative_enhance,
    enhancement_objectives,
)
from .info_core import (
    DeterministicMap,
    JointDistribution,
    LossReport,
    binary_entropy,
    conditional_mutual_information,
    entropy,
    loss_report,
    mutual_information,
    push_map,
)
from .pca_gauss import (
    LinearGaussianModel,
    RelevantPCA,
    best_coordinate_subset,
    eigen_bound,
    gaussian_relevant_loss,
    iid_gaussian_bound,
    pca_decompose,
)

__version__ = "0.1.0"

__all__ = [
    "AdditiveChannel",
    "AgglomerativeEnhancer",
    "ClusteringState",
    "ConvergenceError",
    "DeterministicMap",
    "JointDistribution",
    "KnnEntropy",
    "LinearGaussianModel",
    "LossReport",
    "NumericalError",
    "ObjectiveParams",
    "Quantizer",
    "RelevantPCA",
    "SampleSet",
    "SingularCovarianceError",
    "SourceSpec",
    "ValidationError",
    "agglomerative_enhance",
    "best_coordinate_subset",
    "binary_entropy",
    "conditional_divergence_J",
    "conditional_mutual_information",
    "eigen_bound",
    "enhancement_objectives",
    "entropy",
    "gaussian_relevant_loss",
    "grid_loss_report",
    "iid_gaussian_bound",
    "knn_entropy",
    "loss_report",
    "mutual_information",
    "pca_decompose",
    "push_map",
    "quantizer_relevant_loss",
    "refined_partition_loss",
    "thm1_hypothesis_check",
    "uniform_closed_forms",
]
