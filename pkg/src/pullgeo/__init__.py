"""Pullback Riemannian geometry on R^d.

Equips R^d with the metric pulled back through a diffeomorphism into a
symmetric model manifold and builds the data-analysis tools on top of it:
geodesic interpolation, Karcher barycentres, (curvature-corrected)
Riemannian autoencoders, and data-driven learning of the diffeomorphism.
"""

from . import errors
from .barycentre import BarycentreOptions, approximate_barycentre, barycentre, euclidean_barycentre
from .beta import beta_exp, beta_geo, beta_logpoint
from .datasets import ExperimentConfig, generate_dataset, hyperbolic_geometry, spherical_geometry
from .diffeo import (
    CompositeDiffeo,
    Diffeomorphism,
    HyperboloidChart,
    IdentityChart,
    StereographicChart,
    hyperboloid_chart_inverse,
    stereographic_chart_inverse,
    translation_diffeo,
)
from .manifolds import (
    CurvatureSpectrum,
    Euclidean,
    Hyperboloid,
    ManifoldPoint,
    ModelManifold,
    Product,
    Sphere,
    TangentVector,
    curvature_spectrum,
    distance,
    exp_map,
    log_map,
    metric_inner,
    parallel_transport,
)
from .metrics import curve_set_distance, geodesic_error, variation_error
from .pullback import PullbackSpace, StabilityReport
from .rae import (
    RiemannianAutoencoder,
    build_coefficient_matrix,
    curvature_corrected_directions,
    gram_schmidt_pb,
    orthonormal_frame,
    tangent_svd,
)
from .resnet import FrozenResNetMap, InvertibleResNet, estimate_spectral_norm
from .training import (
    Adam,
    LossBreakdown,
    PullbackMetricLearner,
    TrainConfig,
    grad_loss,
    isomap_distances,
    local_pca_frame,
    loss,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "Adam",
    "BarycentreOptions",
    "CompositeDiffeo",
    "CurvatureSpectrum",
    "Diffeomorphism",
    "Euclidean",
    "ExperimentConfig",
    "FrozenResNetMap",
    "Hyperboloid",
    "HyperboloidChart",
    "IdentityChart",
    "InvertibleResNet",
    "LossBreakdown",
    "ManifoldPoint",
    "ModelManifold",
    "Product",
    "PullbackMetricLearner",
    "PullbackSpace",
    "RiemannianAutoencoder",
    "Sphere",
    "StabilityReport",
    "StereographicChart",
    "TangentVector",
    "TrainConfig",
    "approximate_barycentre",
    "barycentre",
    "beta_exp",
    "beta_geo",
    "beta_logpoint",
    "build_coefficient_matrix",
    "curvature_corrected_directions",
    "curvature_spectrum",
    "curve_set_distance",
    "distance",
    "errors",
    "estimate_spectral_norm",
    "euclidean_barycentre",
    "exp_map",
    "generate_dataset",
    "geodesic_error",
    "grad_loss",
    "gram_schmidt_pb",
    "hyperbolic_geometry",
    "hyperboloid_chart_inverse",
    "isomap_distances",
    "local_pca_frame",
    "log_map",
    "loss",
    "metric_inner",
    "orthonormal_frame",
    "parallel_transport",
    "spherical_geometry",
    "stereographic_chart_inverse",
    "tangent_svd",
    "train",
    "translation_diffeo",
    "variation_error",
]
