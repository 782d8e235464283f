"""Multi-level trust data perturbation with corner-wave correlated Gaussian noise.

Copies released at different perturbation levels share noise whose
covariance follows the corner-wave pattern, so combining copies reconstructs
the data no better than the least perturbed copy on its own.
"""

from .attack import (
    AdversaryKnowledge,
    LLSEEstimate,
    estimate_model,
    llse_joint,
    llse_joint_dense,
    llse_single,
    partial_knowledge,
    perfect_knowledge,
    predict_error_corner_wave,
    predict_error_independent,
)
from .covariance import (
    CornerWaveCovariance,
    TrustLevelSet,
    build_corner_wave,
    corner_wave_cholesky,
    corner_wave_inverse,
)
from .metrics import (
    AttackReport,
    attack_report,
    distortion,
    normalized_error,
    verify_privacy_goal,
)
from .perturb import (
    DataModel,
    Dataset,
    PerturbedCopy,
    PerturbSession,
    batch_parallel,
    batch_sequential,
    independent_noise,
    on_demand,
)
from .sampler import (
    GaussianSpec,
    SeededRng,
    cholesky,
    conditional_gaussian,
    sample_kron_gaussian,
)

__version__ = "0.1.0"

__all__ = [
    "AdversaryKnowledge",
    "LLSEEstimate",
    "estimate_model",
    "llse_joint",
    "llse_joint_dense",
    "llse_single",
    "partial_knowledge",
    "perfect_knowledge",
    "predict_error_corner_wave",
    "predict_error_independent",
    "CornerWaveCovariance",
    "TrustLevelSet",
    "build_corner_wave",
    "corner_wave_cholesky",
    "corner_wave_inverse",
    "AttackReport",
    "attack_report",
    "distortion",
    "normalized_error",
    "verify_privacy_goal",
    "DataModel",
    "Dataset",
    "PerturbedCopy",
    "PerturbSession",
    "batch_parallel",
    "batch_sequential",
    "independent_noise",
    "on_demand",
    "GaussianSpec",
    "SeededRng",
    "cholesky",
    "conditional_gaussian",
    "sample_kron_gaussian",
]
