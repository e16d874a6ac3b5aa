"""Numerical laboratory for truncated non-symmetric Ornstein-Uhlenbeck operators."""

from .basis import ThetaBasis, gram_schmidt_theta, project_Pn, pushforward_covariance
from .covariance import CovariancePack, covariance_finite, covariance_infinity, lyapunov_residual
from .functions import Constant, Cosine, CosineSum, CylinderFunction, GaussianBump, PolyBump, profile_from_dict
from .galerkin import (
    GalerkinPair,
    HypothesisError,
    HypothesisReport,
    build_pair,
    check_dissipation,
    hypothesis_report,
    nu_min,
    rkhs_constant,
)
from .mehler import MehlerKernel, Resolvent, pde_residual, resolvent_apply, resolvent_gradient, resolvent_hessian, semigroup_apply
from .model import DegeneracyFlag, ModelError, SpectralModel, degeneracy, load_model, make_model
from .quadrature import QuadratureSpec

__version__ = "0.1.0"
