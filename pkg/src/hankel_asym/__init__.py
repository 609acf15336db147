"""Hankel determinants of Laguerre-type weights and their large-n asymptotics."""

from .asym import AsymConstants, bessel_det_asym, c_constants, d_constants, predict_log_An_inv, predict_log_det
from .bigreal import Precision, cosine_transform, gauss_legendre, integrate_semi_infinite, required_precision
from .errors import ConvergenceError, DomainError, HankelAsymError, NumericalError, ValidationError
from .fredholm import KernelSpec, NystromGrid, bessel_kernel, hs_distance, laguerre_kernel, nystrom_log_det
from .hankel import lemma1_residual, log_An_inv, log_det_hankel, log_det_ortho
from .specfun import (
    LaguerreBasis,
    barnes_log_g_asymptotic,
    barnes_log_g_product,
    barnes_log_g_recurrence,
    bessel_j,
    log_gamma,
)
from .weights import WeightSpec, moments, s_transform

__all__ = [
    "AsymConstants",
    "ConvergenceError",
    "DomainError",
    "HankelAsymError",
    "KernelSpec",
    "LaguerreBasis",
    "NumericalError",
    "NystromGrid",
    "Precision",
    "ValidationError",
    "WeightSpec",
    "barnes_log_g_asymptotic",
    "barnes_log_g_product",
    "barnes_log_g_recurrence",
    "bessel_det_asym",
    "bessel_j",
    "bessel_kernel",
    "c_constants",
    "cosine_transform",
    "d_constants",
    "gauss_legendre",
    "hs_distance",
    "integrate_semi_infinite",
    "laguerre_kernel",
    "lemma1_residual",
    "log_An_inv",
    "log_det_hankel",
    "log_det_ortho",
    "log_gamma",
    "moments",
    "nystrom_log_det",
    "predict_log_An_inv",
    "predict_log_det",
    "required_precision",
    "s_transform",
]
