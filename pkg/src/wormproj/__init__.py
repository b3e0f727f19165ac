"""Bergman kernels, pole-cancelling corrections and regularized projections on worm domains."""

from __future__ import annotations

__version__ = "0.1.0"

from .geometry import DomainError, PointC2, StripPoint, WormParams, in_D_beta, in_D_beta_prime, psi, psi_inv
from .grids import DPrimeGrid, GridFunction
from .numerics import AccuracyError, ConfigurationError, GridSpec, KernelValue, QuadratureSpec
from .weights import DegenerateParametersError, PoleSet, omega, omega_hat

__all__ = [
    "AccuracyError",
    "ConfigurationError",
    "DPrimeGrid",
    "DegenerateParametersError",
    "DomainError",
    "GridFunction",
    "GridSpec",
    "KernelValue",
    "PointC2",
    "PoleSet",
    "QuadratureSpec",
    "StripPoint",
    "WormParams",
    "in_D_beta",
    "in_D_beta_prime",
    "omega",
    "omega_hat",
    "psi",
    "psi_inv",
]
