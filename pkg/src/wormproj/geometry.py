"""Worm domains, the biholomorphism Psi and branch-aware powers of z1.

Points are stored as complex numbers or complex arrays; every predicate and map
here broadcasts, so a ``PointC2`` may hold a single point or a batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

HALF_PI = 0.5 * math.pi


class DomainError(ValueError):
    """A point lies outside the domain an operation requires."""


@dataclass(frozen=True)
class WormParams:
    """Shape parameter of the worm domain plus the Gaussian exponent of the correction.

    ``eps_dom`` is the membership margin used when kernels are evaluated; points
    closer than this to the boundary are rejected.
    """

    beta: float
    m_gauss: int = 1
    eps_dom: float = 0.0
    allow_degenerate: bool = False

    def __post_init__(self):
        if not self.beta > HALF_PI:
            raise ValueError(f"beta must exceed pi/2, got {self.beta!r}")
        if int(self.m_gauss) != self.m_gauss or self.m_gauss < 1:
            raise ValueError(f"m_gauss must be a positive integer, got {self.m_gauss!r}")
        if self.eps_dom < 0:
            raise ValueError("eps_dom must be nonnegative")

    @property
    def strip_factor(self) -> float:
        """2*beta - pi, the width factor appearing in the transformed weight."""
        return 2.0 * self.beta - math.pi

    @property
    def nu_beta(self) -> float:
        return math.pi / self.strip_factor

    @property
    def log_modulus_bound(self) -> float:
        """beta - pi/2: the bound on |log|z2|^2|."""
        return self.beta - HALF_PI


@dataclass(frozen=True)
class PointC2:
    z1: complex | np.ndarray
    z2: complex | np.ndarray

    def __iter__(self):
        yield self.z1
        yield self.z2


@dataclass(frozen=True)
class StripPoint:
    x: float
    y: float

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)

    def in_strip(self, params: WormParams) -> bool:
        return abs(self.y) < params.beta


@dataclass(frozen=True)
class BoundaryCoords:
    t1: float | np.ndarray
    d1: float | np.ndarray
    alpha_angle: float | np.ndarray


def _log_modulus_sq(z2) -> np.ndarray:
    z2 = np.asarray(z2, dtype=complex)
    if np.any(z2 == 0):
        raise DomainError("z2 = 0 is not in any worm domain")
    return np.log(np.abs(z2) ** 2)


def _maybe_scalar(a):
    a = np.asarray(a)
    return a.item() if a.ndim == 0 else a


def in_D_beta(p: PointC2, params: WormParams, margin: float | None = None):
    """Membership in D_beta: Re(z1 e^{-i log|z2|^2}) > 0 and |log|z2|^2| < beta - pi/2."""
    eps = params.eps_dom if margin is None else margin
    L = _log_modulus_sq(p.z2)
    z1 = np.asarray(p.z1, dtype=complex)
    first = np.real(z1 * np.exp(-1j * L)) > eps
    second = np.abs(L) < params.log_modulus_bound - eps
    return _maybe_scalar(first & second)


def in_D_beta_prime(p: PointC2, params: WormParams, margin: float | None = None):
    """Membership in D'_beta: |Im z1 - log|z2|^2| < pi/2 and |log|z2|^2| < beta - pi/2."""
    eps = params.eps_dom if margin is None else margin
    L = _log_modulus_sq(p.z2)
    z1 = np.asarray(p.z1, dtype=complex)
    first = np.abs(z1.imag - L) < HALF_PI - eps
    second = np.abs(L) < params.log_modulus_bound - eps
    return _maybe_scalar(first & second)


def branch_log(z1, z2):
    """log z1 on the branch whose imaginary part lies within pi/2 of log|z2|^2.

    On D_beta the rotated point z1 e^{-i log|z2|^2} has positive real part, so the
    principal logarithm of it is total and the result is single valued.
    """
    L = _log_modulus_sq(z2)
    z1 = np.asarray(z1, dtype=complex)
    return _maybe_scalar(np.log(z1 * np.exp(-1j * L)) + 1j * L)


def psi(p: PointC2, params: WormParams | None = None) -> PointC2:
    """Psi(z1, z2) = (e^{z1}, z2), mapping D'_beta onto D_beta."""
    if params is not None and not np.all(in_D_beta_prime(p, params, margin=0.0)):
        raise DomainError("psi: point outside D'_beta")
    return PointC2(_maybe_scalar(np.exp(np.asarray(p.z1, dtype=complex))), p.z2)


def psi_inv(p: PointC2, params: WormParams) -> PointC2:
    if not np.all(in_D_beta(p, params, margin=0.0)):
        raise DomainError("psi_inv: point outside D_beta")
    return PointC2(branch_log(p.z1, p.z2), p.z2)


def branch_power(z1, z2, alpha, params: WormParams):
    """z1**alpha with the convention (z1 e^{-iL})^alpha e^{i alpha L}, L = log|z2|^2.

    The value is holomorphic on D_beta and locally constant in |z2|; for integer
    alpha it agrees with the ordinary power.
    """
    if not np.all(in_D_beta(PointC2(z1, z2), params, margin=0.0)):
        raise DomainError("branch_power: point outside D_beta")
    return _maybe_scalar(np.exp(np.asarray(alpha) * branch_log(z1, z2)))


def branch_angle(z1, z2):
    """Im of the branch logarithm, i.e. (log z1 - log conj z1)/2i; lies in (-beta, beta)."""
    return _maybe_scalar(np.imag(branch_log(z1, z2)))


def boundary_coords(p: PointC2) -> BoundaryCoords:
    """Write z1 = (t1 + i d1) e^{i alpha} with alpha = log|z2|^2 - pi/2.

    d1 > 0 exactly when Re(z1 e^{-i log|z2|^2}) > 0.
    """
    L = _log_modulus_sq(p.z2)
    alpha = L - HALF_PI
    w = np.asarray(p.z1, dtype=complex) * np.exp(-1j * alpha)
    return BoundaryCoords(_maybe_scalar(w.real), _maybe_scalar(w.imag), _maybe_scalar(alpha))


def from_boundary_coords(bc: BoundaryCoords):
    return _maybe_scalar(
        (np.asarray(bc.t1) + 1j * np.asarray(bc.d1)) * np.exp(1j * np.asarray(bc.alpha_angle))
    )
