"""Quadrature engines shared by the kernel and operator code.

Line integrals use composite Gauss-Legendre panels with a two-level error
estimate; contour integrals over circles use the trapezoid rule; region
integrals use tensor Gauss-Legendre rules in the coordinates

    x = Re z1,  u = Im z1 - log|z2|^2,  s = log|z2|^2,  theta = arg z2

on D'_beta, where the domain is the exact product R x (-pi/2, pi/2) x (-a, a) x circle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate

from .geometry import HALF_PI, WormParams
from .weights import PoleSet, omega_breakpoints


class AccuracyError(RuntimeError):
    """Requested accuracy not reached; ``partial`` holds the best available estimate."""

    def __init__(self, message: str, partial: "KernelValue | None" = None):
        super().__init__(message)
        self.partial = partial


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class KernelValue:
    value: complex
    abs_error_estimate: float

    def __post_init__(self):
        if not self.abs_error_estimate >= 0:
            raise ValueError("abs_error_estimate must be nonnegative")


@dataclass(frozen=True)
class QuadratureSpec:
    """Settings for integrals along the line Im xi = t_shift.

    The error test is relative above unit scale: a result passes when its error
    estimate is below ``tol * max(1, |value|)``.
    """

    xi_truncation: float = 12.0
    panel_width: float = 0.5
    nodes_per_panel: int = 16
    t_shift: float = 0.0
    tol: float = 1e-10
    max_refinements: int = 2

    def __post_init__(self):
        if not self.xi_truncation > 0:
            raise ConfigurationError("xi_truncation must be positive")
        if not self.tol > 0:
            raise ConfigurationError("tol must be positive")
        if self.panel_width <= 0 or self.nodes_per_panel < 2:
            raise ConfigurationError("panel_width must be positive and nodes_per_panel >= 2")
        if self.max_refinements < 0:
            raise ConfigurationError("max_refinements must be nonnegative")

    def check_line(self, poles: PoleSet) -> None:
        d = poles.line_distance(self.t_shift)
        if d < poles.exclusion_radius:
            raise ConfigurationError(
                f"line Im xi = {self.t_shift} passes within {d:.3g} of the pole set "
                f"(exclusion radius {poles.exclusion_radius:.3g})"
            )

    def with_shift(self, t: float) -> "QuadratureSpec":
        return replace(self, t_shift=t)


@lru_cache(maxsize=64)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre_panels(a: float, b: float, panel_width: float, n: int):
    """Composite Gauss-Legendre nodes and weights on [a, b] with panels no wider than panel_width."""
    if not b > a:
        raise ConfigurationError(f"empty interval [{a}, {b}]")
    n_panels = max(1, int(math.ceil((b - a) / panel_width - 1e-12)))
    return gauss_legendre_breaks(np.linspace(a, b, n_panels + 1), n)


def gauss_legendre_breaks(breaks, n: int):
    """Gauss-Legendre rule with n nodes on every interval between consecutive breaks."""
    breaks = np.asarray(breaks, dtype=float)
    x, w = _leggauss(n)
    lo, hi = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + hi) * 0.5 + half * x
    weights = half * w
    return nodes.ravel(), weights.ravel()


def _line_sum(integrand, spec: QuadratureSpec, xi_max: float, width: float):
    s, w = gauss_legendre_panels(-xi_max, xi_max, width, spec.nodes_per_panel)
    xi = s + 1j * spec.t_shift
    return complex(np.sum(w * np.asarray(integrand(xi))))


def envelope_tail(envelope: Callable[[float], float] | None, xi_max: float) -> float:
    """Bound for the part of the integral beyond |Re xi| = xi_max, from a pointwise envelope."""
    if envelope is None:
        return 0.0
    val, _ = integrate.quad(envelope, xi_max, np.inf, limit=200)
    return 2.0 * float(val)


def integrate_line(
    integrand: Callable[[np.ndarray], np.ndarray],
    spec: QuadratureSpec,
    envelope: Callable[[float], float] | None = None,
    poles: PoleSet | None = None,
) -> KernelValue:
    """Integrate ``integrand`` over Re xi in R along Im xi = spec.t_shift.

    ``integrand`` is called with arrays of complex nodes. ``envelope(r)`` bounds
    |integrand| for |Re xi| >= r; its tail integral is added to the error
    estimate and triggers an extension of the truncation when it dominates.
    """
    if poles is not None:
        spec.check_line(poles)
    xi_max = spec.xi_truncation
    width = spec.panel_width
    coarse = _line_sum(integrand, spec, xi_max, width)
    err = math.inf
    value = coarse
    for _ in range(spec.max_refinements + 1):
        width *= 0.5
        value = _line_sum(integrand, spec, xi_max, width)
        tail = envelope_tail(envelope, xi_max)
        err = abs(value - coarse) + tail
        if err <= spec.tol * max(1.0, abs(value)):
            return KernelValue(value, err)
        if tail > 0.5 * err:
            xi_max *= 1.5
            value = _line_sum(integrand, spec, xi_max, width)
        coarse = value
    raise AccuracyError(
        f"line integral error estimate {err:.3g} exceeds tolerance {spec.tol:.3g}",
        partial=KernelValue(value, err),
    )


def contour_circle_integral(f, center: complex, radius: float, n_nodes: int = 512) -> complex:
    """Trapezoid rule for the integral of f over the positively oriented circle."""
    if radius <= 0 or n_nodes < 3:
        raise ConfigurationError("radius must be positive and n_nodes >= 3")
    theta = 2.0 * math.pi * np.arange(n_nodes) / n_nodes
    e = np.exp(1j * theta)
    z = center + radius * e
    return complex(np.sum(np.asarray(f(z)) * 1j * radius * e) * (2.0 * math.pi / n_nodes))


@dataclass(frozen=True)
class GridSpec:
    """Sizes of the tensor grid on D'_beta.

    ``x_max=None`` picks a half-width from the decay rate of the kernels,
    3 + 7/min(1, nu_beta).
    """

    x_max: float | None = None
    x_panel: float = 0.5
    x_nodes: int = 10
    u_panels: int = 6
    u_nodes: int = 10
    s_panel: float = 0.8
    s_nodes: int = 16
    n_theta: int = 8
    y_nodes: int = 24

    def __post_init__(self):
        if self.x_max is not None and not self.x_max > 0:
            raise ConfigurationError("x_max must be positive")
        for name in ("x_nodes", "u_panels", "u_nodes", "s_nodes", "n_theta", "y_nodes"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1")
        if self.x_panel <= 0 or self.s_panel <= 0:
            raise ConfigurationError("panel widths must be positive")

    def resolved_x_max(self, params: WormParams) -> float:
        if self.x_max is not None:
            return self.x_max
        return 3.0 + 7.0 / min(1.0, params.nu_beta)

    def refined(self, factor: float = 1.5) -> "GridSpec":
        return replace(
            self,
            x_panel=self.x_panel / factor,
            u_panels=int(math.ceil(self.u_panels * factor)),
            s_panel=self.s_panel / factor,
            y_nodes=int(math.ceil(self.y_nodes * factor)),
        )


def x_rule(params: WormParams, grid: GridSpec):
    X = grid.resolved_x_max(params)
    return gauss_legendre_panels(-X, X, grid.x_panel, grid.x_nodes)


def u_rule(grid: GridSpec):
    return gauss_legendre_panels(-HALF_PI, HALF_PI, math.pi / grid.u_panels, grid.u_nodes)


def s_rule(params: WormParams, grid: GridSpec):
    a = params.log_modulus_bound
    s, w = gauss_legendre_panels(-a, a, grid.s_panel, grid.s_nodes)
    # area element of the z2-annulus in (s, theta): (1/2) e^s ds dtheta
    return s, w * 0.5 * np.exp(s)


def theta_rule(grid: GridSpec):
    n = grid.n_theta
    return 2.0 * math.pi * np.arange(n) / n, np.full(n, 2.0 * math.pi / n)


def strip_y_rule(params: WormParams, grid: GridSpec):
    """Rule on I_beta with panels split at the kinks of omega_j."""
    return gauss_legendre_breaks(omega_breakpoints(params), grid.y_nodes)


REGION_TAGS = ("I_beta", "d_beta_prime", "D_beta_prime")


def integrate_region(f, region_tag: str, params: WormParams, grid: GridSpec | None = None) -> complex:
    """Integrate f over I_beta, the fiber d'_beta, or D'_beta truncated to |Re z1| <= x_max.

    Signatures: I_beta f(y); d_beta_prime f(y, z2); D_beta_prime f(z1, z2).
    """
    grid = grid or GridSpec()
    if region_tag == "I_beta":
        y, w = strip_y_rule(params, grid)
        return complex(np.sum(w * np.asarray(f(y))))
    if region_tag not in REGION_TAGS:
        raise ConfigurationError(f"unknown region {region_tag!r}; expected one of {REGION_TAGS}")
    u, wu = u_rule(grid)
    s, ws = s_rule(params, grid)
    th, wt = theta_rule(grid)
    U, S, T = np.meshgrid(u, s, th, indexing="ij")
    W = wu[:, None, None] * ws[None, :, None] * wt[None, None, :]
    z2 = np.exp(0.5 * S + 1j * T)
    if region_tag == "d_beta_prime":
        return complex(np.sum(W * np.asarray(f(U + S, z2))))
    x, wx = x_rule(params, grid)
    total = 0.0 + 0.0j
    for xi, wxi in zip(x, wx):
        total += wxi * np.sum(W * np.asarray(f(xi + 1j * (U + S), z2)))
    return complex(total)
