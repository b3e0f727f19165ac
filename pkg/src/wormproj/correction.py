"""The pole-cancelling correction series and its residue diagnostics.

With F(xi, y) = e^{-xi y} / omega_hat(-1, xi), the function F has simple poles at
i k nu_beta and at nonzero integer multiples of i. The series

    h_hat(xi, y) = sum_{k != 0} tau_k(xi) e^{(xi - 2 i k nu) y} / (xi - i k nu)

has simple poles at the same i k nu_beta with residues that match those of F
exactly, so F + sign * h_hat with sign = -1 is regular there. The sign is not
hard-coded: ``resolve_correction_sign`` picks it from contour integrals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .geometry import WormParams
from .numerics import ConfigurationError, contour_circle_integral, gauss_legendre_breaks
from .weights import (
    PoleSet,
    _as_complex,
    _scalar,
    ensure_nondegenerate,
    inverse_omega_hat,
    omega_breakpoints,
    omega_hat_derivative,
    zcsch,
)

K_CAP = 64
POLE_TOL = 1e-12


class PoleError(ValueError):
    """Evaluation exactly at a pole."""


class PoleProximityError(ValueError):
    """Evaluation inside the exclusion disc around a pole."""


@dataclass(frozen=True)
class CorrectionSeriesResult:
    value: complex | np.ndarray
    k_used: int
    tail_bound: float


@dataclass(frozen=True)
class ResidueReport:
    pole: complex
    residue_bergman: complex
    residue_correction: complex
    combined: complex


def _check_integer_poles(xi) -> None:
    xi = _as_complex(xi)
    n = np.round(xi.imag)
    hit = (n != 0) & (np.abs(xi - 1j * n) < POLE_TOL)
    if np.any(hit):
        raise PoleError("xi is a nonzero integer multiple of i")


def _prefactor(xi, params: WormParams):
    """xi^2 e^{-m xi^2} / ((2 beta - pi) pi sinh(pi xi)), the k-independent part of tau_k."""
    xi = _as_complex(xi)
    m = params.m_gauss
    return xi * zcsch(math.pi, xi) * np.exp(-m * xi * xi) / (params.strip_factor * math.pi)


def _tau_coeff(k: int, params: WormParams) -> float:
    nu = params.nu_beta
    return (-1.0) ** k * math.exp(-params.m_gauss * k * k * nu * nu)


def tau(k: int, xi, params: WormParams):
    """tau_k(xi) = (-1)^k e^{-m k^2 nu^2} xi^2 e^{-m xi^2} / ((2beta - pi) pi sinh(pi xi))."""
    if k == 0:
        raise ValueError("k must be nonzero")
    _check_integer_poles(xi)
    return _scalar(_tau_coeff(k, params) * _prefactor(xi, params))


def h_hat_k(k: int, xi, y, params: WormParams):
    if k == 0:
        raise ValueError("k must be nonzero")
    xi = _as_complex(xi)
    pole = 1j * k * params.nu_beta
    if np.any(np.abs(xi - pole) < POLE_TOL):
        raise PoleError(f"xi at the pole i*{k}*nu_beta")
    t = tau(k, xi, params)
    return _scalar(t * np.exp((xi - 2.0 * pole) * np.asarray(y)) / (xi - pole))


def default_truncation(params: WormParams, tol: float) -> int:
    """Smallest K with e^{-m K^2 nu^2} < tol * nu_beta, capped at K_CAP."""
    nu = params.nu_beta
    target = math.log(tol * nu)
    for K in range(1, K_CAP + 1):
        if -params.m_gauss * K * K * nu * nu < target:
            return K
    return K_CAP


def h_hat_partial(xi, y, params: WormParams, K: int):
    """Partial sum over 0 < |k| <= K, broadcast over xi and y; no pole checks."""
    xi = _as_complex(xi)
    y = np.asarray(y, dtype=float)
    nu = params.nu_beta
    acc = np.zeros(np.broadcast(xi, y).shape, dtype=complex)
    for k in range(1, K + 1):
        c = _tau_coeff(k, params)
        rot = np.exp(-2j * k * nu * y)
        acc += c * (rot / (xi - 1j * k * nu) + np.conj(rot) / (xi + 1j * k * nu))
    return _prefactor(xi, params) * np.exp(xi * y) * acc


def _tail_bound(xi, y, params: WormParams, K: int) -> float:
    xi = _as_complex(xi)
    nu, m = params.nu_beta, params.m_gauss
    amp = np.abs(_prefactor(xi, params) * np.exp(xi * np.asarray(y)))
    dist = np.maximum((K + 1) * nu - np.abs(xi.imag), 1e-300)
    q = math.exp(-m * nu * nu * (2 * K + 3))
    geo = 2.0 * math.exp(-m * (K + 1) ** 2 * nu * nu) / (1.0 - q)
    return float(np.max(amp * geo / dist))


def h_hat(
    xi,
    y,
    params: WormParams,
    tol: float = 1e-12,
    poles: PoleSet | None = None,
) -> CorrectionSeriesResult:
    """Sum the correction series to within ``tol * max(1, |value|)``.

    Points inside the exclusion discs of the pole set are refused.
    """
    xi = _as_complex(xi)
    _check_integer_poles(xi)
    poles = poles or PoleSet.covering(params, float(np.max(np.abs(xi.imag), initial=0.0)))
    if np.any(np.asarray(poles.distance(xi)) <= poles.exclusion_radius):
        raise PoleProximityError(
            f"xi within the exclusion radius {poles.exclusion_radius:.3g} of the pole set"
        )
    K = max(default_truncation(params, tol), int(math.ceil(np.max(np.abs(xi.imag)) / params.nu_beta)) + 1)
    K = min(K, K_CAP)
    while True:
        value = h_hat_partial(xi, y, params, K)
        scale = max(1.0, float(np.max(np.abs(value), initial=0.0)))
        tail = _tail_bound(xi, y, params, K)
        if tail < tol * scale or K >= K_CAP:
            break
        K = min(K_CAP, K + 2)
    return CorrectionSeriesResult(_scalar(value), K, tail)


def bergman_symbol(xi, y, params: WormParams):
    """F(xi, y) = e^{-xi y} / omega_hat(-1, xi), the uncorrected Fourier-side kernel."""
    xi = _as_complex(xi)
    return _scalar(np.exp(-xi * np.asarray(y)) * inverse_omega_hat(-1, xi, params))


def combined_symbol(xi, y, params: WormParams, sign: int, K: int | None = None):
    K = default_truncation(params, 1e-15) if K is None else K
    K = max(K, int(math.ceil(float(np.max(np.abs(_as_complex(xi).imag), initial=0.0)) / params.nu_beta)) + 1)
    return _scalar(bergman_symbol(xi, y, params) + sign * h_hat_partial(xi, y, params, K))


def residue_report(k: int, params: WormParams, sign: int, y: float = 0.0) -> ResidueReport:
    """Analytic residues at xi = i k nu_beta of F and of sign * h_hat."""
    if k == 0:
        raise ValueError("k must be nonzero")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    ensure_nondegenerate(params, abs(k))
    pole = 1j * k * params.nu_beta
    phase = np.exp(-pole * y)
    r_b = complex(phase / omega_hat_derivative(-1, pole, params))
    r_c = complex(sign * tau(k, pole, params) * phase)
    return ResidueReport(pole, r_b, r_c, r_b + r_c)


def nearest_other_pole(center: complex, params: WormParams) -> float:
    poles = PoleSet.covering(params, abs(center.imag) + 2.0)
    d = np.abs(poles.points - center)
    d = d[d > 1e-12]
    return float(d.min())


def combined_regularity_check(
    k: int,
    radius: float,
    params: WormParams,
    sign: int,
    family: str = "nu",
    y: float = 0.0,
    n_nodes: int = 512,
    strict: bool = True,
    terms: str = "all",
) -> float:
    """|contour integral| of F + sign * h_hat around i k nu_beta (family "nu") or i k ("integer").

    With ``strict`` a circle that reaches another point of P is refused.
    ``terms="local"`` keeps only the k-th series term, the one with a pole at
    the center; the others are analytic there but can be huge far up the
    imaginary axis, which swamps the integral in rounding error.
    """
    if family == "nu":
        center = 1j * k * params.nu_beta
    elif family == "integer":
        center = 1j * k
    else:
        raise ValueError("family must be 'nu' or 'integer'")
    ensure_nondegenerate(params, abs(k) + 1)
    if strict and radius >= nearest_other_pole(center, params):
        raise ConfigurationError(
            f"circle of radius {radius:.3g} around {center} encloses or touches another pole"
        )
    K = max(default_truncation(params, 1e-16), abs(k) + int(math.ceil(radius / params.nu_beta)) + 2)
    K = min(K, K_CAP)
    if terms == "all":
        def f(z):
            return combined_symbol(z, y, params, sign, K)
    elif terms == "local" and family == "nu":
        def f(z):
            return bergman_symbol(z, y, params) + sign * _local_term(k, z, y, params)
    else:
        raise ValueError("terms must be 'all', or 'local' with the nu family")
    return abs(contour_circle_integral(f, center, radius, n_nodes))


def _local_term(k: int, xi, y, params: WormParams):
    pole = 1j * k * params.nu_beta
    return _tau_coeff(k, params) * _prefactor(xi, params) * np.exp((xi - 2.0 * pole) * y) / (xi - pole)


def legal_radius(k: int, params: WormParams, fraction: float = 0.5) -> float:
    """A fraction of the distance from i k nu_beta to the nearest other pole."""
    return fraction * nearest_other_pole(1j * k * params.nu_beta, params)


@lru_cache(maxsize=32)
def _resolve(beta: float, m_gauss: int, allow_degenerate: bool) -> int:
    params = WormParams(beta, m_gauss=m_gauss, allow_degenerate=allow_degenerate)
    r = legal_radius(1, params)
    plus = combined_regularity_check(1, r, params, +1)
    minus = combined_regularity_check(1, r, params, -1)
    return -1 if minus < plus else 1


def resolve_correction_sign(params: WormParams) -> int:
    """The sign for which the combined function has no pole at i nu_beta (cached per beta, m)."""
    return _resolve(params.beta, params.m_gauss, params.allow_degenerate)


def bound_envelope(xi, params: WormParams):
    """|xi|^2 e^{-m Re xi^2} e^{(beta - pi)|Re xi|}."""
    xi = _as_complex(xi)
    return np.abs(xi) ** 2 * np.exp(-params.m_gauss * (xi * xi).real + (params.beta - math.pi) * np.abs(xi.real))


def bound_ratio_scan(
    params: WormParams,
    n_re: int = 41,
    n_im: int = 9,
    n_y: int = 9,
    re_max: float = 4.0,
    im_frac: float = 0.4,
    exclude_origin: float = 0.0,
) -> float:
    """max |h_hat| / envelope over a closed grid in {|Re xi| <= re_max, |Im xi| <= im_frac min(1, nu)} x I_beta.

    With ``exclude_origin = r0 > 0`` the strip |Re xi| < r0 is left out and the
    real grid runs over +-[r0, re_max]. Grids are closed, so replacing n by 2n - 1
    nests them. Points in the pole exclusion discs and xi = 0 itself are dropped.
    """
    im_max = im_frac * min(1.0, params.nu_beta)
    if exclude_origin > 0:
        half = np.linspace(exclude_origin, re_max, n_re)
        re = np.concatenate([-half[::-1], half])
    else:
        re = np.linspace(-re_max, re_max, n_re)
    im = np.linspace(-im_max, im_max, n_im)
    y = np.linspace(-params.beta, params.beta, n_y)
    xi = (re[:, None] + 1j * im[None, :]).ravel()
    poles = PoleSet.covering(params, im_max)
    keep = (np.asarray(poles.distance(xi)) > poles.exclusion_radius) & (np.abs(xi) > 0)
    xi = xi[keep]
    K = default_truncation(params, 1e-15)
    vals = np.abs(h_hat_partial(xi[:, None], y[None, :], params, K))
    ratio = vals / bound_envelope(xi, params)[:, None]
    return float(ratio.max())


def line_l2_ratio(t: float, s, params: WormParams, n_y: int = 64):
    """(int_{I_beta} |h_hat(s + i t, y)|^2 dy) / (|xi|^4 e^{-2 m Re xi^2} e^{2(beta - pi)|Re xi|})."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    xi = s + 1j * t
    y, w = gauss_legendre_breaks(omega_breakpoints(params), n_y)
    K = default_truncation(params, 1e-15) + int(math.ceil(abs(t) / params.nu_beta)) + 1
    vals = np.abs(h_hat_partial(xi[:, None], y[None, :], params, K)) ** 2
    l2 = vals @ w
    return l2 / bound_envelope(xi, params) ** 2
