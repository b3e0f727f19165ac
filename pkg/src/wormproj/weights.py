"""The weights omega_j on I_beta, their Fourier-Laplace transforms and the pole set P.

``omega_hat(j, xi)`` returns the transform evaluated at -2i*xi,

    pi * sinh[(2b - pi)(xi - (j+1)/2)] * sinh(pi xi) / ((xi - (j+1)/2) * xi),

which equals the integral of e^{-2 y xi} omega_j(y) over I_beta.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .geometry import HALF_PI, WormParams

SERIES_THRESHOLD = 1e-4
DEGENERACY_TOL = 1e-9


class DegeneracyWarning(UserWarning):
    """The two pole families i*k*nu_beta and i*m collide."""


class DegenerateParametersError(ValueError):
    pass


def _as_complex(z):
    return np.asarray(z, dtype=complex)


def _scalar(a):
    a = np.asarray(a)
    return a.item() if a.ndim == 0 else a


def sinhc(a: float, z):
    """sinh(a z)/z, continued through z = 0."""
    z = _as_complex(z)
    small = np.abs(z) < SERIES_THRESHOLD
    safe = np.where(small, 1.0, z)
    z2 = z * z
    series = a + a**3 * z2 / 6.0 + a**5 * z2 * z2 / 120.0
    return np.where(small, series, np.sinh(a * safe) / safe)


def sinhc_derivative(a: float, z):
    z = _as_complex(z)
    small = np.abs(z) < SERIES_THRESHOLD
    safe = np.where(small, 1.0, z)
    series = a**3 * z / 3.0 + a**5 * z**3 / 30.0
    exact = (a * safe * np.cosh(a * safe) - np.sinh(a * safe)) / (safe * safe)
    return np.where(small, series, exact)


def csch(z):
    """1/sinh(z) without overflow for large |Re z|."""
    z = _as_complex(z)
    s = np.where(z.real >= 0, 1.0, -1.0)
    zz = s * z
    e = np.exp(-2.0 * zz)
    with np.errstate(divide="ignore", invalid="ignore"):
        return s * 2.0 * np.exp(-zz) / (1.0 - e)


def zcsch(a: float, z):
    """z/sinh(a z), continued through z = 0 and stable for large |Re z|."""
    z = _as_complex(z)
    small = np.abs(z) < SERIES_THRESHOLD
    z2 = z * z
    series = 1.0 / a - a * z2 / 6.0 + 7.0 * a**3 * z2 * z2 / 360.0
    safe = np.where(small, 1.0, z)
    return np.where(small, series, safe * csch(a * safe))


def omega(j: int, y, params: WormParams):
    """omega_j(y) = pi * (e^{(j+1)s} chi_{beta-pi/2}) * chi_{pi/2}, in closed form.

    The convolution integral runs over the overlap of (-a, a) and (y - pi/2, y + pi/2)
    with a = beta - pi/2; it vanishes for |y| >= beta.
    """
    y = np.asarray(y, dtype=float)
    a = params.log_modulus_bound
    c = j + 1
    lo = np.maximum(-a, y - HALF_PI)
    hi = np.minimum(a, y + HALF_PI)
    length = np.clip(hi - lo, 0.0, None)
    if c == 0:
        val = math.pi * length
    else:
        val = math.pi * np.exp(c * lo) * np.expm1(c * length) / c
    return _scalar(np.where(length > 0, val, 0.0))


def omega_breakpoints(params: WormParams) -> list[float]:
    """Points of I_beta where omega_j fails to be smooth (independent of j)."""
    a = params.log_modulus_bound
    d = abs(HALF_PI - a)
    pts = sorted({-params.beta, -d, d, params.beta})
    return pts


def omega_hat(j: int, xi, params: WormParams):
    c2 = 0.5 * (j + 1)
    return _scalar(math.pi * sinhc(params.strip_factor, _as_complex(xi) - c2) * sinhc(math.pi, xi))


def inverse_omega_hat(j: int, xi, params: WormParams):
    """1/omega_hat(j, xi) computed without overflow; infinite at the zeros."""
    c2 = 0.5 * (j + 1)
    return _scalar(zcsch(params.strip_factor, _as_complex(xi) - c2) * zcsch(math.pi, xi) / math.pi)


def omega_hat_derivative(j: int, xi, params: WormParams):
    """d/dxi of omega_hat(j, xi), analytic."""
    c2 = 0.5 * (j + 1)
    A = params.strip_factor
    z = _as_complex(xi)
    return _scalar(
        math.pi
        * (
            sinhc_derivative(A, z - c2) * sinhc(math.pi, z)
            + sinhc(A, z - c2) * sinhc_derivative(math.pi, z)
        )
    )


def fourier_laplace(j: int, zeta, params: WormParams):
    """The transform zeta -> integral of omega_j(y) e^{-i y zeta} dy."""
    return omega_hat(j, 0.5j * _as_complex(zeta), params)


def degenerate_pairs(params: WormParams, k_max: int) -> list[tuple[int, int]]:
    """(k, m) with k*nu_beta within DEGENERACY_TOL of the integer m, 1 <= k <= k_max."""
    nu = params.nu_beta
    out = []
    for k in range(1, k_max + 1):
        m = round(k * nu)
        if m != 0 and abs(k * nu - m) < DEGENERACY_TOL:
            out.append((k, m))
    return out


def ensure_nondegenerate(params: WormParams, k_max: int = 64) -> None:
    pairs = degenerate_pairs(params, k_max)
    if not pairs:
        return
    msg = (
        f"beta={params.beta!r}: pole families collide at k*nu_beta = m for {len(pairs)} pairs (k, m), "
        f"first {pairs[:3]}; "
        "the correction construction assumes distinct families"
    )
    if not params.allow_degenerate:
        raise DegenerateParametersError(msg)
    warnings.warn(msg, DegeneracyWarning, stacklevel=2)


def omega_hat_zeros(j: int, k_max: int, params: WormParams) -> list[complex]:
    """Zeros of omega_hat(j, .): (j+1)/2 + i k nu_beta and i k for 0 < |k| <= k_max.

    xi = 0 and xi = (j+1)/2 are removable (numerator zero cancelled by the
    denominator) and are not listed. For j = -1 a coincidence k nu_beta = m merges
    two simple zeros into a double one; this is reported as a DegeneracyWarning.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    c2 = 0.5 * (j + 1)
    nu = params.nu_beta
    ks = [k for k in range(-k_max, k_max + 1) if k]
    zeros = [complex(c2, k * nu) for k in ks] + [complex(0.0, k) for k in ks]
    if j == -1 and degenerate_pairs(params, k_max):
        warnings.warn(
            f"nu_beta={nu!r}: zero families coincide for j=-1", DegeneracyWarning, stacklevel=2
        )
    return zeros


def _family_gap(params: WormParams, k_max: int) -> float:
    nu = params.nu_beta
    gaps = [abs(k * nu - round(k * nu)) for k in range(1, k_max + 1) if round(k * nu) != 0]
    return min(gaps) if gaps else 1.0


@dataclass(frozen=True)
class PoleSet:
    """P = {i k nu_beta : k != 0} U {i k : k != 0}, truncated at |k| <= k_max."""

    params: WormParams
    k_max: int = 16
    exclusion_radius: float | None = None
    _points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        nu = self.params.nu_beta
        ks = np.array([k for k in range(-self.k_max, self.k_max + 1) if k], dtype=float)
        pts = np.concatenate([1j * nu * ks, 1j * ks])
        object.__setattr__(self, "_points", pts)
        if self.exclusion_radius is None:
            r = 0.1 * min(1.0, nu, _family_gap(self.params, self.k_max) or 1.0)
            object.__setattr__(self, "exclusion_radius", r)
        elif self.exclusion_radius <= 0:
            raise ValueError("exclusion_radius must be positive")

    @classmethod
    def covering(cls, params: WormParams, im_max: float, **kw) -> "PoleSet":
        """A truncation that contains every pole with |Im| <= im_max + 1."""
        step = min(1.0, params.nu_beta)
        k_max = max(1, int(math.ceil((im_max + 1.0) / step)) + 1)
        return cls(params, k_max=k_max, **kw)

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def nu_family(self) -> np.ndarray:
        return self._points[: 2 * self.k_max]

    @property
    def integer_family(self) -> np.ndarray:
        return self._points[2 * self.k_max :]

    def distance(self, xi):
        """Distance from each xi to the nearest point of P."""
        xi = _as_complex(xi)
        d = np.abs(xi[..., None] - self._points).min(axis=-1)
        return _scalar(d)

    def line_distance(self, t: float) -> float:
        """Distance from the horizontal line Im xi = t to P."""
        return float(np.min(np.abs(self._points.imag - t)))
