"""Pointwise evaluation of the Bergman, correction and composite kernels.

Every kernel K here is evaluated through its conjugate, written as

    conj K(z, w) = prefactor(z2, w2) / (2 pi) * int Kappa(xi, y) e^{-i x xi} e^{i xi w1} dxi

with z1 = x + i y on D'_beta. The symbol Kappa is analytic in xi, so the same
integrand can be integrated along any horizontal line that the pole set allows.
Symbols:

    bergman mode j    Kappa = e^{-xi y} / omega_hat(j, xi),   prefactor (conj z2 w2)^j
    correction        Kappa = h_hat(xi, y),                   prefactor 1 / (conj z2 w2)
    t_minus1          Kappa = bergman(-1) + sign * correction
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .correction import default_truncation, h_hat_partial, resolve_correction_sign
from .geometry import PointC2, WormParams, in_D_beta_prime, psi_inv, DomainError
from .numerics import AccuracyError, KernelValue, QuadratureSpec, gauss_legendre_panels, integrate_line
from .weights import PoleSet, _as_complex, inverse_omega_hat

MARGIN_MIN = 0.05
KERNEL_IDS = ("bergman", "correction", "t_minus1")


@dataclass(frozen=True)
class ContourLine:
    t_shift: float

    def check(self, poles: PoleSet) -> None:
        QuadratureSpec(t_shift=self.t_shift).check_line(poles)


def k_prime_fourier(j: int, xi, y, w1, params: WormParams):
    """Fourier-side strip kernel e^{i xi (i y - conj w1)} / omega_hat(j, xi).

    Multiplying by e^{i x xi} and integrating gives 2 pi times the strip kernel at z1 = x + i y.
    """
    xi = _as_complex(xi)
    return inverse_omega_hat(j, xi, params) * np.exp(1j * xi * (1j * np.asarray(y) - np.conj(w1)))


def bergman_symbol_j(j: int, xi, y, params: WormParams):
    xi = _as_complex(xi)
    return np.exp(-xi * y) * inverse_omega_hat(j, xi, params)


def symbol(kernel_id: str, xi, y, params: WormParams, j: int = -1, sign: int | None = None):
    """Kappa(xi, y) for the given kernel; broadcasts over xi and y."""
    if kernel_id == "bergman":
        return bergman_symbol_j(j, xi, y, params)
    xi = _as_complex(xi)
    im_max = float(np.max(np.abs(xi.imag), initial=0.0))
    K = default_truncation(params, 1e-16) + int(math.ceil(im_max / params.nu_beta)) + 1
    h = h_hat_partial(xi, y, params, K)
    if kernel_id == "correction":
        return h
    if kernel_id == "t_minus1":
        sign = resolve_correction_sign(params) if sign is None else sign
        return bergman_symbol_j(-1, xi, y, params) + sign * h
    raise ValueError(f"unknown kernel {kernel_id!r}; expected one of {KERNEL_IDS}")


def _mode(kernel_id: str, j: int) -> int:
    return j if kernel_id == "bergman" else -1


def _envelope(kernel_id, j, y, yp, dx, t, params: WormParams, extra_degree: int = 0):
    """Pointwise bound for |Kappa(xi, y) e^{-i x xi} e^{i xi w1}| at |Re xi| = r, xi on Im xi = t."""
    A = params.strip_factor
    m = params.m_gauss
    nu = params.nu_beta
    gsum = 2.0 * sum(math.exp(-m * k * k * nu * nu) for k in range(1, 40))

    def env(r: float) -> float:
        best = 0.0
        mod = math.hypot(r, t)
        poly = (mod + extra_degree) ** extra_degree if extra_degree else 1.0
        for s in (r, -r):
            line = math.exp(min(700.0, -s * yp - t * dx))
            if kernel_id in ("bergman", "t_minus1"):
                jj = j if kernel_id == "bergman" else -1
                cc = 0.5 * (jj + 1)
                d1 = abs(s - cc)
                den = math.sinh(min(700.0, A * d1)) * math.sinh(min(700.0, math.pi * r))
                val = mod * math.hypot(s - cc, t) / (math.pi * den) * math.exp(min(700.0, -s * y))
                best = max(best, val * line * poly)
            if kernel_id in ("correction", "t_minus1"):
                dist = max(r, 1e-3)
                val = (
                    mod**2
                    * math.exp(min(700.0, -m * (r * r - t * t) + s * y))
                    / (A * math.pi * math.sinh(min(700.0, math.pi * r)))
                    * gsum
                    / dist
                )
                best = max(best, val * line * poly)
        return best

    return env


def _choose_truncation(env, tol: float, start: float = 4.0, cap: float = 200.0) -> float:
    r = start
    while r < cap and env(r) * 2.0 * r > tol * 1e-2:
        r += 1.0
    return r


def conj_kernel_integral(
    kernel_id: str,
    zp: PointC2,
    wp: PointC2,
    params: WormParams,
    spec: QuadratureSpec | None = None,
    j: int = -1,
    sign: int | None = None,
    derivative_order: int = 0,
    pushforward: bool = False,
) -> KernelValue:
    """(1/2pi) int Kappa(xi, y) e^{-i x xi} e^{i xi W1} [poly_k(xi) e^{-k W1}] dxi along Im xi = spec.t_shift.

    zp, wp are points of D'_beta. With ``derivative_order = k`` the extra factor
    (i xi - 1)...(i xi - k) e^{-k W1} is included, which is the k-th w1-derivative
    of the D_beta-side integrand after the pushforward.
    """
    spec = spec or QuadratureSpec()
    z1 = complex(zp.z1)
    w1 = complex(wp.z1)
    x, y = z1.real, z1.imag
    yp = w1.imag
    mode = _mode(kernel_id, j)
    if kernel_id in ("bergman", "t_minus1"):
        margin = 2.0 * params.beta - abs(y + yp)
        if margin < MARGIN_MIN:
            raise AccuracyError(
                f"decay margin {margin:.3g} below {MARGIN_MIN}: points too close to the boundary",
                partial=KernelValue(complex("nan"), math.inf),
            )
    t = spec.t_shift
    k = derivative_order
    shift_w = (k + 1) if pushforward else 0

    def integrand(xi):
        val = symbol(kernel_id, xi, y, params, j=j, sign=sign) * np.exp(-1j * x * xi + 1j * xi * w1)
        if k:
            poly = np.ones_like(xi)
            for n in range(1, k + 1):
                poly = poly * (1j * xi - n)
            val = val * poly
        return val

    env = _envelope(kernel_id, mode, y, yp, w1.real - x, t, params, extra_degree=k)
    Xi = _choose_truncation(env, spec.tol)
    spec_run = replace(spec, xi_truncation=max(spec.xi_truncation, Xi))
    poles = PoleSet.covering(params, abs(t)) if t != 0 else None
    res = integrate_line(integrand, spec_run, envelope=env, poles=poles)
    scale = np.exp(-shift_w * w1) if pushforward else 1.0
    pre = (np.conj(zp.z2) * wp.z2) ** mode / (2.0 * math.pi)
    return KernelValue(complex(pre * scale * res.value), float(abs(pre * scale) * res.abs_error_estimate))


def _kernel_Dprime(kernel_id, z, w, params, spec, j=-1, sign=None) -> KernelValue:
    for p in (z, w):
        if not in_D_beta_prime(p, params):
            raise DomainError("kernel evaluation requires points of D'_beta")
    cv = conj_kernel_integral(kernel_id, z, w, params, spec, j=j, sign=sign)
    return KernelValue(cv.value.conjugate(), cv.abs_error_estimate)


def bergman_kernel_Dprime(j: int, z: PointC2, w: PointC2, params: WormParams, spec=None) -> KernelValue:
    """Reproducing kernel of the mode-j Bergman space of D'_beta."""
    return _kernel_Dprime("bergman", z, w, params, spec, j=j)


def correction_kernel_Dprime(z: PointC2, w: PointC2, params: WormParams, spec=None) -> KernelValue:
    return _kernel_Dprime("correction", z, w, params, spec)


def t_kernel_Dprime(z: PointC2, w: PointC2, params: WormParams, spec=None, sign: int | None = None) -> KernelValue:
    """K'_{-1} + sign * H', integrated as one combined symbol (so contour shifts stay legal)."""
    return _kernel_Dprime("t_minus1", z, w, params, spec, sign=sign)


def pushforward_kernel(
    kernel_id: str, z: PointC2, w: PointC2, params: WormParams, spec=None, j: int = -1
) -> KernelValue:
    """K(z, w) = K'(Psi^{-1} z, Psi^{-1} w) / (z1 conj w1) on D_beta."""
    zp, wp = psi_inv(z, params), psi_inv(w, params)
    kv = _kernel_Dprime(kernel_id, zp, wp, params, spec, j=j)
    jac = 1.0 / (complex(z.z1) * np.conj(complex(w.z1)))
    return KernelValue(complex(kv.value * jac), float(kv.abs_error_estimate * abs(jac)))


def derivative_shift(order_k: int, z: PointC2, w: PointC2, params: WormParams, rel_tol: float = 1e-6) -> float:
    """Im xi of the contour used for the w1-derivative kernel.

    |w1| < |z1|: a line in (-(k+1), -k); |z1| < |w1|: a line in (0, 1). The
    point farthest from the nu_beta family and from the integers is chosen.
    """
    r1, r2 = abs(complex(z.z1)), abs(complex(w.z1))
    if abs(r1 - r2) <= rel_tol * max(r1, r2):
        raise ValueError("|w1| = |z1|: the contour shift direction is ambiguous")
    if r2 < r1:
        lo, hi = order_k, order_k + 1
        direction = -1.0
    else:
        lo, hi = 0.0, 1.0
        direction = 1.0
    poles = PoleSet.covering(params, hi + 1.0)
    cand = np.linspace(lo, hi, 201)[1:-1]
    dist = np.array([poles.line_distance(direction * c) for c in cand])
    return float(direction * cand[int(np.argmax(dist))])


def kernel_derivative_w1(
    order_k: int,
    z: PointC2,
    w: PointC2,
    params: WormParams,
    spec: QuadratureSpec | None = None,
    shift: bool = True,
    sign: int | None = None,
) -> KernelValue:
    """d^k/dw1^k of conj T_{-1}(z, w) on D_beta.

    This is the kernel that maps f to the k-th w1-derivative of T_{-1} f. The
    integrand carries (i xi - 1)...(i xi - k) and w1^{i xi - k - 1}; with
    ``shift`` the line is moved off R as dictated by |w1| versus |z1|.
    """
    if order_k < 0:
        raise ValueError("order_k must be nonnegative")
    spec = spec or QuadratureSpec()
    if shift and order_k > 0:
        t = derivative_shift(order_k, z, w, params)
        spec = spec.with_shift(t)
        ContourLine(t).check(PoleSet.covering(params, abs(t) + 1.0))
    zp, wp = psi_inv(z, params), psi_inv(w, params)
    cv = conj_kernel_integral("t_minus1", zp, wp, params, spec, sign=sign, derivative_order=order_k, pushforward=True)
    jac = 1.0 / np.conj(complex(z.z1))
    return KernelValue(complex(cv.value * jac), float(cv.abs_error_estimate * abs(jac)))



def kernel_on_grid(
    kernel_id: str,
    w: PointC2,
    grid,
    params: WormParams,
    spec: QuadratureSpec | None = None,
    j: int = -1,
    sign: int | None = None,
) -> np.ndarray:
    """K'(z, w) for every node z of a D'_beta tensor grid, as an array of the grid's shape."""
    w1 = complex(w.z1)
    if spec is None:
        # the symbol times e^{i xi w1} decays like e^{-(2 beta - |y + y'|)|xi|}; take the worst node
        margin = 2.0 * params.beta - float(np.max(np.abs(grid.y + w1.imag)))
        Xi = min(40.0, max(10.0, math.log(1e12) / max(margin, MARGIN_MIN)))
        spec = QuadratureSpec(xi_truncation=Xi, panel_width=0.5, nodes_per_panel=16)
    mode = _mode(kernel_id, j)
    xi, wxi = gauss_legendre_panels(-spec.xi_truncation, spec.xi_truncation, spec.panel_width, spec.nodes_per_panel)
    kappa = symbol(kernel_id, xi[:, None], grid.y.ravel()[None, :], params, j=j, sign=sign)
    right = (wxi * np.exp(1j * xi * w1))[:, None] * kappa
    M = np.exp(-1j * np.outer(xi, grid.x)).T @ right
    M = np.conj(M).reshape(grid.x.size, grid.u.size, grid.s.size) / (2.0 * math.pi)
    return M[..., None] * (grid.z2 * np.conj(complex(w.z2))) ** mode
