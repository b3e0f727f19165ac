"""Projections and correction operators applied to sampled functions.

Operators are applied through the Fourier factorisation of their kernels. For
f on D'_beta and an output mode j,

    Op f(w) = w2^j / (2 pi) * int A(xi) e^{i xi w1} dxi,
    A(xi)   = int f(z) conj(z2)^j e^{-i x xi} Kappa(xi, Im z1) dV(z),

with Kappa the symbol of the kernel (see ``kernels``). The z-integral is done on
the tensor grid and the xi-integral with Gauss-Legendre panels, so an operator
costs a few dense matrix products instead of a kernel matrix. Functions on
D_beta are moved to D'_beta by the isometry f -> (f o Psi) e^{z1} and back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geometry import PointC2, WormParams
from .grids import DPrimeGrid, GridFunction, StructureError
from .kernels import symbol
from .numerics import QuadratureSpec, gauss_legendre_panels, strip_y_rule, GridSpec, x_rule
from .weights import inverse_omega_hat, omega

OPERATOR_QUAD = QuadratureSpec(xi_truncation=12.0, panel_width=0.5, nodes_per_panel=16)


class SupportError(ValueError):
    """A function that must vanish near the edge of the sampled region does not."""


@dataclass(frozen=True)
class OperatorNormEstimate:
    j: int
    lower_bound: float
    trials: int
    envelope: float


@dataclass(frozen=True)
class Spectrum:
    """Fourier data A(xi) of an operator output, evaluable anywhere in D'_beta."""

    xi: np.ndarray
    wxi: np.ndarray
    A: np.ndarray
    mode: int

    def _coeffs(self, derivative_order: int, prime_derivative: bool):
        c = self.wxi * self.A / (2.0 * math.pi)
        for n in range(1, derivative_order + 1):
            c = c * (1j * self.xi if prime_derivative else (1j * self.xi - n))
        return c

    def evaluate(self, z1p, z2, derivative_order: int = 0, pushforward: bool = False):
        """Output at D'_beta points (z1p, z2); ``pushforward`` gives the D_beta function at Psi of them.

        On D_beta the k-th w1-derivative is returned; on D'_beta the k-th z1-derivative.
        """
        z1p = np.asarray(z1p, dtype=complex)
        c = self._coeffs(derivative_order, prime_derivative=not pushforward)
        val = np.exp(1j * z1p[..., None] * self.xi) @ c
        if pushforward:
            val = val * np.exp(-(derivative_order + 1) * z1p)
        return val * np.asarray(z2, dtype=complex) ** self.mode

    def on_grid(self, grid: DPrimeGrid, derivative_order: int = 0, pushforward: bool = False) -> np.ndarray:
        c = self._coeffs(derivative_order, prime_derivative=not pushforward)
        ex = np.exp(1j * np.outer(self.xi, grid.x)) * c[:, None]  # (nxi, nx)
        ey = np.exp(-np.outer(self.xi, grid.y.ravel()))  # (nxi, nus)
        out = (ex.T @ ey).reshape(grid.x.size, grid.u.size, grid.s.size)
        if pushforward:
            out = out * np.exp(-(derivative_order + 1) * grid.z1[..., 0])
        return out[..., None] * grid.z2**self.mode


def xi_rule(spec: QuadratureSpec):
    X = spec.xi_truncation
    return gauss_legendre_panels(-X, X, spec.panel_width, spec.nodes_per_panel)


def spectrum(
    kernel_id: str,
    f: GridFunction,
    params: WormParams,
    spec: QuadratureSpec | None = None,
    j: int = -1,
    sign: int | None = None,
) -> Spectrum:
    spec = spec or OPERATOR_QUAD
    fp = f.to_prime()
    g = fp.grid
    mode = j if kernel_id == "bergman" else -1
    ang_w = np.exp(0.5 * mode * g.s)[:, None] * np.exp(-1j * mode * g.theta)[None, :] * g.wt[None, :]
    phi = np.einsum("xusk,sk->xus", fp.values, ang_w)
    phi = phi * g.wx[:, None, None] * g.wu[None, :, None] * g.ws[None, None, :]
    xi, wxi = xi_rule(spec)
    E = np.exp(-1j * np.outer(xi, g.x))
    phat = E @ phi.reshape(g.x.size, -1)
    kappa = symbol(kernel_id, xi[:, None], g.y.ravel()[None, :], params, j=j, sign=sign)
    A = np.sum(kappa * phat, axis=1)
    return Spectrum(xi, wxi, A, mode)


def apply_kernel_op(
    kernel_id: str,
    f: GridFunction,
    params: WormParams,
    spec: QuadratureSpec | None = None,
    j: int = -1,
    sign: int | None = None,
    derivative_order: int = 0,
    output_grid: DPrimeGrid | None = None,
) -> GridFunction:
    """Op f(w) = int f(z) conj(K(z, w)) dV(z) at the nodes of ``output_grid`` (default: f's grid).

    kernel_id is "bergman" (mode j, i.e. P_j), "correction" (H) or "t_minus1" (T_{-1}).
    With ``derivative_order = k`` the k-th w1-derivative of the output is returned.
    """
    sp = spectrum(kernel_id, f, params, spec, j=j, sign=sign)
    grid = output_grid or f.grid
    pushforward = f.domain_tag == "D_beta"
    vals = sp.on_grid(grid, derivative_order, pushforward=pushforward)
    return GridFunction(grid, vals, f.domain_tag)


def apply_T_minus1(f: GridFunction, params: WormParams, spec=None, derivative_order: int = 0, sign=None) -> GridFunction:
    return apply_kernel_op("t_minus1", f, params, spec, sign=sign, derivative_order=derivative_order)


def project_Q(j: int, f: GridFunction, n_theta: int | None = None) -> GridFunction:
    """Angular Fourier projection onto the z2-mode j, per rotation orbit of nodes."""
    n = f.grid.theta.size
    if n_theta is not None and n_theta != n:
        raise StructureError(f"grid has orbits of size {n}, not {n_theta}")
    if 2 * abs(j) >= n:
        raise StructureError(f"mode {j} is not resolved by {n} angular nodes")
    phase = np.exp(1j * j * f.grid.theta)
    coef = np.mean(f.values * np.conj(phase), axis=-1, keepdims=True)
    return f.with_values(coef * phase)


def apply_T_j(j: int, f: GridFunction, params: WormParams, spec=None, derivative_order: int = 0) -> GridFunction:
    """T_j f = w2^{j+1} T_{-1}(z2^{-j-1} Q_j f)."""
    z2 = f.grid.z2
    g = project_Q(j, f).with_values(project_Q(j, f).values * z2 ** (-j - 1))
    t = apply_T_minus1(g, params, spec, derivative_order=derivative_order)
    return t.with_values(t.values * z2 ** (j + 1))


def norm_envelope(j: int, params: WormParams) -> float:
    """sinh((j+1)(beta - pi/2)) / (j+1), continued by beta - pi/2 at j = -1."""
    a = params.log_modulus_bound
    c = j + 1
    return a if c == 0 else math.sinh(c * a) / c


# ---------------------------------------------------------------- test functions


def bump(t):
    """exp(1 - 1/(1 - t^2)) on |t| < 1 and 0 elsewhere; smooth, peak 1."""
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1.0
    safe = np.where(inside, t, 0.0)
    return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - safe * safe)), 0.0)


def prime_coords(p: PointC2):
    """(x, u, s, theta) of a D_beta point, using the branch log (no domain check)."""
    z1 = np.asarray(p.z1, dtype=complex)
    z2 = np.asarray(p.z2, dtype=complex)
    L = np.log(np.abs(z2) ** 2)
    Z = np.log(z1 * np.exp(-1j * L)) + 1j * L
    return Z.real, Z.imag - L, L, np.angle(z2)


@dataclass(frozen=True)
class BumpMode:
    m: int
    coeff: complex
    x0: float
    rx: float
    u0: float
    ru: float
    s0: float
    rs: float


@dataclass(frozen=True)
class BumpFunction:
    """Sum of z2-modes e^{i m theta} times products of bumps in (x, u, s), on D_beta."""

    modes: tuple[BumpMode, ...]
    dilation: float = 1.0

    def __call__(self, p: PointC2):
        x, u, s, th = prime_coords(p)
        x = x + math.log(self.dilation)
        out = np.zeros(np.broadcast(x, th).shape, dtype=complex)
        for b in self.modes:
            prof = bump((x - b.x0) / b.rx) * bump((u - b.u0) / b.ru) * bump((s - b.s0) / b.rs)
            out = out + b.coeff * prof * np.exp(1j * b.m * th)
        return out

    def dilated(self, lam: float) -> "BumpFunction":
        """z1 -> lam z1: the support moves toward the vertex z1 = 0 when lam > 1."""
        return BumpFunction(self.modes, self.dilation * lam)


def random_bump_function(
    rng: np.random.Generator,
    params: WormParams,
    modes: Sequence[int] = (-2, -1, 0, 1),
    x_center: float = 0.0,
) -> BumpFunction:
    a = params.log_modulus_bound
    out = []
    for m in modes:
        rx = rng.uniform(0.8, 1.4)
        ru = rng.uniform(0.6, 1.0)
        rs = rng.uniform(0.6, 0.9) * a
        out.append(
            BumpMode(
                m=int(m),
                coeff=complex(rng.normal(), rng.normal()),
                x0=x_center + rng.uniform(-0.5, 0.5),
                rx=rx,
                u0=rng.uniform(-1.0, 1.0) * (0.95 * math.pi / 2 - ru),
                ru=ru,
                s0=rng.uniform(-1.0, 1.0) * (0.95 * a - rs),
                rs=rs,
            )
        )
    return BumpFunction(tuple(out))


def bergman_test_function(n: int, params: WormParams | None = None) -> Callable[[PointC2], np.ndarray]:
    """Elements of B_{-1}(D_beta): Gamma^{-1} of z2^{-1} G_n(z1) with Gaussian-type holomorphic G_n.

    |e^{-(z1 - c)^2 / w^2}| grows like e^{y^2 / w^2} across the strip, so the
    widths scale with beta to keep the functions from piling up at the boundary.
    """
    centers = [0.0, 0.7, -0.6, 0.3, -0.2]
    widths = [1.0, 1.3, 1.1, 1.2, 1.0]
    powers = [0, 0, 1, 1, 2]
    scale = 1.0 if params is None else max(1.0, params.beta / 2.0)
    c, wd, pw = centers[n % 5] * scale, widths[n % 5] * scale, powers[n % 5]

    def F(p: PointC2):
        z1 = np.asarray(p.z1, dtype=complex)
        z2 = np.asarray(p.z2, dtype=complex)
        L = np.log(np.abs(z2) ** 2)
        Z = np.log(z1 * np.exp(-1j * L)) + 1j * L
        G = Z**pw * np.exp(-((Z - c) ** 2) / wd**2)
        return G / (z2 * z1)

    return F


# ---------------------------------------------------------------- experiments


def norm_growth_experiment(
    j_range: Sequence[int],
    params: WormParams,
    grid: DPrimeGrid,
    spec: QuadratureSpec | None = None,
    trials: int = 8,
    seed: int = 0,
) -> list[OperatorNormEstimate]:
    """Lower bounds max ||T_j f|| / ||f|| over random probes f = z2^j phi, phi a bump in (x, u, s).

    The same phi are used for every j so the trend in j is not confounded by the probes.
    """
    if trials < 8:
        raise ValueError("trials must be >= 8")
    rng = np.random.default_rng(seed)
    probes = [random_bump_function(rng, params, modes=(0,)) for _ in range(trials)]
    base = [GridFunction.sample(p, grid, "D_beta") for p in probes]
    out = []
    for j in j_range:
        best = 0.0
        for phi in base:
            f = phi.with_values(phi.values * grid.z2**j)
            r = apply_T_j(j, f, params, spec).norm() / f.norm()
            best = max(best, r)
        out.append(OperatorNormEstimate(int(j), best, trials, norm_envelope(int(j), params)))
    return out


def _check_support(f: GridFunction, rel: float = 1e-10) -> None:
    v = np.abs(f.values)
    peak = v.max()
    if peak == 0:
        return
    edge = max(
        v[[0, -1]].max(),
        v[:, [0, -1]].max(),
        v[:, :, [0, -1]].max(),
    )
    if edge > rel * peak:
        raise SupportError("function does not vanish at the edge of the sampled region")


def _radial_fd(func: Callable, p: PointC2, h: float):
    z1 = np.asarray(p.z1, dtype=complex)
    unit = z1 / np.abs(z1)
    fp = func(PointC2(z1 + h * unit, p.z2))
    fm = func(PointC2(z1 - h * unit, p.z2))
    return (fp - fm) / (2.0 * h)


def lambda_t(f: GridFunction, h: float = 1e-4, check_support: bool = True) -> GridFunction:
    """Radial derivative d/d|z1| on D_beta, by central differences of the generating callable.

    The adjoint identity needs compact support, so by default a function that
    does not vanish at the edge of the grid is refused.
    """
    if f.func is None or f.domain_tag != "D_beta":
        raise ValueError("lambda_t needs a D_beta grid function carrying its callable")
    if check_support:
        _check_support(f)
    return f.with_values(_radial_fd(f.func, f.nodes, h), func=None)


def adjoint_defect(u: GridFunction, v: GridFunction, h: float = 1e-4) -> complex:
    """<Lambda u, v> + <u, Lambda v> + <u, v/|z1|>, which vanishes for compactly supported u, v."""
    lu, lv = lambda_t(u, h), lambda_t(v, h)
    r = np.abs(u.nodes.z1)
    return lu.inner(v) + u.inner(lv) + u.inner(v.with_values(v.values / r))


_STEPS = {1: ((-1, -0.5), (1, 0.5)), 2: ((-1, 1.0), (0, -2.0), (1, 1.0))}


def partial_derivative(func: Callable, p: PointC2, alpha: tuple[int, int, int, int], h: float):
    """Mixed central difference for the multi-index alpha in the real coordinates (Re z1, Im z1, Re z2, Im z2)."""
    z1 = np.asarray(p.z1, dtype=complex)
    z2 = np.asarray(p.z2, dtype=complex)
    dirs = [(1.0, 0), (1j, 0), (1.0, 1), (1j, 1)]
    stencil = [((0.0 + 0j, 0.0 + 0j), 1.0)]
    for (d, which), order in zip(dirs, alpha):
        if order == 0:
            continue
        new = []
        for (o1, o2), c in stencil:
            for k, ck in _STEPS[order]:
                step = k * h * d
                new.append(((o1 + step, o2) if which == 0 else (o1, o2 + step), c * ck / h**order))
        stencil = new
    total = 0.0
    for (o1, o2), c in stencil:
        total = total + c * func(PointC2(z1 + o1, z2 + o2))
    return total


def _multi_indices(order: int):
    out = []
    for a in range(order + 1):
        for b in range(order + 1 - a):
            for c in range(order + 1 - a - b):
                d = order - a - b - c
                out.append((a, b, c, d))
    return out


def sobolev_seminorm(f: GridFunction, order_k: int, h: float = 1e-4) -> float:
    """sqrt of the sum over |alpha| = k of ||D^alpha f||^2 (finite differences of the callable)."""
    if f.func is None:
        raise ValueError("sobolev_seminorm needs a grid function carrying its callable")
    if order_k == 0:
        return f.norm()
    if order_k > 2:
        raise ValueError("orders above 2 are not supported")
    total = 0.0
    for alpha in _multi_indices(order_k):
        vals = partial_derivative(f.func, f.nodes, alpha, h)
        total += float(np.sum(f.weights * np.abs(vals) ** 2))
    return math.sqrt(total)


def sobolev_norm(f: GridFunction, order_k: int, h: float = 1e-4) -> float:
    return math.sqrt(sum(sobolev_seminorm(f, k, h) ** 2 for k in range(order_k + 1)))


@dataclass(frozen=True)
class RegularityReport:
    order_k: int
    dilations: tuple[float, ...]
    ratios: tuple[float, ...]

    @property
    def variation(self) -> float:
        return max(self.ratios) / min(self.ratios)


def regularity_experiment(
    order_k: int,
    params: WormParams,
    grid: DPrimeGrid,
    base: BumpFunction,
    spec: QuadratureSpec | None = None,
    members: int = 4,
    factor: float = 2.0,
) -> RegularityReport:
    """||d^k/dw1^k T_{-1} f|| / ||f||_{W^k} along the shrinking family f(lam z1), lam = factor^n."""
    lams, ratios = [], []
    for n in range(members):
        lam = factor**n
        fn = base.dilated(lam)
        f = GridFunction.sample(fn, grid, "D_beta")
        _check_support(f)
        num = apply_T_minus1(f, params, spec, derivative_order=order_k).norm()
        den = sobolev_norm(f, order_k)
        lams.append(lam)
        ratios.append(num / den)
    return RegularityReport(order_k, tuple(lams), tuple(ratios))


def strip_projection(
    j: int,
    g: Callable,
    w1,
    params: WormParams,
    x_max: float = 16.0,
    grid: GridSpec | None = None,
    spec: QuadratureSpec | None = None,
):
    """Weighted Bergman projection on the strip, int g(z1) conj(k_j(z1, w1)) omega_j(Im z1) dA, at w1."""
    grid = grid or GridSpec(x_max=x_max, x_panel=0.5, x_nodes=12, y_nodes=24)
    spec = spec or QuadratureSpec(xi_truncation=16.0, panel_width=0.25, nodes_per_panel=16)
    x, wx = x_rule(params, grid)
    y, wy = strip_y_rule(params, grid)
    vals = g(x[:, None] + 1j * y[None, :]) * (wx[:, None] * (wy * omega(j, y, params))[None, :])
    xi, wxi = xi_rule(spec)
    phat = np.exp(-1j * np.outer(xi, x)) @ vals
    A = np.sum(phat * np.exp(-np.outer(xi, y)), axis=1) * inverse_omega_hat(j, xi, params)
    w1 = np.asarray(w1, dtype=complex)
    return (np.exp(1j * w1[..., None] * xi) @ (wxi * A)) / (2.0 * math.pi)
