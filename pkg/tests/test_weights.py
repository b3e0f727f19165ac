from __future__ import annotations

import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from wormproj.geometry import WormParams
from wormproj.weights import (
    SERIES_THRESHOLD,
    DegeneracyWarning,
    DegenerateParametersError,
    PoleSet,
    csch,
    degenerate_pairs,
    ensure_nondegenerate,
    fourier_laplace,
    inverse_omega_hat,
    omega,
    omega_breakpoints,
    omega_hat,
    omega_hat_derivative,
    omega_hat_zeros,
    sinhc,
    zcsch,
)

P = WormParams(2.0)
A = P.log_modulus_bound


def convolution_oracle(j, y, params):
    """pi * int e^{(j+1)s} chi_{|s|<a}(s) chi_{|y-s|<pi/2} ds by adaptive quadrature."""
    a = params.log_modulus_bound
    lo, hi = max(-a, y - math.pi / 2), min(a, y + math.pi / 2)
    if hi <= lo:
        return 0.0
    val, _ = integrate.quad(lambda s: math.exp((j + 1) * s), lo, hi, epsabs=0, epsrel=1e-13)
    return math.pi * val


def laplace_oracle(j, xi, params):
    br = omega_breakpoints(params)
    tot = 0j
    for lo, hi in zip(br[:-1], br[1:]):
        re, _ = integrate.quad(lambda y: (np.exp(-2 * y * xi) * omega(j, y, params)).real, lo, hi, epsrel=1e-12)
        im, _ = integrate.quad(lambda y: (np.exp(-2 * y * xi) * omega(j, y, params)).imag, lo, hi, epsrel=1e-12)
        tot += re + 1j * im
    return tot


def test_omega_value_at_origin():
    # the overlap of (-a, a) and (-pi/2, pi/2) is (-a, a) for beta = 2
    assert omega(-1, 0.0, P) == pytest.approx(math.pi * (2 * P.beta - math.pi), rel=1e-14)


@settings(max_examples=60)
@given(st.integers(-3, 3), st.floats(-2.5, 2.5))
def test_omega_matches_convolution(j, y):
    assert omega(j, y, P) == pytest.approx(convolution_oracle(j, y, P), rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("beta", [1.8, 2.0, 3.5])
def test_omega_support_and_continuity(beta):
    p = WormParams(beta)
    ys = np.linspace(-beta - 0.5, beta + 0.5, 2001)
    v = omega(0, ys, p)
    assert np.all(v[np.abs(ys) >= beta] == 0.0)
    assert np.all(v[np.abs(ys) < beta - 1e-9] > 0.0)
    assert np.max(np.abs(np.diff(v))) < 0.01 * np.max(v)


def test_breakpoints():
    br = omega_breakpoints(P)
    assert br[0] == -P.beta and br[-1] == P.beta
    assert len(br) == 4


@settings(max_examples=25, deadline=None)
@given(st.integers(-3, 2), st.floats(-2.5, 2.5), st.floats(-1.5, 1.5))
def test_omega_hat_is_the_laplace_transform(j, re, im):
    xi = complex(re, im)
    exact = omega_hat(j, xi, P)
    assert abs(laplace_oracle(j, xi, P) - exact) < 1e-9 * (1 + abs(exact))


def test_omega_hat_at_zero_is_total_mass():
    # int omega_{-1} = (pi * 2a) * pi
    assert omega_hat(-1, 0.0, P) == pytest.approx(math.pi**2 * (2 * P.beta - math.pi), rel=1e-13)


def test_fourier_laplace_direct():
    zeta = 0.7 - 0.3j
    br = omega_breakpoints(P)
    tot = 0j
    for lo, hi in zip(br[:-1], br[1:]):
        for part, fn in ((1, np.real), (1j, np.imag)):
            tot += part * integrate.quad(lambda y: fn(np.exp(-1j * y * zeta) * omega(1, y, P)), lo, hi,
                                         epsrel=1e-12)[0]
    assert fourier_laplace(1, zeta, P) == pytest.approx(tot, rel=1e-10)


@given(st.floats(-4, 4))
def test_conjugate_symmetry_for_j_minus_one(x):
    assert omega_hat(-1, x, P) == pytest.approx(np.conj(omega_hat(-1, -x, P)), rel=1e-13)


def test_conjugate_symmetry_fails_for_other_modes():
    # omega_0 is not even, so its transform is not even on the real line
    assert abs(omega_hat(0, 1.0, P) - omega_hat(0, -1.0, P)) > 1.0


@pytest.mark.parametrize("j", [-1, 0, 2])
def test_zeros(j):
    zs = omega_hat_zeros(j, 5, P)
    assert len(zs) == 20
    assert max(abs(omega_hat(j, z, P)) for z in zs) < 1e-9
    # removable points are not zeros
    assert abs(omega_hat(j, 0.0, P)) > 0.1
    assert abs(omega_hat(j, 0.5 * (j + 1), P)) > 0.1


def test_zeros_validation():
    with pytest.raises(ValueError):
        omega_hat_zeros(0, 0, P)


@settings(max_examples=50)
@given(st.floats(-6, 6), st.floats(-3, 3))
def test_inverse_times_transform_is_one(re, im):
    xi = complex(re, im)
    pole = PoleSet.covering(P, abs(im)).distance(xi)
    if pole < 1e-3 or abs(xi - 0.0) < 1e-3:
        return
    assert omega_hat(0, xi, P) * inverse_omega_hat(0, xi, P) == pytest.approx(1.0, rel=1e-10)


def test_inverse_does_not_overflow():
    with np.errstate(over="raise", divide="raise", invalid="raise"):
        v = inverse_omega_hat(-1, 400.0, P)
    assert v == 0.0 or abs(v) < 1e-300


@pytest.mark.parametrize("xi", [0.3 + 0.2j, -1.1 + 0.05j, 2.0 - 0.7j, 1e-5])
def test_derivative_against_central_difference(xi):
    h = 1e-5
    fd = (omega_hat(1, xi + h, P) - omega_hat(1, xi - h, P)) / (2 * h)
    assert omega_hat_derivative(1, xi, P) == pytest.approx(fd, rel=1e-8, abs=1e-9)


@pytest.mark.parametrize("z", [0.0, 0.5 * SERIES_THRESHOLD, 0.999 * SERIES_THRESHOLD, 1.001 * SERIES_THRESHOLD, 0.01 + 0.02j, 3.0])
def test_sinhc_and_zcsch_against_mpmath(z):
    a = 1.7
    exact = mpmath.sinh(a * mpmath.mpc(z)) / mpmath.mpc(z) if z != 0 else mpmath.mpf(a)
    assert complex(sinhc(a, z)) == pytest.approx(complex(exact), rel=1e-14)
    assert complex(zcsch(a, z)) == pytest.approx(complex(1 / exact), rel=1e-14)


def test_csch_large_arguments():
    with np.errstate(over="raise", divide="raise", invalid="raise"):
        assert abs(csch(900.0)) == 0.0
        assert abs(csch(-900.0 + 1j)) == 0.0
    assert complex(csch(1.3)) == pytest.approx(1 / math.sinh(1.3))


def test_degeneracy_detection():
    deg = WormParams(math.pi)
    assert degenerate_pairs(deg, 3) == [(1, 1), (2, 2), (3, 3)]
    with pytest.raises(DegenerateParametersError):
        ensure_nondegenerate(deg)
    ok = WormParams(math.pi, allow_degenerate=True)
    with pytest.warns(DegeneracyWarning):
        ensure_nondegenerate(ok)
    with pytest.warns(DegeneracyWarning):
        omega_hat_zeros(-1, 2, deg)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ensure_nondegenerate(P)
    # beta = 3 pi / 4 gives nu = 2: every nu-pole is an integer pole
    assert degenerate_pairs(WormParams(0.75 * math.pi), 2) == [(1, 2), (2, 4)]


def test_pole_set():
    ps = PoleSet(P, k_max=3)
    assert len(ps.points) == 12
    assert np.allclose(ps.nu_family.imag, P.nu_beta * np.array([-3, -2, -1, 1, 2, 3]))
    assert np.allclose(ps.integer_family.imag, [-3, -2, -1, 1, 2, 3])
    assert ps.distance(0.0) == pytest.approx(1.0)
    assert ps.line_distance(0.5) == pytest.approx(0.5)
    # 3 nu_beta = 10.979... is the closest approach of the two families for |k| <= 3
    assert ps.exclusion_radius == pytest.approx(0.1 * abs(3 * P.nu_beta - 11))
    cov = PoleSet.covering(P, 5.0)
    assert cov.points.imag.max() >= 6.0
    with pytest.raises(ValueError):
        PoleSet(P, k_max=0)
    with pytest.raises(ValueError):
        PoleSet(P, exclusion_radius=-1.0)
