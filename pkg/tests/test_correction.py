from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wormproj.correction import (
    PoleError,
    PoleProximityError,
    bergman_symbol,
    bound_envelope,
    bound_ratio_scan,
    combined_regularity_check,
    combined_symbol,
    default_truncation,
    h_hat,
    h_hat_k,
    h_hat_partial,
    legal_radius,
    line_l2_ratio,
    nearest_other_pole,
    residue_report,
    resolve_correction_sign,
    tau,
)
from wormproj.geometry import WormParams
from wormproj.numerics import ConfigurationError, contour_circle_integral
from wormproj.weights import DegenerateParametersError

P = WormParams(2.0)
NU = P.nu_beta
YS = [0.0, 0.5 * P.log_modulus_bound, -0.5 * P.log_modulus_bound, 1.3]


@pytest.mark.parametrize("beta", [2.0, 5.5, 1.9])
def test_sign_is_minus_one(beta):
    assert resolve_correction_sign(WormParams(beta)) == -1


@pytest.mark.parametrize("k", [1, 2, 3, -1])
@pytest.mark.parametrize("y", YS)
def test_residues_cancel(k, y):
    r = residue_report(k, P, -1, y)
    assert abs(r.combined) < 1e-12 * abs(r.residue_bergman)
    assert abs(residue_report(k, P, +1, y).combined) == pytest.approx(2 * abs(r.residue_bergman))


@pytest.mark.parametrize("y", YS)
def test_residues_against_contour_integrals(y):
    pole = 1j * NU
    r = legal_radius(1, P)
    num_b = contour_circle_integral(lambda z: bergman_symbol(z, y, P), pole, r) / (2j * math.pi)
    num_h = contour_circle_integral(lambda z: h_hat_k(1, z, y, P), pole, r) / (2j * math.pi)
    rep = residue_report(1, P, -1, y)
    assert rep.residue_bergman == pytest.approx(num_b, rel=1e-10)
    assert rep.residue_correction == pytest.approx(-num_h, rel=1e-10)


@pytest.mark.parametrize("m", [1, 2])
def test_cancellation_for_other_gaussian_exponents(m):
    q = WormParams(2.0, m_gauss=m)
    for k in (1, 2):
        assert combined_regularity_check(k, legal_radius(k, q), q, -1, terms="local") < 1e-9


def test_integer_poles_are_kept():
    q = WormParams(5.5)
    r = 0.2 * q.nu_beta
    assert combined_regularity_check(1, r, q, -1, family="integer") > 1e-3
    assert combined_regularity_check(1, r, q, -1) < 1e-8


def test_strict_radius_is_enforced():
    with pytest.raises(ConfigurationError):
        combined_regularity_check(1, 0.2 * NU, P, -1)
    assert nearest_other_pole(1j * NU, P) == pytest.approx(4 - NU)
    with pytest.raises(ValueError):
        combined_regularity_check(1, 0.1, P, -1, family="other")


def test_degenerate_beta_refused():
    with pytest.raises(DegenerateParametersError):
        combined_regularity_check(1, 0.1, WormParams(math.pi), -1)


def test_tau_and_pole_errors():
    with pytest.raises(ValueError):
        tau(0, 1.0, P)
    with pytest.raises(PoleError):
        tau(1, 2j, P)
    with pytest.raises(PoleError):
        h_hat_k(1, 1j * NU, 0.0, P)
    with pytest.raises(PoleProximityError):
        h_hat(1j * NU + 1e-4, 0.0, P)
    # tau_k(0) = 0: the xi^2 factor beats the 1/sinh
    assert tau(1, 0.0, P) == 0.0


def test_partial_sum_is_sum_of_terms():
    xi, y = 0.4 + 0.3j, 0.7
    direct = sum(h_hat_k(k, xi, y, P) for k in (-3, -2, -1, 1, 2, 3))
    assert h_hat_partial(xi, y, P, 3) == pytest.approx(direct, rel=1e-13)


@settings(max_examples=30)
@given(st.floats(-5, 5), st.floats(-0.5, 0.5), st.floats(-2.0, 2.0))
def test_series_is_cauchy_and_tail_bound_holds(re, im, y):
    q = WormParams(1.7)  # small nu, so several terms matter
    xi = complex(re, im)
    res = h_hat(xi, y, q, tol=1e-12)
    ref = h_hat_partial(xi, y, q, 2 * res.k_used + 4)
    assert abs(res.value - ref) <= res.tail_bound + 1e-15 * max(1.0, abs(ref))
    assert res.tail_bound <= 1e-12 * max(1.0, abs(res.value))


def test_default_truncation():
    assert default_truncation(P, 1e-12) == 2
    q = WormParams(5.5)
    K = default_truncation(q, 1e-12)
    assert math.exp(-K * K * q.nu_beta**2) < 1e-12 * q.nu_beta
    assert math.exp(-((K - 1) ** 2) * q.nu_beta**2) >= 1e-12 * q.nu_beta


def test_combined_symbol_is_regular_at_nu_poles():
    # near i nu_beta the combined symbol converges while F grows like 1/eps
    vals = [combined_symbol(1j * NU + eps, 0.3, P, -1) for eps in (1e-4, 1e-6)]
    assert abs(vals[1] - vals[0]) < 1e-3 * abs(vals[1])
    f4, f6 = (abs(bergman_symbol(1j * NU + eps, 0.3, P)) for eps in (1e-4, 1e-6))
    assert f6 / f4 == pytest.approx(100.0, rel=1e-3)


def test_bound_ratio_finite():
    r = bound_ratio_scan(P, n_re=21, n_im=5, n_y=5)
    assert math.isfinite(r) and r > 0
    r0 = bound_ratio_scan(P, n_re=11, n_im=5, n_y=5, exclude_origin=0.25)
    assert math.isfinite(r0) and r0 > 0


def test_bound_envelope_values():
    assert bound_envelope(0.0, P) == 0.0
    assert bound_envelope(1.0, P) == pytest.approx(math.exp(-1 + (2 - math.pi)))


def test_line_estimate_finite_on_shifted_lines():
    s = np.linspace(-4, 4, 17)
    s = s[s != 0]
    for t in (0.0, 0.5, -0.5):
        v = line_l2_ratio(t, s, P)
        assert np.all(np.isfinite(v))
