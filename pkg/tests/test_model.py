import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from eit_entanglement.model import (
    ConvergenceError,
    NumericalBlowupError,
    PhysicalParams,
    SteadyState,
    drive_from_intensity,
    semiclassical_drift,
    solve_steady_state,
    swap_labels,
)

from conftest import GAMMA, random_state


@pytest.fixture
def asym_params():
    return PhysicalParams(Gamma1=0.6 * GAMMA, Gamma2=0.4 * GAMMA, gamma12=0.01 * GAMMA,
                          gamma1=0.5 * GAMMA, gamma2=0.8 * GAMMA, g1=1.3 * GAMMA, g2=0.7 * GAMMA,
                          deltaL1=0.2 * GAMMA, deltaL2=-0.3 * GAMMA,
                          alpha1_in=300 + 40j, alpha2_in=-150 + 220j)


def test_field_row_contract(asym_params):
    p = asym_params
    v = random_state(np.random.default_rng(1))
    f = semiclassical_drift(p, v)
    expect = -0.5 * p.gamma1 * v[0] - 1j * p.g1 * v[2] + math.sqrt(p.gamma1) * p.alpha1_in
    assert f[0] == pytest.approx(expect, rel=1e-14)
    expect2 = -0.5 * p.gamma2 * v[1] - 1j * p.g2 * v[3] + math.sqrt(p.gamma2) * p.alpha2_in
    assert f[1] == pytest.approx(expect2, rel=1e-14)


def test_coherence_row_contract(asym_params):
    p = asym_params
    a1, a2, s1, s2, s12, p0, p1, p2 = v = random_state(np.random.default_rng(2))
    f = semiclassical_drift(p, v)
    w1, w2 = p0 - p1, p0 - p2
    ds1 = -(p.Gamma / 2 - 1j * p.deltaL1) * s1 + 1j * p.g1 * w1 * a1 - 1j * p.g2 * np.conj(s12) * a2
    ds2 = -(p.Gamma / 2 - 1j * p.deltaL2) * s2 + 1j * p.g2 * w2 * a2 - 1j * p.g1 * s12 * a1
    assert f[2] == pytest.approx(ds1, rel=1e-14)
    assert f[3] == pytest.approx(ds2, rel=1e-14)


def test_ground_coherence_row(asym_params):
    p = asym_params
    a1, a2, s1, s2, s12, *_ = v = random_state(np.random.default_rng(3))
    f = semiclassical_drift(p, v)
    decay = p.gamma12 - 1j * (p.deltaL2 - p.deltaL1)
    expect = -decay * s12 - 1j * p.g1 * np.conj(a1) * s2 + 1j * p.g2 * a2 * np.conj(s1)
    assert f[4] == pytest.approx(expect, rel=1e-14)


@pytest.mark.parametrize("alpha_in", [0.0, 12.5, 3e3])
def test_decoupled_limit(alpha_in):
    p = PhysicalParams(g1=0.0, g2=0.0, alpha1_in=alpha_in, alpha2_in=2 * alpha_in)
    v = random_state(np.random.default_rng(4))
    f = semiclassical_drift(p, v)
    assert f[0] == pytest.approx(-0.5 * p.gamma1 * v[0] + math.sqrt(p.gamma1) * alpha_in, abs=1e-9)
    # atomic rows do not see the fields
    v2 = v.copy()
    v2[:2] = [7.0 + 1j, -3.0]
    np.testing.assert_allclose(semiclassical_drift(p, v2)[2:], f[2:], rtol=0, atol=1e-12 * GAMMA)


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_population_closure(seed):
    rng = np.random.default_rng(seed)
    p = PhysicalParams(g1=rng.uniform(0, 5) * GAMMA, g2=rng.uniform(0, 5) * GAMMA,
                       gamma12=rng.uniform(0, 0.1) * GAMMA, deltaL1=rng.normal() * GAMMA,
                       deltaL2=rng.normal() * GAMMA, alpha1_in=rng.normal() * 500,
                       alpha2_in=rng.normal() * 500 * 1j)
    f = semiclassical_drift(p, random_state(rng))
    assert abs(f[5] + f[6] + f[7]) <= 1e-12 * GAMMA


def test_nonfinite_state_raises():
    with pytest.raises(NumericalBlowupError, match="numerical blowup"):
        semiclassical_drift(PhysicalParams(), [np.nan, 0, 0, 0, 0, 0, 0.5, 0.5])


@pytest.mark.parametrize("bad", [dict(Gamma1=0.0), dict(gamma1=-1.0), dict(gamma12=-1.0),
                                 dict(deltaL1=math.inf), dict(alpha1_in=complex(math.nan, 0))])
def test_invalid_params(bad):
    with pytest.raises(ValueError):
        PhysicalParams(**bad)


def test_undriven_solution():
    ss = solve_steady_state(PhysicalParams())
    assert ss.converged
    assert ss.as_vector()[:5] == pytest.approx(np.zeros(5))
    assert ss.p0 == 0.0
    assert ss.p1 == pytest.approx(0.5) and ss.p2 == pytest.approx(0.5)


def _check_invariants(ss: SteadyState, params):
    assert ss.p0 + ss.p1 + ss.p2 == pytest.approx(1.0, abs=1e-10)
    for pop in (ss.p0, ss.p1, ss.p2):
        assert -1e-10 <= pop <= 1 + 1e-10
    assert abs(ss.s12) ** 2 <= ss.p1 * ss.p2 + 1e-9
    res = float(np.max(np.abs(semiclassical_drift(params, ss))))
    assert res == pytest.approx(ss.residual, rel=1e-6, abs=1e-30)
    assert res <= 1e-10 * params.rate_scale * max(1.0, abs(ss.alpha1), abs(ss.alpha2))


def test_default_eit_state(default_config):
    p = default_config.params
    ss = solve_steady_state(p)
    _check_invariants(ss, p)
    # dark-state character
    assert abs(ss.s12) > 0.45
    assert ss.p0 < 2e-3


def test_default_state_matches_long_time_integration(default_config):
    p = default_config.params
    ss = solve_steady_state(p)

    def rhs(t, y):
        v = y[:8] + 1j * y[8:]
        f = semiclassical_drift(p, v)
        return np.concatenate([f.real, f.imag])

    start = np.array([0, 0, 0, 0, 0, 0, 0.5, 0.5], dtype=complex)
    sol = solve_ivp(rhs, (0, 1e-3), np.concatenate([start.real, start.imag]), method="LSODA",
                    rtol=1e-10, atol=1e-13)
    end = sol.y[:8, -1] + 1j * sol.y[8:, -1]
    np.testing.assert_allclose(end, ss.as_vector(), rtol=0, atol=1e-7)


def test_symmetric_drive_is_exchange_symmetric(default_config):
    ss = solve_steady_state(default_config.params)
    assert ss.alpha1 == pytest.approx(ss.alpha2, rel=1e-9)
    assert ss.s1 == pytest.approx(ss.s2, rel=1e-8)
    assert ss.p1 == pytest.approx(ss.p2, rel=1e-9)


def test_label_swap_maps_steady_state(asym_params):
    a = solve_steady_state(asym_params)
    b = solve_steady_state(swap_labels(asym_params))
    _check_invariants(a, asym_params)
    assert b.alpha1 == pytest.approx(a.alpha2, rel=1e-8)
    assert b.alpha2 == pytest.approx(a.alpha1, rel=1e-8)
    assert b.s1 == pytest.approx(a.s2, rel=1e-8)
    assert b.s2 == pytest.approx(a.s1, rel=1e-8)
    assert b.s12 == pytest.approx(np.conj(a.s12), rel=1e-8)
    assert (b.p1, b.p2) == pytest.approx((a.p2, a.p1), rel=1e-8)


def test_newton_from_guess_and_failure(default_config):
    p = default_config.params
    ss = solve_steady_state(p)
    again = solve_steady_state(p, guess=ss)
    assert again.iterations == 0
    bad = np.array([1e3, -1e3, 0.4, 0.4j, 0.3, 0.2, 0.4, 0.4])
    with pytest.raises(ConvergenceError, match="no convergence"):
        solve_steady_state(p, guess=bad, max_iter=2)


def test_single_field_drive_allowed():
    ss = solve_steady_state(PhysicalParams(alpha1_in=400.0))
    assert abs(ss.alpha2) < 1e-12
    assert ss.p2 > ss.p1  # optical pumping into the undriven ground state


def test_intensity_mapping():
    g, gam = GAMMA, 2 * math.pi * 1e6
    a_in = drive_from_intensity(2.8, g, gam, GAMMA)
    alpha = 2 * a_in / math.sqrt(gam)
    rabi = GAMMA * math.sqrt(2.8 / (2 * 1.67))
    assert g * alpha == pytest.approx(rabi / 2, rel=1e-14)
