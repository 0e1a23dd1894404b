import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eit_entanglement.criteria import DGCZ_THRESHOLD, REID_THRESHOLD, classify, dgcz_sum, reid_product
from eit_entanglement.spectra import QuadCovariance, uncertainty_eigenvalues


def tmsv(r: float) -> np.ndarray:
    c, s = math.cosh(2 * r), math.sinh(2 * r)
    return np.array([[c, 0, s, 0], [0, c, 0, -s], [s, 0, c, 0], [0, -s, 0, c]])


def random_single_mode(rng) -> np.ndarray:
    """Physical single-mode covariance: rotated squeezed thermal state."""
    r, th, nth = rng.uniform(0, 1.5), rng.uniform(0, math.pi), rng.uniform(1, 3)
    R = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    return nth * R @ np.diag([math.exp(-2 * r), math.exp(2 * r)]) @ R.T


def random_separable(rng) -> np.ndarray:
    """Product of physical single-mode states plus classical (positive) correlation noise."""
    V = np.zeros((4, 4))
    V[:2, :2] = random_single_mode(rng)
    V[2:, 2:] = random_single_mode(rng)
    M = rng.normal(size=(4, rng.integers(1, 5))) * rng.uniform(0, 2)
    return V + M @ M.T


def test_identity_boundary():
    rep = classify(QuadCovariance(0.0, np.eye(4)))
    assert rep.reid_product == 1.0 and rep.eta0 == 0.0 and rep.eta_pi2 == 0.0
    assert rep.dgcz_sum == 4.0
    assert not rep.entangled_reid and not rep.entangled_dgcz
    assert rep.reid_depth == 0.0 and rep.dgcz_depth == 0.0
    assert (rep.C_amp, rep.C_phase) == (0.0, 0.0)


@pytest.mark.parametrize("r", [0.05, 0.3, 0.8, 1.5])
def test_two_mode_squeezed_closed_forms(r):
    V = tmsv(r)
    prod, eta0, eta_pi2 = reid_product(V)
    assert prod == pytest.approx(1 / math.cosh(2 * r) ** 2, rel=1e-12)
    assert eta0 == pytest.approx(math.tanh(2 * r)) and eta_pi2 == pytest.approx(math.tanh(2 * r))
    total, signs = dgcz_sum(V)
    assert total == pytest.approx(4 * math.exp(-2 * r), rel=1e-12)
    assert signs == (-1, 1)
    # mirrored correlations pick the other EPR pair
    Vm = V.copy()
    Vm[[0, 2], [2, 0]] *= -1
    Vm[[1, 3], [3, 1]] *= -1
    assert dgcz_sum(Vm) == (pytest.approx(total), (1, -1))


def test_tmsv_dgcz_by_direct_expansion():
    V = tmsv(0.4)
    u = np.array([1, 0, -1, 0])
    v = np.array([0, 1, 0, 1])
    assert dgcz_sum(V)[0] == pytest.approx(u @ V @ u + v @ V @ v, rel=1e-14)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_closed_form_gains_beat_grid(seed):
    rng = np.random.default_rng(seed)
    V = random_separable(rng) if rng.random() < 0.5 else tmsv(rng.uniform(0, 1.2))
    prod, eta0, eta_pi2 = reid_product(V)
    grid = np.linspace(-3, 3, 1201)
    amp = V[2, 2] - 2 * grid * V[0, 2] + grid ** 2 * V[0, 0]
    phase = V[3, 3] + 2 * grid * V[1, 3] + grid ** 2 * V[1, 1]
    best_amp = V[2, 2] - 2 * eta0 * V[0, 2] + eta0 ** 2 * V[0, 0]
    best_phase = V[3, 3] + 2 * eta_pi2 * V[1, 3] + eta_pi2 ** 2 * V[1, 1]
    assert best_amp <= amp.min() + 1e-12 * abs(amp.min())
    assert best_phase <= phase.min() + 1e-12 * abs(phase.min())
    assert prod == pytest.approx(best_amp * best_phase, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.floats(1e-3, 10.0))
def test_added_noise_never_helps(seed, c):
    rng = np.random.default_rng(seed)
    V = tmsv(rng.uniform(0, 1.5)) if rng.random() < 0.5 else random_separable(rng)
    assert reid_product(V + c * np.eye(4))[0] >= reid_product(V)[0]
    assert dgcz_sum(V + c * np.eye(4))[0] >= dgcz_sum(V)[0]


def test_separable_states_never_flagged():
    rng = np.random.default_rng(2024)
    worst_reid, worst_dgcz = math.inf, math.inf
    for _ in range(10_000):
        V = random_separable(rng)
        assert uncertainty_eigenvalues(V).min() >= -1e-9
        worst_reid = min(worst_reid, reid_product(V)[0])
        worst_dgcz = min(worst_dgcz, dgcz_sum(V)[0])
    assert worst_reid >= REID_THRESHOLD - 1e-9
    assert worst_dgcz >= DGCZ_THRESHOLD - 1e-9


def test_verdicts_follow_thresholds():
    for r in (0.0, 0.2):
        rep = classify(QuadCovariance(1.0, tmsv(r)))
        assert rep.entangled_reid == (rep.reid_product < 1)
        assert rep.entangled_dgcz == (rep.dgcz_sum < 4)
        assert rep.dgcz_depth == pytest.approx(1 - rep.dgcz_sum / 4)
    d = rep.as_dict()
    assert d["entangled_reid"] and d["entangled_dgcz"]
    assert set(d) >= {"C_amp", "C_phase", "reid_product", "eta0", "eta_pi2", "dgcz_sum", "dgcz_signs"}
