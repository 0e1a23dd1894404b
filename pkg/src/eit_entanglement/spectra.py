"""Frequency-domain solution of the linear model and detected-field quadrature spectra.

Spectral convention: for operators ``x_mu``, ``S[mu, nu](w)`` is defined by
``<x_mu(w) x_nu(w')> = 2 pi delta(w + w') S[mu, nu](w)`` with
``x(w) = int x(t) exp(i w t) dt``. With shot-noise normalization a coherent
beam has unit quadrature variance (``[x, p] = 2i``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linearization import LinearModel

__all__ = [
    "SpectrumError",
    "QuadCovariance",
    "INPUT_COVARIANCE",
    "QUADRATURE_MAP",
    "SYMPLECTIC_FORM",
    "internal_spectrum",
    "output_spectrum",
    "output_quadratures",
    "correlation_coefficients",
    "squeezing",
    "uncertainty_eigenvalues",
    "swap_beams",
]


class SpectrumError(RuntimeError):
    pass


# <dA_in(t) dA_in+(t')> = delta(t - t') for each coherent input, all else zero.
INPUT_COVARIANCE = np.zeros((4, 4), dtype=complex)
INPUT_COVARIANCE[0, 1] = INPUT_COVARIANCE[2, 3] = 1.0

# (A1, A1+, A2, A2+) -> (Y1_0, Y1_pi/2, Y2_0, Y2_pi/2), Y_phi = A e^{-i phi} + A+ e^{i phi}
QUADRATURE_MAP = np.array(
    [
        [1, 1, 0, 0],
        [-1j, 1j, 0, 0],
        [0, 0, 1, 1],
        [0, 0, -1j, 1j],
    ],
    dtype=complex,
)

SYMPLECTIC_FORM = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True)
class QuadCovariance:
    """Symmetrized covariance over (Y1_0, Y1_pi/2, Y2_0, Y2_pi/2) at one analysis frequency."""

    omega: float
    V: np.ndarray
    shot_noise_normalized: bool = True

    def __post_init__(self):
        V = np.array(self.V, dtype=float)
        if V.shape != (4, 4):
            raise ValueError("covariance must be 4x4")
        if not np.allclose(V, V.T, rtol=0, atol=1e-12 * max(1.0, np.max(np.abs(V)))):
            raise ValueError("covariance must be symmetric")
        V = 0.5 * (V + V.T)
        if np.any(np.diag(V) <= 0):
            raise ValueError("variances must be positive")
        object.__setattr__(self, "V", V)

    def __getitem__(self, idx):
        return self.V[idx]


def _resolvent(A: np.ndarray, omega: float) -> np.ndarray:
    M = A - 1j * omega * np.eye(A.shape[0])
    try:
        R = np.linalg.inv(M)
    except np.linalg.LinAlgError as exc:
        raise SpectrumError("resonant singularity") from exc
    if not np.all(np.isfinite(R)):
        raise SpectrumError("resonant singularity")
    return R


def _require_stable(model: LinearModel) -> None:
    if not model.stable:
        raise SpectrumError("spectra are undefined for an unstable operating point")
    if model.D is None:
        raise SpectrumError("linear model has no diffusion matrix")


def internal_spectrum(model: LinearModel, omega: float) -> np.ndarray:
    """12x12 spectral matrix of the internal fluctuations at ``omega``."""
    _require_stable(model)
    Q = model.B @ INPUT_COVARIANCE @ model.B.T + model.D
    return _resolvent(model.A, omega) @ Q @ _resolvent(model.A, -omega).T


def _field_selector(model: LinearModel) -> np.ndarray:
    C = np.zeros((4, 12))
    C[np.arange(4), np.arange(4)] = np.sqrt(model.field_rates)
    return C


def output_spectrum(model: LinearModel, omega: float) -> np.ndarray:
    """4x4 spectral matrix of (dA1out, dA1out+, dA2out, dA2out+).

    Uses ``dA_out = dA_in - sqrt(gamma) dA`` on the same linear solve, so the
    input/internal cross terms are kept exactly.
    """
    _require_stable(model)
    C = _field_selector(model)

    def transfer(w):
        R = _resolvent(model.A, w)
        return np.eye(4) - C @ R @ model.B, -C @ R

    Tin_p, TF_p = transfer(omega)
    Tin_m, TF_m = transfer(-omega)
    return Tin_p @ INPUT_COVARIANCE @ Tin_m.T + TF_p @ model.D @ TF_m.T


def output_quadratures(model: LinearModel, omega: float | None = None) -> QuadCovariance:
    """Shot-noise-normalized symmetrized quadrature covariance of the detected beams."""
    if omega is None:
        omega = model.params.Omega_analysis

    def symmetrized(w):
        SY_p = QUADRATURE_MAP @ output_spectrum(model, w) @ QUADRATURE_MAP.T
        SY_m = QUADRATURE_MAP @ output_spectrum(model, -w) @ QUADRATURE_MAP.T
        return 0.5 * (SY_p + SY_m.T)

    V = 0.5 * (symmetrized(omega) + symmetrized(-omega))
    return QuadCovariance(omega=float(omega), V=V.real)


def correlation_coefficients(cov: QuadCovariance):
    """(C_amp, C_phase): normalized amplitude-amplitude and phase-phase covariances."""
    V = cov.V if isinstance(cov, QuadCovariance) else np.asarray(cov)
    if V[0, 0] <= 0 or V[1, 1] <= 0 or V[2, 2] <= 0 or V[3, 3] <= 0:
        raise ValueError("zero variance")
    c_amp = V[0, 2] / np.sqrt(V[0, 0] * V[2, 2])
    c_phase = V[1, 3] / np.sqrt(V[1, 1] * V[3, 3])
    return float(c_amp), float(c_phase)


def squeezing(cov: QuadCovariance) -> dict:
    """Per-beam minimum and maximum quadrature variance over all quadrature angles."""
    V = cov.V
    out = {}
    for beam, sl in ((1, slice(0, 2)), (2, slice(2, 4))):
        ev = np.linalg.eigvalsh(V[sl, sl])
        out[beam] = (float(ev[0]), float(ev[1]))
    return out


def uncertainty_eigenvalues(cov: QuadCovariance) -> np.ndarray:
    """Eigenvalues of the Hermitian matrix V + i*Sigma (all >= 0 for a physical state)."""
    V = cov.V if isinstance(cov, QuadCovariance) else np.asarray(cov, dtype=float)
    return np.linalg.eigvalsh(V + 1j * SYMPLECTIC_FORM)


def swap_beams(cov: QuadCovariance) -> QuadCovariance:
    perm = [2, 3, 0, 1]
    return QuadCovariance(cov.omega, cov.V[np.ix_(perm, perm)], cov.shot_noise_normalized)
