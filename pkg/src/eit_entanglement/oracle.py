"""Monte-Carlo cross-check of the quadrature spectra.

The linear Langevin system is integrated with Euler-Maruyama in Hermitian
(real) coordinates, driven by white noise whose covariance is the symmetrized
diffusion matrix. A classical simulation can only reproduce symmetrized
correlations, so this validates the symmetrized spectra. Output-quadrature
records are averaged over short blocks (an integrating detector) and the
covariance at the analysis frequency is estimated from Hann-windowed
cross-periodograms of non-overlapping segments.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy.signal import get_window

from .linearization import LinearModel
from .model import HERMITIAN_T, HERMITIAN_T_INV
from .spectra import QuadCovariance

__all__ = ["OracleError", "Ensemble", "SimRun", "real_system", "noise_factor", "simulate",
           "estimate_covariance", "run_oracle", "resolution_step", "correlation_time"]


class OracleError(RuntimeError):
    pass


_T_IN = HERMITIAN_T[:4, :4]
_T_IN_INV = np.linalg.inv(_T_IN)


def real_system(model: LinearModel):
    """Return ``(A_r, B_r, D_sym)`` of the model in Hermitian coordinates.

    Inputs are the four real input quadratures, each unit-intensity white noise.
    """
    A_r = HERMITIAN_T @ model.A @ HERMITIAN_T_INV
    B_r = HERMITIAN_T @ model.B @ _T_IN_INV
    D_r = HERMITIAN_T @ model.D @ HERMITIAN_T.T
    for name, M in (("drift", A_r), ("input coupling", B_r)):
        if np.max(np.abs(M.imag)) > 1e-9 * max(1.0, np.max(np.abs(M))):
            raise OracleError(f"{name} matrix is not real in Hermitian coordinates")
    D_sym = 0.5 * (D_r + D_r.T)
    return A_r.real, B_r.real, D_sym.real


def noise_factor(D_sym: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """A factor L with L L^T = D_sym, from the eigen-decomposition.

    Negative eigenvalues down to ``-tol * max(|eig|)`` are clipped to zero;
    anything more negative means a broken diffusion matrix.
    """
    ev, vec = np.linalg.eigh(0.5 * (D_sym + D_sym.T))
    scale = max(float(np.max(np.abs(ev))), np.finfo(float).tiny)
    if ev.min() < -tol * scale:
        raise OracleError(f"symmetrized diffusion matrix is not positive semidefinite "
                          f"(min eigenvalue {ev.min():.3e}, scale {scale:.3e})")
    return vec * np.sqrt(np.clip(ev, 0.0, None))[None, :]


def resolution_step(model: LinearModel, factor: float = 0.05) -> float:
    return factor / float(np.max(np.abs(np.linalg.eigvals(model.A))))


def correlation_time(model: LinearModel) -> float:
    return 1.0 / model.abscissa


@dataclass
class Ensemble:
    """Block-averaged output quadrature records, shape ``(n_traj, 4, n_samples)``."""

    records: np.ndarray
    sample_dt: float
    dt: float
    seed: int


@dataclass
class SimRun:
    model: LinearModel
    dt: float
    T: float
    seed: int
    n_traj: int
    ensemble: Ensemble
    estimates: dict

    def estimate(self, omega):
        return self.estimates[omega]


def simulate(model: LinearModel, dt: float, T: float, seed: int, n_traj: int = 32,
             burn_in: float | None = None, block: int | None = None,
             omega_max: float | None = None, chunk: int = 4096,
             noise_scale: float = 1.0) -> Ensemble:
    """Euler-Maruyama ensemble of the output quadratures (Y1_0, Y1_pi/2, Y2_0, Y2_pi/2).

    ``T`` is the recorded duration per trajectory (after ``burn_in``, which
    defaults to ten correlation times). Noise for trajectory ``j`` comes from
    the ``j``-th child of ``SeedSequence(seed)``, so results are reproducible
    bit for bit. ``block`` samples are averaged per record entry; by default it
    is the largest block keeping ``omega_max * block * dt <= 0.05``.
    ``noise_scale = 0`` switches off all noise.
    """
    if not model.stable:
        raise OracleError("cannot simulate an unstable model")
    if dt > resolution_step(model) * (1 + 1e-12):
        raise OracleError("time step too coarse for the fastest eigenvalue")
    A_r, B_r, D_sym = real_system(model)
    L = noise_factor(D_sym)
    G = np.hstack([B_r, L])  # 12 x 16
    rates = np.sqrt(model.field_rates)
    if burn_in is None:
        burn_in = 10.0 * correlation_time(model)
    if block is None:
        om = omega_max if omega_max is not None else 2.0 * model.params.Omega_analysis
        block = max(1, int(0.05 / (abs(om) * dt))) if om else 1
    n_burn = int(math.ceil(burn_in / dt))
    n_rec = int(math.ceil(T / dt / block)) * block
    n_total = n_burn + n_rec

    M = np.eye(12) - A_r * dt
    children = np.random.SeedSequence(seed).spawn(n_traj)
    rngs = [np.random.default_rng(c) for c in children]
    sq = math.sqrt(dt) * noise_scale
    y = np.zeros((12, n_traj))
    records = np.empty((n_traj, 4, n_rec // block))
    norm_limit = None
    step = 0
    out_pos = 0
    while step < n_total:
        n = min(chunk, n_total - step)
        if step < n_burn:
            n = min(n, n_burn - step)
        else:
            n = (n // block) * block or block
        dW = np.stack([r.standard_normal((n, 16)) for r in rngs], axis=-1) * sq  # (n, 16, traj)
        kicks = np.einsum("ij,njt->nit", G, dW)
        ys = np.empty((n + 1, 12, n_traj))
        ys[0] = y
        for k in range(n):
            ys[k + 1] = M @ ys[k] + kicks[k]
        y = ys[-1]
        if not np.all(np.isfinite(y)):
            raise OracleError("trajectory diverged (non-finite state)")
        nrm = float(np.max(np.abs(y)))
        if norm_limit is None and step + n >= min(n_burn, n_total) and nrm > 0:
            norm_limit = 1e6 * nrm
        elif norm_limit is not None and nrm > norm_limit:
            raise OracleError("trajectory norm growth: integration unstable")
        if step >= n_burn:
            mid = 0.5 * (ys[:-1, :4] + ys[1:, :4])  # (n, 4, traj)
            out = dW[:, :4, :] / dt - rates[None, :, None] * mid
            nb = n // block
            blocks = out.reshape(nb, block, 4, n_traj).mean(axis=1)  # (nb, 4, traj)
            records[:, :, out_pos:out_pos + nb] = np.transpose(blocks, (2, 1, 0))
            out_pos += nb
        step += n
    return Ensemble(records=records[:, :, :out_pos], sample_dt=dt * block, dt=dt, seed=seed)


def estimate_covariance(ensemble: Ensemble, omega: float, segment_length: int | None = None,
                        window: str = "hann", min_segments: int = 16):
    """Welch estimate of the symmetrized quadrature covariance at ``omega``.

    Returns ``(QuadCovariance, standard_errors, n_segments)``; standard errors
    come from the scatter of the per-segment cross-periodograms.
    """
    rec = ensemble.records
    n_traj, _, n = rec.shape
    if segment_length is None:
        segment_length = max(16, int(round(48.0 * math.pi / (abs(omega) * ensemble.sample_dt))))
    L = int(segment_length)
    per_traj = n // L
    n_seg = per_traj * n_traj
    if per_traj == 0 or n_seg < min_segments:
        raise OracleError(f"insufficient segments ({n_seg} < {min_segments})")
    w = get_window(window, L)
    phase = np.exp(1j * omega * ensemble.sample_dt * np.arange(L))
    segs = rec[:, :, : per_traj * L].reshape(n_traj, 4, per_traj, L)
    segs = segs - segs.mean(axis=-1, keepdims=True)
    X = np.einsum("tasl,l->tsa", segs, w * phase).reshape(n_seg, 4)
    norm = ensemble.sample_dt / np.sum(w ** 2)
    P = np.real(X[:, :, None] * np.conj(X[:, None, :])) * norm  # (n_seg, 4, 4)
    V = P.mean(axis=0)
    se = P.std(axis=0, ddof=1) / math.sqrt(n_seg)
    return QuadCovariance(omega=float(omega), V=0.5 * (V + V.T)), 0.5 * (se + se.T), n_seg


def run_oracle(model: LinearModel, omegas, seed: int = 0, n_traj: int = 32,
               n_steps: int = 400_000, dt: float | None = None, T: float | None = None) -> SimRun:
    """Simulate once and estimate the covariance at every frequency in ``omegas``."""
    omegas = [float(o) for o in np.atleast_1d(omegas)]
    if dt is None:
        dt = resolution_step(model)
    if T is None:
        T = max(n_steps * dt, 50.0 * correlation_time(model))
    ens = simulate(model, dt, T, seed, n_traj=n_traj, omega_max=max(abs(o) for o in omegas))
    estimates = {om: estimate_covariance(ens, om) for om in omegas}
    return SimRun(model=model, dt=dt, T=T, seed=seed, n_traj=n_traj, ensemble=ens, estimates=estimates)
