"""Pseudo-arclength continuation of the mean-field steady state in drive strength.

Both input amplitudes are multiplied by a common real factor ``scale``; the
branch is traced in the Hermitian (real) coordinates of the operator vector,
where folds of the S-shaped response are ordinary regular points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .model import (
    HERMITIAN_T,
    HERMITIAN_T_INV,
    ConvergenceError,
    ModelError,
    NumericalBlowupError,
    PhysicalParams,
    SteadyState,
    _to_state,
    newton,
    operator_drift,
    operator_jacobian,
    operator_vector_to_state,
    residual_norm,
    residual_tolerance,
    state_to_operator_vector,
    undriven_state,
)

__all__ = ["BranchLostError", "BranchSample", "BistabilityBranch", "continuation_sweep",
           "trace_branch", "FOLD_THRESHOLD"]

# Relative smallest singular value (sigma_min / sigma_max) that marks a fold.
FOLD_THRESHOLD = 1e-6


class BranchLostError(ModelError):
    pass


@dataclass(frozen=True)
class BranchSample:
    scale: float
    drive: float
    state: SteadyState
    stable: bool
    sigma_min: float
    turning_point: bool = False


@dataclass
class BistabilityBranch:
    params: PhysicalParams
    samples: list = field(default_factory=list)
    turning_points: list = field(default_factory=list)

    @property
    def drives(self) -> np.ndarray:
        return np.array([s.drive for s in self.samples])

    @property
    def scales(self) -> np.ndarray:
        return np.array([s.scale for s in self.samples])

    def field_moduli(self) -> np.ndarray:
        return np.array([[abs(s.state.alpha1), abs(s.state.alpha2)] for s in self.samples])


class _System:
    """Real continuation system F(y, scale) = 0 with weighted coordinates z = (y / w, scale)."""

    def __init__(self, params: PhysicalParams):
        self.params = params
        p = params
        dfds = np.zeros(12, dtype=complex)
        dfds[0] = math.sqrt(p.gamma1) * p.alpha1_in
        dfds[1] = math.sqrt(p.gamma1) * np.conj(p.alpha1_in)
        dfds[2] = math.sqrt(p.gamma2) * p.alpha2_in
        dfds[3] = math.sqrt(p.gamma2) * np.conj(p.alpha2_in)
        self.dF_ds = (HERMITIAN_T @ dfds).real / p.rate_scale
        a0 = max(2 * abs(p.alpha1_in) / math.sqrt(p.gamma1), 2 * abs(p.alpha2_in) / math.sqrt(p.gamma2))
        w = np.ones(12)
        w[:4] = max(1.0, 2.0 * a0)
        self.w = w

    def unpack(self, z):
        return z[:12] * self.w, z[12]

    def pack(self, y, s):
        return np.concatenate([y / self.w, [s]])

    def evaluate(self, z):
        y, s = self.unpack(z)
        x = HERMITIAN_T_INV @ y
        p = self.params.scaled_drive(s)
        F = (HERMITIAN_T @ operator_drift(p, x)).real / self.params.rate_scale
        Jy = (HERMITIAN_T @ operator_jacobian(p, x) @ HERMITIAN_T_INV).real / self.params.rate_scale
        Jz = np.hstack([Jy * self.w[None, :], self.dF_ds[:, None]])
        return F, Jz, Jy

    def state_vec(self, z):
        y, _ = self.unpack(z)
        return operator_vector_to_state(HERMITIAN_T_INV @ y)

    def converged(self, z):
        y, s = self.unpack(z)
        vec = self.state_vec(z)
        p = self.params.scaled_drive(s)
        return residual_norm(p, vec) <= residual_tolerance(p, vec)


def _tangent(Jz, previous=None):
    _, _, vh = np.linalg.svd(Jz)
    t = vh[-1]
    if previous is None:
        if t[-1] < 0:
            t = -t
    elif np.dot(t, previous) < 0:
        t = -t
    return t


def _correct(system, z_pred, t, max_iter=25):
    z = z_pred.copy()
    for _ in range(max_iter):
        try:
            F, Jz, _ = system.evaluate(z)
        except NumericalBlowupError:
            return None
        if system.converged(z):
            return z
        g = np.concatenate([F, [np.dot(t, z - z_pred)]])
        M = np.vstack([Jz, t[None, :]])
        try:
            dz = np.linalg.solve(M, -g)
        except np.linalg.LinAlgError:
            return None
        z = z + dz
        if not np.all(np.isfinite(z)):
            return None
    return z if system.converged(z) else None


def _sample(system, z, turning=False) -> BranchSample:
    from .linearization import check_stability

    y, s = system.unpack(z)
    p = system.params.scaled_drive(s)
    vec = system.state_vec(z)
    state = _to_state(p, vec, residual_norm(p, vec), 0)
    J = operator_jacobian(p, state_to_operator_vector(state))
    stable, _ = check_stability(-J)
    _, _, Jy = system.evaluate(z)
    sv = np.linalg.svd(Jy, compute_uv=False)
    drive = s * max(abs(system.params.alpha1_in), abs(system.params.alpha2_in))
    return BranchSample(scale=float(s), drive=float(drive), state=state, stable=bool(stable),
                        sigma_min=float(sv[-1] / sv[0]), turning_point=turning)


def _refine_fold(system, z0, t0, ds, tol=1e-13, max_iter=80):
    """Bisect the step length from ``z0`` until the tangent's scale component vanishes."""
    lo, hi = 0.0, ds
    best = None
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        z = _correct(system, z0 + mid * t0, t0)
        if z is None:
            hi = mid
            continue
        _, Jz, _ = system.evaluate(z)
        t = _tangent(Jz, t0)
        best = (z, t)
        if abs(t[-1]) < tol:
            break
        if t[-1] * t0[-1] > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * max(1.0, ds):
            break
    return best


def trace_branch(params: PhysicalParams, stop_scale: float, start_scale: float = 0.0,
                 ds: float = 0.05, ds_min: float = 1e-9, max_steps: int = 20000,
                 record_from: float | None = None, refine_folds: bool = True):
    """Follow the branch from the undriven state until ``scale`` first reaches ``stop_scale``.

    Returns ``(samples, z_before, z_after, system)`` where ``z_before``/``z_after``
    bracket the first crossing of ``stop_scale``.
    """
    system = _System(params)
    if start_scale != 0.0:
        raise ValueError("continuation always starts from the undriven state")
    z = system.pack((HERMITIAN_T @ state_to_operator_vector(undriven_state())).real, 0.0)
    _, Jz, _ = system.evaluate(z)
    t = _tangent(Jz)
    ds_max = ds
    samples = []
    if record_from is not None and record_from <= 0.0:
        samples.append(_sample(system, z))
    for _ in range(max_steps):
        z_new = _correct(system, z + ds * t, t)
        if z_new is None or np.linalg.norm(z_new - z) > 2.0 * ds:
            ds *= 0.5
            if ds < ds_min:
                raise BranchLostError(f"branch lost at scale {z[-1]:.6g}")
            continue
        _, Jz, _ = system.evaluate(z_new)
        t_new = _tangent(Jz, t)
        fold = refine_folds and t_new[-1] * t[-1] < 0
        if fold:
            ref = _refine_fold(system, z, t, ds)
            if ref is not None and record_from is not None and ref[0][-1] >= record_from:
                samples.append(_sample(system, ref[0], turning=True))
        crossed = z_new[-1] >= stop_scale
        if record_from is not None and z_new[-1] >= record_from and not crossed:
            samples.append(_sample(system, z_new))
        if crossed:
            return samples, z, z_new, system
        z, t = z_new, t_new
        ds = min(ds * 1.5, ds_max)
    raise BranchLostError("maximum number of continuation steps reached")


def _land_on(system, z_before, z_after, target):
    """Newton solve at exactly ``scale = target`` starting from the interpolated bracket."""
    frac = (target - z_before[-1]) / (z_after[-1] - z_before[-1])
    z = z_before + frac * (z_after - z_before)
    p = system.params.scaled_drive(target)
    vec, res, it = newton(p, system.state_vec(z))
    return p, vec, res, it


def ramp_to_full_drive(params: PhysicalParams) -> SteadyState:
    """Steady state reached by raising the drive from zero (first crossing of scale 1)."""
    try:
        _, zb, za, system = trace_branch(params, stop_scale=1.0, refine_folds=False)
    except BranchLostError as exc:
        raise ConvergenceError(f"no convergence: {exc}") from exc
    p, vec, res, it = _land_on(system, zb, za, 1.0)
    return _to_state(params, vec, res, it)


def continuation_sweep(params: PhysicalParams, drive_range, n_steps: int = 50) -> BistabilityBranch:
    """Trace the steady state over ``drive_range = (lo, hi)`` in units of the base drive.

    The returned branch starts at the first crossing of ``lo`` and ends at the
    first crossing of ``hi``, including unstable segments; folds are refined
    and flagged as turning points.
    """
    lo, hi = float(drive_range[0]), float(drive_range[1])
    if not (0.0 <= lo < hi):
        raise ValueError("drive range must be non-negative and increasing")
    if n_steps < 2:
        raise ValueError("n_steps must be at least 2")
    ds = (hi - lo) / (n_steps - 1)
    samples, zb, za, system = trace_branch(params, stop_scale=hi, ds=ds, record_from=lo)
    p, vec, res, it = _land_on(system, zb, za, hi)
    end = _sample(system, system.pack((HERMITIAN_T @ state_to_operator_vector(vec)).real, hi))
    samples.append(end)
    branch = BistabilityBranch(params=params, samples=samples)
    branch.turning_points = [k for k, s in enumerate(samples) if s.turning_point]
    return branch
