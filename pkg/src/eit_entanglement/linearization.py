"""Linear Langevin model for fluctuations around a mean-field steady state.

Equation form::

    d(dx)/dt = -A dx + B dx_in + F(t),    <F_mu(t) F_nu(t')> = D[mu, nu] delta(t - t')

``dx`` runs over :data:`~eit_entanglement.model.BASIS`; ``dx_in`` is
``(dA1in, dA1in+, dA2in, dA2in+)``. Input fields are coherent states, so
their vacuum noise reaches the system through ``B`` only and the field block
of ``D`` is zero. Atomic forces follow from the generalized Einstein relation
applied to the dissipative part of the atomic dynamics (the Hamiltonian part is
a derivation and drops out).
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .model import (
    BASIS,
    PAIRING,
    PhysicalParams,
    SteadyState,
    operator_jacobian,
    state_to_operator_vector,
)

__all__ = [
    "OperatorBasis",
    "LinearModel",
    "ATOMIC_OPERATORS",
    "atomic_operator",
    "reduce_product",
    "dissipator",
    "einstein_diffusion",
    "build_drift",
    "build_diffusion",
    "build_linear_model",
    "check_stability",
]


@dataclass(frozen=True)
class OperatorBasis:
    labels: tuple = BASIS
    pairing: tuple = tuple(int(k) for k in PAIRING)

    def adjoint(self, k: int) -> int:
        return self.pairing[k]

    @property
    def self_paired(self) -> tuple:
        return tuple(k for k, p in enumerate(self.pairing) if k == p)


BASIS_INFO = OperatorBasis()


def _sigma(i: int, j: int) -> np.ndarray:
    m = np.zeros((3, 3), dtype=complex)
    m[i, j] = 1.0
    return m


# 3x3 matrices of the eight atomic fluctuation operators, keyed by basis index.
ATOMIC_OPERATORS = {
    4: _sigma(1, 0),
    5: _sigma(0, 1),
    6: _sigma(2, 0),
    7: _sigma(0, 2),
    8: _sigma(2, 1),
    9: _sigma(1, 2),
    10: _sigma(0, 0) - _sigma(1, 1),
    11: _sigma(0, 0) - _sigma(2, 2),
}


def atomic_operator(label: str) -> np.ndarray:
    return ATOMIC_OPERATORS[BASIS.index(label)].copy()


def reduce_product(i: int, j: int, k: int, l: int):
    """Closed three-level algebra: s_ij s_kl = delta_jk s_il.

    Returns ``(i, l)`` for a nonzero product and ``None`` otherwise.
    """
    return (i, l) if j == k else None


def dissipator(X: np.ndarray, Gamma1: float, Gamma2: float, gamma12: float) -> np.ndarray:
    """Dissipative part of the Heisenberg-picture atomic generator acting on a 3x3 operator.

    Spontaneous emission |0> -> |1>, |0> -> |2> in Lindblad form, plus
    ground-state relaxation that damps s_21, s_12 at ``gamma12`` and the
    ground population imbalance at ``gamma12``.
    """
    X = np.asarray(X, dtype=complex)
    out = np.zeros((3, 3), dtype=complex)
    for rate, L in ((Gamma1, _sigma(1, 0)), (Gamma2, _sigma(2, 0))):
        if rate == 0.0:
            continue
        Ld = L.conj().T
        LdL = Ld @ L
        out += rate * (Ld @ X @ L - 0.5 * (LdL @ X + X @ LdL))
    if gamma12:
        out[1, 1] += 0.5 * gamma12 * (X[2, 2] - X[1, 1])
        out[2, 2] += 0.5 * gamma12 * (X[1, 1] - X[2, 2])
        out[1, 2] -= gamma12 * X[1, 2]
        out[2, 1] -= gamma12 * X[2, 1]
    return out


def einstein_diffusion(rho: np.ndarray, Gamma1: float, Gamma2: float, gamma12: float,
                       operators=None) -> np.ndarray:
    """Atomic diffusion matrix from the generalized Einstein relation.

    ``D[mu, nu] = <L(X_mu X_nu)> - <L(X_mu) X_nu> - <X_mu L(X_nu)>`` with
    ``<Y> = tr(rho Y)`` and ``L`` the dissipator. ``operators`` is a sequence of
    3x3 matrices (defaults to the eight atomic basis operators in order).
    """
    if operators is None:
        operators = [ATOMIC_OPERATORS[k] for k in range(4, 12)]
    ops = [np.asarray(op, dtype=complex) for op in operators]
    diss = [dissipator(op, Gamma1, Gamma2, gamma12) for op in ops]
    n = len(ops)
    D = np.zeros((n, n), dtype=complex)
    for a in range(n):
        for b in range(n):
            M = dissipator(ops[a] @ ops[b], Gamma1, Gamma2, gamma12) - diss[a] @ ops[b] - ops[a] @ diss[b]
            D[a, b] = np.trace(rho @ M)
    return D


@dataclass(frozen=True)
class LinearModel:
    A: np.ndarray
    B: np.ndarray
    D: np.ndarray | None
    stable: bool
    abscissa: float
    params: PhysicalParams
    steady_state: SteadyState

    @property
    def field_rates(self) -> np.ndarray:
        p = self.params
        return np.array([p.gamma1, p.gamma1, p.gamma2, p.gamma2])

    def with_diffusion(self, D: np.ndarray) -> "LinearModel":
        return LinearModel(self.A, self.B, D, self.stable, self.abscissa, self.params, self.steady_state)


def _require_converged(ss: SteadyState) -> None:
    if not ss.converged:
        raise ValueError("steady state is not converged; refusing to linearize")


def input_coupling(params: PhysicalParams) -> np.ndarray:
    B = np.zeros((12, 4), dtype=complex)
    B[0, 0] = B[1, 1] = math.sqrt(params.gamma1)
    B[2, 2] = B[3, 3] = math.sqrt(params.gamma2)
    return B


def check_stability(A: np.ndarray, margin: float = 1e-12):
    """Return ``(stable, abscissa)`` where abscissa is the smallest real part of eig(A)."""
    ev = np.linalg.eigvals(A)
    if not np.all(np.isfinite(ev)):
        raise np.linalg.LinAlgError("eigenvalue computation failed")
    abscissa = float(np.min(ev.real))
    return abscissa > margin * float(np.max(np.abs(ev))), abscissa


def build_drift(params: PhysicalParams, ss: SteadyState) -> LinearModel:
    """Drift ``A`` (negated Jacobian of the operator drift) and input coupling ``B``."""
    _require_converged(ss)
    x = state_to_operator_vector(ss)
    A = -operator_jacobian(params, x)
    stable, abscissa = check_stability(A)
    return LinearModel(A=A, B=input_coupling(params), D=None, stable=stable,
                       abscissa=abscissa, params=params, steady_state=ss)


def build_diffusion(params: PhysicalParams, ss: SteadyState) -> np.ndarray:
    """12x12 diffusion matrix; nonzero only in the atomic block."""
    _require_converged(ss)
    D = np.zeros((12, 12), dtype=complex)
    D[4:, 4:] = einstein_diffusion(ss.density_matrix(), params.Gamma1, params.Gamma2, params.gamma12)
    return D


def build_linear_model(params: PhysicalParams, ss: SteadyState) -> LinearModel:
    model = build_drift(params, ss)
    return model.with_diffusion(build_diffusion(params, ss))
