"""Inferred-variance (Reid) and DGCZ entanglement criteria on a quadrature covariance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectra import QuadCovariance, correlation_coefficients

__all__ = ["EntanglementReport", "reid_product", "dgcz_sum", "classify",
           "REID_THRESHOLD", "DGCZ_THRESHOLD"]

REID_THRESHOLD = 1.0
DGCZ_THRESHOLD = 4.0


def _matrix(cov) -> np.ndarray:
    return cov.V if isinstance(cov, QuadCovariance) else np.asarray(cov, dtype=float)


def reid_product(cov):
    """Product of the minimal inferred variances of beam 2 given beam 1.

    The inferred quantities are ``Y2_0 - eta0 * Y1_0`` and
    ``Y2_pi/2 + eta_pi2 * Y1_pi/2``; each is a quadratic in its gain, minimized
    in closed form.

    Returns:
        tuple: ``(product, eta0, eta_pi2)``
    """
    V = _matrix(cov)
    eta0 = V[0, 2] / V[0, 0]
    eta_pi2 = -V[1, 3] / V[1, 1]
    inf_amp = V[2, 2] - V[0, 2] ** 2 / V[0, 0]
    inf_phase = V[3, 3] - V[1, 3] ** 2 / V[1, 1]
    return float(inf_amp * inf_phase), float(eta0), float(eta_pi2)


def dgcz_sum(cov):
    """Minimum of var(x1 + sx x2) + var(p1 + sp p2) over the EPR sign pairs sx = -sp.

    Returns:
        tuple: ``(sum, (sx, sp))``
    """
    V = _matrix(cov)
    best = None
    for sx, sp in ((1, -1), (-1, 1)):
        total = V[0, 0] + V[2, 2] + 2 * sx * V[0, 2] + V[1, 1] + V[3, 3] + 2 * sp * V[1, 3]
        if best is None or total < best[0]:
            best = (float(total), (sx, sp))
    return best


@dataclass(frozen=True)
class EntanglementReport:
    omega: float
    C_amp: float
    C_phase: float
    reid_product: float
    eta0: float
    eta_pi2: float
    dgcz_sum: float
    dgcz_signs: tuple
    entangled_reid: bool
    entangled_dgcz: bool

    @property
    def reid_depth(self) -> float:
        return 1.0 - self.reid_product / REID_THRESHOLD

    @property
    def dgcz_depth(self) -> float:
        return 1.0 - self.dgcz_sum / DGCZ_THRESHOLD

    def as_dict(self) -> dict:
        return {
            "omega": self.omega,
            "C_amp": self.C_amp,
            "C_phase": self.C_phase,
            "reid_product": self.reid_product,
            "eta0": self.eta0,
            "eta_pi2": self.eta_pi2,
            "dgcz_sum": self.dgcz_sum,
            "dgcz_signs": list(self.dgcz_signs),
            "entangled_reid": self.entangled_reid,
            "entangled_dgcz": self.entangled_dgcz,
            "reid_depth": self.reid_depth,
            "dgcz_depth": self.dgcz_depth,
        }


def classify(cov: QuadCovariance) -> EntanglementReport:
    c_amp, c_phase = correlation_coefficients(cov)
    prod, eta0, eta_pi2 = reid_product(cov)
    total, signs = dgcz_sum(cov)
    return EntanglementReport(
        omega=cov.omega,
        C_amp=c_amp,
        C_phase=c_phase,
        reid_product=prod,
        eta0=eta0,
        eta_pi2=eta_pi2,
        dgcz_sum=total,
        dgcz_signs=signs,
        entangled_reid=prod < REID_THRESHOLD,
        entangled_dgcz=total < DGCZ_THRESHOLD,
    )
