"""Quantum correlations and entanglement of pump and probe beams in a Lambda medium under EIT.

Pipeline: ``model`` (mean-field steady state) -> ``linearization`` (drift and
diffusion of the fluctuations) -> ``spectra`` (output quadrature covariance)
-> ``criteria`` (Reid and DGCZ tests). ``oracle`` is a Monte-Carlo cross-check
and ``cli`` the command-line front end.
"""

from .model import PhysicalParams, SteadyState, solve_steady_state, drive_from_intensity
from .bistability import BistabilityBranch, continuation_sweep
from .linearization import LinearModel, build_linear_model, check_stability
from .spectra import QuadCovariance, output_quadratures, correlation_coefficients
from .criteria import EntanglementReport, classify, dgcz_sum, reid_product

__version__ = "0.1.0"

__all__ = [
    "PhysicalParams", "SteadyState", "solve_steady_state", "drive_from_intensity",
    "BistabilityBranch", "continuation_sweep",
    "LinearModel", "build_linear_model", "check_stability",
    "QuadCovariance", "output_quadratures", "correlation_coefficients",
    "EntanglementReport", "classify", "dgcz_sum", "reid_product",
]
