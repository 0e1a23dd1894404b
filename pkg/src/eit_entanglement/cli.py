"""Command-line front end: parameter files in, CSV/JSON tables out.

Parameter files are flat UTF-8 text with one ``key = value`` per line and ``#``
comments. Keys are the ``PhysicalParams`` field names (rates in rad/s, input
amplitudes in sqrt(photons/s), complex values written as Python literals such
as ``12.5+3j``) plus the sweep keys of ``SweepConfig``.

Sweep values are dimensionless: detunings and analysis frequencies in units of
``Gamma = Gamma1 + Gamma2``, drive as a factor multiplying both input amplitudes.

Exit codes: 0 success, 2 configuration error, 3 steady-state failure at some
point (the row is flagged and the run continues), 4 every point unstable.
"""

from __future__ import annotations

import argparse
from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import dataclass, fields
import io
import json
import math
import sys

import numpy as np

from .bistability import BranchLostError, continuation_sweep
from .criteria import classify
from .linearization import build_linear_model
from .model import ModelError, PhysicalParams, solve_steady_state
from .oracle import OracleError, run_oracle
from .spectra import output_quadratures, squeezing, uncertainty_eigenvalues

__all__ = ["ConfigError", "SweepConfig", "parse_config", "load_config", "run_sweep",
           "run_bistability", "run_point", "main", "CSV_COLUMNS", "BISTAB_COLUMNS"]

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_ALL_UNSTABLE = 0, 2, 3, 4

CSV_COLUMNS = ("sweep_value", "stable", "C_amp", "C_phase", "V1_amp", "V1_phase", "V2_amp",
               "V2_phase", "reid_product", "eta0", "eta_pi2", "dgcz_sum", "entangled_reid",
               "entangled_dgcz")
BISTAB_COLUMNS = ("drive_scale", "drive", "alpha1_abs", "alpha2_abs", "stable", "turning_point")
SQUEEZING_COLUMNS = ("V1_min", "V1_max", "V2_min", "V2_max")
ORACLE_COLUMNS = ("sweep_value", "entry", "spectra", "oracle", "std_error", "z_score")

SWEEP_VARIABLES = ("deltaL2", "deltaL1", "Omega_analysis", "drive")
NONCONVERGED = "nonconverged"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    params: PhysicalParams
    sweep: str = "deltaL2"
    sweep_min: float = -10.0
    sweep_max: float = 10.0
    n_points: int = 201
    oracle: bool = False
    seed: int = 0
    oracle_trajectories: int = 32
    oracle_steps: int = 400_000

    def __post_init__(self):
        if self.sweep not in SWEEP_VARIABLES:
            raise ConfigError(f"sweep must be one of {', '.join(SWEEP_VARIABLES)}")
        if self.n_points < 2:
            raise ConfigError("n_points must be at least 2")
        if not self.sweep_max > self.sweep_min:
            raise ConfigError("sweep_max must exceed sweep_min")

    def values(self) -> np.ndarray:
        return np.linspace(self.sweep_min, self.sweep_max, self.n_points)

    def params_at(self, value: float) -> PhysicalParams:
        p = self.params
        if self.sweep == "drive":
            return p.scaled_drive(value)
        return p.replace(**{self.sweep: value * p.Gamma})


_PARAM_FIELDS = {f.name: f for f in fields(PhysicalParams)}
_SWEEP_FIELDS = {f.name: f for f in fields(SweepConfig) if f.name != "params"}


def _parse_bool(text: str) -> bool:
    t = text.lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_config(text: str) -> SweepConfig:
    """Parse a parameter file into a ``SweepConfig``; raises ``ConfigError``."""
    pvals, svals = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in pvals or key in svals:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            if key in ("alpha1_in", "alpha2_in"):
                pvals[key] = complex(value.replace(" ", ""))
            elif key in _PARAM_FIELDS:
                pvals[key] = float(value)
            elif key in ("sweep",):
                svals[key] = value
            elif key in ("oracle",):
                svals[key] = _parse_bool(value)
            elif key in ("n_points", "seed", "oracle_trajectories", "oracle_steps"):
                svals[key] = int(value)
            elif key in _SWEEP_FIELDS:
                svals[key] = float(value)
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    try:
        params = PhysicalParams(**pvals)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return SweepConfig(params=params, **svals)


def load_config(path: str) -> SweepConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if x is None:
        return ""
    return f"{float(x):.9g}"


def _evaluate_point(params: PhysicalParams):
    """Return ``("ok" | "unstable" | "failed", model, report, cov)`` for one operating point."""
    try:
        ss = solve_steady_state(params)
        model = build_linear_model(params, ss)
    except ModelError as exc:
        return "failed", None, None, str(exc)
    if not model.stable:
        return "unstable", model, None, None
    cov = output_quadratures(model)
    return "ok", model, classify(cov), cov


def _sweep_row(args):
    config, index, value = args
    status, model, report, cov = _evaluate_point(config.params_at(value))
    row = [_fmt(value)]
    oracle_rows = []
    if status == "failed":
        row += [NONCONVERGED] + [""] * (len(CSV_COLUMNS) - 2)
    elif status == "unstable":
        row += ["false"] + [""] * (len(CSV_COLUMNS) - 2)
    else:
        V = cov.V
        row += ["true", _fmt(report.C_amp), _fmt(report.C_phase), _fmt(V[0, 0]), _fmt(V[1, 1]),
                _fmt(V[2, 2]), _fmt(V[3, 3]), _fmt(report.reid_product), _fmt(report.eta0),
                _fmt(report.eta_pi2), _fmt(report.dgcz_sum), _fmt(report.entangled_reid),
                _fmt(report.entangled_dgcz)]
        if config.oracle:
            seed = int(np.random.SeedSequence([config.seed, index]).generate_state(1)[0])
            om = model.params.Omega_analysis
            run = run_oracle(model, [om], seed=seed, n_traj=config.oracle_trajectories,
                             n_steps=config.oracle_steps)
            est, se, _ = run.estimate(om)
            for i in range(4):
                for j in range(i, 4):
                    z = (est.V[i, j] - V[i, j]) / se[i, j] if se[i, j] > 0 else math.nan
                    oracle_rows.append([_fmt(value), f"V{i + 1}{j + 1}", _fmt(V[i, j]),
                                        _fmt(est.V[i, j]), _fmt(se[i, j]), _fmt(z)])
    return status, row, oracle_rows


def _map(func, items, jobs: int):
    if jobs <= 1:
        return [func(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def run_sweep(config: SweepConfig, jobs: int = 1):
    """Evaluate every sweep point; returns ``(csv_text, oracle_csv_text_or_None, exit_code)``."""
    items = [(config, k, float(v)) for k, v in enumerate(config.values())]
    results = _map(_sweep_row, items, jobs)
    rows = [r for _, r, _ in results]
    statuses = [s for s, _, _ in results]
    oracle_text = None
    if config.oracle:
        oracle_text = _csv_text(ORACLE_COLUMNS, [o for _, _, orows in results for o in orows])
    code = EXIT_OK
    if "failed" in statuses:
        code = EXIT_NONCONVERGED
    elif all(s == "unstable" for s in statuses):
        code = EXIT_ALL_UNSTABLE
    return _csv_text(CSV_COLUMNS, rows), oracle_text, code


def run_bistability(config: SweepConfig, spectra: bool = False):
    """Continuation branch over the drive range ``[sweep_min, sweep_max]`` (drive factors)."""
    lo, hi = config.sweep_min, config.sweep_max
    branch = continuation_sweep(config.params, (lo, hi), n_steps=max(2, config.n_points))
    header = BISTAB_COLUMNS + (SQUEEZING_COLUMNS if spectra else ())
    rows = []
    for s in branch.samples:
        row = [_fmt(s.scale), _fmt(s.drive), _fmt(abs(s.state.alpha1)), _fmt(abs(s.state.alpha2)),
               _fmt(s.stable), _fmt(s.turning_point)]
        if spectra:
            vals = [""] * 4
            if s.stable and not s.turning_point:
                model = build_linear_model(config.params.scaled_drive(s.scale), s.state)
                if model.stable:
                    sq = squeezing(output_quadratures(model))
                    vals = [_fmt(sq[1][0]), _fmt(sq[1][1]), _fmt(sq[2][0]), _fmt(sq[2][1])]
            row += vals
        rows.append(row)
    code = EXIT_ALL_UNSTABLE if not any(s.stable for s in branch.samples) else EXIT_OK
    return _csv_text(header, rows), code


def run_point(config: SweepConfig) -> tuple[dict, int]:
    p = config.params
    status, model, report, cov = _evaluate_point(p)
    out = {"status": status, "Gamma": p.Gamma, "Omega_analysis": p.Omega_analysis}
    if status == "failed":
        out["error"] = cov
        return out, EXIT_NONCONVERGED
    ss = model.steady_state
    out["steady_state"] = {
        "alpha1": [ss.alpha1.real, ss.alpha1.imag], "alpha2": [ss.alpha2.real, ss.alpha2.imag],
        "s1": [ss.s1.real, ss.s1.imag], "s2": [ss.s2.real, ss.s2.imag],
        "s12": [ss.s12.real, ss.s12.imag], "p0": ss.p0, "p1": ss.p1, "p2": ss.p2,
        "residual": ss.residual,
    }
    out["stable"] = bool(model.stable)
    out["spectral_abscissa"] = model.abscissa
    if status == "unstable":
        return out, EXIT_ALL_UNSTABLE
    out["covariance"] = cov.V.tolist()
    out["report"] = report.as_dict()
    out["report"]["dgcz_signs"] = list(report.dgcz_signs)
    sq = squeezing(cov)
    out["squeezing"] = {"beam1": list(sq[1]), "beam2": list(sq[2])}
    out["uncertainty_min_eigenvalue"] = float(uncertainty_eigenvalues(cov).min())
    return out, EXIT_OK


def _write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="eit-entanglement",
                                 description="Pump-probe quantum correlations of a Lambda medium under EIT.")
    sub = ap.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("sweep", help="sweep detuning, analysis frequency or drive")
    sp.add_argument("--config", required=True)
    sp.add_argument("--oracle", action="store_true", help="Monte-Carlo cross-check at every stable point")
    sp.add_argument("--out")
    sp.add_argument("--jobs", type=int, default=1)
    bp = sub.add_parser("bistab", help="continuation branch over the drive factor range")
    bp.add_argument("--config", required=True)
    bp.add_argument("--out")
    bp.add_argument("--spectra", action="store_true", help="add per-beam quadrature variance extrema")
    pp = sub.add_parser("point", help="single operating point as JSON")
    pp.add_argument("--config", required=True)
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "sweep":
        if args.oracle:
            config = SweepConfig(**{**config.__dict__, "oracle": True})
        try:
            text, oracle_text, code = run_sweep(config, jobs=args.jobs)
        except OracleError as exc:
            print(f"oracle error: {exc}", file=sys.stderr)
            return EXIT_NONCONVERGED
        _write(text, args.out)
        if oracle_text is not None:
            if args.out:
                _write(oracle_text, args.out + ".oracle.csv")
            else:
                sys.stderr.write(oracle_text)
        if code == EXIT_NONCONVERGED:
            print("warning: steady state failed at one or more points", file=sys.stderr)
        elif code == EXIT_ALL_UNSTABLE:
            print("warning: every point is unstable", file=sys.stderr)
        return code
    if args.command == "bistab":
        try:
            text, code = run_bistability(config, spectra=args.spectra)
        except (BranchLostError, ModelError) as exc:
            print(f"continuation failed: {exc}", file=sys.stderr)
            return EXIT_NONCONVERGED
        except ValueError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        _write(text, args.out)
        return code
    out, code = run_point(config)
    sys.stdout.write(json.dumps(out, indent=2, sort_keys=True) + "\n")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
