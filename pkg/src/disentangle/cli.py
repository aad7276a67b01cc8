"""
Command-line front end.

    disentangle <experiment> [--config FILE] [--out DIR] [--tol-scale X] [--<key> VALUE ...]

``FILE`` is either a flat ``key = value`` file (``#`` starts a comment) or a
``manifest.json`` from an earlier run, which reproduces that run.  Command
line overrides win over the file.  Keys use underscores or dashes
interchangeably.

Exit status: 0 on success, 1 on a configuration error (nothing is written),
2 when some sweep point did not reach a steady state (results are still
written, with ``converged = false`` on those rows).
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import experiments as ex
from .dynamics import IntegratorConfig, RateParams
from .models import HubbardParams, SpinlessParams

_INTEGRATOR_KEYS = {
    "abs_tol": 1e-10,
    "rel_tol": 1e-8,
    "steady_tol": 1e-8,
    "max_step": 1.0,
    "t_max": 500.0,
    "eig_floor": 1e-12,
    "settle_time": 2.0,
}

_DEFAULTS = {
    "phase-scan": {
        "t_over_U": 1e-3,
        "mu_over_U": 0.0,
        "beta_U": 100.0,
        "ratio_min": 0.0,
        "ratio_max": 8.0,
        "ratio_points": 17,
        "eps": 1e-4,
        "confine": True,
        **_INTEGRATOR_KEYS,
    },
    "symmetry-breaking": {
        "t_over_U": 1e-2,
        "mu_over_U": 0.0,
        "beta_U": 100.0,
        "ratio": 50.0,
        "eps_s": 1e-4,
        "theta_count": 16,
        "confine": True,
        "record_every": 50,
        **_INTEGRATOR_KEYS,
    },
    "cpr": {
        "L": 5,
        "g_over_t": 1.0,
        "t0_over_t": 0.8,
        "g0_over_t": 0.0,
        "mu_over_t": 0.0,
        "beta_t": 100.0,
        "gamma_ratio": 10.0,
        "nu_points": 201,
        **_INTEGRATOR_KEYS,
        "settle_time": ex.CPR_CONFIG.settle_time,
    },
    "beenakker": {
        "tau": 0.99,
        "nu_points": 201,
    },
    "free-energy": {
        "mu_over_mu_c": 1.1,
        "g_over_t": 1.0,
        "beta_t": 100.0,
        "ratio_min": 0.1,
        "ratio_max": 3.0,
        "ratio_points": 30,
        "k3_points": 401,
    },
    "spectrum": {
        "g_over_t": 1.0,
        "mu_min": 0.0,
        "mu_max": 1.0,
        "mu_points": 101,
    },
}

EXPERIMENTS = tuple(_DEFAULTS)
_INTEGRATING = {"phase-scan", "symmetry-breaking", "cpr"}


class ConfigError(ValueError):
    pass


def defaults(experiment: str) -> dict:
    """Default parameter set of ``experiment`` (all physical values as ratios)."""
    if experiment not in _DEFAULTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    return {"tol_scale": 1.0, **_DEFAULTS[experiment]} if experiment in _INTEGRATING else dict(_DEFAULTS[experiment])


def _coerce(key, raw, like):
    if isinstance(raw, str):
        raw = raw.strip()
        if raw == "":
            raise ConfigError(f"missing value for {key!r}")
    try:
        if isinstance(like, bool):
            if isinstance(raw, bool):
                return raw
            if str(raw).lower() in ("1", "true", "yes", "on"):
                return True
            if str(raw).lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(like, int):
            v = float(raw)
            if v != int(v):
                raise ValueError(raw)
            return int(v)
        return float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from None


def read_config_file(path) -> tuple:
    """``(experiment or None, {key: raw value})`` from a key=value file or a manifest."""
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"bad JSON in {path}: {e}") from None
        if "config" not in data:
            raise ConfigError(f"{path} is JSON but not a run manifest (no 'config')")
        return data.get("experiment"), dict(data["config"])
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected 'key = value'")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v
    return None, out


def resolve(experiment: str, file_values: dict, overrides: dict) -> dict:
    """Merge defaults, file and overrides, rejecting unknown keys."""
    base = defaults(experiment)
    merged = dict(base)
    for source in (file_values, overrides):
        for k, v in source.items():
            key = k.replace("-", "_")
            if key not in base:
                raise ConfigError(f"unknown key {key!r} for {experiment}")
            merged[key] = _coerce(key, v, base[key])
    return merged


def _linspace(c, lo, hi, n):
    if c[n] < 2:
        raise ConfigError(f"{n} must be at least 2")
    if not c[hi] > c[lo]:
        raise ConfigError(f"{hi} must exceed {lo}")
    return np.linspace(c[lo], c[hi], c[n])


def _integrator(c):
    try:
        cfg = IntegratorConfig(**{k: c[k] for k in _INTEGRATOR_KEYS})
        if not c["tol_scale"] > 0:
            raise ValueError("tol_scale must be positive")
        return cfg.scaled(c["tol_scale"])
    except ValueError as e:
        raise ConfigError(str(e)) from None


def build(experiment: str, c: dict):
    """Validate ``c`` and return a zero-argument job producing
    ``(columns, rows, n_unconverged, summary)``."""
    try:
        return _BUILDERS[experiment](c)
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(str(e)) from None


def _phase_scan(c):
    p = HubbardParams(L=2, t=c["t_over_U"], U=1.0, mu=c["mu_over_U"])
    grid = _linspace(c, "ratio_min", "ratio_max", "ratio_points")
    if grid[0] < 0:
        raise ConfigError("ratio_min must be non-negative")
    RateParams(1.0, 0.0, c["beta_U"])
    cfg = _integrator(c)

    def job():
        res = ex.phase_scan(p, c["beta_U"], grid, 1.0, cfg, c["confine"], c["eps"])
        cols, rows = ex.phase_table(res)
        return cols, rows, int(np.count_nonzero(~res.converged)), {}

    return job


def _symmetry(c):
    p = HubbardParams(L=2, t=c["t_over_U"], U=1.0, mu=c["mu_over_U"])
    rates = RateParams(1.0, c["ratio"] * c["beta_U"], c["beta_U"])
    if c["theta_count"] < 1 or c["record_every"] < 1:
        raise ConfigError("theta_count and record_every must be positive")
    cfg = _integrator(c)

    def job():
        recs = ex.symmetry_breaking_trajectories(p, rates, c["theta_count"], c["eps_s"], cfg, c["confine"], c["record_every"])
        thetas = ex.symmetry_breaking_angles(c["theta_count"])
        cols, rows = ex.trajectory_table(recs, thetas)
        final = [ex.final_pseudospin(r).tolist() for r in recs]
        return cols, rows, sum(not r.converged for r in recs), {"final_S": final}

    return job


def _cpr(c):
    p = SpinlessParams(L=c["L"], t=1.0, t0=c["t0_over_t"], g=c["g_over_t"], g0=c["g0_over_t"], mu=c["mu_over_t"])
    rates = RateParams(1.0, c["gamma_ratio"], c["beta_t"])
    if c["nu_points"] < 3:
        raise ConfigError("nu_points must be at least 3")
    if p.L > 7:
        raise ConfigError("L > 7 is too large for dense integration")
    cfg = _integrator(c)

    def job():
        curve = ex.cpr_sweep(p, rates, ex.cpr_grid(c["nu_points"]), cfg)
        cols, rows = curve.table()
        return cols, rows, int(np.count_nonzero(~curve.converged)), {"I_c": curve.I_c}

    return job


def _beenakker(c):
    ex.beenakker_factor(0.0, c["tau"])
    if c["nu_points"] < 3:
        raise ConfigError("nu_points must be at least 3")

    def job():
        curve = ex.beenakker_cpr(c["tau"], 2 * np.pi * ex.cpr_grid(c["nu_points"]))
        cols, rows = curve.table()
        return cols, rows, 0, {}

    return job


def _free_energy(c):
    ratios = _linspace(c, "ratio_min", "ratio_max", "ratio_points")
    if ratios[0] < 0:
        raise ConfigError("ratio_min must be non-negative")
    if c["k3_points"] < 3:
        raise ConfigError("k3_points must be at least 3")
    RateParams(1.0, 0.0, c["beta_t"])

    def job():
        k3 = np.linspace(-1, 1, c["k3_points"])
        land = ex.free_energy_landscape(ratios, k3, c["mu_over_mu_c"], c["beta_t"], 1.0, c["g_over_t"])
        cols, rows = land.table()
        return cols, rows, 0, {"n_minima": [int(n) for n in land.n_minima]}

    return job


def _spectrum(c):
    mu = _linspace(c, "mu_min", "mu_max", "mu_points")

    def job():
        spectrum = ex.eigenvalues_vs_mu(mu, 1.0, c["g_over_t"])
        cols, rows = spectrum.table()
        return cols, rows, 0, {"crossing_mu_over_t": spectrum.crossing}

    return job


_BUILDERS = {
    "phase-scan": _phase_scan,
    "symmetry-breaking": _symmetry,
    "cpr": _cpr,
    "beenakker": _beenakker,
    "free-energy": _free_energy,
    "spectrum": _spectrum,
}


def _split_overrides(tokens):
    out = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--") or len(tok) == 2:
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
            i += 1
        elif i + 1 < len(tokens) and not tokens[i + 1].startswith("--"):
            val = tokens[i + 1]
            i += 2
        else:
            raise ConfigError(f"missing value for {key!r}")
        out[key.replace("-", "_")] = val
    return out


def run(experiment: str, config: dict, out_dir) -> int:
    """Run a validated, fully resolved config and write CSV plus manifest."""
    job = build(experiment, config)
    t0 = time.perf_counter()
    cols, rows, n_bad, summary = job()
    wall = time.perf_counter() - t0
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_name = f"{experiment}.csv"
    ex.write_csv(out / csv_name, cols, rows)
    manifest = {
        "experiment": experiment,
        "config": config,
        "version": __version__,
        "csv": csv_name,
        "rows": len(rows),
        "unconverged_points": n_bad,
        "summary": summary,
        "wall_time_s": wall,
    }
    ex.write_manifest(out / "manifest.json", manifest)
    return 2 if n_bad else 0


class _Parser(argparse.ArgumentParser):
    # usage errors are config errors (exit 1); status 2 is reserved for
    # unconverged results
    def error(self, message):
        raise ConfigError(message)


def main(argv=None) -> int:
    parser = _Parser(prog="disentangle", description="Steady states of the disentangling master equation.")
    parser.add_argument("experiment", help=", ".join(EXPERIMENTS))
    parser.add_argument("--config", help="key=value file or an earlier manifest.json")
    parser.add_argument("--out", default="results", help="output directory (default: results)")
    parser.add_argument("--tol-scale", dest="tol_scale", help="multiply all integrator tolerances")
    try:
        args, rest = parser.parse_known_args(argv)
        defaults(args.experiment)
        overrides = _split_overrides(rest)
        if args.tol_scale is not None:
            overrides["tol_scale"] = args.tol_scale
        file_values = {}
        if args.config:
            name, file_values = read_config_file(args.config)
            if name is not None and name != args.experiment:
                raise ConfigError(f"manifest is for {name!r}, not {args.experiment!r}")
        config = resolve(args.experiment, file_values, overrides)
        build(args.experiment, config)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    status = run(args.experiment, config, args.out)
    if status == 2:
        print("warning: some points did not converge (see the converged column)", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
