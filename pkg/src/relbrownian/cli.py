"""Command-line experiment runner.

Every subcommand writes ``manifest.json`` (and ``timing.json`` with the
wall time) into ``--out``.  The manifest echoes the configuration and
lists each check with its measured value, expected value, standard error
and tolerance; the exit code is 0 when every check passes, 1 when one
fails, and 2 on a usage error.

Subcommands
-----------
``moments``           single-jump weighted moments vs the exact tensor
``simulate``          multi-step track moments vs the linear growth law
``verify-integrals``  closed-form constants vs quadrature
``boost-test``        covariance of a boosted ensemble
``fp-compare``        Monte Carlo vs Fokker-Planck (moments and density)
``worldline``         a single worldline, its CSV and its segmentation

Options may also be read from a flat ``key = value`` file given with
``--config``; command-line flags override the file.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .continuation import lambda_critical
from .ensemble import DEFAULT_CHUNK, SimulationConfig, chunk_rng, jump_accumulator, sample_ensemble
from .errors import RelBrownianError
from .fokker_planck import (
    bin_masses,
    diffusion_tensor,
    gaussian_density,
    histogram_masses,
    kg_mode_residual,
    l1_distance,
    moment_ode_check,
    real_sector_fd_solve,
    stable_dtau,
    write_density_csv,
)
from .minkowski import Boost, Sector, boost_tensor
from .oracle import closed_form_constants, predicted_moments, quadrature_constants, sampled_moments
from .process import DriftField, JumpSchedule, evolve, evolve_ensemble, jumps_before, segment_worldline
from .sampler import Family
from .stats import STDERR_THRESHOLD, boost_covariance_check, deviation, isotropy_deviation, report

SCHEMA_VERSION = 1
STREAM_WORLDLINE = 3
FD_INITIAL_VARIANCE = 0.05
FD_L1_TOLERANCE = 0.02
FD_HISTOGRAM_BINS = 16
KG_TOLERANCE = 1e-12

SUBCOMMANDS = ("simulate", "moments", "verify-integrals", "boost-test", "fp-compare", "worldline")

# per-subcommand defaults applied beneath the config file and the flags
DEFAULTS = {
    "common": {
        "sector": "timelike",
        "D": 1.0,
        "dtau": 0.01,
        "cutoff_L": 1.0,
        "n": 100_000,
        "seed": 0,
        "signature": "mostly-plus",
        "sector_mix": 0.5,
        "threads": 1,
        "chunk_size": DEFAULT_CHUNK,
        "rapidity": 0.5,
        "forward_only": False,
        "out": "relbrownian-out",
    },
    "moments": {"family": "gaussian-4d", "steps": 1},
    "simulate": {"family": "gaussian-4d", "steps": 10},
    "verify-integrals": {"family": "gaussian-4d", "steps": 1},
    "boost-test": {"family": "gaussian-4d", "steps": 1},
    "fp-compare": {"family": "hyperbolic-1+1", "sector_mix": 1.0, "n": 1_000_000, "steps": 100},
    "worldline": {"family": "hyperbolic-1+1", "steps": 100},
}

# config-file keys that map onto a differently named option
KEY_ALIASES = {
    "physical_sector": "sector",
    "lam": "lambda",
    "l": "cutoff_L",
    "cutoff_l": "cutoff_L",
    "tau_j": "tau_J",
    "d": "D",
}


class UsageError(Exception):
    """Bad command line or configuration file (exit code 2)."""


# --- parsing -----------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="flat key = value file; flags override it")
    common.add_argument("--family", choices=[f.value for f in Family])
    common.add_argument("--sector", choices=["timelike", "spacelike"], help="physical sector")
    common.add_argument("--lambda", dest="lambda", metavar="VALUE|critical", help="continuation weight")
    common.add_argument("--D", type=float, help="diffusion constant")
    common.add_argument("--dtau", type=float, help="invariant time step")
    common.add_argument("--cutoff-L", dest="cutoff_L", type=float, help="hyperbolic angle cutoff")
    common.add_argument("--n", type=int, help="ensemble size")
    common.add_argument("--steps", type=int, help="number of steps")
    common.add_argument("--tau-J", dest="tau_J", type=float, help="ordered jump period")
    common.add_argument("--rapidity", type=float)
    common.add_argument("--signature", choices=["mostly-plus", "mostly-minus"])
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int)
    common.add_argument("--chunk-size", dest="chunk_size", type=int)
    common.add_argument("--sector-mix", dest="sector_mix", type=float, help="probability of a timelike jump")
    common.add_argument("--timelike-scale", dest="timelike_scale", type=float)
    common.add_argument("--forward-only", dest="forward_only", action="store_true")
    common.add_argument("--out", help="output directory")

    parser = argparse.ArgumentParser(prog="relbrownian", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=_HELP[name])
    return parser


_HELP = {
    "simulate": "multi-step ensemble; track moments vs linear growth",
    "moments": "single-jump weighted moments",
    "verify-integrals": "closed-form constants vs quadrature",
    "boost-test": "covariance of a boosted jump ensemble",
    "fp-compare": "Monte Carlo vs Fokker-Planck",
    "worldline": "one worldline with CSV export and segmentation",
}


def read_config_file(path) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        key = KEY_ALIASES.get(key.lower(), key)
        out[key] = value
    return out


_TYPES = {
    "D": float,
    "dtau": float,
    "cutoff_L": float,
    "n": int,
    "steps": int,
    "tau_J": float,
    "rapidity": float,
    "seed": int,
    "threads": int,
    "chunk_size": int,
    "sector_mix": float,
    "timelike_scale": float,
}
_KNOWN = set(_TYPES) | {"family", "sector", "lambda", "signature", "forward_only", "out"}


def _coerce(key, value):
    if key not in _KNOWN:
        raise UsageError(f"unknown configuration key {key!r}")
    if not isinstance(value, str):
        return value
    if key in _TYPES:
        try:
            return _TYPES[key](value)
        except ValueError:
            raise UsageError(f"{key}: cannot parse {value!r}") from None
    if key == "forward_only":
        if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise UsageError(f"forward_only: expected a boolean, got {value!r}")
        return value.lower() in ("true", "1", "yes")
    return value


def resolve_options(command: str, flags: dict) -> dict:
    """Layer defaults, the config file and the flags (highest priority)."""
    opts = {**DEFAULTS["common"], **DEFAULTS[command]}
    config = flags.pop("config", None)
    if config is not None:
        for key, value in read_config_file(config).items():
            opts[key] = _coerce(key, value)
    for key, value in flags.items():
        opts[key] = _coerce(key, value)
    return opts


def _lambda(value, sector: Sector):
    if value is None:
        return None
    if str(value).lower() == "critical":
        return lambda_critical(sector)
    try:
        lam = float(value)
    except ValueError:
        raise UsageError(f"--lambda expects a number or 'critical', got {value!r}") from None
    if not lam >= 0:
        raise UsageError("--lambda must be non-negative")
    return lam


def simulation_config(opts: dict) -> SimulationConfig:
    sector = Sector[opts["sector"].upper()]
    return SimulationConfig(
        family=opts["family"],
        physical_sector=sector,
        lam=_lambda(opts.get("lambda"), sector),
        D=opts["D"],
        dtau=opts["dtau"],
        L=opts["cutoff_L"],
        n=opts["n"],
        seed=opts["seed"],
        signature=opts["signature"],
        sector_mix=opts["sector_mix"],
        timelike_scale=opts.get("timelike_scale"),
        steps=opts["steps"],
        tau_J=opts.get("tau_J"),
        chunk_size=opts["chunk_size"],
        threads=opts["threads"],
        forward_only=opts["forward_only"],
    )


# --- checks --------------------------------------------------------------------


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


def stderr_check(name, value, stderr, expected, expected_stderr=0.0, threshold=STDERR_THRESHOLD) -> dict:
    """Entrywise comparison in units of the combined standard error."""
    dev = deviation(value, stderr, expected, expected_stderr)
    return {
        "name": name,
        "kind": "stderr",
        "value": _jsonable(np.asarray(value)),
        "expected": _jsonable(np.asarray(expected)),
        "stderr": _jsonable(np.asarray(stderr)),
        "deviation": dev,
        "tolerance": threshold,
        "passed": bool(dev < threshold),
    }


def relative_check(name, value, expected, tol) -> dict:
    err = abs(value - expected) / abs(expected) if expected != 0 else abs(value)
    return {
        "name": name,
        "kind": "relative",
        "value": value,
        "expected": expected,
        "stderr": 0.0,
        "deviation": err,
        "tolerance": tol,
        "passed": bool(err < tol),
    }


def absolute_check(name, value, expected, tol, stderr=0.0) -> dict:
    err = float(np.max(np.abs(np.asarray(value) - np.asarray(expected))))
    return {
        "name": name,
        "kind": "absolute",
        "value": _jsonable(value),
        "expected": _jsonable(expected),
        "stderr": stderr,
        "deviation": err,
        "tolerance": tol,
        "passed": bool(err <= tol),
    }


def write_moments_csv(path, rows) -> None:
    """Rows ``(label, mu, nu, value, stderr, expected)``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["label", "mu", "nu", "value", "stderr", "expected"])
        for row in rows:
            w.writerow([row[0], row[1], row[2]] + [repr(float(v)) for v in row[3:]])


def _tensor_rows(label, value, stderr, expected):
    d = value.shape[0]
    return [(label, m, v, value[m, v], stderr[m, v], expected[m, v]) for m in range(d) for v in range(d)]


def _moment_kwargs(cfg: SimulationConfig) -> dict:
    return dict(L=cfg.L, sector_mix=cfg.sector_mix, timelike_scale=cfg.resolved_timelike_scale)


def exact_moments(cfg: SimulationConfig, dtau: float | None = None) -> np.ndarray:
    """Weighted single-jump tensor of the sampled distribution."""
    return sampled_moments(cfg.family, cfg.D, cfg.dtau if dtau is None else dtau, cfg.rule, **_moment_kwargs(cfg))


def _is_eta_like(T, sig) -> bool:
    eta = sig.metric(T.shape[0])
    c = float(np.mean(np.diag(eta) * np.diag(T)))
    return c != 0 and np.allclose(T, c * eta, rtol=1e-9, atol=1e-12 * abs(c))


# --- subcommands -------------------------------------------------------------


def cmd_moments(cfg: SimulationConfig, opts: dict, out: Path):
    rep = report(jump_accumulator(cfg), cfg.signature)
    exact = exact_moments(cfg)
    checks = [stderr_check("second_moments", rep.cov, rep.cov_stderr, exact)]
    if not cfg.forward_only:
        checks.append(stderr_check("first_moments", np.abs(rep.mean), rep.mean_stderr, np.zeros(cfg.dim)))
    paper = predicted_moments(cfg.family, cfg.D, cfg.dtau, cfg.rule, **_moment_kwargs(cfg))
    info = {
        "report": rep.to_dict(),
        "closed_form_prediction": _jsonable(paper),
        "closed_form_deviation": deviation(rep.cov, rep.cov_stderr, paper),
    }
    write_moments_csv(out / "moments.csv", _tensor_rows("jump", rep.cov, rep.cov_stderr, exact))
    return checks, info, ["moments.csv"]


def cmd_simulate(cfg: SimulationConfig, opts: dict, out: Path):
    if cfg.tau_J is not None:
        schedule = JumpSchedule.ordered(cfg.tau_J)
        period = cfg.tau_J
        checkpoints = [cfg.steps * cfg.dtau]
    else:
        schedule = JumpSchedule()
        period = cfg.dtau
        checkpoints = [k * cfg.dtau for k in range(1, cfg.steps + 1)]
    if not checkpoints or checkpoints[-1] <= 0:
        raise UsageError("simulate needs --steps >= 1")
    mc = evolve_ensemble(cfg, schedule, checkpoints)
    per_jump = exact_moments(cfg, period)
    checks, rows, info = [], [], {"checkpoints": []}
    for tau, rep in zip(mc.taus, mc.reports(cfg.signature)):
        n_jumps = jumps_before(tau, period)
        expected = n_jumps * per_jump
        rows += _tensor_rows(f"tau={tau!r}", rep.cov, rep.cov_stderr, expected)
        info["checkpoints"].append({"tau": float(tau), "jumps": n_jumps, "cov": _jsonable(rep.cov)})
    rep = mc.reports(cfg.signature)[-1]
    n_jumps = jumps_before(mc.taus[-1], period)
    checks.append(stderr_check("track_second_moments", rep.cov, rep.cov_stderr, n_jumps * per_jump))
    info["monotonic_fraction"] = float(np.mean(mc.monotonic))
    write_moments_csv(out / "moments.csv", rows)
    return checks, info, ["moments.csv"]


def cmd_verify_integrals(cfg: SimulationConfig, opts: dict, out: Path):
    closed = closed_form_constants()
    quad = quadrature_constants()
    checks = [relative_check(k, quad[k], closed[k], 1e-10) for k in closed]
    return checks, {}, []


def cmd_boost_test(cfg: SimulationConfig, opts: dict, out: Path):
    vectors, codes = sample_ensemble(cfg)
    b = Boost.along(opts["rapidity"], cfg.dim)
    # independent reference ensemble: same configuration, next seed
    ref = report(jump_accumulator(cfg.replace(seed=cfg.seed + 1)), cfg.signature)
    after = report(jump_accumulator(cfg, b), cfg.signature)
    exact = exact_moments(cfg)
    checks = []
    for name, reference, reference_err in (
        ("boosted_covariance", ref.cov, ref.cov_stderr),
        ("boosted_vs_exact", exact, 0.0),
    ):
        dev = boost_covariance_check(vectors, codes, b, cfg.rule, cfg.signature, reference, reference_err)
        checks.append(
            {
                "name": name,
                "kind": "stderr",
                "value": _jsonable(after.cov),
                "expected": _jsonable(boost_tensor(reference, b)),
                "stderr": _jsonable(after.cov_stderr),
                "deviation": dev,
                "tolerance": STDERR_THRESHOLD,
                "passed": bool(dev < STDERR_THRESHOLD),
            }
        )
    if _is_eta_like(exact, cfg.signature):
        iso = isotropy_deviation(after.cov, after.cov_stderr, cfg.signature)
        checks.append(
            {
                "name": "boosted_isotropy",
                "kind": "stderr",
                "value": after.scale,
                "expected": "cov proportional to the metric",
                "stderr": _jsonable(after.cov_stderr),
                "deviation": iso,
                "tolerance": STDERR_THRESHOLD,
                "passed": bool(iso < STDERR_THRESHOLD),
            }
        )
    info = {"rapidity": opts["rapidity"], "reference": ref.to_dict(), "after": after.to_dict()}
    return checks, info, []


def _real_sector(cfg: SimulationConfig) -> bool:
    """True when every sampled jump is physical, so the process has a real density."""
    if cfg.dim != 2 or not cfg.family.hyperbolic:
        return False
    if cfg.physical_sector is Sector.TIMELIKE:
        return cfg.sector_mix == 1.0
    return cfg.sector_mix == 0.0


def cmd_fp_compare(cfg: SimulationConfig, opts: dict, out: Path):
    tau = cfg.steps * cfg.dtau
    if tau <= 0:
        raise UsageError("fp-compare needs --steps >= 1")
    a = diffusion_tensor(exact_moments(cfg), cfg.dtau)
    half = (cfg.steps // 2) * cfg.dtau
    checkpoints = [half, tau] if half > 0 else [tau]
    real = _real_sector(cfg)
    s0 = FD_INITIAL_VARIANCE * np.eye(cfg.dim)
    initial = None
    if real:
        initial = lambda size, rng: rng.multivariate_normal(np.zeros(cfg.dim), s0, size=size)  # noqa: E731
    mc = evolve_ensemble(cfg, checkpoints=checkpoints, initial=initial, keep_positions=real)

    checks, info, outputs = [], {"diffusion_tensor": _jsonable(a)}, []
    if len(checkpoints) > 1:
        dev = moment_ode_check(mc, a)
        slope = report(mc.slopes[0], cfg.signature)
        checks.append(
            {
                "name": "moment_slope",
                "kind": "stderr",
                "value": _jsonable(slope.cov),
                "expected": _jsonable(2 * a),
                "stderr": _jsonable(slope.cov_stderr),
                "deviation": dev,
                "tolerance": STDERR_THRESHOLD,
                "passed": bool(dev < STDERR_THRESHOLD),
            }
        )
    if _is_eta_like(a, cfg.signature):
        eta = cfg.signature.metric(cfg.dim)
        c = float(np.mean(np.diag(eta) * np.diag(a)))
        rng = chunk_rng(cfg.seed, 0, STREAM_WORLDLINE)
        ks = rng.normal(size=(8, cfg.dim))
        worst = max(kg_mode_residual(k, c * float(k @ eta @ k), a) for k in ks)
        checks.append(absolute_check("kg_mode_residual", worst, 0.0, KG_TOLERANCE))
    if real:
        cov_final = s0 + 2 * a * tau
        sd = np.sqrt(np.diag(cov_final))
        ext = 6.0 * float(sd.max())
        h = 2 * ext / 240
        coords = [np.arange(-ext, ext + h / 2, h)] * cfg.dim
        u = real_sector_fd_solve(gaussian_density(coords, np.zeros(cfg.dim), s0), h, a, tau)
        edges = [np.linspace(-4 * s, 4 * s, FD_HISTOGRAM_BINS + 1) for s in sd]
        pm = histogram_masses(mc.positions, edges)
        pf = bin_masses(u, coords, edges)
        l1 = l1_distance(pm, pf)
        checks.append(absolute_check("density_l1", l1, 0.0, FD_L1_TOLERANCE))
        info.update(
            fd_mass=float(u.sum() * h**cfg.dim),
            fd_spacing=h,
            fd_step=stable_dtau(a, h),
            initial_variance=FD_INITIAL_VARIANCE,
            histogram_bins=FD_HISTOGRAM_BINS,
        )
        write_density_csv(out / "density.csv", u, coords)
        outputs.append("density.csv")
    else:
        info["density_check"] = "skipped: process has complex weights, no real density"
    return checks, info, outputs


def cmd_worldline(cfg: SimulationConfig, opts: dict, out: Path):
    jcfg = cfg.jump_config()
    rng = chunk_rng(cfg.seed, 0, STREAM_WORLDLINE)
    total = cfg.steps * cfg.dtau
    if cfg.tau_J is not None:
        schedule = JumpSchedule.ordered(cfg.tau_J)
        rec = evolve(np.zeros(cfg.dim), DriftField(), jcfg, schedule, total_tau=total, rng=rng, rule=cfg.rule)
        expected_jumps = jumps_before(total, cfg.tau_J)
    else:
        rec = evolve(np.zeros(cfg.dim), DriftField(), jcfg, n_steps=cfg.steps, rng=rng, rule=cfg.rule)
        expected_jumps = cfg.steps
    rec.to_csv(out / "worldline.csv")
    n_jumps = int(np.sum(rec.sectors >= 0))
    checks = [
        absolute_check("jump_count", n_jumps, expected_jumps, 0),
        absolute_check("final_tau", float(rec.taus[-1]), total, 1e-9 * max(1.0, total)),
    ]
    seg = segment_worldline(rec, cfg.signature)
    info = {
        "segments": [
            {"kind": s.kind, "tau": [s.tau_start, s.tau_end], "t": [s.t_start, s.t_end]} for s in seg.segments
        ],
        "events": [{"kind": e.kind, "tau": e.tau, "t": e.t} for e in seg.events],
        "weight_product": _jsonable(rec.weight_product),
    }
    return checks, info, ["worldline.csv"]


COMMANDS = {
    "simulate": cmd_simulate,
    "moments": cmd_moments,
    "verify-integrals": cmd_verify_integrals,
    "boost-test": cmd_boost_test,
    "fp-compare": cmd_fp_compare,
    "worldline": cmd_worldline,
}


# --- entry points ------------------------------------------------------------


def run(argv=None):
    """Execute one subcommand; returns ``(exit_code, manifest)``.

    Usage errors give exit code 2 and a ``None`` manifest.
    """
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0), None
    flags = vars(ns)
    command = flags.pop("command")
    try:
        opts = resolve_options(command, flags)
        cfg = simulation_config(opts)
        out = Path(opts["out"])
        out.mkdir(parents=True, exist_ok=True)
        start = time.perf_counter()
        checks, info, outputs = COMMANDS[command](cfg, opts, out)
        wall = time.perf_counter() - start
    except (UsageError, RelBrownianError, KeyError) as exc:
        print(f"relbrownian {command}: error: {exc}", file=sys.stderr)
        return 2, None

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "version": __version__,
        "seed": cfg.seed,
        "config": _jsonable(_config_echo(cfg, opts)),
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
        "info": _jsonable(info),
        "outputs": ["manifest.json", "timing.json"] + outputs,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_jsonable) + "\n")
    (out / "timing.json").write_text(json.dumps({"wall_time_s": wall}, indent=2) + "\n")
    for c in checks:
        status = "PASS" if c["passed"] else "FAIL"
        print(f"{status} {c['name']}: deviation {c['deviation']:.4g} (tolerance {c['tolerance']:g}, {c['kind']})")
    return (0 if manifest["passed"] else 1), manifest


def _config_echo(cfg: SimulationConfig, opts: dict) -> dict:
    echo = cfg.to_dict()
    echo.pop("extra", None)
    echo["rapidity"] = opts["rapidity"]
    echo["out"] = str(opts["out"])
    for k, v in list(echo.items()):
        if isinstance(v, float) and not math.isfinite(v):
            echo[k] = str(v)
    return echo


def main(argv=None) -> int:
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
