"""Command-line front end.

Exit codes: 0 success, 1 validation failure, 2 inconclusive or
non-convergent analysis, 3 I/O or parse error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .asymptotics import steady_state
from .channel import ChannelValidationError, complex_to_json, validate_cptp
from .kac import INCONCLUSIVE, KacConfig, verify_kac
from .monitor import rho_cond_sum, return_time_cross_check, sample_return_time, survival_curve
from .numerics import DEFAULT_TOL, NonConvergenceError
from .scenario import Scenario, ScenarioError, load

EXIT_OK, EXIT_INVALID, EXIT_INCONCLUSIVE, EXIT_IO = 0, 1, 2, 3


class Inconclusive(Exception):
    pass


def _clean(obj: Any) -> Any:
    """Make values JSON-safe: arrays to lists, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _opt(args, sc: Scenario, name: str, default):
    value = getattr(args, name, None)
    if value is not None:
        return value
    return sc.options.get(name, default)


# -- subcommands --------------------------------------------------------------
# each returns (filename suffix, file content, exit code); content also goes to stdout without --out

def cmd_validate(sc: Scenario, args):
    report = validate_cptp(sc.channel, _opt(args, sc, "tol", DEFAULT_TOL))
    out = {"id": sc.id, "dim": sc.channel.dim, "kraus_rank": sc.channel.rank, **report.as_dict()}
    return "validate.json", dumps(out), EXIT_OK if report.valid else EXIT_INVALID


def cmd_steady(sc: Scenario, args):
    a = steady_state(sc.channel, sc.psi, tol=_opt(args, sc, "tol", DEFAULT_TOL))
    out = {
        "id": sc.id,
        "chi": complex_to_json(a.chi),
        "spectrum": a.spectrum,
        "lambda": a.lam,
        "fixed_point_residual": a.fixed_point_residual,
        "psi_eigen_residual": a.psi_eigen_residual,
        "method": a.method,
    }
    return "steady.json", dumps(out), EXIT_OK


def cmd_survive(sc: Scenario, args):
    curve = survival_curve(sc.channel, sc.psi, int(_opt(args, sc, "horizon", 50)))
    return "survival.csv", curve.to_csv(), EXIT_OK


def _format_time(t: float) -> str:
    return f"{t:.6f}" if math.isfinite(t) else "inf"


def cmd_return_time(sc: Scenario, args):
    tol = _opt(args, sc, "tol", DEFAULT_TOL)
    method = _opt(args, sc, "method", "both")
    if method == "both":
        cc = return_time_cross_check(sc.channel, sc.psi, tol)
        bound = cc.series.truncation_error_estimate
        line = (f"{sc.id}: T = {_format_time(cc.expected_time)} +/- {bound:.1e} "
                f"(series {_format_time(cc.series.expected_time)}, solve {_format_time(cc.solve.expected_time)}, "
                f"|diff| {cc.time_difference:.1e})\n")
        code = EXIT_OK if cc.time_difference <= 1e-6 else EXIT_INCONCLUSIVE
        return "return_time.txt", line, code
    res = rho_cond_sum(sc.channel, sc.psi, "series" if method == "series" else "linear_solve", tol)
    line = f"{sc.id}: T = {_format_time(res.expected_time)} +/- {res.truncation_error_estimate:.1e} ({res.method})\n"
    return "return_time.txt", line, EXIT_OK


def _kac_config(sc: Scenario, args) -> KacConfig:
    cfg = KacConfig()
    cfg.tol = _opt(args, sc, "tol", cfg.tol)
    cfg.horizon = int(_opt(args, sc, "horizon", cfg.horizon))
    cfg.seed = int(_opt(args, sc, "seed", cfg.seed))
    cfg.samples = int(_opt(args, sc, "samples", cfg.samples))
    cfg.monte_carlo = bool(_opt(args, sc, "monte_carlo", cfg.monte_carlo))
    cfg.t_cap = int(_opt(args, sc, "t_cap", cfg.t_cap))
    return cfg


def cmd_kac(sc: Scenario, args):
    report = verify_kac(sc.channel, sc.psi, _kac_config(sc, args), scenario_id=sc.id)
    code = EXIT_INCONCLUSIVE if report.verdict == INCONCLUSIVE else EXIT_OK
    return "kac.json", dumps(report.as_dict()), code


def cmd_hit(sc: Scenario, args):
    if sc.hitting is None:
        raise ScenarioError(f"scenario {sc.id!r} is not a hitting_time scenario")
    cc = return_time_cross_check(sc.channel, sc.psi, _opt(args, sc, "tol", DEFAULT_TOL))
    out = {
        "id": sc.id,
        "hitting_time": cc.expected_time,
        "series_time": cc.series.expected_time,
        "solve_time": cc.solve.expected_time,
        "extended_dim": sc.channel.dim,
        "source": sc.hitting["source"],
        "target": sc.hitting["target"],
    }
    code = EXIT_OK if cc.time_difference <= 1e-6 else EXIT_INCONCLUSIVE
    return "hit.json", dumps(out), code


def cmd_sample(sc: Scenario, args):
    res = sample_return_time(
        sc.channel, sc.psi,
        n_samples=int(_opt(args, sc, "samples", 100_000)),
        seed=int(_opt(args, sc, "seed", 0)),
        t_cap=int(_opt(args, sc, "t_cap", 10_000)),
        jobs=args.jobs,
    )
    sys.stderr.write(f"{sc.id}: mean {res.mean:.6f} +/- {res.std_error:.2e} "
                     f"(n={res.n_samples}, censored={res.censored_count})\n")
    return "histogram.csv", res.histogram_csv(), EXIT_OK


COMMANDS: dict[str, Callable] = {
    "validate": cmd_validate,
    "steady": cmd_steady,
    "survive": cmd_survive,
    "return-time": cmd_return_time,
    "kac": cmd_kac,
    "hit": cmd_hit,
    "sample": cmd_sample,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qkac", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("path", help="scenario or channel JSON file")
        p.add_argument("--tol", type=float)
        p.add_argument("--horizon", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--samples", type=int)
        p.add_argument("--out", type=Path, help="write one file per scenario into this directory")
        p.add_argument("--method", choices=["series", "solve", "both"])
        p.add_argument("--jobs", type=int, default=1)
        if name == "kac":
            p.add_argument("--monte-carlo", dest="monte_carlo", action="store_true", default=None)
    return parser


def _run_one(func, sc, args):
    try:
        return func(sc, args)
    except NonConvergenceError as exc:
        return None, f"{sc.id}: non-convergent: {exc}\n", EXIT_INCONCLUSIVE


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenarios = load(args.path)
    except (OSError, ScenarioError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_IO
    except (ChannelValidationError, ValueError) as exc:
        sys.stderr.write(f"invalid: {exc}\n")
        return EXIT_INVALID

    func = COMMANDS[args.command]
    if args.command != "validate":
        for sc in scenarios:
            report = validate_cptp(sc.channel, max(DEFAULT_TOL, sc.options.get("tol", DEFAULT_TOL)))
            if not report.valid:
                sys.stderr.write(
                    f"invalid: scenario {sc.id!r} is not CPTP (tp residual {report.tp_residual:.3e}, "
                    f"min Choi eigenvalue {report.choi_min_eigenvalue:.3e})\n"
                )
                return EXIT_INVALID

    try:
        if args.jobs > 1 and args.command != "sample":
            with ThreadPoolExecutor(args.jobs) as pool:
                results = list(pool.map(lambda sc: _run_one(func, sc, args), scenarios))
        else:
            results = [_run_one(func, sc, args) for sc in scenarios]
    except ScenarioError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_IO
    except (ChannelValidationError, ValueError) as exc:
        sys.stderr.write(f"invalid: {exc}\n")
        return EXIT_INVALID

    code = EXIT_OK
    for sc, (suffix, content, rc) in zip(scenarios, results):
        if args.out is not None and suffix is not None:
            try:
                args.out.mkdir(parents=True, exist_ok=True)
                (args.out / f"{sc.id}.{suffix}").write_text(content)
            except OSError as exc:
                sys.stderr.write(f"error: {exc}\n")
                return EXIT_IO
        else:
            sys.stdout.write(content)
        code = max(code, rc)
    return code


if __name__ == "__main__":
    sys.exit(main())
