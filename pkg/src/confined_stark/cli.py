"""
Command-line interface: predictions, single solves and configured studies.

Subcommands
-----------
``predict KIND``
    Evaluate a closed-form limit (``constant``, ``weyl``, ``expansion``,
    ``counting-first``, ``counting-second``, ``rough-weyl``, ``density``,
    ``shift``, ``perturbed``).
``solve``, ``count``, ``density``
    One window (or full-domain) computation at a single ``h``.
``study``, ``bracket-check``
    Run a TOML-configured h-sweep; write ``results.csv`` and
    ``manifest.json`` to ``--out``.

Exit codes: 0 pass, 1 verdict fail, 2 usage or configuration error,
3 solver error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import replace
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

from . import __version__
from .eigensolve import count_below, eigs_below, pair_density, projector_density, riesz_mean
from .errors import ConfigError, IntegrityError, ParameterError, StarkError
from .experiments import StudyConfig, chart_for, run_study
from .operators import TestPotential, assemble_full_2d, rescale_potential
from .predictions import (LimitParams, counting_limit_first, counting_limit_second,
                          density_limit, density_pairing_limit, first_order_shift,
                          perturbed_counting_limit, rough_weyl, semiclassical_constant,
                          three_term_eigenvalue, weyl_phase_space)

__all__ = ["main", "build_parser", "load_config", "bundled_configs", "CSV_COLUMNS",
           "CSV_SCHEMA_VERSION", "write_outputs"]

CSV_COLUMNS = ("study", "h", "observed", "normalized", "predicted", "deviation", "rate", "verdict")
CSV_SCHEMA_VERSION = 1

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3

PREDICT_KINDS = ("constant", "weyl", "expansion", "counting-first", "counting-second",
                 "rough-weyl", "density", "shift", "perturbed")

_FORMULAS = {
    "constant": "L_{gamma,d} = Gamma(gamma+1) / ((4 pi)^{d/2} Gamma(gamma+1+d/2))",
    "weyl": "L_{0,d} int (Lambda - V)_+^{d/2}",
    "expansion": "x0 + z_1 h^{2/3} + (2k-1) sqrt(kappa0/2) h",
    "counting-first": "(4 pi L_{gamma,2} / sqrt(2 kappa0)) sum_k (mu - z_k)_+^{gamma+1}",
    "counting-second": "(4 pi L_{gamma,2} / sqrt(2 kappa0)) mu^{gamma+1}",
    "rough-weyl": "4 mu^{5/2} / (15 pi sqrt(2 kappa0)), relative remainder scale mu^{-3/4}",
    "density": "(1/pi) sum_k (mu - kappa0 s^2/2 - z_k)_+^{1/2} a_k(t)^2  (second regime: k = 1, no z_k)",
    "shift": "int V(s, t) a_k(t)^2 dt",
    "perturbed": "L_{gamma,1} sum_j int (mu - kappa0 s^2/2 - lambda_j(s; V))_+^{gamma+1/2} ds "
                 "(second regime: j = 1, lambda = int V a_1^2)",
}


# ----------------------------------------------------------------------------
# configuration files


def bundled_configs():
    """Names of the configurations shipped with the package."""
    root = resources.files("confined_stark") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def _read_config_text(path):
    p = Path(path)
    if p.exists():
        return p.read_text()
    root = resources.files("confined_stark") / "configs"
    for candidate in (path, f"{path}.toml"):
        res = root / candidate
        if res.is_file():
            return res.read_text()
    raise ConfigError(f"configuration file {path!r} not found (bundled: {', '.join(bundled_configs())})")


def load_config(path, **overrides):
    """Parse a TOML study configuration (a path or a bundled name)."""
    text = _read_config_text(path)
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    data.update({k: v for k, v in overrides.items() if v is not None})
    return StudyConfig.from_dict(data)


# ----------------------------------------------------------------------------
# output


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def render_csv(report):
    """CSV text of a report's rows (deterministic)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in report.csv_rows():
        writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, float):
        return x if math.isfinite(x) else str(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "item"):
        return _jsonable(x.item())
    return x


def write_outputs(report, cfg, out_dir, started, error=None):
    """Write ``results.csv`` and ``manifest.json``; return their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "results.csv"
    files = {}
    provenance = []
    verdict = None
    if report is not None:
        text = render_csv(report)
        csv_path.write_text(text)
        files[csv_path.name] = hashlib.sha256(text.encode()).hexdigest()
        provenance = [{"h": r.h, "series": r.series,
                       "operator": r.extra.get("operator", "")} for r in report.rows]
        verdict = "pass" if report.verdict else "fail"
    manifest = {
        "tool": "confined-stark",
        "version": __version__,
        "csv_schema": {"version": CSV_SCHEMA_VERSION, "columns": list(CSV_COLUMNS)},
        "config": cfg.to_dict(),
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
        "verdict": verdict,
        "fitted_rate": None if report is None else _jsonable(report.fitted_rate),
        "rates": {} if report is None else _jsonable(report.rates),
        "checks": {} if report is None else _jsonable(report.checks),
        "rows": provenance,
        "error": error,
        "checksums": files,
    }
    man_path = out / "manifest.json"
    man_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return csv_path, man_path


def config_from_manifest(path):
    """Reconstruct the :class:`StudyConfig` recorded in a manifest."""
    data = json.loads(Path(path).read_text())
    return StudyConfig.from_dict(data["config"])


# ----------------------------------------------------------------------------
# argument parsing


def _add_params(p, mu=None):
    p.add_argument("--gamma", type=float, default=0.0, help="Riesz order (>= 0)")
    p.add_argument("--mu", type=float, default=mu, help="threshold offset (>= 0)")
    p.add_argument("--alpha", type=float, default=None, help="second-regime exponent in (2/3, 1)")
    p.add_argument("--kappa0", type=float, default=1.0, help="boundary curvature at X0 (> 0)")
    p.add_argument("--x0", type=float, default=0.0, help="min of x1 over the domain")
    p.add_argument("--regime", choices=("first", "second"), default="first")


def _add_bump(p):
    p.add_argument("--bump", type=float, nargs=5, metavar=("A", "S0", "T0", "WS", "WT"),
                   default=(1.0, 0.0, 1.0, 0.8, 0.5),
                   help="Gaussian bump amplitude, centre (s, t) and widths (s, t)")


def _add_common(p):
    p.add_argument("--machine-readable", action="store_true", help="print JSON instead of text")


def build_parser():
    parser = argparse.ArgumentParser(prog="confined-stark",
                                     description="Semiclassical spectra of -h^2 Laplacian + x1 on smooth planar domains.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", help="evaluate a closed-form limit")
    p.add_argument("kind", choices=PREDICT_KINDS)
    _add_params(p, mu=4.0)
    _add_bump(p)
    p.add_argument("--d", type=int, default=2, help="dimension (constant, weyl)")
    p.add_argument("--k", type=int, default=1, help="eigenvalue / transverse index")
    p.add_argument("--h", type=float, default=None, help="semiclassical parameter (expansion)")
    p.add_argument("--lam", type=float, default=None, help="Lambda (weyl)")
    p.add_argument("--potential", choices=("zero", "harmonic"), default="zero",
                   help="weyl potential: zero on --omega, or kappa0 s^2/2 on the line")
    p.add_argument("--omega", type=float, nargs=2, default=(0.0, 1.0), metavar=("A", "B"))
    p.add_argument("--s", type=float, default=0.0)
    p.add_argument("--t", type=float, default=1.0)
    _add_common(p)

    for name, help_ in (("solve", "eigenvalues below a threshold at one h"),
                        ("count", "eigenvalue count / Riesz mean at one h"),
                        ("density", "projector density pairing at one h")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="study configuration supplying domain, params, potential")
        p.add_argument("--h", type=float, required=True)
        p.add_argument("--mu", type=float, default=None)
        p.add_argument("--gamma", type=float, default=None)
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--regime", choices=("first", "second"), default=None)
        p.add_argument("--mode", choices=("window", "full"), default=None)
        p.add_argument("--bc", choices=("dirichlet", "mixed"), default=None)
        p.add_argument("--tol", type=float, default=None, help="tolerance relative to h^(2/3)")
        p.add_argument("--export", help="write the operator as COO .npz")
        _add_common(p)

    for name, help_ in (("study", "run a configured h-sweep"),
                        ("bracket-check", "Dirichlet/full/mixed count sandwich")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="TOML file or bundled config name")
        p.add_argument("--out", default=None, help="output directory (default: config 'output' or ./results)")
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--tol", type=float, default=None)
        _add_common(p)

    p = sub.add_parser("configs", help="list bundled configurations")
    return parser


# ----------------------------------------------------------------------------
# commands


def _emit(args, payload, text):
    if getattr(args, "machine_readable", False):
        print(json.dumps(_jsonable(payload), sort_keys=True))
    else:
        print(text)


def _params(args):
    return LimitParams(gamma=args.gamma, mu=args.mu, alpha=args.alpha,
                       kappa0=args.kappa0, x0=args.x0)


def _bump(args):
    A, s0, t0, ws, wt = args.bump
    return TestPotential.gaussian_bump(A, s0, t0, ws, wt)


def cmd_predict(args):
    kind = args.kind
    params = _params(args)
    if kind == "constant":
        value = semiclassical_constant(args.gamma, args.d)
    elif kind == "weyl":
        if args.lam is None:
            raise ParameterError("--lam is required for weyl")
        if args.potential == "zero":
            if args.d != 1:
                raise ParameterError("the zero potential weyl example is one-dimensional (--d 1)")
            value = weyl_phase_space(lambda x: 0.0, args.lam, 1, tuple(args.omega))
        else:
            value = weyl_phase_space(lambda s: 0.5 * args.kappa0 * s * s, args.lam, 1)
    elif kind == "expansion":
        if args.h is None:
            raise ParameterError("--h is required for expansion")
        value = three_term_eigenvalue(args.k, args.h, params)
    elif kind == "counting-first":
        value = counting_limit_first(params)
    elif kind == "counting-second":
        value = counting_limit_second(params)
    elif kind == "rough-weyl":
        value, scale = rough_weyl(args.mu, args.kappa0)
        payload = {"kind": kind, "value": value, "remainder_scale": scale, "formula": _FORMULAS[kind]}
        _emit(args, payload, f"{value:.10g}  (relative remainder scale {scale:.4g})\n  formula: {_FORMULAS[kind]}")
        return EXIT_PASS
    elif kind == "density":
        if args.regime == "second":
            params.require_alpha()
        value = float(density_limit(args.s, args.t, params, args.regime))
    elif kind == "shift":
        value = first_order_shift(args.s, _bump(args), args.k)
    else:  # perturbed
        if args.regime == "second":
            params.require_alpha()
        value = perturbed_counting_limit(params, _bump(args), args.regime)
    payload = {"kind": kind, "value": value, "formula": _FORMULAS[kind]}
    _emit(args, payload, f"{value:.10g}\n  formula: {_FORMULAS[kind]}")
    return EXIT_PASS


def _single_config(args):
    overrides = {"regime": args.regime, "mode": args.mode, "bc": args.bc, "tol": args.tol}
    if args.config:
        cfg = load_config(args.config, h_list=[args.h], study="counting")
    else:
        cfg = StudyConfig("counting", (args.h,), params=LimitParams(mu=4.0))
    changes = {k: v for k, v in overrides.items() if v is not None}
    pchanges = {k: getattr(args, k) for k in ("mu", "gamma", "alpha") if getattr(args, k) is not None}
    params = replace(cfg.params, **pchanges)
    try:
        return replace(cfg, params=params, h_list=(args.h,), **changes)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _single_operator(cfg, h, V_resc=None, cover=None):
    from .experiments import _threshold, _window_op  # shared plumbing
    curve, tmap = chart_for(cfg)
    threshold = _threshold(cfg, h, curve.x0)
    if cfg.mode == "full":
        return assemble_full_2d(cfg.domain, h, threshold=threshold, resolution=cfg.resolution,
                                curve=curve), threshold
    return _window_op(cfg, tmap, h, threshold, V_resc=V_resc, cover=cover), threshold


def cmd_solve(args):
    cfg = _single_config(args)
    h = args.h
    op, threshold = _single_operator(cfg, h)
    if args.export:
        op.export_coo(args.export)
    spec = eigs_below(op, threshold, tol=cfg.tol * h ** (2 / 3))
    vals = [float(v) for v in spec.eigenvalues]
    payload = {"h": h, "threshold": threshold, "operator": op.description, "eigenvalues": vals}
    lines = [f"{op.description}", f"threshold {threshold:.10g}: {len(vals)} eigenvalue(s)"]
    lines += [f"  {i + 1:4d}  {v:.12g}" for i, v in enumerate(vals)]
    _emit(args, payload, "\n".join(lines))
    return EXIT_PASS


def cmd_count(args):
    cfg = _single_config(args)
    h = args.h
    op, threshold = _single_operator(cfg, h)
    tol = cfg.tol * h ** (2 / 3)
    if cfg.params.gamma == 0:
        c = count_below(op, threshold, tol)
        value, bracket = float(c.count), [c.lower, c.upper]
    else:
        value, bracket = riesz_mean(eigs_below(op, threshold, tol=tol), threshold, cfg.params.gamma), None
    from .experiments import _normalisation
    norm = _normalisation(cfg, h) * value
    payload = {"h": h, "threshold": threshold, "operator": op.description, "value": value,
               "normalized": norm, "bracket": bracket}
    text = f"{op.description}\nthreshold {threshold:.10g}: value {value:.10g}, normalized {norm:.10g}"
    if bracket:
        text += f", count bracket [{bracket[0]}, {bracket[1]}]"
    _emit(args, payload, text)
    return EXIT_PASS


def cmd_density(args):
    cfg = _single_config(args)
    if cfg.mode != "window":
        raise ParameterError("density pairings run in the window chart")
    h = args.h
    V = cfg.potential or TestPotential.gaussian_bump(1.0, 0.0, 1.0, 0.8, 0.5)
    alpha = cfg.params.alpha if cfg.regime == "second" else None
    cover = rescale_potential(V, h, cfg.regime, alpha).support
    op, threshold = _single_operator(cfg, h, cover=cover)
    spec = eigs_below(op, threshold, tol=cfg.tol * h ** (2 / 3), want_vectors=True)
    rho = projector_density(spec, threshold)
    pr = pair_density(rho, V, cfg.regime, h, alpha)
    predicted = density_pairing_limit(V, cfg.params, cfg.regime)
    payload = {"h": h, "threshold": threshold, "count": len(spec), "raw": pr.raw,
               "normalized": pr.normalized, "predicted": predicted, "operator": op.description}
    _emit(args, payload, f"{op.description}\n{len(spec)} states; pairing {pr.raw:.10g}, "
                         f"normalized {pr.normalized:.10g}, limit {predicted:.10g}")
    return EXIT_PASS


def cmd_study(args, force_study=None):
    started = datetime.now(timezone.utc).isoformat()
    overrides = {"workers": args.workers, "tol": args.tol}
    if force_study:
        overrides["study"] = force_study
    cfg = load_config(args.config, **overrides)
    out = args.out or cfg.output or "results"
    try:
        report = run_study(cfg)
    except IntegrityError as exc:
        write_outputs(None, cfg, out, started, error=str(exc))
        print(f"verdict: fail\n{exc}", file=sys.stderr)
        return EXIT_FAIL
    except StarkError as exc:
        write_outputs(None, cfg, out, started, error=f"{type(exc).__name__}: {exc}")
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    csv_path, man_path = write_outputs(report, cfg, out, started)
    payload = {"study": cfg.label, "verdict": report.verdict, "fitted_rate": report.fitted_rate,
               "csv": str(csv_path), "manifest": str(man_path)}
    lines = [f"{cfg.label}: {len(report.rows)} rows -> {csv_path}"]
    for r in report.rows:
        lines.append(f"  {r.series or '-':>8}  h={r.h:<10.4g} normalized={r.normalized:<14.8g} "
                     f"predicted={r.predicted:.8g}")
    lines.append(f"fitted rate {report.fitted_rate:.4g}; verdict {'pass' if report.verdict else 'fail'}")
    _emit(args, payload, "\n".join(lines))
    return EXIT_PASS if report.verdict else EXIT_FAIL


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    try:
        if args.command == "predict":
            return cmd_predict(args)
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "count":
            return cmd_count(args)
        if args.command == "density":
            return cmd_density(args)
        if args.command == "study":
            return cmd_study(args)
        if args.command == "bracket-check":
            return cmd_study(args, force_study="bracketing")
        if args.command == "configs":
            print("\n".join(bundled_configs()))
            return EXIT_PASS
    except (ConfigError, ParameterError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StarkError as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
