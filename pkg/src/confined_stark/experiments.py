"""
h-sweeps comparing computed spectra with their semiclassical limits.

Every study takes a :class:`StudyConfig` and returns a
:class:`ConvergenceReport` whose rows (one per ``h``, and per series such
as the eigenvalue index ``k``) hold the observed quantity, its normalised
form, the predicted limit and the deviation, plus a fitted convergence rate
and a pass/fail verdict against the declared tolerance.  Verdicts on limit
values use the smallest-``h`` row; the other rows feed the rate fit.
"""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .eigensolve import (count_below, eigs_below, pair_density, projector_density, riesz_from_counts,
                         riesz_mean)
from .errors import ConfigError, FitError, IntegrityError, ParameterError, StarkError
from .geometry import DomainSpec, build_domain, build_tubular_map
from .operators import (DEFAULT_ETA, BoundaryCondition, FullMesh, TestPotential, WindowGrid,
                        assemble_full_2d, assemble_model_1d, assemble_window_2d, full_mesh,
                        rescale_potential, window_grid)
from .predictions import (LimitParams, counting_limit_first, counting_limit_second,
                          density_pairing_limit, first_order_shift, perturbed_counting_limit,
                          three_term_eigenvalue)
from .specfun import airy_zero

__all__ = [
    "STUDIES",
    "StudyConfig",
    "ReportRow",
    "ConvergenceReport",
    "BracketReport",
    "fit_rate",
    "run_study",
    "run_expansion_study",
    "run_counting_study",
    "run_density_study",
    "run_bracketing_check",
    "run_perturbed_study",
    "run_shift_study",
]

STUDIES = ("expansion", "counting", "density", "bracketing", "perturbed", "shift")


# ----------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class StudyConfig:
    """Inputs of one study.

    Attributes
    ----------
    study : str
        One of :data:`STUDIES`.
    h_list : tuple of float
        Strictly decreasing semiclassical parameters.
    domain : DomainSpec
    params : LimitParams
    regime : str
        ``"first"`` (threshold ``mu h^{2/3}``) or ``"second"``
        (``z_1 h^{2/3} + mu h^alpha``).
    potential : TestPotential or None
    k_list : tuple of int
        Eigenvalue indices (expansion study).
    mu_list : tuple of float
        Extra thresholds for the bracketing check (default: ``params.mu``).
    mode : str
        ``"window"`` or ``"full"`` operator for counting studies.
    bc : str
        Window boundary condition, ``"dirichlet"`` or ``"mixed"``.
    exact_tau1 : bool
        Use the exact ``tau1`` and metric (else the separable model).
    eta : float
    resolution : float
        Grid refinement factor.
    richardson : bool
        Extrapolate eigenvalues from grids at ``resolution`` and twice it.
    tol : float
        Eigenvalue tolerance and counting-bracket width, relative to the
        energy scale ``h^{2/3}``.
    tolerance : float
        Relative acceptance tolerance on limit values.
    rate_min : float
        Minimum fitted rate (expansion and shift studies).
    spacing_tol : float
        Relative tolerance on the eigenvalue spacing (expansion study).
    m_min : float
        Smallest admitted Jacobian in the tubular chart.
    s0 : float
        Tangential coordinate of the transverse slice (shift study).
    workers : int
        Concurrent per-``h`` jobs.
    name : str
        Label written to the ``study`` CSV column.
    output : str or None
        Output directory used by the command-line interface.
    """

    study: str
    h_list: tuple
    domain: DomainSpec = field(default_factory=lambda: DomainSpec.disk(1.0, (1.0, 0.0)))
    params: LimitParams = field(default_factory=LimitParams)
    regime: str = "first"
    potential: Optional[TestPotential] = None
    k_list: tuple = (1, 2, 3)
    mu_list: tuple = ()
    mode: str = "window"
    bc: str = "dirichlet"
    exact_tau1: bool = True
    eta: float = DEFAULT_ETA
    resolution: float = 1.0
    richardson: bool = False
    tol: float = 1e-6
    tolerance: float = 0.15
    rate_min: float = 1.25
    spacing_tol: float = 0.10
    m_min: float = 0.1
    s0: float = 0.0
    workers: int = 1
    name: str = ""
    output: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "h_list", tuple(float(h) for h in self.h_list))
        object.__setattr__(self, "k_list", tuple(int(k) for k in self.k_list))
        object.__setattr__(self, "mu_list", tuple(float(m) for m in self.mu_list))
        problems = self.problems()
        if problems:
            raise ConfigError("invalid study configuration:\n  - " + "\n  - ".join(problems))

    def problems(self):
        """All schema violations, as messages."""
        out = []
        if self.study not in STUDIES:
            out.append(f"study must be one of {STUDIES}, got {self.study!r}")
        if not self.h_list:
            out.append("h_list must not be empty")
        if any(not (h > 0 and math.isfinite(h)) for h in self.h_list):
            out.append("h_list entries must be positive and finite")
        if any(b >= a for a, b in zip(self.h_list, self.h_list[1:])):
            out.append("h_list must be strictly decreasing")
        if self.regime not in ("first", "second"):
            out.append(f"regime must be 'first' or 'second', got {self.regime!r}")
        if self.regime == "second" and self.params.alpha is None and self.study != "expansion":
            out.append("second regime requires params.alpha in (2/3, 1)")
        if self.mode not in ("window", "full"):
            out.append(f"mode must be 'window' or 'full', got {self.mode!r}")
        if self.bc not in ("dirichlet", "mixed"):
            out.append(f"bc must be 'dirichlet' or 'mixed', got {self.bc!r}")
        if not 0 < self.eta < 1 / 15:
            out.append(f"eta must lie in (0, 1/15), got {self.eta}")
        if self.regime == "second" and self.params.alpha is not None and not self.eta < (1 - self.params.alpha) / 5:
            out.append(f"eta must be below (1 - alpha)/5 = {(1 - self.params.alpha) / 5:.4g}")
        if not self.resolution > 0:
            out.append("resolution must be positive")
        if not self.tol > 0:
            out.append("tol must be positive")
        if not self.tolerance > 0:
            out.append("tolerance must be positive")
        if any(k < 1 for k in self.k_list) or not self.k_list:
            out.append("k_list entries must be >= 1")
        if not 0 < self.m_min < 1:
            out.append("m_min must lie in (0, 1)")
        if self.workers < 1:
            out.append("workers must be >= 1")
        if self.study in ("density", "perturbed", "shift") and self.potential is None:
            out.append(f"the {self.study} study needs a potential")
        if self.study == "shift" and (self.params.alpha is None):
            out.append("the shift study needs params.alpha")
        if self.study == "density" and self.mode != "window":
            out.append("density studies run in the window chart (mode = 'window')")
        return out

    @property
    def label(self):
        return self.name or self.study

    def to_dict(self):
        """Plain-data form (round-trips through :meth:`from_dict`)."""
        return {
            "study": self.study,
            "name": self.name,
            "h_list": list(self.h_list),
            "domain": self.domain.to_dict(),
            "params": self.params.to_dict(),
            "regime": self.regime,
            "potential": None if self.potential is None else self.potential.to_dict(),
            "k_list": list(self.k_list),
            "mu_list": list(self.mu_list),
            "mode": self.mode,
            "bc": self.bc,
            "exact_tau1": self.exact_tau1,
            "eta": self.eta,
            "resolution": self.resolution,
            "richardson": self.richardson,
            "tol": self.tol,
            "tolerance": self.tolerance,
            "rate_min": self.rate_min,
            "spacing_tol": self.spacing_tol,
            "m_min": self.m_min,
            "s0": self.s0,
            "workers": self.workers,
            "output": self.output,
        }

    @classmethod
    def from_dict(cls, data):
        """Build and validate a configuration; unknown keys are errors."""
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a table")
        data = dict(data)
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        problems = [f"unknown key {k!r}" for k in unknown]
        if "study" not in data:
            problems.append("missing key 'study'")
        if "h_list" not in data:
            problems.append("missing key 'h_list'")
        kwargs = {k: v for k, v in data.items() if k in known}
        try:
            if "domain" in kwargs:
                kwargs["domain"] = DomainSpec.from_dict(kwargs["domain"])
            if "params" in kwargs:
                kwargs["params"] = LimitParams(**kwargs["params"])
            if kwargs.get("potential") is not None:
                kwargs["potential"] = TestPotential.from_dict(kwargs["potential"])
        except (StarkError, TypeError) as exc:
            problems.append(str(exc))
        if problems:
            raise ConfigError("invalid study configuration:\n  - " + "\n  - ".join(problems))
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(f"invalid study configuration: {exc}") from None


# ----------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class ReportRow:
    """One ``(series, h)`` entry of a report."""

    h: float
    observed: float
    normalized: float
    predicted: float
    deviation: float
    series: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def rel_deviation(self):
        if self.predicted == 0:
            return abs(self.deviation)
        return abs(self.deviation) / abs(self.predicted)


@dataclass(frozen=True)
class ConvergenceReport:
    """Rows ordered by ``h`` descending within each series, rates and verdict."""

    study: str
    rows: tuple
    fitted_rate: float
    verdict: bool
    tolerance: float
    rates: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    notes: tuple = ()

    def series(self, name):
        return [r for r in self.rows if r.series == name]

    def csv_rows(self):
        """Rows in the stable column schema, one per ``(series, h)``."""
        out = []
        for r in self.rows:
            label = f"{self.study}:{r.series}" if r.series else self.study
            rate = self.rates.get(r.series, self.fitted_rate)
            out.append({
                "study": label,
                "h": r.h,
                "observed": r.observed,
                "normalized": r.normalized,
                "predicted": r.predicted,
                "deviation": r.deviation,
                "rate": rate,
                "verdict": "pass" if self.verdict else "fail",
            })
        return out


BracketReport = ConvergenceReport


def fit_rate(pairs):
    """Least-squares slope of ``log residual`` against ``log h``.

    Nonpositive or non-finite residuals are dropped with a warning; fewer
    than three usable points raise :class:`FitError`.
    """
    pairs = [(float(h), float(r)) for h, r in pairs]
    good = [(h, r) for h, r in pairs if h > 0 and r > 0 and math.isfinite(r)]
    if len(good) < len(pairs):
        warnings.warn(f"dropped {len(pairs) - len(good)} nonpositive residual(s) from the rate fit",
                      RuntimeWarning, stacklevel=2)
    if len(good) < 3:
        raise FitError(f"need at least 3 positive residuals for a rate fit, got {len(good)}")
    x = np.log([h for h, _ in good])
    y = np.log([r for _, r in good])
    slope = np.polyfit(x, y, 1)[0]
    return float(slope)


def _safe_rate(pairs):
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return fit_rate(pairs)
    except FitError:
        return float("nan")


# ----------------------------------------------------------------------------
# shared plumbing


@lru_cache(maxsize=16)
def _chart(domain_json, m_min):
    spec = DomainSpec.from_dict(json.loads(domain_json))
    curve = build_domain(spec)
    return curve, build_tubular_map(curve, m_min=m_min)


def chart_for(cfg):
    """Boundary curve and tubular chart of the configured domain (cached)."""
    return _chart(json.dumps(cfg.domain.to_dict(), sort_keys=True), cfg.m_min)


def _map_h(cfg, job):
    if cfg.workers > 1 and len(cfg.h_list) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(job, cfg.h_list))
    return [job(h) for h in cfg.h_list]


def _threshold(cfg, h, x0):
    p = cfg.params
    if cfg.regime == "first":
        return x0 + p.mu * h ** (2 / 3)
    return x0 + airy_zero(1) * h ** (2 / 3) + p.mu * h ** p.alpha


def _normalisation(cfg, h):
    """Factor turning a Riesz mean into the quantity with a finite limit."""
    g, p = cfg.params.gamma, cfg.params
    if cfg.regime == "first":
        return h ** ((1 - 2 * g) / 3)
    return h ** (1 - p.alpha * (1 + g))


def _energy_tol(cfg, h):
    return cfg.tol * h ** (2 / 3)


def _window_op(cfg, tmap, h, threshold, bc=None, V_resc=None, resolution=None, grid=None, cover=None):
    return assemble_window_2d(tmap, h, eta=cfg.eta, bc=bc or cfg.bc, V_resc=V_resc,
                              use_exact_tau1=cfg.exact_tau1, threshold=threshold,
                              resolution=resolution or cfg.resolution, grid=grid,
                              alpha=cfg.params.alpha if cfg.regime == "second" else None,
                              cover=cover)


def _limit_verdict(rows, tolerance):
    last = rows[-1]
    if last.predicted == 0:
        return abs(last.normalized) <= tolerance
    return abs(last.normalized / last.predicted - 1) <= tolerance


# ----------------------------------------------------------------------------
# studies


def run_expansion_study(cfg, eigenvalue_source: Optional[Callable] = None):
    """Residuals of ``lambda_k`` against the three-term expansion.

    ``eigenvalue_source(h, k_list)``, if given, replaces the solver (used
    to test the report logic on synthetic data).  The verdict requires a
    fitted rate ``>= rate_min`` for every ``k`` and, at the smallest ``h``,
    consecutive spacings within ``spacing_tol`` of ``2 sqrt(kappa0/2) h``.
    """
    p = cfg.params
    kmax = max(cfg.k_list)
    if eigenvalue_source is None:
        curve, tmap = chart_for(cfg)

        def solve(h):
            pred_top = three_term_eigenvalue(kmax, h, p)
            spacing = 2 * math.sqrt(tmap.kappa0 / 2) * h
            threshold = pred_top + spacing
            grid = window_grid(tmap, h, threshold=threshold + spacing, eta=cfg.eta,
                               resolution=cfg.resolution)
            try:
                vals = _expansion_eigs(cfg, tmap, h, threshold, grid, kmax)
                if cfg.richardson:
                    fine = WindowGrid(grid.s_half, grid.t_max, 2 * grid.ns, 2 * grid.nt)
                    vals2 = _expansion_eigs(cfg, tmap, h, threshold, fine, kmax)
                    vals = (4 * vals2 - vals) / 3
            except StarkError as exc:
                raise type(exc)(f"h={h:g}: {exc}") from exc
            return {k: float(vals[k - 1]) for k in cfg.k_list}
    else:
        def solve(h):
            vals = eigenvalue_source(h, cfg.k_list)
            return {k: float(v) for k, v in zip(cfg.k_list, vals)}

    results = _map_h(cfg, solve)
    rows, rates = [], {}
    for k in cfg.k_list:
        series = f"k={k}"
        pairs = []
        for h, vals in zip(cfg.h_list, results):
            pred = three_term_eigenvalue(k, h, p)
            res = vals[k] - pred
            rows.append(ReportRow(h, vals[k], res, pred, res, series))
            pairs.append((h, abs(res)))
        if all(abs(r) <= 1e-14 for _, r in pairs):
            rates[series] = float("inf")
        else:
            rates[series] = _safe_rate(pairs)
    # spacing at the smallest h
    h_min = cfg.h_list[-1]
    last = results[-1]
    expected = 2 * math.sqrt(p.kappa0 / 2) * h_min
    ks = sorted(cfg.k_list)
    spacing_dev = {}
    for a, b in zip(ks, ks[1:]):
        gap = (last[b] - last[a]) / (b - a)
        spacing_dev[f"{a}->{b}"] = gap / expected - 1
    spacing_ok = all(abs(d) <= cfg.spacing_tol for d in spacing_dev.values())
    rate_vals = [r for r in rates.values()]
    rates_ok = all((not math.isnan(r)) and r >= cfg.rate_min for r in rate_vals)
    fitted = min(rate_vals) if rate_vals else float("nan")
    return ConvergenceReport(cfg.label, tuple(rows), fitted, bool(rates_ok and spacing_ok),
                             cfg.rate_min, rates,
                             {"spacing_deviation": spacing_dev, "spacing_ok": spacing_ok,
                              "rates_ok": rates_ok})


def _expansion_eigs(cfg, tmap, h, threshold, grid, kmax):
    for _ in range(6):
        op = _window_op(cfg, tmap, h, threshold, bc="dirichlet", grid=grid)
        spec = eigs_below(op, threshold, tol=_energy_tol(cfg, h))
        if len(spec) >= kmax:
            return spec.eigenvalues[:kmax]
        threshold += 2 * math.sqrt(tmap.kappa0 / 2) * h
    raise IntegrityError(f"fewer than {kmax} eigenvalues found near the predicted levels")


def _counting_point(cfg, h, V_resc=None):
    """Observed Riesz mean (or count) and its bracket at one ``h``."""
    curve, tmap = chart_for(cfg)
    threshold = _threshold(cfg, h, curve.x0)
    g = cfg.params.gamma
    tol = _energy_tol(cfg, h)
    if cfg.mode == "full":
        if V_resc is not None:
            raise ParameterError("perturbed studies run in the window chart")
        op = assemble_full_2d(cfg.domain, h, threshold=threshold, resolution=cfg.resolution,
                              curve=curve)
    else:
        op = _window_op(cfg, tmap, h, threshold, V_resc=V_resc)
    extra = {"operator": op.description, "n": op.n}
    if g == 0:
        c = count_below(op, threshold, tol)
        extra.update(bracket=(c.lower, c.upper))
        return float(c.count), extra
    spec = eigs_below(op, threshold, tol=tol)
    value = riesz_mean(spec, threshold, g)
    extra["count"] = len(spec)
    if g == 1:
        lower = float(spec.eigenvalues[0]) - 1.0 if len(spec) else threshold - 1.0
        extra["identity_error"] = abs(riesz_from_counts(spec.eigenvalues, threshold, lower) - value)
    return value, extra


def _limit_rows(cfg, observations, predicted, series=""):
    rows = []
    for h, (obs, extra) in zip(cfg.h_list, observations):
        factor = _normalisation(cfg, h)
        norm = factor * obs
        extra = dict(extra)
        if "bracket" in extra:
            extra["normalized_bracket"] = tuple(factor * b for b in extra["bracket"])
        rows.append(ReportRow(h, obs, norm, predicted, norm - predicted, series, extra))
    return rows


def _bracket_in_band(row, tolerance):
    if "normalized_bracket" not in row.extra or row.predicted == 0:
        return True
    lo, hi = row.extra["normalized_bracket"]
    return abs(lo / row.predicted - 1) <= tolerance and abs(hi / row.predicted - 1) <= tolerance


def run_counting_study(cfg):
    """Normalised Riesz means (``gamma = 0``: counts) against the limits.

    First regime: ``h^{(1-2 gamma)/3} Tr(L_h - x0 - mu h^{2/3})_-^gamma``.
    Second regime: ``h^{1 - alpha(1+gamma)} Tr(L_h - x0 - z_1 h^{2/3} - mu h^alpha)_-^gamma``.
    For ``gamma = 0`` the whole counting bracket must lie in the tolerance
    band at the smallest ``h``.
    """
    predicted = counting_limit_first(cfg.params) if cfg.regime == "first" else counting_limit_second(cfg.params)
    obs = _map_h(cfg, lambda h: _counting_point(cfg, h))
    rows = _limit_rows(cfg, obs, predicted)
    rate = _safe_rate([(r.h, abs(r.deviation)) for r in rows])
    ok = _limit_verdict(rows, cfg.tolerance) and _bracket_in_band(rows[-1], cfg.tolerance)
    checks = {"bracket_in_band": _bracket_in_band(rows[-1], cfg.tolerance)}
    if cfg.params.gamma == 1:
        checks["identity_error"] = max(r.extra.get("identity_error", 0.0) for r in rows)
    return ConvergenceReport(cfg.label, tuple(rows), rate, bool(ok), cfg.tolerance, {}, checks)


def run_density_study(cfg):
    """Normalised pairing of the projector density with the rescaled potential."""
    V = cfg.potential
    predicted = density_pairing_limit(V, cfg.params, cfg.regime)
    curve, tmap = chart_for(cfg)

    def point(h):
        threshold = _threshold(cfg, h, curve.x0)
        alpha = cfg.params.alpha if cfg.regime == "second" else None
        cover = None
        if not V.is_zero:
            cover = rescale_potential(V, h, cfg.regime, alpha).support
        op = _window_op(cfg, tmap, h, threshold, cover=cover)
        spec = eigs_below(op, threshold, tol=_energy_tol(cfg, h), want_vectors=True)
        rho = projector_density(spec, threshold)
        pr = pair_density(rho, V, cfg.regime, h, alpha)
        return pr.raw, {"count": len(spec), "density_integral": rho.integral(),
                        "factor": pr.factor, "operator": op.description}

    obs = _map_h(cfg, point)
    rows = []
    for h, (raw, extra) in zip(cfg.h_list, obs):
        norm = extra["factor"] * raw
        rows.append(ReportRow(h, raw, norm, predicted, norm - predicted, "", extra))
    rate = _safe_rate([(r.h, abs(r.deviation)) for r in rows])
    ok = _limit_verdict(rows, cfg.tolerance)
    integ = max(abs(r.extra["density_integral"] - r.extra["count"]) for r in rows)
    return ConvergenceReport(cfg.label, tuple(rows), rate, bool(ok), cfg.tolerance, {},
                             {"density_integral_error": integ})


def run_perturbed_study(cfg):
    """Normalised Riesz means of the potential-perturbed window operator."""
    V = cfg.potential
    predicted = perturbed_counting_limit(cfg.params, V, cfg.regime)

    def point(h):
        alpha = cfg.params.alpha if cfg.regime == "second" else None
        V_resc = None if V.is_zero else rescale_potential(V, h, cfg.regime, alpha)
        return _counting_point(cfg, h, V_resc)

    obs = _map_h(cfg, point)
    rows = _limit_rows(cfg, obs, predicted)
    rate = _safe_rate([(r.h, abs(r.deviation)) for r in rows])
    ok = _limit_verdict(rows, cfg.tolerance) and _bracket_in_band(rows[-1], cfg.tolerance)
    return ConvergenceReport(cfg.label, tuple(rows), rate, bool(ok), cfg.tolerance, {},
                             {"bracket_in_band": _bracket_in_band(rows[-1], cfg.tolerance)})


def run_shift_study(cfg, T=40.0, n=4000):
    """First-order shift of the lowest transverse level under ``h^{alpha-2/3} V(s0, t)``.

    For each ``h`` the lowest eigenvalue of ``-d^2/dt^2 + t +
    h^{alpha-2/3} V(s0, t)`` minus that of the unperturbed operator (same
    grid) is compared with ``h^{alpha-2/3} int V(s0,t) a_1(t)^2 dt``.  The
    remainder must decay at a fitted rate ``>= (2 alpha - 4/3) - 0.1``.

    Rows hold the measured shift, the shift divided by the coupling
    ``h^{alpha-2/3}`` (normalised), its limit ``int V a_1^2`` (predicted)
    and the normalised deviation; the rate is fitted to the absolute
    remainder ``shift - h^{alpha-2/3} int V a_1^2`` (``extra['remainder']``).
    """
    V, alpha, s0 = cfg.potential, cfg.params.alpha, cfg.s0
    base = assemble_model_1d(T, n)
    lam0 = eigs_below(base, airy_zero(1) + 0.5).eigenvalues[0]
    shift1 = first_order_shift(s0, V, 1)

    def point(h):
        eps = h ** (alpha - 2 / 3)
        op = assemble_model_1d(T, n, V_slice=lambda t: V(s0, t), coupling=eps)
        lam = eigs_below(op, airy_zero(1) + 0.5 + eps * V.sup_norm).eigenvalues[0]
        return lam - lam0, eps

    obs = _map_h(cfg, point)
    rows = []
    for h, (shift, eps) in zip(cfg.h_list, obs):
        remainder = shift - eps * shift1
        rows.append(ReportRow(h, float(shift), float(shift / eps), shift1, float(remainder / eps), "",
                              {"coupling": eps, "remainder": float(remainder)}))
    rate = _safe_rate([(r.h, abs(r.extra["remainder"])) for r in rows])
    target = 2 * alpha - 4 / 3 - 0.1
    ok = (not math.isnan(rate)) and rate >= target
    return ConvergenceReport(cfg.label, tuple(rows), rate, bool(ok), target, {},
                             {"expected_rate": 2 * alpha - 4 / 3, "first_order_integral": shift1})


def run_bracketing_check(cfg):
    """Dirichlet-window <= full domain <= mixed-window counts at every ``(h, mu)``.

    The three operators share one window (the full-domain mesh is
    truncated to a box containing the window's image).  Counts are
    compared through their tolerance brackets: ``D.lower <= F.upper`` and
    ``F.lower <= M.upper``.  The mixed and Dirichlet windows share a grid, so
    ``lambda_k^M <= lambda_k^D`` must hold exactly (to roundoff) for ``k <= 10``.

    Raises
    ------
    IntegrityError
        On any violation, with the offending triple.
    """
    curve, tmap = chart_for(cfg)
    mus = cfg.mu_list or (cfg.params.mu,)

    def point(h):
        out = []
        for mu in mus:
            c = replace(cfg, params=replace(cfg.params, mu=mu))
            threshold = _threshold(c, h, curve.x0)
            tol = _energy_tol(c, h)
            grid = window_grid(tmap, h, threshold=threshold, eta=cfg.eta, resolution=cfg.resolution)
            opD = _window_op(c, tmap, h, threshold, bc="dirichlet", grid=grid)
            opM = _window_op(c, tmap, h, threshold, bc="mixed", grid=grid)
            mesh = _covering_mesh(curve, tmap, h, threshold, grid, cfg.resolution)
            opF = assemble_full_2d(cfg.domain, h, mesh, curve=curve)
            cD, cF, cM = (count_below(op, threshold, tol) for op in (opD, opF, opM))
            # eigenvalue ordering on the shared grid
            top = threshold + 10 * math.sqrt(2 * tmap.kappa0) * h + 3 * h ** (2 / 3)
            lD = eigs_below(opD, top, tol=tol).eigenvalues[:10]
            lM = eigs_below(opM, top, tol=tol).eigenvalues[:10]
            k = min(len(lD), len(lM))
            order_gap = float(np.max(lM[:k] - lD[:k])) if k else 0.0
            out.append((mu, cD, cF, cM, order_gap, k))
        return out

    results = _map_h(cfg, point)
    rows, violations = [], []
    for h, per_mu in zip(cfg.h_list, results):
        for mu, cD, cF, cM, order_gap, k in per_mu:
            ok = cD.lower <= cF.upper and cF.lower <= cM.upper
            order_ok = order_gap <= 1e-12 * max(1.0, abs(cD.threshold))
            if not ok:
                violations.append(f"h={h:g} mu={mu:g}: D={cD.count} [{cD.lower},{cD.upper}] "
                                  f"F={cF.count} [{cF.lower},{cF.upper}] M={cM.count} [{cM.lower},{cM.upper}]")
            if not order_ok:
                violations.append(f"h={h:g} mu={mu:g}: mixed eigenvalue exceeds Dirichlet by {order_gap:.3e}")
            rows.append(ReportRow(h, float(cF.count), float(cD.count), float(cM.count),
                                  float(cM.count - cD.count), f"mu={mu:g}",
                                  {"dirichlet": (cD.lower, cD.count, cD.upper),
                                   "full": (cF.lower, cF.count, cF.upper),
                                   "mixed": (cM.lower, cM.count, cM.upper),
                                   "ordering_gap": order_gap, "ordered_pairs": k}))
    report = ConvergenceReport(cfg.label, tuple(rows), float("nan"), not violations, 0.0, {},
                               {"violations": violations})
    if violations:
        raise IntegrityError("bracketing violated:\n  " + "\n  ".join(violations))
    return report


def _covering_mesh(curve, tmap, h, threshold, grid, resolution):
    """Full-domain mesh whose truncation box contains the window's image."""
    base = full_mesh(curve, h, threshold=threshold, resolution=resolution, truncate=False)
    s = np.linspace(-grid.s_half, grid.s_half, 401)
    t = np.linspace(0.0, grid.t_max, 101)
    pts = tmap.tau(np.repeat(s, t.size), np.tile(t, s.size))
    pad = 2 * max(base.dx, base.dy)
    x_cut = float(np.max(pts[0])) + pad
    y_half = float(np.max(np.abs(pts[1] - curve.X0[1]))) + pad
    return FullMesh(base.dx, base.dy, x_cut, y_half)


_RUNNERS = {
    "expansion": run_expansion_study,
    "counting": run_counting_study,
    "density": run_density_study,
    "bracketing": run_bracketing_check,
    "perturbed": run_perturbed_study,
    "shift": run_shift_study,
}


def run_study(cfg):
    """Dispatch on ``cfg.study``."""
    return _RUNNERS[cfg.study](cfg)
