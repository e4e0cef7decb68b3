"""Acceptance criteria, each checked at its stated tolerance.

Every test prints one ``CRITERION n: PASS|FAIL`` line with the measured
numbers before asserting, so the verdicts are visible in ``pytest -v``
output even when an assertion fails.
"""

import math
import time

import numpy as np
import pytest
from scipy import integrate, optimize, special

from confined_stark.cli import load_config, main
from confined_stark.eigensolve import (count_below, eigs_below, projector_density, riesz_mean)
from confined_stark.errors import IntegrityError
from confined_stark.experiments import StudyConfig, chart_for, run_study
from confined_stark.operators import Edge, assemble_model_1d, assemble_schrodinger_1d, assemble_window_2d
from confined_stark.predictions import (LimitParams, counting_limit_first, density_limit,
                                        rough_weyl)
from confined_stark.specfun import airy_zero, airy_zero_asymptotic, airy_zeros_below

pytestmark = pytest.mark.acceptance


@pytest.fixture
def verdict(capsys):
    """Print the one-line verdict of a criterion, bypassing output capture."""

    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {number}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return emit


def _bisection_zeros(count):
    """Zeros of Ai(-x) by a 0.1 sign scan and bisection on scipy's Ai."""
    f = lambda x: special.airy(-x)[0]
    zeros, x = [], 0.0
    while len(zeros) < count:
        if f(x) * f(x + 0.1) < 0:
            zeros.append(optimize.bisect(f, x, x + 0.1, xtol=1e-14, rtol=4 * np.finfo(float).eps))
        x += 0.1
    return np.array(zeros)


def test_criterion_1_airy_zeros(verdict):
    t0 = time.perf_counter()
    zs = np.array([airy_zero(k) for k in range(1, 21)])
    asym = np.array([airy_zero_asymptotic(k) for k in range(1, 21)])
    elapsed = time.perf_counter() - t0
    oracle = _bisection_zeros(20)
    printed = round(zs[0], 3) == 2.338
    oracle_err = float(np.max(np.abs(zs - oracle)))
    rel = np.abs(zs - asym) / zs
    decreasing = bool(np.all(np.diff(rel) < 0))
    ok = printed and oracle_err <= 1e-9 and decreasing and rel[-1] <= 5e-4 and elapsed < 1.0
    verdict(1, ok, f"z1={zs[0]:.9f} (printed 2.338: {printed}); max |z-bisection| = {oracle_err:.1e}; "
                   f"asymptotic rel. error decreasing: {decreasing}, at k=20 {rel[-1]:.2e}; {elapsed:.3f} s")
    assert ok


def test_criterion_2_model_fidelity(verdict):
    t0 = time.perf_counter()
    vals_d = eigs_below(assemble_model_1d(40.0, 4000), 8.5).eigenvalues[:5]
    vals_n = eigs_below(assemble_model_1d(40.0, 4000, bc_right=Edge.NEUMANN), 8.5).eigenvalues[:5]
    elapsed = time.perf_counter() - t0
    z = np.array([airy_zero(k) for k in range(1, 6)])
    errs = vals_d - z
    dn = float(np.max(np.abs(vals_d - vals_n)))
    ok_zero = bool(np.all(np.abs(errs) <= 1e-4))
    ok = ok_zero and dn <= 1e-8 and elapsed < 5.0
    verdict(2, ok, "errors vs z_1..z_5: " + ", ".join(f"{e:+.2e}" for e in errs)
            + f"; |Dirichlet - Neumann| = {dn:.1e}; {elapsed:.2f} s"
            + ("" if ok_zero else f"  [leading error of the three-point scheme: -(d^2/12) z_k^2/5, "
                                  f"{-(40 / 4001) ** 2 / 12 * z[-1] ** 2 / 5:+.3e} for k=5]"))
    assert ok


def test_criterion_3_expansion(verdict):
    report = run_study(load_config("disk_expansion"))
    rates = {k: round(v, 3) for k, v in report.rates.items()}
    spacing = {k: f"{v:+.1%}" for k, v in report.checks["spacing_deviation"].items()}
    verdict(3, report.verdict, f"fitted rates {rates} (>= 1.25); spacing deviations at h=0.02 {spacing} (<= 10%)")
    assert report.verdict


def _limit_detail(report):
    last = report.rows[-1]
    text = (f"h={last.h:g}: {last.normalized:.5f} vs {last.predicted:.5f} "
            f"({last.normalized / last.predicted - 1:+.1%})")
    if "normalized_bracket" in last.extra:
        lo, hi = last.extra["normalized_bracket"]
        text += f", bracket [{lo:.5f}, {hi:.5f}]"
    return text


def test_criterion_4_first_regime(verdict):
    g0 = run_study(load_config("counting_first"))
    g1 = run_study(load_config("counting_first_riesz"))
    ok = g0.verdict and g0.checks["bracket_in_band"] and g1.verdict
    verdict(4, ok, f"gamma=0, mu=4: {_limit_detail(g0)}; gamma=1, mu=5: {_limit_detail(g1)}")
    assert ok


def test_criterion_5_second_regime(verdict):
    a80 = run_study(load_config("counting_second_a080"))
    a75 = run_study(load_config("counting_second_a075"))
    ok = a80.verdict and a75.verdict
    verdict(5, ok, f"alpha=0.80: {_limit_detail(a80)}; alpha=0.75: {_limit_detail(a75)}")
    assert ok


def test_criterion_6_large_mu(verdict):
    t0 = time.perf_counter()
    ratio = lambda m: counting_limit_first(LimitParams(0, m)) / rough_weyl(m)[0]
    dev50 = abs(ratio(50.0) - 1)
    mus = np.geomspace(20.0, 200.0, 61)
    devs = np.array([abs(ratio(m) - 1) for m in mus])
    exponent = float(-np.polyfit(np.log(mus), np.log(devs), 1)[0])
    elapsed = time.perf_counter() - t0
    ok_value = dev50 <= 0.15
    ok_exp = 0.6 <= exponent <= 0.9
    ok = ok_value and ok_exp and elapsed < 1.0
    verdict(6, ok, f"|ratio-1| at mu=50 = {dev50:.4f} (<= 0.15: {ok_value}); fitted decay exponent "
                   f"{exponent:.3f} (required in [0.6, 0.9]: {ok_exp}); {elapsed:.2f} s"
            + ("" if ok_exp else "  [the Airy-zero sum differs from the leading term by "
                                 "~(15 pi/16) mu^(-3/2): mu^(-3/4) is an upper bound, not the decay rate]"))
    assert ok


def _integrated_density_limit(params):
    x, wts = np.polynomial.legendre.leggauss(400)
    t, w = 15.0 * (x + 1), 15.0 * wts
    edges = sorted(math.sqrt(2 * (params.mu - z) / params.kappa0) for z in airy_zeros_below(params.mu))
    pts = sorted({-e for e in edges} | set(edges) | {0.0})
    inner = lambda s: float(np.dot(w, density_limit(s, t, params)))
    return sum(integrate.quad(inner, a, b, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
               for a, b in zip(pts[:-1], pts[1:]))


def test_criterion_7_density(verdict):
    report = run_study(load_config("density_first"))
    p = LimitParams(0, 3.0)
    identity = abs(_integrated_density_limit(p) / counting_limit_first(p) - 1)
    p9 = LimitParams(0, 9.0)
    identity = max(identity, abs(_integrated_density_limit(p9) / counting_limit_first(p9) - 1))
    ok = report.verdict and identity <= 1e-8
    verdict(7, ok, f"pairing {_limit_detail(report)}; |int int density / count - 1| = {identity:.1e}")
    assert ok


def test_criterion_8_bracketing(verdict):
    """Sandwich for every (h, mu) used in criteria 3-5 (violations raise)."""
    runs = [
        # criterion 3: thresholds spanning the three lowest levels
        StudyConfig("bracketing", (0.08, 0.04, 0.02), mu_list=(2.5, 3.5, 4.5)),
        # criterion 4
        StudyConfig("bracketing", (0.02, 0.01, 0.005), mu_list=(4.0, 5.0)),
        # criterion 5
        StudyConfig("bracketing", (1e-3, 1e-4, 1e-5), regime="second", params=LimitParams(0, 1.0, alpha=0.8)),
        StudyConfig("bracketing", (1e-3, 1e-4, 1e-5), regime="second", params=LimitParams(0, 1.0, alpha=0.75)),
    ]
    pairs, worst_gap, failures = 0, -np.inf, []
    for cfg in runs:
        try:
            report = run_study(cfg)
        except IntegrityError as exc:  # carries the offending triple
            failures.append(str(exc))
            continue
        pairs += len(report.rows)
        worst_gap = max(worst_gap, max(r.extra["ordering_gap"] for r in report.rows))
    ok = not failures
    verdict(8, ok, f"{pairs} (h, mu) pairs, D <= full <= M bracket-aware; "
                   f"max(lambda^M_k - lambda^D_k, k<=10) = {worst_gap:.1e}"
            + ("" if ok else f"; violations: {failures}"))
    assert ok


def test_criterion_9_perturbation(verdict):
    cfg = load_config("shift_second")
    report = run_study(cfg)
    target = 2 * cfg.params.alpha - 4 / 3 - 0.1
    rem = ", ".join(f"h={r.h:g}: {r.extra['remainder']:.2e}" for r in report.rows)
    verdict(9, report.verdict, f"remainder {rem}; fitted exponent {report.fitted_rate:.3f} (>= {target:.3f})")
    assert report.verdict


def test_criterion_10_infrastructure(verdict, tmp_path, capsys):
    # Riesz/counting identity: Tr(A - L)_- = int_{-inf}^{L} N(A, lam) dlam, by quadrature
    worst_identity = 0.0
    models = [assemble_model_1d(40.0, 800),
              assemble_schrodinger_1d(-8.0, 8.0, 800, potential=lambda x: 0.5 * x * x)]
    for op, Lam in zip(models, (9.5, 6.3)):
        spec = eigs_below(op, Lam)
        riesz = riesz_mean(spec, Lam, 1.0)
        knots = list(spec.eigenvalues) + [Lam]
        quad = sum(integrate.quad(lambda lam: count_below(op, lam).count, a, b, limit=10)[0]
                   for a, b in zip(knots[:-1], knots[1:]))
        worst_identity = max(worst_identity, abs(quad - riesz) / riesz)
    # projector density integrates to the count (1D model and a 2D window)
    worst_density = 0.0
    _, tmap = chart_for(StudyConfig("counting", (0.05,)))
    thr2 = 4.5 * 0.05 ** (2 / 3)
    for op, thr in ((models[0], 9.5), (assemble_window_2d(tmap, 0.05, threshold=thr2), thr2)):
        spec = eigs_below(op, thr, want_vectors=True)
        worst_density = max(worst_density, abs(projector_density(spec, thr).integral() - len(spec)))
    # byte-identical reruns through the command line
    texts = []
    for d in ("a", "b"):
        code = main(["study", "--config", "counting_first_riesz", "--out", str(tmp_path / d)])
        capsys.readouterr()
        texts.append((tmp_path / d / "results.csv").read_bytes())
    identical = texts[0] == texts[1] and code == 0
    ok = worst_identity <= 1e-8 and worst_density <= 1e-8 and identical
    verdict(10, ok, f"Riesz/counting identity rel. error {worst_identity:.1e}; "
                    f"|int rho - N| = {worst_density:.1e}; reruns byte-identical: {identical}")
    assert ok
