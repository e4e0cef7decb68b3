"""Study orchestration: configuration, rate fitting and report logic."""

import math
import warnings
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confined_stark.errors import ConfigError, FitError, IntegrityError
from confined_stark.experiments import (ConvergenceReport, StudyConfig, fit_rate,
                                        run_bracketing_check, run_counting_study,
                                        run_density_study, run_expansion_study,
                                        run_perturbed_study, run_shift_study, run_study)
from confined_stark.geometry import DomainSpec
from confined_stark.operators import TestPotential
from confined_stark.predictions import LimitParams, three_term_eigenvalue

BUMP = TestPotential.gaussian_bump(1.0, 0.0, 1.0, 0.8, 0.5)


class TestStudyConfig:
    def test_defaults(self):
        cfg = StudyConfig("expansion", (0.08, 0.04, 0.02))
        assert cfg.domain == DomainSpec.disk(1.0, (1.0, 0.0))
        assert cfg.label == "expansion"

    @pytest.mark.parametrize("kwargs, fragment", [
        ({"h_list": (0.02, 0.04, 0.08)}, "strictly decreasing"),
        ({"h_list": (0.04, 0.04, 0.02)}, "strictly decreasing"),
        ({"h_list": ()}, "must not be empty"),
        ({"h_list": (0.1, -0.1)}, "positive"),
        ({"study": "nonsense"}, "study must be one of"),
        ({"regime": "third"}, "regime"),
        ({"mode": "half"}, "mode"),
        ({"bc": "robin"}, "bc"),
        ({"eta": 0.1}, "eta"),
        ({"workers": 0}, "workers"),
        ({"k_list": (0, 1)}, "k_list"),
    ])
    def test_schema_errors(self, kwargs, fragment):
        base = {"study": "expansion", "h_list": (0.08, 0.04, 0.02)}
        base.update(kwargs)
        with pytest.raises(ConfigError, match=fragment):
            StudyConfig(**base)

    def test_all_problems_enumerated(self):
        with pytest.raises(ConfigError) as info:
            StudyConfig("density", (0.01, 0.02), mode="full")
        msg = str(info.value)
        assert "strictly decreasing" in msg and "needs a potential" in msg and "window" in msg

    def test_second_regime_needs_alpha(self):
        with pytest.raises(ConfigError, match="alpha"):
            StudyConfig("counting", (1e-3, 1e-4), regime="second", params=LimitParams(0, 1.0))

    def test_eta_bound_second_regime(self):
        with pytest.raises(ConfigError, match="1 - alpha"):
            StudyConfig("counting", (1e-3, 1e-4), regime="second", eta=0.05,
                        params=LimitParams(0, 1.0, alpha=0.8))

    @pytest.mark.parametrize("cfg", [
        StudyConfig("expansion", (0.08, 0.04, 0.02), name="disk", k_list=(1, 2)),
        StudyConfig("perturbed", (0.01, 0.005, 0.0025), potential=BUMP, params=LimitParams(0, 4.0)),
        StudyConfig("counting", (1e-3, 1e-4, 1e-5), regime="second",
                    params=LimitParams(0, 1.0, alpha=0.8, kappa0=2.0, x0=0.0),
                    domain=DomainSpec.ellipse(2.0, 1.0, (2.0, 0.0))),
        StudyConfig("bracketing", (0.05, 0.02), mu_list=(2.0, 3.0), output="out/x"),
    ])
    def test_round_trip(self, cfg):
        assert StudyConfig.from_dict(cfg.to_dict()) == cfg

    def test_unknown_key(self):
        data = StudyConfig("expansion", (0.08, 0.04, 0.02)).to_dict()
        data["colour"] = "blue"
        with pytest.raises(ConfigError, match="unknown key 'colour'"):
            StudyConfig.from_dict(data)

    def test_missing_keys(self):
        with pytest.raises(ConfigError, match="missing key 'h_list'"):
            StudyConfig.from_dict({"study": "expansion"})

    def test_bad_nested_params(self):
        with pytest.raises(ConfigError, match="alpha"):
            StudyConfig.from_dict({"study": "counting", "h_list": [0.1, 0.05],
                                   "params": {"alpha": 0.5}})


class TestFitRate:
    @pytest.mark.parametrize("c, p", [(3.0, 4 / 3), (1.0, 2.0), (0.2, 0.5)])
    def test_exact_power_law(self, c, p):
        hs = [0.08, 0.04, 0.02, 0.01]
        assert fit_rate([(h, c * h ** p) for h in hs]) == pytest.approx(p, abs=1e-12)

    def test_examples(self):
        hs = [0.08, 0.04, 0.02]
        assert round(fit_rate([(h, 3 * h ** (4 / 3)) for h in hs]), 4) == 1.3333
        assert fit_rate([(h, h ** 2) for h in hs]) == pytest.approx(2.0)

    @given(st.integers(0, 2 ** 32 - 1), st.floats(0.5, 2.5))
    @settings(max_examples=50)
    def test_noisy_power_law(self, seed, p):
        rng = np.random.default_rng(seed)
        hs = 0.1 * 0.5 ** np.arange(5)
        noise = rng.uniform(-0.05, 0.05, hs.size)
        pairs = list(zip(hs, hs ** p * (1 + noise)))
        assert fit_rate(pairs) == pytest.approx(p, abs=0.1)

    def test_nonpositive_dropped_with_warning(self):
        pairs = [(0.08, 0.08 ** 2), (0.04, 0.0), (0.02, 0.02 ** 2), (0.01, 0.01 ** 2), (0.005, -1.0)]
        with pytest.warns(RuntimeWarning, match="dropped 2"):
            assert fit_rate(pairs) == pytest.approx(2.0)

    def test_too_few_points(self):
        with pytest.raises(FitError):
            fit_rate([(0.1, 1.0), (0.05, 0.5)])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            with pytest.raises(FitError):
                fit_rate([(0.1, 1.0), (0.05, 0.5), (0.02, 0.0)])


class TestExpansionStudy:
    def test_synthetic_exact(self):
        cfg = StudyConfig("expansion", (0.08, 0.04, 0.02))
        p = cfg.params
        report = run_expansion_study(cfg, lambda h, ks: [three_term_eigenvalue(k, h, p) for k in ks])
        assert all(r.deviation == 0 for r in report.rows)
        assert report.verdict
        assert report.checks["spacing_ok"]

    def test_synthetic_rate(self):
        cfg = StudyConfig("expansion", (0.08, 0.04, 0.02, 0.01))
        p = cfg.params
        src = lambda h, ks: [three_term_eigenvalue(k, h, p) + 0.3 * k * h ** (4 / 3) for k in ks]
        report = run_expansion_study(cfg, src)
        for k in (1, 2, 3):
            assert report.rates[f"k={k}"] == pytest.approx(4 / 3, abs=1e-10)
        assert report.verdict

    def test_synthetic_wrong_spacing_fails(self):
        cfg = StudyConfig("expansion", (0.08, 0.04, 0.02))
        p = LimitParams(kappa0=1.5)
        src = lambda h, ks: [three_term_eigenvalue(k, h, p) for k in ks]
        report = run_expansion_study(cfg, src)
        assert not report.checks["spacing_ok"]
        assert not report.verdict

    def test_rows_ordered(self):
        cfg = StudyConfig("expansion", (0.08, 0.04, 0.02), k_list=(1, 2))
        report = run_expansion_study(cfg, lambda h, ks: [three_term_eigenvalue(k, h, cfg.params) for k in ks])
        for series in ("k=1", "k=2"):
            hs = [r.h for r in report.series(series)]
            assert hs == sorted(hs, reverse=True)

    def test_misspecified_curvature_rate(self):
        """Using kappa0 = 2 on the unit disk leaves an O(h) residual."""
        cfg = StudyConfig("expansion", (0.02, 0.01, 0.005), params=LimitParams(kappa0=2.0), k_list=(1,))
        report = run_expansion_study(cfg)
        assert report.fitted_rate == pytest.approx(1.0, abs=0.15)
        assert not report.verdict
        good = run_expansion_study(replace(cfg, params=LimitParams(kappa0=1.0)))
        assert good.fitted_rate > 1.25


class TestCountingStudy:
    def test_below_first_zero(self):
        cfg = StudyConfig("counting", (0.08, 0.04, 0.02), params=LimitParams(0, 2.0))
        report = run_counting_study(cfg)
        assert all(r.observed == 0 and r.predicted == 0 for r in report.rows)
        assert report.verdict

    def test_deterministic(self):
        cfg = StudyConfig("counting", (0.08, 0.06, 0.04), params=LimitParams(1, 5.0))
        a, b = run_counting_study(cfg), run_counting_study(cfg)
        assert a.csv_rows() == b.csv_rows()

    def test_workers_do_not_change_results(self):
        cfg = StudyConfig("counting", (0.08, 0.06, 0.04), params=LimitParams(0, 4.0))
        par = StudyConfig.from_dict({**cfg.to_dict(), "workers": 3})
        assert run_counting_study(cfg).csv_rows() == run_counting_study(par).csv_rows()

    def test_riesz_identity_recorded(self):
        cfg = StudyConfig("counting", (0.08, 0.06, 0.04), params=LimitParams(1, 5.0))
        report = run_counting_study(cfg)
        assert report.checks["identity_error"] <= 1e-8 * max(abs(r.observed) for r in report.rows)

    def test_bracket_recorded(self):
        cfg = StudyConfig("counting", (0.08, 0.06, 0.04), params=LimitParams(0, 4.0))
        for r in run_counting_study(cfg).rows:
            lo, hi = r.extra["bracket"]
            assert lo <= r.observed <= hi
            assert r.normalized == pytest.approx(r.h ** (1 / 3) * r.observed)


class TestPerturbedAndDensity:
    def test_zero_potential_matches_counting(self):
        params = LimitParams(0, 4.0)
        hs = (0.08, 0.06, 0.04)
        a = run_counting_study(StudyConfig("counting", hs, params=params))
        b = run_perturbed_study(StudyConfig("perturbed", hs, params=params, potential=TestPotential.zero()))
        assert [r.observed for r in a.rows] == [r.observed for r in b.rows]
        assert [r.predicted for r in a.rows] == [r.predicted for r in b.rows]

    def test_sign_flip_moves_counts_oppositely(self):
        params = LimitParams(0, 4.0)
        hs = (0.02, 0.015, 0.01)
        up = run_perturbed_study(StudyConfig("perturbed", hs, params=params, potential=BUMP.scaled(3.0)))
        down = run_perturbed_study(StudyConfig("perturbed", hs, params=params, potential=BUMP.scaled(-3.0)))
        base = run_counting_study(StudyConfig("counting", hs, params=params))
        assert up.rows[0].predicted < base.rows[0].predicted < down.rows[0].predicted
        for u, b, d in zip(up.rows, base.rows, down.rows):
            assert u.observed <= b.observed <= d.observed
        assert sum(r.observed for r in up.rows) < sum(r.observed for r in down.rows)

    def test_density_zero_potential(self):
        cfg = StudyConfig("density", (0.08, 0.06, 0.04), params=LimitParams(0, 4.0),
                          potential=TestPotential.zero())
        report = run_density_study(cfg)
        assert all(r.observed == 0 and r.normalized == 0 for r in report.rows)
        assert report.checks["density_integral_error"] <= 1e-8

    def test_density_below_threshold(self):
        cfg = StudyConfig("density", (0.08, 0.06, 0.04), params=LimitParams(0, 2.0), potential=BUMP)
        report = run_density_study(cfg)
        assert all(r.observed == 0 and r.predicted == 0 for r in report.rows)
        assert report.verdict


class TestShiftStudy:
    def test_rate_and_columns(self):
        cfg = StudyConfig("shift", (1e-2, 1e-4, 1e-6), regime="second", potential=BUMP,
                          params=LimitParams(0, 1.0, alpha=0.8))
        report = run_shift_study(cfg)
        assert report.verdict
        assert report.fitted_rate >= 2 * 0.8 - 4 / 3 - 0.1
        for r in report.rows:
            eps = r.extra["coupling"]
            assert eps == pytest.approx(r.h ** (0.8 - 2 / 3))
            assert r.normalized == pytest.approx(r.observed / eps)
            assert r.extra["remainder"] == pytest.approx(r.observed - eps * r.predicted)
        # the first-order prediction improves as the coupling shrinks
        devs = [abs(r.deviation) for r in report.rows]
        assert devs == sorted(devs, reverse=True)


class TestBracketing:
    def test_degenerate_threshold(self):
        cfg = StudyConfig("bracketing", (0.1, 0.09, 0.08), params=LimitParams(0, 0.5))
        report = run_bracketing_check(cfg)
        assert report.verdict
        for r in report.rows:
            assert r.extra["dirichlet"][1] == r.extra["full"][1] == r.extra["mixed"][1] == 0

    def test_sandwich_and_ordering(self):
        cfg = StudyConfig("bracketing", (0.1, 0.08, 0.06), mu_list=(3.0, 5.0))
        report = run_bracketing_check(cfg)
        assert report.verdict
        assert len(report.rows) == 6
        for r in report.rows:
            d, f, m = r.extra["dirichlet"], r.extra["full"], r.extra["mixed"]
            assert d[0] <= f[2] and f[0] <= m[2]
            assert r.extra["ordering_gap"] <= 1e-12
            assert r.extra["ordered_pairs"] >= 1

    def test_violation_is_hard_failure(self, monkeypatch):
        import confined_stark.experiments as ex
        from confined_stark.eigensolve import CountResult

        real = ex.count_below
        calls = {"n": 0}

        def fake(op, threshold, tol=1e-9):
            calls["n"] += 1
            c = real(op, threshold, tol)
            if calls["n"] % 3 == 2:  # the full-domain count
                return CountResult(-5, -5, -5, threshold, c.tol)
            return c

        monkeypatch.setattr(ex, "count_below", fake)
        cfg = StudyConfig("bracketing", (0.1, 0.09, 0.08), params=LimitParams(0, 4.0))
        with pytest.raises(IntegrityError, match="bracketing violated"):
            run_bracketing_check(cfg)


def test_run_study_dispatch():
    cfg = StudyConfig("counting", (0.08, 0.04, 0.02), params=LimitParams(0, 2.0))
    assert isinstance(run_study(cfg), ConvergenceReport)


def test_csv_rows_schema():
    cfg = StudyConfig("expansion", (0.08, 0.04, 0.02), k_list=(1,))
    report = run_expansion_study(cfg, lambda h, ks: [three_term_eigenvalue(k, h, cfg.params) + h ** 1.5
                                                    for k in ks])
    rows = report.csv_rows()
    assert list(rows[0]) == ["study", "h", "observed", "normalized", "predicted", "deviation", "rate",
                             "verdict"]
    assert rows[0]["study"] == "expansion:k=1"
    assert rows[0]["rate"] == pytest.approx(1.5)
    assert math.isfinite(rows[0]["rate"])
