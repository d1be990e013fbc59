import numpy as np
import pytest

from pecsim.bayes import GridSpec
from pecsim.errors import SingularParameterError
from pecsim.harness import (
    ExperimentConfig,
    PriorSpec,
    accuracy_register,
    roem_correct,
    run_experiment,
    stability_register,
    summarize,
)
from pecsim.noise import DriftSpec, ParamDrift
from pecsim.reports import dumps_json, report_to_dict


def small_config(**overrides):
    drift = DriftSpec(
        spam=tuple(ParamDrift(m, -0.01, 1e-4) for m in (0.96, 0.95, 0.94, 0.93, 0.92)),
        xc=ParamDrift(0.017, 0.01, 1e-5),
        xt=ParamDrift(0.017, 0.01, 1e-5),
        n_periods=2,
    )
    base = dict(
        drift=drift,
        spam_priors=tuple(PriorSpec(m) for m in (0.96, 0.95, 0.94, 0.93, 0.92)),
        shots=2000,
        seeds=(1, 2),
        grid=GridSpec(f_step=0.02, x_step=0.01),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestMetrics:
    def test_accuracy_zero_at_ideal(self):
        ideal = np.array([1, 1, 1, -1, 1], dtype=float)
        assert accuracy_register(ideal, ideal) == 0.0

    def test_accuracy_frozen_example(self):
        ideal = np.array([1, 1, 1, -1, 1], dtype=float)
        est = np.array([0.9, 1, 1, -1, 1])
        assert accuracy_register(est, ideal) == pytest.approx(0.02)

    def test_accuracy_all_zero_estimates(self):
        ideal = np.array([1, 1, 1, -1, 1], dtype=float)
        assert accuracy_register(np.zeros(5), ideal) == pytest.approx(1.0)

    def test_stability_zero_at_baseline(self):
        est = np.array([0.9, 1, 1, -1, 1])
        assert stability_register(est, est) == 0.0

    def test_stability_frozen_example(self):
        a = np.array([1, 1, 1, -1, 1], dtype=float)
        b = np.array([0.9, 1, 1, -1, 1])
        assert stability_register(a, b) == pytest.approx(0.02)
        assert stability_register(b, a) == pytest.approx(0.02)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            accuracy_register(np.zeros(4), np.zeros(5))


class TestRoem:
    def test_noiseless_passthrough(self):
        est = np.array([0.8, -0.5])
        assert np.array_equal(roem_correct(est, (1.0, 1.0)), est)

    def test_frozen_example(self):
        out = roem_correct(np.array([0.8]), (0.9,))
        assert out[0] == pytest.approx(1.0, abs=1e-12)

    def test_zero_fixed_point(self):
        assert roem_correct(np.array([0.0]), (0.77,))[0] == 0.0

    def test_no_clipping(self):
        out = roem_correct(np.array([0.9]), (0.8,))
        assert out[0] == pytest.approx(1.5)

    def test_singular_fidelity(self):
        with pytest.raises(SingularParameterError):
            roem_correct(np.array([0.5]), (0.5,))


class TestRunExperiment:
    def test_structure_and_baseline(self):
        report = run_experiment(small_config())
        assert len(report.seed_results) == 2
        for sr in report.seed_results:
            assert [p.period for p in sr.periods] == [1, 2]
            for p in sr.periods:
                assert p.failure is None
                assert set(p.pipelines) == {"raw", "roem", "pec_static", "pec_adaptive"}
                for pr in p.pipelines.values():
                    assert pr.eps_r >= 0.0 and pr.eps_r <= 2.0
            # stability baseline is period 1 by definition
            for pr in sr.periods[0].pipelines.values():
                assert pr.s_r == 0.0

    def test_report_regeneration_byte_identical(self):
        cfg = small_config()
        r1 = dumps_json(report_to_dict(run_experiment(cfg)))
        r2 = dumps_json(report_to_dict(run_experiment(cfg)))
        assert r1 == r2

    def test_single_period_noiseless_all_pipelines_ideal(self):
        drift = DriftSpec(
            spam=tuple(ParamDrift(1.0, 0.0, 0.0) for _ in range(5)),
            xc=ParamDrift(0.0, 0.0, 0.0),
            xt=ParamDrift(0.0, 0.0, 0.0),
            n_periods=1,
        )
        cfg = ExperimentConfig(
            drift=drift,
            spam_priors=tuple(PriorSpec(1 - 1e-9, 1e-12) for _ in range(5)),
            xc_prior_mean=0.0,
            xt_prior_mean=0.0,
            shots=4000,
            seeds=(7,),
            grid=GridSpec(f_step=0.02, x_step=0.01),
        )
        report = run_experiment(cfg)
        ideal = np.array([1, 1, 1, -1, 1], dtype=float)
        for name, pr in report.seed_results[0].periods[0].pipelines.items():
            assert np.allclose(pr.expectations, ideal, atol=1e-5), name

    def test_stationary_exact_priors_adaptive_matches_static(self):
        # stationary noise with exact priors: adaptive and static agree up
        # to posterior-mean shot noise and grid quantization
        drift = DriftSpec(
            spam=tuple(ParamDrift(m, 0.0, 0.0) for m in (0.96, 0.95, 0.94, 0.93, 0.92)),
            xc=ParamDrift(0.015, 0.0, 0.0),
            xt=ParamDrift(0.02, 0.0, 0.0),
            n_periods=2,
        )
        cfg = ExperimentConfig(
            drift=drift,
            spam_priors=tuple(PriorSpec(m) for m in (0.96, 0.95, 0.94, 0.93, 0.92)),
            xc_prior_mean=0.015,
            xt_prior_mean=0.02,
            shots=10**6,
            seeds=(3,),
        )
        report = run_experiment(cfg)
        for p in report.seed_results[0].periods:
            static = p.pipelines["pec_static"].expectations
            adaptive = p.pipelines["pec_adaptive"].expectations
            assert np.max(np.abs(np.array(static) - np.array(adaptive))) < 0.01

    def test_pipeline_subset(self):
        report = run_experiment(small_config(pipelines=("raw", "roem")))
        for sr in report.seed_results:
            for p in sr.periods:
                assert set(p.pipelines) == {"raw", "roem"}

    def test_failure_recorded_not_raised(self, monkeypatch):
        import pecsim.harness as harness_mod

        calls = {"n": 0}
        original = harness_mod.composite_qpd

        def flaky(params, circuit):
            calls["n"] += 1
            if calls["n"] > 1:  # state init passes, period 2 fails
                raise SingularParameterError("injected failure")
            return original(params, circuit)

        monkeypatch.setattr(harness_mod, "composite_qpd", flaky)
        monkeypatch.setattr("pecsim.bayes.composite_qpd", flaky)
        report = run_experiment(small_config(seeds=(1,)))
        failures = [p.failure for p in report.seed_results[0].periods]
        assert any(f is not None for f in failures)
        assert report.summary["failed_periods"] >= 1

    def test_more_than_two_cnots_warns(self):
        from pecsim.circuit import build_bv
        from pecsim.harness import check_circuit_scale

        with pytest.warns(RuntimeWarning):
            check_circuit_scale(build_bv("111"))
        check_circuit_scale(build_bv("1100"))  # two CNOTs stay silent


class TestSummarize:
    def _metric_stub(self, eps_static, eps_adaptive):
        from pecsim.harness import PeriodResult, PipelineResult, SeedResult
        from pecsim.noise import NoiseParams

        params = NoiseParams((0.9,) * 5, 0.0, 0.0)
        periods = []
        for t, (s, a) in enumerate(zip(eps_static, eps_adaptive), start=1):
            periods.append(
                PeriodResult(
                    t,
                    params,
                    {
                        "pec_static": PipelineResult(np.zeros(5), s, s / 2),
                        "pec_adaptive": PipelineResult(np.zeros(5), a, a / 2),
                    },
                )
            )
        return [SeedResult(1, periods)]

    def test_improvement_ratio_of_period_averages(self):
        cfg = small_config(pipelines=("pec_static", "pec_adaptive"))
        seed_results = self._metric_stub([0.2, 0.4], [0.1, 0.2])
        summary = summarize(cfg, seed_results)
        imps = summary["improvements"]
        assert imps["accuracy_mean_pct"] == pytest.approx(50.0)
        assert imps["accuracy_final_pct"] == pytest.approx(50.0)

    def test_improvement_guarded_when_static_is_zero(self):
        cfg = small_config(pipelines=("pec_static", "pec_adaptive"))
        seed_results = self._metric_stub([0.0, 0.0], [0.0, 0.0])
        summary = summarize(cfg, seed_results)
        assert summary["improvements"]["accuracy_mean_pct"] is None

    def test_no_improvements_without_both_pipelines(self):
        cfg = small_config(pipelines=("raw",))
        report = run_experiment(cfg)
        assert report.summary["improvements"] is None


class TestConfig:
    def test_default_matches_schedule(self):
        cfg = ExperimentConfig.default()
        assert cfg.drift.spam[0].initial_mean == 0.96
        assert cfg.drift.spam[0].mean(10) == pytest.approx(0.86)
        assert cfg.drift.xc.mean(10) == pytest.approx(0.117)
        assert cfg.shots == 10000
        assert cfg.drift.n_periods == 10

    def test_requires_priors_matching_register(self):
        with pytest.raises(ValueError):
            small_config(spam_priors=(PriorSpec(0.9),))

    def test_rejects_unknown_pipeline(self):
        with pytest.raises(ValueError):
            small_config(pipelines=("raw", "magic"))

    def test_requires_seeds(self):
        with pytest.raises(ValueError):
            small_config(seeds=())
