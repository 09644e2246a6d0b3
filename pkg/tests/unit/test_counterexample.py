"""Unit tests for the non strongly irreducible example."""

import math

import numpy as np
import pytest

from app.application.matrix_measures import FiniteSampler, notconv_measure
from app.application.stat_lab import counterexample_report
from app.application.stat_lab.counterexample import bernoulli_walk, folded_gaussian_reference
from app.application.walk_engine import run_trial
from app.domain import DomainError
from app.infrastructure.rng import StreamPurpose, stream


class TestBernoulliWalk:
    """S_k regenerated from a trial's own stream."""

    def test_matches_the_product(self, notconv):
        sampler = FiniteSampler(notconv)
        for trial in range(5):
            s_walk = bernoulli_walk(9, trial, sampler, 12)
            samples = run_trial(notconv, 12, (2, 4, 6, 8, 10, 12), stream(9, StreamPurpose.TRIALS, trial))
            norms = [s.log_norm for s in samples]
            np.testing.assert_allclose(norms, np.abs(s_walk) * math.log(2.0), atol=1e-9)

    def test_increments_are_differences_of_bernoullis(self, notconv):
        s_walk = bernoulli_walk(0, 0, FiniteSampler(notconv), 101)
        assert s_walk.shape == (50,)
        assert set(np.diff(s_walk, prepend=0).tolist()) <= {-1, 0, 1}


class TestReference:
    """Folded Gaussian draws."""

    def test_raw_and_lattice(self):
        raw = folded_gaussian_reference(0.5, 1000, 3)
        lattice = folded_gaussian_reference(0.5, 1000, 3, k=16)
        assert np.all(raw >= 0.0)
        scaled = lattice * 4.0
        np.testing.assert_allclose(scaled, np.round(scaled))
        np.testing.assert_allclose(lattice, np.abs(np.round(raw * 4.0)) / 4.0)
        assert raw.std() == pytest.approx(math.sqrt(0.5) * math.sqrt(1 - 2 / math.pi), rel=0.1)


class TestCounterexampleReport:
    """Exact path checks and the even-step law."""

    def test_exact_checks(self):
        report = counterexample_report(2.0, 0.5, 20, 60, 1, reference_draws=2000, threads=1)
        assert report.odd_exact
        assert report.s_match
        assert report.s_mismatches == 0
        assert report.exact_checks_pass
        assert report.odd_checkpoints == 10
        assert report.k_final == 10
        assert report.odd_max_abs_log_specrad < 1e-9
        assert report.y_variance == pytest.approx(0.5, abs=0.15)
        assert report.y_variance_expected == 0.5
        assert report.lyapunov_top >= 0.0
        assert report.ks_threshold == pytest.approx(2.0 * 1.36 / math.sqrt(60))

    def test_other_parameters(self):
        report = counterexample_report(3.0, 0.25, 15, 30, 2, reference_draws=500, ks_gate=0.1)
        assert report.exact_checks_pass
        assert report.k_final == 7
        assert report.odd_checkpoints == 8
        assert report.ks_threshold == 0.1
        assert report.y_variance_expected == pytest.approx(0.375)

    def test_dumps_lambda_alias(self):
        report = counterexample_report(2.0, 0.5, 4, 5, 0, reference_draws=100)
        assert report.model_dump(by_alias=True)["lambda"] == 2.0

    @pytest.mark.parametrize(
        ("lambda_", "theta", "n", "trials"),
        [(2.0, 0.5, 1, 10), (2.0, 0.5, 10, 1), (1.0, 0.5, 10, 10), (2.0, 1.0, 10, 10)],
    )
    def test_domain(self, lambda_, theta, n, trials):
        with pytest.raises(DomainError):
            counterexample_report(lambda_, theta, n, trials, 0)

    def test_single_even_step(self):
        # L₂ = −a^{ε₁−ε₂}: norm λ^{|S₁|}, spectral radius equal to it
        mu = notconv_measure(2.0, 0.5)
        for trial in range(4):
            (sample,) = run_trial(mu, 2, (2,), stream(0, StreamPurpose.TRIALS, trial))
            assert sample.log_specrad == pytest.approx(sample.log_norm, abs=1e-12)
            s1 = bernoulli_walk(0, trial, FiniteSampler(mu), 2)[0]
            assert sample.log_norm == pytest.approx(abs(s1) * math.log(2.0), abs=1e-12)
