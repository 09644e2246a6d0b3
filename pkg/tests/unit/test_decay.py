"""Unit tests for exponential decay estimates and asymptotic independence."""

import math

import numpy as np
import pytest

from app.application.matrix_measures import transpose_measure
from app.application.stat_lab import (
    asymptotic_independence_report,
    decay_suite,
    direction_grid,
    pilot_rate,
)
from app.application.stat_lab.decay import fitted_rate
from app.domain import DomainError, FlagViolation, MeasureFlags

PROXIMAL_SI = MeasureFlags(strongly_irreducible=True, proximal=True)


class TestDirectionGrid:
    """Deterministic points for the decay families."""

    @pytest.mark.parametrize(("dim", "count"), [(2, 4), (3, 10), (4, 17)])
    def test_size_and_norm(self, dim, count):
        grid = direction_grid(dim)
        assert grid.shape == (count, dim)
        np.testing.assert_allclose(np.linalg.norm(grid, axis=1), 1.0)


class TestFittedRate:
    """Log-linear fit of a decay curve."""

    def test_exact_exponential(self):
        n_grid = [10, 20, 40]
        probs = [math.exp(-0.3 * n) for n in n_grid]
        assert fitted_rate(n_grid, probs) == pytest.approx(0.3)

    def test_zeros_are_skipped(self):
        assert fitted_rate([10, 20, 40], [0.5, 0.0, 0.0]) is None
        assert fitted_rate([10, 20, 40], [0.5, 0.25, 0.0]) == pytest.approx(math.log(2) / 10)


class TestDecaySuite:
    """Curves over a grid of walk lengths."""

    def test_requires_flags(self, notconv):
        with pytest.raises(FlagViolation):
            decay_suite(notconv, 2, (5, 10), 10, 0, rate=0.1)

    @pytest.mark.parametrize(
        ("item", "n_grid"), [(0, (5, 10)), (6, (5, 10)), (2, (10, 5)), (2, ()), (2, (0, 5))]
    )
    def test_bad_arguments(self, positive_pair, item, n_grid):
        with pytest.raises(DomainError):
            decay_suite(positive_pair, item, n_grid, 10, 0, rate=0.1)

    def test_coupling_length_must_exceed_grid(self, positive_pair):
        with pytest.raises(DomainError):
            decay_suite(positive_pair, 4, (5, 10), 10, 0, rate=0.1, coupling_n=10)

    def test_pair_curves(self, positive_pair):
        curves = decay_suite(positive_pair, 2, (5, 10), 40, 0, rate=0.1, threads=1)
        assert [c.label for c in curves] == [
            "sup", "x0-x1", "x0-x2", "x0-x3", "x1-x2", "x1-x3", "x2-x3"
        ]
        for curve in curves:
            assert curve.item == 2
            assert curve.n_grid == (5, 10)
            assert len(curve.probs) == 2
            assert curve.rate_used == 0.1
        sup = np.array(curves[0].probs)
        assert np.all(sup >= np.max([c.probs for c in curves[1:]], axis=0))

    def test_item1_reports_eps_as_rate(self, positive_pair):
        curves = decay_suite(positive_pair, 1, (5, 10), 30, 0, eps=0.05, threads=1)
        assert {c.rate_used for c in curves} == {0.05}
        assert [c.label for c in curves] == ["sup", "x0", "x1", "x2", "x3"]

    def test_point_mass_item3(self, make_point_mass):
        mu = make_point_mass([[4.0, 0.0], [0.0, 0.25]], flags=PROXIMAL_SI)
        curves = decay_suite(mu, 3, (5, 10), 5, 0, rate=0.1, points=[[1.0, 1.0], [0.0, 1.0]])
        by_label = {c.label: c.probs for c in curves}
        assert by_label["x0"] == (0.0, 0.0)
        assert by_label["x1"] == (1.0, 1.0)
        assert by_label["sup"] == (1.0, 1.0)
        assert next(c for c in curves if c.label == "x0").fitted_rate is None

    def test_points_must_match_dimension(self, positive_pair):
        with pytest.raises(DomainError):
            decay_suite(positive_pair, 3, (5,), 5, 0, rate=0.1, points=[[1.0, 0.0, 0.0]])

    def test_item5_is_item4_on_the_transpose(self, elementary3):
        kwargs = {"rate": 0.1, "coupling_n": 12, "threads": 1}
        item5 = decay_suite(elementary3, 5, (3, 6), 20, 4, **kwargs)
        item4 = decay_suite(transpose_measure(elementary3), 4, (3, 6), 20, 4, **kwargs)
        assert [c.item for c in item5] == [5] * len(item5)
        assert [c.probs for c in item5] == [c.probs for c in item4]

    def test_pilot_rate_is_positive(self, positive_pair):
        assert pilot_rate(positive_pair, 20, 0, trials=40, threads=1) > 0.3


class TestIndependence:
    """Attracting points settle, repelling hyperplanes decouple."""

    def test_report(self, positive_pair):
        report = asymptotic_independence_report(positive_pair, 20, 200, 0, rate=0.1, threads=1)
        assert report.half == 10
        assert report.rate_used == 0.1
        assert report.drift_prob < 0.05
        assert 0.0 <= report.ks_split_vs_full <= 1.0

    @pytest.mark.parametrize(("n", "trials"), [(1, 10), (10, 1)])
    def test_domain(self, positive_pair, n, trials):
        with pytest.raises(DomainError):
            asymptotic_independence_report(positive_pair, n, trials, 0, rate=0.1)
