"""Unit tests for projective geometry and matrix decompositions."""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from app.application import projective_geometry
from app.application.projective_geometry import (
    attracting_point,
    batched_delta,
    batched_delta_hyperplane,
    certificate_report,
    compound,
    contraction_data,
    delta_hyperplanes,
    delta_point_hyperplane,
    delta_points,
    dual_action,
    eigen_moduli,
    kak,
    projective_action,
    proximality_certificate,
    repelling_hyperplane,
    spectral_radius,
    wedge_basis,
    wedge_power,
)
from app.domain import (
    DomainError,
    EigenFailure,
    KakDecomposition,
    ProjHyperplane,
    ProjPoint,
    SingularInput,
    SquareMatrix,
)

ROTATION = [[0.0, -1.0], [1.0, 0.0]]


def random_matrix(rng: np.random.Generator, dim: int) -> SquareMatrix:
    return SquareMatrix.of(rng.standard_normal((dim, dim)))


def spread_matrix(rng: np.random.Generator, dim: int) -> SquareMatrix:
    """Gaussian matrix with log-normally scaled columns."""
    return SquareMatrix.of(rng.standard_normal((dim, dim)) * np.exp(rng.normal(0, 2, dim)))


def unit_rows(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    x = rng.standard_normal((count, dim))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


class TestKak:
    """Tests for the KAK decomposition."""

    def test_reconstructs_matrix(self, rng):
        for dim in range(1, 6):
            g = random_matrix(rng, dim)
            dec = kak(g)
            np.testing.assert_allclose(dec.reconstruct(), g.array, atol=1e-12)
            assert np.all(np.diff(dec.a) <= 0)

    def test_canonical_sign_of_left_columns(self, rng):
        dec = kak(random_matrix(rng, 4))
        for j in range(4):
            col = dec.k[:, j]
            lead = col[np.flatnonzero(np.abs(col) > 1e-12)[0]]
            assert lead > 0

    def test_diagonal(self):
        dec = kak(SquareMatrix.of([[9.0, 0.0], [0.0, 1.0]]))
        np.testing.assert_allclose(dec.a, [9.0, 1.0])
        assert dec.gap_ratio == pytest.approx(1.0 / 9.0)
        assert not dec.degenerate

    def test_rotation_is_degenerate(self):
        assert kak(SquareMatrix.of(ROTATION)).degenerate

    def test_singular_input_rejected(self):
        with pytest.raises(SingularInput):
            SquareMatrix.of([[1.0, 2.0], [2.0, 4.0]])

    def test_relative_reconstruction_on_spread_singular_values(self, rng):
        for _ in range(500):
            dim = int(rng.integers(2, 7))
            g = spread_matrix(rng, dim)
            dec = kak(g)
            assert np.max(np.abs(dec.reconstruct() - g.array)) <= 1e-10 * dec.a[0]

    def test_non_orthogonal_factor_rejected(self):
        sheared = np.array([[1.0, 1e-6], [0.0, 1.0]])
        a = np.array([2.0, 1.0])
        with pytest.raises(ValidationError, match="k is not orthogonal"):
            KakDecomposition(k=sheared, a=a, u=np.eye(2))
        with pytest.raises(ValidationError, match="u is not orthogonal"):
            KakDecomposition(k=np.eye(2), a=a, u=sheared)

    def test_reconstruction_mismatch_raises(self, monkeypatch):
        exact = projective_geometry.batched_kak

        def inflated(arr):
            k, a, u = exact(arr)
            return k, a * (1.0 + 1e-6), u

        monkeypatch.setattr(projective_geometry, "batched_kak", inflated)
        with pytest.raises(EigenFailure, match="reconstruction"):
            kak(SquareMatrix.of([[9.0, 1.0], [0.0, 1.0]]))


class TestScaleEquivariance:
    """g and c·g share their projective data; moduli scale by |c|."""

    @pytest.mark.parametrize("c", [-3.0, 0.5, 2.0])
    def test_scalar_multiple(self, rng, c):
        for dim in (2, 3, 5):
            for _ in range(20):
                g = random_matrix(rng, dim)
                cg = SquareMatrix.of(c * g.array)
                np.testing.assert_allclose(kak(cg).a, abs(c) * kak(g).a, rtol=1e-10)
                assert delta_points(attracting_point(cg), attracting_point(g)) <= 1e-9
                assert delta_hyperplanes(repelling_hyperplane(cg), repelling_hyperplane(g)) <= 1e-9
                np.testing.assert_allclose(
                    eigen_moduli(cg).values,
                    np.array(eigen_moduli(g).values) + math.log(abs(c)),
                    atol=1e-8,
                )
                cert, scaled = proximality_certificate(g), proximality_certificate(cg)
                assert (cert is None) == (scaled is None)
                if cert is not None:
                    assert scaled.delta_g == pytest.approx(cert.delta_g, rel=1e-9)
                    assert scaled.gap_ratio == pytest.approx(cert.gap_ratio, rel=1e-9)
                    assert scaled.lower_bound == pytest.approx(cert.lower_bound, rel=1e-9)


class TestAttractingRepelling:
    """Tests for v_g⁺ and H_g⁻."""

    def test_diagonal_directions(self):
        g = SquareMatrix.of([[9.0, 0.0], [0.0, 1.0]])
        np.testing.assert_allclose(attracting_point(g).vec, [1.0, 0.0])
        np.testing.assert_allclose(repelling_hyperplane(g).normal, [1.0, 0.0])

    def test_degenerate_flag(self):
        assert attracting_point(SquareMatrix.of(ROTATION)).degenerate
        assert repelling_hyperplane(SquareMatrix.identity(3)).degenerate

    def test_image_lands_near_attracting_point(self, rng):
        g = SquareMatrix.of([[50.0, 1.0], [2.0, 0.5]])
        x = ProjPoint(vec=[0.3, 1.0])
        gx = projective_action(g, x)
        h = repelling_hyperplane(g)
        bound = kak(g).gap_ratio / delta_point_hyperplane(x, h)
        assert delta_points(gx, attracting_point(g)) <= bound + 1e-12


class TestSineMetric:
    """Metric axioms of δ on points and hyperplanes."""

    def test_metric_axioms(self, rng):
        for dim in (2, 3, 5):
            x, y, z = (unit_rows(rng, 10_000, dim) for _ in range(3))
            dxy = batched_delta(x, y)
            assert np.array_equal(dxy, batched_delta(y, x))
            assert np.all(batched_delta(x, x) <= 1e-7)
            assert np.all((dxy >= 0) & (dxy <= 1))
            assert np.all(dxy <= batched_delta(x, z) + batched_delta(z, y) + 1e-12)

    def test_projective_invariance(self):
        x = ProjPoint(vec=[1.0, 2.0, 3.0])
        y = ProjPoint(vec=[-2.0, -4.0, -6.0])
        assert delta_points(x, y) == pytest.approx(0.0, abs=1e-15)

    def test_orthogonal_points(self):
        assert delta_points(ProjPoint(vec=[1, 0]), ProjPoint(vec=[0, 1])) == pytest.approx(1.0)

    def test_hyperplane_distance_is_lipschitz(self, rng):
        for dim in (2, 4):
            x = unit_rows(rng, 10_000, dim)
            n1 = unit_rows(rng, 10_000, dim)
            n2 = unit_rows(rng, 10_000, dim)
            lhs = np.abs(batched_delta_hyperplane(x, n1) - batched_delta_hyperplane(x, n2))
            assert np.all(lhs <= math.sqrt(2.0) * batched_delta(n1, n2) + 1e-12)

    def test_scalar_wrappers(self):
        h = ProjHyperplane(normal=[0.0, 1.0])
        assert delta_point_hyperplane(ProjPoint(vec=[1.0, 0.0]), h) == pytest.approx(0.0)
        assert delta_hyperplanes(h, ProjHyperplane(normal=[1.0, 0.0])) == pytest.approx(1.0)


class TestContraction:
    """Contraction bounds away from the repelling hyperplane."""

    def test_bounds_hold_on_random_draws(self, rng):
        checked = 0
        while checked < 2000:
            dim = int(rng.integers(2, 5))
            g = spread_matrix(rng, dim)
            dec = kak(g)
            low = 2.0 * math.sqrt(dec.gap_ratio)
            if low >= 1.0:
                continue
            eps = float(rng.uniform(low, 1.0))
            data = contraction_data(g, eps)
            normal = dec.u[0]
            x, y = unit_rows(rng, 2, dim)
            if min(abs(x @ normal), abs(y @ normal)) < eps:
                continue
            gx, gy = g.array @ x, g.array @ y
            assert float(batched_delta(gx, gy)) <= data.lipschitz_bound * float(
                batched_delta(x, y)
            ) + 1e-12
            assert float(batched_delta(gx, dec.k[:, 0])) <= data.image_radius + 1e-12
            checked += 1

    def test_pair_distance_through_second_wedge(self, rng):
        for dim in (2, 3, 5):
            rows = np.array(wedge_basis(dim, 2))
            for _ in range(200):
                g = random_matrix(rng, dim)
                a = kak(g).a
                v, w = unit_rows(rng, 2, dim)
                gv, gw = g.array @ v, g.array @ w
                vw = v[rows[:, 0]] * w[rows[:, 1]] - v[rows[:, 1]] * w[rows[:, 0]]
                scale = np.linalg.norm(gv) * np.linalg.norm(gw)
                exact = np.linalg.norm(compound(g.array, 2) @ vw) / scale
                d_image = float(batched_delta(gv, gw))
                assert d_image == pytest.approx(exact, rel=1e-8, abs=1e-14)
                assert d_image <= a[0] * a[1] / scale * float(batched_delta(v, w)) * (1 + 1e-8)

    def test_image_norm_sandwich(self, rng):
        for dim in (2, 3, 4):
            for _ in range(200):
                g = spread_matrix(rng, dim)
                dec = kak(g)
                eps = min(2.0 * math.sqrt(dec.gap_ratio), 1.0)
                x = unit_rows(rng, 500, dim)
                dist = batched_delta_hyperplane(x, dec.u[0])
                kept = dist >= eps
                stretch = np.linalg.norm(x[kept] @ g.array.T, axis=1) / dec.a[0]
                d = dist[kept]
                assert np.all(stretch >= eps * (1 - 1e-10))
                assert np.all(d * d <= stretch * stretch * (1 + 1e-10))
                assert np.all(stretch * stretch <= (d * d + dec.gap_ratio**2) * (1 + 1e-10))

    def test_eps_out_of_range(self):
        g = SquareMatrix.of([[2.0, 0.0], [0.0, 0.5]])
        for eps in (0.0, -0.1, 1.5):
            with pytest.raises(DomainError):
                contraction_data(g, eps)


class TestDualAction:
    """g acts on hyperplanes through the inverse transpose."""

    def test_incidence_preserved(self, rng):
        g = random_matrix(rng, 3)
        h = ProjHyperplane(normal=[1.0, -1.0, 0.5])
        x = ProjPoint(vec=np.cross(h.normal, [0.0, 0.0, 1.0]))
        assert delta_point_hyperplane(x, h) == pytest.approx(0.0, abs=1e-12)
        gx = projective_action(g, x)
        assert delta_point_hyperplane(gx, dual_action(g, h)) == pytest.approx(0.0, abs=1e-10)


class TestCompound:
    """Exterior powers and the spectral data they encode."""

    def test_first_and_top_compound(self, rng):
        g = random_matrix(rng, 4)
        np.testing.assert_allclose(compound(g.array, 1), g.array)
        assert compound(g.array, 4)[0, 0] == pytest.approx(np.linalg.det(g.array))

    def test_norm_and_spectral_radius_identities(self, rng):
        for _ in range(300):
            dim = int(rng.integers(2, 7))
            g = random_matrix(rng, dim)
            a = kak(g).a
            moduli = np.sort(np.abs(np.linalg.eigvals(g.array)))[::-1]
            for p in range(1, dim + 1):
                w = wedge_power(g, p)
                assert kak(w).a[0] == pytest.approx(np.prod(a[:p]), rel=1e-8)
                assert spectral_radius(w) == pytest.approx(np.prod(moduli[:p]), rel=1e-8)

    def test_degree_out_of_range(self):
        with pytest.raises(DomainError):
            compound(np.eye(3), 0)
        with pytest.raises(DomainError):
            wedge_power(SquareMatrix.identity(2), 3)


class TestEigenModuli:
    """Jordan projection and spectral radius."""

    def test_diagonal_logs(self):
        g = SquareMatrix.of([[math.e**2, 0.0], [0.0, math.e**-2]])
        assert eigen_moduli(g).values == pytest.approx((2.0, -2.0))

    def test_rotation_has_unit_radius(self):
        assert spectral_radius(SquareMatrix.of(ROTATION)) == pytest.approx(1.0)

    def test_radius_below_norm(self, rng):
        for _ in range(100):
            g = random_matrix(rng, 4)
            assert spectral_radius(g) <= kak(g).a[0] * (1 + 1e-12)

    def test_logs_sum_to_log_abs_det(self, rng):
        for dim in range(1, 7):
            for _ in range(50):
                g = random_matrix(rng, dim)
                log_det = float(np.linalg.slogdet(g.array)[1])
                jordan = sum(eigen_moduli(g).values)
                cartan = float(np.sum(np.log(kak(g).a)))
                assert jordan == pytest.approx(log_det, rel=1e-8, abs=1e-8)
                assert cartan == pytest.approx(log_det, rel=1e-8, abs=1e-8)


class TestCertificate:
    """The proximality certificate and its lower bound."""

    def test_diagonal_certificate(self):
        g = SquareMatrix.of([[9.0, 0.0], [0.0, 1.0]])
        cert = proximality_certificate(g)
        assert cert is not None
        assert cert.delta_g == pytest.approx(1.0)
        assert cert.lower_bound == pytest.approx(0.5)
        report = certificate_report(g)
        assert report.has_certificate
        assert report.ratio == pytest.approx(1.0)
        assert report.bound_verified is True
        assert report.second_modulus_ratio == pytest.approx(1.0 / 9.0)

    def test_rotation_has_no_certificate(self):
        g = SquareMatrix.of(ROTATION)
        assert proximality_certificate(g) is None
        report = certificate_report(g)
        assert not report.has_certificate
        assert report.lower_bound is None
        assert report.bound_verified is None

    def test_certified_matrices_satisfy_bound(self, rng):
        certified = 0
        for _ in range(2000):
            dim = int(rng.integers(2, 5))
            g = spread_matrix(rng, dim)
            cert = proximality_certificate(g)
            if cert is not None:
                certified += 1
                assert spectral_radius(g) / kak(g).a[0] >= cert.lower_bound - 1e-10
                moduli = np.exp(eigen_moduli(g).values)
                assert moduli[0] > moduli[1] * (1 + 1e-8)
        assert certified > 0
