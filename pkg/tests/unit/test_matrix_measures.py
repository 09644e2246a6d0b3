"""Unit tests for driving measures and increment samplers."""

import math
from fractions import Fraction

import numpy as np
import pytest
from pydantic import ValidationError

from app.application.matrix_measures import (
    FiniteSampler,
    build_measure,
    elementary_measure,
    gaussian_sl_measure,
    moment,
    moment_kernel,
    notconv_measure,
    sampler_for,
    transpose_measure,
    wedge_measure,
)
from app.domain import (
    AtomSpec,
    AtomsMeasureSpec,
    DomainError,
    EnsembleMeasureSpec,
    MeasureFlags,
    SquareMatrix,
    UnsupportedForSampler,
)
from app.infrastructure.rng import AliasTable, StreamPurpose, generator_for, stream


def non_normal(rng: np.random.Generator, dim: int) -> np.ndarray:
    return rng.standard_normal((dim, dim)) + 3.0 * np.triu(np.ones((dim, dim)), 1)


class TestMomentKernel:
    """l(g) = max{ln⁺‖g‖, ln⁺‖g⁻¹‖}."""

    def test_values(self):
        assert moment_kernel(SquareMatrix.identity(3)) == 0.0
        assert moment_kernel(SquareMatrix.of([[2.0, 0.0], [0.0, 0.5]])) == pytest.approx(math.log(2))
        assert moment_kernel(SquareMatrix.of([[3.0, 0.0], [0.0, 1.0]])) == pytest.approx(math.log(3))
        assert moment_kernel(SquareMatrix.of([[0.25, 0.0], [0.0, 1.0]])) == pytest.approx(math.log(4))

    def test_invariant_under_inverse_and_transpose(self, rng):
        for dim in (2, 3, 5):
            for _ in range(100):
                g = SquareMatrix.of(non_normal(rng, dim))
                value = moment_kernel(g)
                inverse = SquareMatrix.of(np.linalg.inv(g.array))
                assert moment_kernel(inverse) == pytest.approx(value, rel=1e-10, abs=1e-12)
                assert moment_kernel(g.transpose()) == pytest.approx(value, rel=1e-10, abs=1e-12)


class TestMoment:
    """Exact and estimated moments."""

    def test_notconv_is_exact(self, notconv):
        report = moment(notconv, 1)
        assert report.exact
        assert report.value == pytest.approx(0.5 * math.log(2.0))
        assert moment(notconv, 2).value == pytest.approx(0.5 * math.log(2.0) ** 2)

    def test_order_must_be_positive(self, notconv):
        with pytest.raises(DomainError):
            moment(notconv, 0)

    def test_sampler_refuses_exact(self):
        with pytest.raises(UnsupportedForSampler):
            moment(gaussian_sl_measure(3), 1, exact=True)

    def test_sampler_estimate(self):
        report = moment(gaussian_sl_measure(3), 1, draws=2000, master_seed=5)
        assert not report.exact
        assert report.value > 0
        assert 0 < report.std_error < report.value
        again = moment(gaussian_sl_measure(3), 1, draws=2000, master_seed=5)
        assert again.value == report.value


class TestPushforwards:
    """Transpose and exterior power measures."""

    def test_transpose_finite(self, elementary3):
        mu_t = transpose_measure(elementary3)
        for atom, atom_t in zip(elementary3.atoms, mu_t.atoms, strict=True):
            np.testing.assert_array_equal(atom_t.matrix.array, atom.matrix.array.T)
            assert atom_t.weight == atom.weight
        assert mu_t.flags == elementary3.flags
        assert mu_t.label == "elementary(3)^t"
        assert transpose_measure(mu_t).label == "elementary(3)"

    def test_transpose_sampler(self):
        mu_t = transpose_measure(gaussian_sl_measure(2))
        assert mu_t.sampler.transpose
        assert not transpose_measure(mu_t).sampler.transpose

    def test_wedge_finite(self, elementary3):
        assert wedge_measure(elementary3, 1) is elementary3
        mu2 = wedge_measure(elementary3, 2)
        assert mu2.dim == 3
        assert mu2.flags == MeasureFlags()
        assert mu2.label == "wedge2(elementary(3))"

    def test_wedge_degree_out_of_range(self, elementary3):
        with pytest.raises(DomainError):
            wedge_measure(elementary3, 4)

    def test_wedge_sampler(self):
        mu2 = wedge_measure(gaussian_sl_measure(4), 2)
        assert mu2.dim == 6
        assert mu2.sampler.wedge == 2
        with pytest.raises(UnsupportedForSampler):
            wedge_measure(mu2, 2)

    @pytest.mark.parametrize("p", [2, 3])
    def test_wedge_commutes_with_transpose(self, rng, p):
        dim = 4
        atoms = tuple(
            AtomSpec(matrix=tuple(map(tuple, non_normal(rng, dim))), weight="1/3")
            for _ in range(3)
        )
        mu = build_measure(AtomsMeasureSpec(dim=dim, atoms=atoms))
        lhs = wedge_measure(transpose_measure(mu), p)
        rhs = wedge_measure(mu, p)
        assert lhs.dim == rhs.dim == math.comb(dim, p)
        for atom_l, atom_r in zip(lhs.atoms, rhs.atoms, strict=True):
            assert atom_l.weight == atom_r.weight
            np.testing.assert_allclose(
                atom_l.matrix.array, atom_r.matrix.array.T, rtol=1e-12, atol=1e-12
            )

    def test_wedge_commutes_with_transpose_for_samplers(self):
        mu = gaussian_sl_measure(4)
        lhs = wedge_measure(transpose_measure(mu), 2)
        rhs = transpose_measure(wedge_measure(mu, 2))
        assert lhs.sampler == rhs.sampler


class TestEnsembles:
    """Named ensembles and config-driven construction."""

    def test_notconv_atoms(self, notconv):
        sigma, sigma_a = (atom.matrix.array for atom in notconv.atoms)
        np.testing.assert_array_equal(sigma, [[0.0, -1.0], [1.0, 0.0]])
        np.testing.assert_allclose(sigma_a, [[0.0, -0.5], [2.0, 0.0]])
        assert not notconv.flags.strongly_irreducible
        assert notconv.flags.proximal

    @pytest.mark.parametrize(("lambda_", "theta"), [(1.0, 0.5), (0.5, 0.5), (2.0, 0.0), (2.0, 1.0)])
    def test_notconv_domain(self, lambda_, theta):
        with pytest.raises(DomainError):
            notconv_measure(lambda_, theta)

    def test_elementary(self, elementary3):
        assert len(elementary3.atoms) == 6
        assert sum(a.weight for a in elementary3.atoms) == 1
        for atom in elementary3.atoms:
            assert np.linalg.det(atom.matrix.array) == pytest.approx(1.0)
        with pytest.raises(DomainError):
            elementary_measure(1)

    def test_build_from_ensemble(self):
        mu = build_measure(EnsembleMeasureSpec(ensemble="notconv", lambda_=3.0, theta=0.25))
        assert mu.label == "notconv(lambda=3.0,theta=0.25)"
        assert mu.atoms[1].weight == 0.25

    def test_build_from_atoms(self):
        spec = AtomsMeasureSpec(
            dim=2,
            atoms=(
                AtomSpec(matrix=((2.0, 1.0), (1.0, 1.0)), weight="1/3"),
                AtomSpec(matrix=((1.0, 1.0), (1.0, 2.0)), weight="2/3"),
            ),
            flags=MeasureFlags(strongly_irreducible=True, proximal=True),
        )
        mu = build_measure(spec)
        assert [a.weight for a in mu.atoms] == [Fraction(1, 3), Fraction(2, 3)]
        assert mu.flags.strongly_irreducible

    def test_weights_must_sum_to_one(self):
        spec = AtomsMeasureSpec(
            dim=1,
            atoms=(AtomSpec(matrix=((2.0,),), weight=0.3), AtomSpec(matrix=((3.0,),), weight=0.3)),
        )
        with pytest.raises(ValidationError):
            build_measure(spec)


class TestSamplers:
    """Alias sampling and stream consumption."""

    def test_alias_frequencies(self, rng):
        weights = np.array([0.1, 0.2, 0.3, 0.4])
        table = AliasTable(weights)
        freq = np.bincount(table.draw(rng, 200_000), minlength=4) / 200_000
        np.testing.assert_allclose(freq, weights, atol=0.01)

    def test_alias_rejects_bad_weights(self):
        with pytest.raises(ValueError):
            AliasTable(np.array([0.5, 0.0]))

    def test_finite_keys_index_atoms(self, notconv):
        sampler = FiniteSampler(notconv)
        keys = np.array([0, 1, 1])
        np.testing.assert_array_equal(sampler.increments(keys)[1], notconv.atoms[1].matrix.array)
        np.testing.assert_allclose(sampler.log_abs_det(keys), 0.0, atol=1e-15)

    @pytest.mark.parametrize("mu_name", ["positive_pair", "elementary3"])
    def test_chunked_draws_match_single_draw(self, request, mu_name):
        sampler = sampler_for(request.getfixturevalue(mu_name))
        address = stream(11, StreamPurpose.TRIALS, 3)
        whole = sampler.draw_keys(generator_for(address), 128)
        gen = generator_for(address)
        parts = np.concatenate([sampler.draw_keys(gen, 64), sampler.draw_keys(gen, 64)])
        np.testing.assert_array_equal(whole, parts)

    def test_gaussian_chunked_draws_match_single_draw(self):
        sampler = sampler_for(gaussian_sl_measure(3))
        address = stream(11, StreamPurpose.TRIALS, 3)
        whole = sampler.draw_keys(generator_for(address), 40)
        gen = generator_for(address)
        parts = np.concatenate([sampler.draw_keys(gen, 25), sampler.draw_keys(gen, 15)])
        np.testing.assert_array_equal(whole, parts)

    def test_gaussian_increments_have_unit_determinant(self):
        sampler = sampler_for(gaussian_sl_measure(4))
        keys = sampler.draw_keys(generator_for(stream(2, StreamPurpose.TRIALS)), 500)
        np.testing.assert_allclose(np.linalg.det(sampler.increments(keys)), 1.0, rtol=1e-9)

    def test_gaussian_wedge_and_transpose(self):
        base = gaussian_sl_measure(3)
        keys = sampler_for(base).draw_keys(generator_for(stream(4, StreamPurpose.TRIALS)), 10)
        transposed = sampler_for(transpose_measure(base)).increments(keys)
        np.testing.assert_allclose(transposed, np.swapaxes(keys, -1, -2))
        wedged = sampler_for(wedge_measure(base, 2))
        assert wedged.dim == 3
        assert wedged.increments(keys).shape == (10, 3, 3)
