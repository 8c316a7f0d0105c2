import math

import numpy as np
import pytest

from oracles import direct_coefficient
from latticekit.approx import (
    Approximant,
    approximate,
    evaluate,
    gram_matrix,
    kernel_first_column,
    kernel_interpolant,
    korobov_norm,
    lattice_points,
    measure_l2_error,
)
from latticekit.bounds import l2_error_bound
from latticekit.cbc import cbc_construct
from latticekit.criterion import CriterionContext
from latticekit.errors import NumericalError, ValidationError
from latticekit.korobov import IndexSet, SpaceParams, enumerate_index_set
from latticekit.weights import ProductWeights, named_weight_family


def trig(coefficients):
    """Vectorised evaluator of sum_h c_h exp(2 pi i h.x)."""
    H = np.array(list(coefficients), dtype=float)
    c = np.array(list(coefficients.values()))

    def f(X):
        return np.exp(2j * np.pi * (np.atleast_2d(X) @ H.T)) @ c

    return f


@pytest.fixture(scope="module")
def lattice():
    params = SpaceParams(2, 2.0, named_weight_family("product", 2, 2))
    gv = cbc_construct(CriterionContext(257, params))
    return params, gv.z


class TestLatticePoints:
    def test_examples(self):
        np.testing.assert_array_equal(lattice_points(2, [1]).points[:, 0], [0.0, 0.5])
        pts = lattice_points(4, [1, 3]).points
        np.testing.assert_array_equal(pts[1], [0.25, 0.75])
        np.testing.assert_array_equal(pts[0], [0.0, 0.0])

    def test_grid_alignment(self):
        s = lattice_points(97, [1, 33, 70])
        assert s.points.shape == (97, 3)
        assert s.numerators.dtype.kind == "i"
        np.testing.assert_array_equal(s.points, s.numerators / 97)
        assert np.all((s.numerators >= 0) & (s.numerators < 97))


class TestApproximate:
    def test_constant(self, lattice):
        params, z = lattice
        samples = np.ones(257)
        ap = approximate(samples, params, z, 4.0)
        coef = ap.as_dict()
        assert coef[(0, 0)] == pytest.approx(1.0, abs=1e-15)
        others = [abs(v) for h, v in coef.items() if h != (0, 0)]
        assert max(others) < 1e-14

    def test_bins_equal_direct_sums(self, lattice, rng):
        params, z = lattice
        s = lattice_points(257, z)
        samples = rng.standard_normal(257) + 1j * rng.standard_normal(257)
        ap = approximate(samples, params, z, 30.0)
        for h, c in zip(ap.entries[::7], ap.coefficients[::7]):
            assert abs(c - direct_coefficient(samples, s.points, h)) <= 1e-12

    def test_aliasing_identity_single_modes(self, rng):
        n, z = 16, (1, 5)
        params = SpaceParams(2, 2.0, ProductWeights(np.ones(2)))
        A = enumerate_index_set(params, 40.0)
        s = lattice_points(n, z)
        for _ in range(20):
            h0 = A.entries[rng.integers(len(A))]
            h = A.entries[rng.integers(len(A))]
            f = trig({tuple(h0): 1.0})
            ap = approximate(s.sample(f), params, z, 40.0, index_set=A)
            got = ap.as_dict()[tuple(h)]
            expect = 1.0 if int(np.dot(h - h0, z)) % n == 0 else 0.0
            assert abs(got - expect) <= 1e-12
            assert abs(got - direct_coefficient(s.sample(f), s.points, h)) <= 1e-12

    def test_conjugate_symmetry_for_real_samples(self, lattice, rng):
        params, z = lattice
        ap = approximate(rng.standard_normal(257), params, z, 20.0)
        coef = ap.as_dict()
        for h, c in coef.items():
            assert abs(coef[tuple(-v for v in h)] - np.conj(c)) <= 1e-12

    def test_dimension_mismatch(self, lattice):
        params, _ = lattice
        with pytest.raises(ValidationError):
            approximate(np.ones(8), params, [1], 2.0)


class TestEvaluate:
    def test_empty(self):
        ap = Approximant(IndexSet(0.5, np.zeros((0, 2), dtype=np.int64)), np.zeros(0, dtype=complex))
        assert evaluate(ap, np.array([0.3, 0.1])) == 0.0

    def test_constant(self):
        ap = Approximant(IndexSet(1.0, np.zeros((1, 3), dtype=np.int64)), np.array([2.5 + 0j]))
        np.testing.assert_allclose(evaluate(ap, np.random.default_rng(1).random((5, 3))), 2.5)

    def test_exact_on_collision_free_polynomial(self, lattice, rng):
        params, z = lattice
        M = 12.0
        A = enumerate_index_set(params, M)
        bins = (A.entries @ np.asarray(z)) % 257
        assert len(set(bins.tolist())) == len(A)
        modes = A.entries[rng.choice(len(A), size=8, replace=False)]
        coef = {tuple(h): complex(rng.standard_normal(), rng.standard_normal()) for h in modes}
        f = trig(coef)
        ap = approximate(lattice_points(257, z).sample(f), params, z, M)
        X = rng.random((100, 2))
        np.testing.assert_allclose(evaluate(ap, X, real=False), f(X), atol=1e-10)

    def test_imaginary_residue_detected(self):
        entries = np.array([[-1], [1]])
        ap = Approximant(IndexSet(1.0, entries), np.array([0.5 + 0j, 0.1 + 0j]))
        with pytest.raises(NumericalError):
            evaluate(ap, np.array([0.3]), real=True)


class TestKernel:
    def test_zero_samples(self):
        params = SpaceParams(2, 2.0, ProductWeights(np.array([1.0, 0.5])))
        k = kernel_interpolant(params, lattice_points(13, [1, 5]), np.zeros(13))
        np.testing.assert_array_equal(k.a, 0.0)

    def test_two_point_example(self):
        params = SpaceParams(1, 2.0, ProductWeights(np.ones(1)))
        s = lattice_points(2, [1])
        col0 = kernel_first_column(params, s)
        np.testing.assert_allclose(col0, [1 + math.pi**2 / 3, 1 - math.pi**2 / 6], rtol=1e-14)
        y = np.array([0.7, -1.3])
        k = kernel_interpolant(params, s, y)
        a, b = col0
        dense = np.linalg.solve(np.array([[a, b], [b, a]]), y)
        np.testing.assert_allclose(k.a, dense, rtol=1e-14)
        np.testing.assert_allclose(k(s.points), y, atol=1e-13)

    @pytest.mark.parametrize("n,d", [(17, 1), (64, 3), (61, 10)])
    def test_circulant_structure(self, n, d, rng):
        params = SpaceParams(d, 2.0, ProductWeights(0.5 ** np.arange(1, d + 1)))
        z = rng.integers(1, n, size=d) | 1 if n % 2 == 0 else rng.integers(1, n, size=d)
        s = lattice_points(n, z)
        G = gram_matrix(params, s)
        col0 = kernel_first_column(params, s)
        idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
        np.testing.assert_allclose(G, col0[idx], rtol=1e-12)

    def test_dense_solve_agreement(self, rng):
        params = SpaceParams(3, 2.0, named_weight_family("product", 3, 2))
        gv = cbc_construct(CriterionContext(64, params))
        s = lattice_points(64, gv.z)
        y = rng.standard_normal(64)
        k = kernel_interpolant(params, s, y)
        dense = np.linalg.solve(gram_matrix(params, s), y)
        np.testing.assert_allclose(k.a, dense, rtol=1e-8, atol=1e-8 * np.max(np.abs(dense)))

    def test_singular(self):
        # a lattice with repeated points has a singular Gram matrix
        params = SpaceParams(1, 2.0, ProductWeights(np.ones(1)))
        with pytest.raises(NumericalError):
            kernel_interpolant(params, lattice_points(4, [2]), np.ones(4))

    def test_sample_count(self):
        params = SpaceParams(1, 2.0, ProductWeights(np.ones(1)))
        with pytest.raises(ValidationError):
            kernel_interpolant(params, lattice_points(4, [1]), np.ones(3))


class TestMeasureL2:
    def test_self_is_zero(self, lattice, rng):
        params, z = lattice
        ap = approximate(rng.standard_normal(257), params, z, 10.0)
        assert measure_l2_error(ap, coefficients=ap.as_dict()) == 0.0

    def test_single_mode_closed_form(self):
        n, z = 8, (1, 3)
        params = SpaceParams(2, 2.0, ProductWeights(np.ones(2)))
        M = 20.0
        A = enumerate_index_set(params, M)
        h0 = np.array([2, -1])
        f = trig({tuple(h0): 1.0})
        ap = approximate(lattice_points(n, z).sample(f), params, z, M)
        aliases = int(np.sum(((A.entries - h0) @ np.asarray(z)) % n == 0))
        # each alias in A other than h0 contributes 1; h0 itself is exact when it lies in A
        expect = math.sqrt(aliases - 1 if tuple(h0) in A else aliases + 1)
        exact = measure_l2_error(ap, coefficients={tuple(h0): 1.0})
        assert exact == pytest.approx(expect, rel=1e-12)
        span = int(np.max(np.abs(A.entries))) + 3
        quad = measure_l2_error(ap, f=f, grid=2 * span + 1)
        assert quad == pytest.approx(expect, rel=1e-10)

    def test_unit_norm_functions_within_l2_bound(self, lattice, rng):
        params, z = lattice
        from latticekit.criterion import s_criterion

        S, _ = s_criterion(CriterionContext(257, params), list(z))
        M, bound = l2_error_bound(S)
        box = [(a, b) for a in range(-6, 7) for b in range(-6, 7)]
        for _ in range(10):
            picks = rng.choice(len(box), size=6, replace=False)
            coef = {box[i]: complex(rng.standard_normal(), rng.standard_normal()) for i in picks}
            norm = korobov_norm(params, coef)
            coef = {h: c / norm for h, c in coef.items()}
            f = trig(coef)
            ap = approximate(lattice_points(257, z).sample(f), params, z, M)
            assert measure_l2_error(ap, coefficients=coef) <= bound

    def test_needs_input(self, lattice):
        params, z = lattice
        ap = approximate(np.ones(257), params, z, 2.0)
        with pytest.raises(ValidationError):
            measure_l2_error(ap)
