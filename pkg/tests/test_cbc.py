import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_pod, random_product
from oracles import exhaustive_cbc
from latticekit.arith import euler_phi, factorize, is_prime, units
from latticekit.bounds import embedded_penalty_bound, suapp_bound
from latticekit.cbc import GeneratingVector, cbc_construct, cbc_construct_embedded
from latticekit.criterion import CriterionContext, brute_force_s, s_criterion, t_component
from latticekit.errors import DegenerateWeightsError, ValidationError
from latticekit.korobov import SpaceParams
from latticekit.weights import ExplicitWeights, ProductWeights, named_weight_family

# first run of the p=2, m=4..7, d=6 embedded example gave max X / penalty(0.75) = 5.36e-3
EMBEDDED_ENVELOPE = 1e-2


class TestArithmetic:
    def test_small_examples(self):
        assert euler_phi(8) == 4
        assert units(6) == [1, 5]
        assert euler_phi(1009) == 1008
        assert is_prime(1009) and not is_prime(1)
        assert factorize(360) == {2: 3, 3: 2, 5: 1}

    @given(st.integers(2, 5000))
    def test_units_count(self, n):
        u = units(n)
        assert len(u) == euler_phi(n)
        assert all(math.gcd(v, n) == 1 for v in u)

    def test_totient_lower_bound(self):
        # 1/phi(n) < 9/n, checked by a sieve over n <= 10^6
        N = 10**6
        phi = np.arange(N + 1)
        for p in range(2, N + 1):
            if phi[p] == p:
                phi[p::p] -= phi[p::p] // p
        n = np.arange(2, N + 1)
        assert np.all(9 * phi[2:] > n)
        assert phi[1009] == euler_phi(1009)


class TestConstruct:
    @pytest.mark.parametrize("n", [2, 5, 12, 64])
    def test_one_dimension(self, n):
        ctx = CriterionContext(n, SpaceParams(1, 2.0, ProductWeights(np.array([0.6]))))
        assert cbc_construct(ctx).z == (1,)

    def test_four_points_against_brute_force(self):
        w = ProductWeights(np.array([1.0, 1 / 8]))
        ctx = CriterionContext(4, SpaceParams(2, 2.0, w))
        gv = cbc_construct(ctx)
        # second coordinate: compare the two candidates through the box-truncated criterion
        vals = {c: brute_force_s(ctx, [gv.z[0], c], 400)[0] for c in (1, 3)}
        best = min(c for c in (1, 3) if vals[c] <= min(vals.values()) * (1 + 1e-9))
        assert gv.z == (1, best)

    @pytest.mark.parametrize(
        "n,kind,alpha", [(8, "product", 2), (12, "pod", 2), (15, "spod", 2), (16, "product", 4), (32, "pod", 4)]
    )
    def test_exhaustive_minimality(self, n, kind, alpha):
        d = 3
        w = named_weight_family(kind, d, alpha)
        gv = cbc_construct(CriterionContext(n, SpaceParams(d, alpha, w)))
        assert list(gv.z) == exhaustive_cbc(w.weight_of, alpha, n, d)

    def test_t_values_recorded(self, rng):
        w = random_pod(rng, 4)
        ctx = CriterionContext(27, SpaceParams(4, 2.0, w))
        gv = cbc_construct(ctx)
        _, T = s_criterion(ctx, list(gv.z))
        np.testing.assert_allclose(gv.t_values, T, rtol=1e-12)
        assert gv.s_value == pytest.approx(float(T.sum()), rel=1e-12)
        for s in range(1, 5):
            assert gv.t_values[s - 1] == pytest.approx(t_component(ctx, 4, s, gv.z[:s]), rel=1e-12)

    def test_components_are_units(self):
        w = named_weight_family("product", 4, 2)
        gv = cbc_construct(CriterionContext(16, SpaceParams(4, 2.0, w)))
        assert gv.d == 4
        assert all(math.gcd(v, 16) == 1 for v in gv.z)

    def test_threads_do_not_change_result(self, rng):
        w = random_product(rng, 5)
        ctx = CriterionContext(509, SpaceParams(5, 2.0, w))
        assert cbc_construct(ctx, threads=1) == cbc_construct(ctx, threads=4)

    def test_explicit_path_same_vector(self, rng):
        w = random_pod(rng, 4)
        ctx = CriterionContext(31, SpaceParams(4, 2.0, w))
        a = cbc_construct(ctx)
        b = cbc_construct(ctx, path="explicit")
        assert a.z == b.z
        np.testing.assert_allclose(a.t_values, b.t_values, rtol=1e-12)

    @pytest.mark.parametrize("lam", [0.55, 0.75, 1.0])
    def test_suapp_bound_holds(self, lam):
        w = named_weight_family("product", 5, 2)
        params = SpaceParams(5, 2.0, w)
        for n in (16, 61, 128):
            gv = cbc_construct(CriterionContext(n, params))
            assert gv.s_value <= suapp_bound(params, n, lam)

    def test_vector_validation(self):
        with pytest.raises(ValidationError):
            GeneratingVector(8, (1, 3), [1.0])
        with pytest.raises(ValidationError):
            cbc_construct(CriterionContext(8, SpaceParams(2, 2.0, ProductWeights(np.ones(2)))), d=0)


@pytest.fixture(scope="module")
def result():
    w = named_weight_family("product", 6, 2)
    return cbc_construct_embedded(2, 4, 7, SpaceParams(6, 2.0, w))


class TestEmbedded:
    def test_first_ratio_is_one(self, result):
        assert result.x_values[0] == 1.0
        assert result.z[0] == 1

    def test_components_are_units(self, result):
        assert all(v % 2 == 1 and 1 <= v < 2**7 for v in result.z)

    def test_ratio_chain(self, result):
        for m in range(4, 8):
            assert result.s_embedded(m) <= result.max_x * result.s_baseline(m) * (1 + 1e-14)

    def test_stored_values_match_criterion(self, result):
        w = named_weight_family("product", 6, 2)
        for m in range(4, 8):
            n = 2**m
            _, T = s_criterion(CriterionContext(n, SpaceParams(6, 2.0, w)), [v % n for v in result.z])
            np.testing.assert_allclose(result.t_embedded[m], T, rtol=1e-12)
            ratios = result.t_embedded[m] / result.baselines[m].t_values
            assert np.all(ratios <= result.x_values * (1 + 1e-14))

    def test_baselines_are_independent_constructions(self, result):
        w = named_weight_family("product", 6, 2)
        for m in range(4, 8):
            assert result.baselines[m] == cbc_construct(CriterionContext(2**m, SpaceParams(6, 2.0, w)))

    def test_penalty_envelope(self, result):
        assert result.max_x <= EMBEDDED_ENVELOPE * embedded_penalty_bound(2, 4, 7, 2.0, 0.75)

    def test_threads(self):
        params = SpaceParams(3, 2.0, named_weight_family("pod", 3, 2))
        a = cbc_construct_embedded(3, 2, 4, params, threads=1)
        b = cbc_construct_embedded(3, 2, 4, params, threads=3)
        assert a.z == b.z
        np.testing.assert_array_equal(a.x_values, b.x_values)

    def test_degenerate_weights(self):
        table = {frozenset(): 1.0, frozenset({1}): 1.0, frozenset({2}): 0.0, frozenset({1, 2}): 0.0}
        w = ExplicitWeights(2, table)
        with pytest.raises(DegenerateWeightsError):
            cbc_construct_embedded(2, 2, 3, SpaceParams(2, 2.0, w))

    @pytest.mark.parametrize("p,m1,m2", [(4, 1, 2), (2, 3, 3), (2, 0, 2)])
    def test_validation(self, p, m1, m2):
        with pytest.raises(ValidationError):
            cbc_construct_embedded(p, m1, m2, SpaceParams(1, 2.0, ProductWeights(np.ones(1))))
