import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_explicit, random_pod, random_product, random_spod
from latticekit.errors import CapacityError, MissingWeightError, ValidationError
from latticekit.weights import (
    ExplicitWeights,
    PODWeights,
    ProductWeights,
    SPODWeights,
    WeightModel,
    elementary_symmetric,
    named_weight_family,
    sqrt_half_transform,
    subset_sum,
)


def all_subsets(d):
    for k in range(d + 1):
        yield from (frozenset(u) for u in itertools.combinations(range(1, d + 1), k))


class TestWeightOf:
    def test_empty_set_is_one(self, rng):
        for model in (random_product(rng, 4), random_pod(rng, 4), random_spod(rng, 4), random_explicit(rng, 3)):
            assert model.weight_of(()) == 1.0

    def test_product_example(self):
        w = ProductWeights(np.arange(1, 4, dtype=float) ** -3)
        assert w.weight_of({1, 2}) == 0.125

    def test_spod_sigma_one_is_pod(self):
        g = np.array([0.3, 0.7, 0.2])
        order = np.array([1.0, 2.5, 4.0, 9.0])
        spod = SPODWeights(1, order, g[:, None])
        pod = PODWeights(order, g)
        assert spod.weight_of({2}) == pytest.approx(2.5 * 0.7, rel=1e-15)
        for u in all_subsets(3):
            assert spod.weight_of(u) == pytest.approx(pod.weight_of(u), rel=1e-14)

    def test_spod_against_multi_index_sum(self, rng):
        w = random_spod(rng, 3, sigma=2)
        for u in all_subsets(3):
            u = sorted(u)
            total = 0.0
            for nus in itertools.product((1, 2), repeat=len(u)):
                term = w.order[sum(nus)]
                for j, nu in zip(u, nus):
                    term *= w.gamma[j - 1, nu - 1]
                total += term
            assert w.weight_of(u) == pytest.approx(total, rel=1e-13)

    def test_out_of_range_coordinate(self):
        with pytest.raises(ValidationError):
            ProductWeights(np.ones(2)).weight_of({3})
        with pytest.raises(ValidationError):
            ProductWeights(np.ones(2)).weight_of({0})

    def test_missing_explicit_weight(self):
        w = ExplicitWeights(2, {frozenset(): 1.0, frozenset({1}): 0.5})
        with pytest.raises(MissingWeightError):
            w.weight_of({2})

    def test_invalid_parameters(self):
        with pytest.raises(ValidationError):
            ProductWeights(np.array([1.0, -0.1]))
        with pytest.raises(ValidationError):
            ProductWeights(np.array([np.inf]))
        with pytest.raises(ValidationError):
            PODWeights(np.array([2.0, 1.0]), np.array([0.5]))
        with pytest.raises(ValidationError):
            ExplicitWeights(1, {frozenset({1}): 0.5})
        with pytest.raises(ValidationError):
            # Gamma needs sigma * d + 1 entries
            SPODWeights(2, np.ones(4), np.ones((2, 2)))

    @pytest.mark.parametrize("factory", [random_product, random_pod, random_spod])
    def test_structured_agrees_with_materialised_table(self, rng, factory):
        for d in (1, 4, 7):
            model = factory(rng, d)
            table = model.to_explicit()
            for u in all_subsets(d):
                assert table.weight_of(u) == model.weight_of(u)

    def test_weight_of_is_pure(self, rng):
        w = random_spod(rng, 5)
        first = [w.weight_of(u) for u in all_subsets(5)]
        second = [w.weight_of(u) for u in all_subsets(5)]
        assert first == second

    def test_parameters_are_copied(self):
        g = np.array([0.5, 0.25])
        w = ProductWeights(g)
        g[0] = 7.0
        assert w.weight_of({1}) == 0.5


class TestNamedFamilies:
    def test_product_family(self):
        w = named_weight_family("product", 10, 2)
        assert w.weight_of({3}) == pytest.approx(3**-3, rel=1e-15)
        assert w.weight_of({3}) == pytest.approx(0.037037, abs=1e-6)

    def test_pod_family_small(self):
        w = named_weight_family("pod", 2, 2)
        a = math.sqrt(2)
        assert w.order[2] == pytest.approx(1.0, rel=1e-14)
        assert w.weight_of({1, 2}) == pytest.approx(1.0 * a * a * 2**-3, rel=1e-14)

    def test_spod_sigma(self):
        assert named_weight_family("spod", 5, 4).sigma == 2

    def test_spod_needs_even_alpha(self):
        with pytest.raises(ValidationError):
            named_weight_family("spod", 3, 3)

    def test_large_d_has_no_overflow(self):
        w = named_weight_family("pod", 100, 2)
        assert np.all(np.isfinite(w.order))
        a = math.exp(math.lgamma(101) / 100)
        assert w.order[100] == pytest.approx(math.exp(math.lgamma(101) - 100 * math.log(a)), rel=1e-10)


class TestSqrtHalfTransform:
    def test_product_stays_product(self):
        w, a = sqrt_half_transform(ProductWeights(np.array([4.0])), 4)
        assert isinstance(w, ProductWeights)
        assert w.gamma[0] == 2.0 and a == 2.0

    def test_needs_alpha_above_two(self):
        with pytest.raises(ValidationError):
            sqrt_half_transform(ProductWeights(np.ones(1)), 2)

    @pytest.mark.parametrize("kind", ["pod", "spod"])
    def test_square_roots_of_every_subset(self, kind):
        model = named_weight_family(kind, 3, 4)
        w, a = sqrt_half_transform(model, 4)
        assert a == 2
        assert isinstance(w, ExplicitWeights)
        for u in all_subsets(3):
            assert w.weight_of(u) ** 2 == pytest.approx(model.weight_of(u), rel=1e-14)
        assert w.weight_of(()) == 1.0


class TestSubsetSums:
    @pytest.mark.parametrize("factory", [random_product, random_pod, random_spod, random_explicit])
    def test_subset_sum_matches_enumeration(self, rng, factory):
        d = 4
        model = factory(rng, d)
        vals = rng.normal(size=(d, 7))
        expect = np.zeros(7)
        for u in all_subsets(d):
            term = model.weight_of(u) * np.ones(7)
            for j in u:
                term = term * vals[j - 1]
            expect += term
        np.testing.assert_allclose(subset_sum(model, vals), expect, rtol=1e-12, atol=1e-12)

    @pytest.mark.parametrize("factory", [random_product, random_pod, random_spod, random_explicit])
    def test_power_sums_match_enumeration(self, rng, factory):
        d = 5 if factory is not random_explicit else 4
        model = factory(rng, d)
        for power, c, moment in [(1.0, 3.3, False), (0.75, 2.1, True), (0.55, 7.0, False)]:
            expect = sum(
                (len(u) if moment else 1) * model.weight_of(u) ** power * c ** len(u)
                for u in all_subsets(d)
                if model.weight_of(u) > 0
            )
            assert model.subset_power_sum(power, c, moment=moment) == pytest.approx(expect, rel=1e-12)

    def test_generic_enumeration_is_guarded(self):
        w = named_weight_family("pod", 21, 2)
        with pytest.raises(CapacityError):
            WeightModel.subset_power_sum(w, 1.0, 1.0)
        with pytest.raises(CapacityError):
            w.to_explicit()

    @given(st.lists(st.floats(0, 3), min_size=0, max_size=8))
    @settings(max_examples=50, deadline=None)
    def test_elementary_symmetric(self, xs):
        e = elementary_symmetric(np.array(xs))
        assert e[0] == 1.0
        for k in range(len(xs) + 1):
            expect = sum(math.prod(c) for c in itertools.combinations(xs, k))
            assert e[k] == pytest.approx(expect, rel=1e-12, abs=1e-12)


class TestCanonicalForm:
    def test_digest_stable_and_distinct(self):
        a = named_weight_family("product", 4, 2)
        b = named_weight_family("product", 4, 2)
        c = named_weight_family("pod", 4, 2)
        assert a.digest() == b.digest()
        assert a.digest() != c.digest()
        assert len(a.digest()) == 16
