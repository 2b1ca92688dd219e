import warnings

import numpy as np
import pytest

from itodilate.germ import GeneratorModel, ModelError, ScalarPoissonForm, scalar_table_model
from itodilate.poisson_mc import (martingale_check, mean_exponent_check, pd_in_mean_check,
                                  sample_poisson_counts, sample_poisson_increments)
from itodilate.semigroup import FiniteGroup

M = 100_000
Z1 = FiniteGroup.cyclic(1)


def scalar(alpha, lam, group=Z1):
    return GeneratorModel(group, 0, ScalarPoissonForm(alpha, lam))


def test_zero_time():
    assert not sample_poisson_counts(0.0, 10, 1).counts.any()


def test_counts_moments():
    c = sample_poisson_counts(1.0, M, 3).counts
    assert abs(c.mean() - 1) <= 5 / np.sqrt(M)
    p0 = np.exp(-1)
    assert abs((c == 0).mean() - p0) <= 5 * np.sqrt(p0 * (1 - p0) / M)


def test_long_horizon_is_split():
    c = sample_poisson_counts(75.0, 20_000, 4).counts
    assert abs(c.mean() - 75) <= 5 * np.sqrt(75 / 20_000)
    assert abs(c.var() - 75) <= 0.05 * 75


def test_seed_determinism():
    a = sample_poisson_counts(1.0, 5000, 11).counts
    b = sample_poisson_counts(1.0, 5000, 11).counts
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, sample_poisson_counts(1.0, 5000, 12).counts)


def test_path_prefix_stability():
    a = sample_poisson_counts(1.0, 1000, 5).counts
    b = sample_poisson_counts(1.0, 3000, 5).counts
    np.testing.assert_array_equal(a, b[:1000])


def test_increments_are_monotone():
    c = sample_poisson_increments([0.5, 1.0, 2.0], 1000, 6)
    assert (np.diff(c, axis=1) >= 0).all()


def test_mean_exponent_cancellation():
    r = mean_exponent_check(scalar(lambda y: 0.3, lambda y: -0.3), 0, 2.0, 1000, 1)
    assert r.exact == pytest.approx(1.0)


@pytest.mark.parametrize("alpha,lam,t,exact", [(1.0, -1.0, 1.0, 1.0), (-0.5, 0.0, 2.0, np.exp(-1))])
def test_mean_exponent_generating_function(alpha, lam, t, exact):
    r = mean_exponent_check(scalar(lambda y: alpha, lambda y: lam), 0, t, M, 7)
    assert r.exact == pytest.approx(exact)
    assert abs(r.estimate - r.exact) <= 5 * r.std_error


def test_wrong_form_rejected():
    with pytest.raises(ModelError):
        mean_exponent_check(scalar_table_model(FiniteGroup.cyclic(2), {}), 0, 1.0, 10, 0)


def test_trivial_martingale():
    r = martingale_check(scalar(lambda y: 0.0, lambda y: 0.0), 0.5, 1.0, 2000, 1)
    assert r.max_deviation == 0 and r.passed


def test_martingale_bins():
    r = martingale_check(scalar(lambda y: 1.0, lambda y: -1.0), 0.5, 1.0, M, 8)
    assert r.passed
    for row in r.bins:
        assert row["expected"] == pytest.approx(2 ** row["k"] * np.exp(-0.5))
    assert abs(r.unconditional_mean - 1) <= 5 * r.unconditional_std_error


def test_violated_normalization_fails():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        r = martingale_check(scalar(lambda y: 1.0, lambda y: -0.8), 0.5, 1.0, M, 9)
    assert caught
    assert not r.passed
    assert abs(r.unconditional_mean - np.exp(0.2 * 0.5)) <= 5 * r.unconditional_std_error


def test_martingale_needs_later_time():
    with pytest.raises(ValueError):
        martingale_check(scalar(lambda y: 0.0, lambda y: 0.0), 1.0, 1.0, 10, 0)


def test_pd_in_mean():
    G = FiniteGroup.cyclic(4)
    chi = np.exp(2j * np.pi * np.arange(4) / 4)
    # 1 + α = 1 + 0.5 χ is PD; λ = 0.5 (χ - 1) - 0.5 has κ + λ PD for κ = 1 and
    # α(1) + λ(1) = 0.5 - 0.5 = 0.
    model = scalar({y: 0.5 * chi[y] for y in range(4)},
                   {y: 0.5 * (chi[y] - 1) - 0.5 for y in range(4)}, G)
    r = pd_in_mean_check(model, G.elements(), 1.0, 50_000, 3)
    assert r.alpha_pd
    assert r.kappa == pytest.approx(1.0)
    assert r.passed
