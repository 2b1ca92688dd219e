import numpy as np
import pytest

from itodilate.coherent_sim import CoherentFunction, kernel_pd_report, log_matrix_element
from itodilate.germ import BirthForm, GeneratorModel
from itodilate.pseudo_poisson import (BirthSpec, birth_phi, birth_phi_block_kernel,
                                      eval_birth_solution, germ_from_birth,
                                      martingale_condition_check, norm_bounds_check,
                                      random_birth_spec)
from itodilate.semigroup import MatrixBall, random_contraction

ONE = np.array([1.0])


def test_scalar_tensor_powers():
    spec = BirthSpec(1, 2, [ONE, ONE])
    assert birth_phi(spec, 0.5)[0, 0] == pytest.approx(0.75)


def test_phi_at_identity_and_zero():
    rng = np.random.default_rng(31)
    spec = random_birth_spec(rng, 2, 3, 2)
    phi1 = birth_phi(spec, np.eye(2))
    assert phi1[0, 0].real == pytest.approx(sum(np.vdot(s, s).real for s in spec.sigma))
    phi0 = birth_phi(spec, np.zeros((2, 2)))
    assert phi0[0, 0] == 0
    for n in range(2):
        for m in range(2):
            expected = np.vdot(spec.sigma_modes[m][0], spec.sigma_modes[n][0])
            assert phi0[1 + m, 1 + n] == pytest.approx(expected)


def test_germ_on_disc_is_y_minus_one():
    spec = BirthSpec(1, 1, [ONE], (), 1.0)
    for y in (0.0, 0.4, -0.9j):
        assert germ_from_birth(spec, y)[0, 0] == pytest.approx(y - 1)


def test_martingale_normalized_germ_vanishes_at_unit():
    rng = np.random.default_rng(32)
    spec = random_birth_spec(rng, 2, 2, 1, martingale=True)
    spec = BirthSpec(spec.d, spec.K_max, spec.sigma, spec.sigma_modes, spec.kappa,
                     birth_phi(spec, np.eye(2))[0, 1:])
    lam = germ_from_birth(spec, np.eye(2))
    assert abs(lam[0, 0]) <= 1e-14
    np.testing.assert_allclose(lam[0, 1:], 0, atol=1e-14)


def test_exchange_block_untouched_by_kappa():
    rng = np.random.default_rng(33)
    spec = random_birth_spec(rng, 3, 2, 2)
    y = random_contraction(3, rng)
    np.testing.assert_array_equal(germ_from_birth(spec, y)[1:, 1:], birth_phi(spec, y)[1:, 1:])


def test_solution_without_modes():
    spec = BirthSpec(1, 2, [ONE, 0.5 * ONE], (), 1.5)
    y, t = 0.3, 0.8
    assert eval_birth_solution(spec, [], [], y, t) == pytest.approx(t * germ_from_birth(spec, y)[0, 0])


def test_vacuum_solution():
    rng = np.random.default_rng(34)
    spec = random_birth_spec(rng, 2, 2, 2, martingale=False)
    y = random_contraction(2, rng)
    expected = 0.7 * (birth_phi(spec, y)[0, 0] - spec.kappa)
    assert eval_birth_solution(spec, np.zeros(2), np.zeros(2), y, 0.7) == pytest.approx(expected)


def test_solution_factors_sum():
    rng = np.random.default_rng(35)
    spec = random_birth_spec(rng, 2, 2, 2)
    f, h = rng.standard_normal(2), rng.standard_normal(2) + 1j
    total, parts = eval_birth_solution(spec, f, h, random_contraction(2, rng), 0.5, detail=True)
    assert total == pytest.approx(sum(parts.values()))


@pytest.mark.parametrize("seed", range(40))
def test_cross_oracle(seed):
    rng = np.random.default_rng(400 + seed)
    d, K, n = int(rng.integers(1, 4)), int(rng.integers(1, 4)), int(rng.integers(0, 3))
    spec = random_birth_spec(rng, d, K, n, martingale=bool(seed % 2))
    model = GeneratorModel(MatrixBall(d), n, BirthForm(spec))
    f = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    h = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    y = random_contraction(d, rng)
    t = float(rng.uniform(0.05, 2))
    a = eval_birth_solution(spec, f, h, y, t)
    b = log_matrix_element(model, CoherentFunction.constant(f), y, CoherentFunction.constant(h), t)
    assert abs(a - b) <= 1e-12 * max(abs(b), 1)


def test_solution_rejects_bad_input():
    spec = BirthSpec(1, 1, [ONE], ((ONE, ONE),), 1.0, [0.0])
    with pytest.raises(ValueError):
        eval_birth_solution(spec, [1.0, 2.0], [1.0], 0.5, 1.0)
    with pytest.raises(ValueError):
        eval_birth_solution(spec, [1.0], [1.0], 0.5, 0.0)
    with pytest.raises(ValueError):
        birth_phi(spec, 2.0)


def test_martingale_condition():
    assert martingale_condition_check(BirthSpec(1, 2, [ONE, ONE], (), 2.0)).mode == "martingale"
    sub = martingale_condition_check(BirthSpec(1, 1, [ONE], (), 2.0))
    assert sub.mode == "submartingale" and sub.lhs == 1 and sub.rhs == 2
    assert martingale_condition_check(BirthSpec(1, 1, [ONE], (), 0.5)).mode == "none"


def test_martingale_vacuum_expectation_is_one():
    rng = np.random.default_rng(36)
    for _ in range(10):
        d = int(rng.integers(1, 4))
        spec = random_birth_spec(rng, d, int(rng.integers(1, 4)), int(rng.integers(0, 3)))
        n = spec.n_modes
        assert abs(eval_birth_solution(spec, np.zeros(n), np.zeros(n), np.eye(d), 1.3)) <= 1e-12


def test_norm_bounds_scalar_spec():
    spec = BirthSpec(1, 2, [ONE, ONE], ((ONE, ONE, ONE),), 2.0, [0.0])
    rep = norm_bounds_check(spec, 200, seed=1)
    assert rep.exchange_bound == pytest.approx(3.0)
    assert rep.violations == 0 and rep.exchange_sup <= 3.0


def test_norm_bounds_zero_data():
    z = np.zeros(2)
    spec = BirthSpec(2, 1, [z], ((np.zeros(1), z),), 0.0, [0.0])
    rep = norm_bounds_check(spec, 20)
    assert rep.exchange_sup == rep.scalar_sup == rep.row_sup == 0
    assert rep.passed


def test_norm_bounds_random():
    rng = np.random.default_rng(37)
    rep = norm_bounds_check(random_birth_spec(rng, 2, 2, 2), 200, seed=2)
    assert rep.violations == 0


def test_solution_kernels_are_psd():
    rng = np.random.default_rng(38)
    B = MatrixBall(2)
    for _ in range(5):
        spec = random_birth_spec(rng, 2, 2, 1)
        ys = B.sample_elements(4, seed=int(rng.integers(1000)))
        fs = [rng.standard_normal(1) + 1j * rng.standard_normal(1) for _ in ys]
        M = np.array([[np.exp(eval_birth_solution(spec, fi, fk, B.star_compose(yi, yk), 0.7))
                       for fk, yk in zip(fs, ys)] for fi, yi in zip(fs, ys)])
        assert kernel_pd_report(M, 1e-8).verdict


def test_birth_phi_is_pd():
    rng = np.random.default_rng(39)
    spec = random_birth_spec(rng, 2, 3, 2)
    K = birth_phi_block_kernel(spec, MatrixBall(2).sample_elements(5, seed=4))
    assert np.linalg.eigvalsh(0.5 * (K + K.conj().T)).min() >= -1e-12


def test_spec_validation():
    with pytest.raises(ValueError):
        BirthSpec(2, 1, [np.ones(3)])
    with pytest.raises(ValueError):
        BirthSpec(1, 5, [ONE] * 5)
    with pytest.raises(ValueError):
        BirthSpec(1, 1, [ONE], ((ONE,),))
