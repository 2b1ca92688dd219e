import numpy as np
import pytest

from itodilate.coherent_sim import (CoherentFunction, KernelSpec, exponent_kernel,
                                    forward_witness_search, kernel_pd_report, log_matrix_element,
                                    random_kernel_spec, small_t_generator_check)
from itodilate.cpd import cpd_check
from itodilate.germ import (BirthForm, GeneratorModel, perturbed_table_model, random_dilated_model,
                            scalar_table_model, zero_model)
from itodilate.pseudo_poisson import BirthSpec
from itodilate.semigroup import FiniteGroup, MatrixBall

Z2 = FiniteGroup.cyclic(2)
ONE = CoherentFunction.constant([1.0])


def disc_model():
    return GeneratorModel(MatrixBall(1), 0, BirthForm(BirthSpec(1, 1, [np.array([1.0])], (), 1.0)))


def test_zero_map_constant_one():
    m = zero_model(Z2, 1)
    assert log_matrix_element(m, ONE, 0, ONE, 1.0) == pytest.approx(1.0, abs=1e-15)


def test_scalar_model_log():
    m = scalar_table_model(Z2, {1: -1.0})
    empty = CoherentFunction.constant(np.zeros(0))
    assert log_matrix_element(m, empty, 1, empty, 2.0) == -2.0


def _quadrature(model, f, y, h, t, points=10_000):
    lam = model.germ(y)
    s = (np.arange(points) + 0.5) * t / points
    total = 0
    for x in s:
        zf = np.concatenate(([1.0], f.value_at(x)))
        zh = np.concatenate(([1.0], h.value_at(x)))
        total += zf.conj() @ lam @ zh
    return total * t / points


def test_against_quadrature():
    rng = np.random.default_rng(21)
    G = FiniteGroup.cyclic(5)
    m = random_dilated_model(G, rng, n_modes=2)
    t = 1.0
    step = t / 10_000

    def func():
        segs = [(step * int(rng.integers(100, 4000)), rng.standard_normal(2) + 1j * rng.standard_normal(2))
                for _ in range(2)]
        return CoherentFunction(tuple(segs), rng.standard_normal(2))

    for _ in range(3):
        f, h = func(), func()
        y = int(rng.integers(5))
        exact = log_matrix_element(m, f, y, h, t)
        assert abs(exact - _quadrature(m, f, y, h, t)) <= 1e-8


def test_flow_property_constant_functions():
    rng = np.random.default_rng(22)
    Q = FiniteGroup.quaternion()
    m = random_dilated_model(Q, rng, n_modes=2)
    f = CoherentFunction.constant(rng.standard_normal(2) + 1j * rng.standard_normal(2))
    h = CoherentFunction.constant(rng.standard_normal(2))
    for y in Q.elements():
        a = log_matrix_element(m, f, y, h, 0.25) + log_matrix_element(m, f, y, h, 0.5)
        assert a == pytest.approx(log_matrix_element(m, f, y, h, 0.75), abs=1e-14)


def test_normalization():
    m = zero_model(Z2, 1)
    zero = CoherentFunction.constant([0.0])
    for t in (0.1, 1.0, 7.0):
        assert np.exp(log_matrix_element(m, zero, 0, zero, t)) == 1.0


def test_disc_kernel_closed_form():
    zero = CoherentFunction.constant(np.zeros(0))
    M = exponent_kernel(disc_model(), KernelSpec(1.0, [(zero, 0.0), (zero, 1.0)]))
    e1 = np.exp(-1)
    np.testing.assert_allclose(M, [[e1, e1], [e1, 1]], atol=1e-12)
    r = kernel_pd_report(M)
    assert r.verdict
    assert np.prod(np.linalg.eigvalsh(M.real)) == pytest.approx(e1 - e1 ** 2)


def test_single_pair_kernel():
    f = CoherentFunction(((0.5, [2.0]),), [1.0])
    M = exponent_kernel(zero_model(Z2, 1), KernelSpec(1.0, [(f, 0)]))
    assert M[0, 0].real == pytest.approx(np.exp(0.5 * 4 + 0.5 * 1))


def test_kernel_hermitian_and_parallel_fill_is_identical():
    rng = np.random.default_rng(23)
    Q = FiniteGroup.quaternion()
    m = random_dilated_model(Q, rng, n_modes=1)
    spec = random_kernel_spec(rng, m, Q.elements(), 6, 1.0)
    M1 = exponent_kernel(m, spec, workers=1)
    M4 = exponent_kernel(m, spec, workers=4)
    np.testing.assert_array_equal(M1, M4)
    np.testing.assert_allclose(M1, M1.conj().T, atol=1e-12)


def test_kernel_pd_report_cases():
    assert kernel_pd_report(np.eye(3)).min_eigenvalue == 1
    r = kernel_pd_report(np.array([[1.0, 2.0], [2.0, 1.0]]))
    assert not r.verdict and r.min_eigenvalue == pytest.approx(-1)
    with pytest.raises(ValueError):
        kernel_pd_report(np.array([[1.0, 2.0], [0.0, 1.0]]))


@pytest.mark.parametrize("seed", range(8))
def test_kernels_of_dilated_models_are_psd(seed):
    rng = np.random.default_rng(300 + seed)
    G = FiniteGroup.quaternion() if seed % 2 else FiniteGroup.cyclic(5)
    m = random_dilated_model(G, rng, n_modes=seed % 3)
    for t in (0.1, 1.0):
        spec = random_kernel_spec(rng, m, G.elements(), 6, t)
        r = kernel_pd_report(exponent_kernel(m, spec), 1e-8)
        assert r.min_eigenvalue >= -1e-8 * max(r.scale, 1)


def test_small_t_taylor():
    t = 1e-3
    m = zero_model(Z2, 1)
    dev = small_t_generator_check(m, KernelSpec(1.0, [(ONE, 0)]), t)
    assert dev == pytest.approx(np.expm1(t) / t - 1, rel=1e-9)
    s = scalar_table_model(Z2, {1: -1.0})
    empty = CoherentFunction.constant(np.zeros(0))
    dev = small_t_generator_check(s, KernelSpec(1.0, [(empty, 0), (empty, 1)]), t)
    assert dev == pytest.approx(t / 2, rel=1e-2)


def test_small_t_first_order():
    rng = np.random.default_rng(24)
    G = FiniteGroup.cyclic(6)
    for _ in range(5):
        m = random_dilated_model(G, rng, n_modes=1)
        spec = random_kernel_spec(rng, m, G.elements(), 3, 1.0)
        a = small_t_generator_check(m, spec, 1e-3)
        b = small_t_generator_check(m, spec, 5e-4)
        assert 2 / 1.5 <= a / b <= 3


def test_small_t_range():
    with pytest.raises(ValueError):
        small_t_generator_check(zero_model(Z2, 1), KernelSpec(1.0, [(ONE, 0)]), 0.01)


def test_forward_witness_regression():
    Z5 = FiniteGroup.cyclic(5)
    el = Z5.elements()
    bad = perturbed_table_model(zero_model(Z5, 1), el,
                                lambda y: -0.3 * np.eye(2) if y == 0 else np.zeros((2, 2)))
    r = cpd_check(bad, el)
    assert not r.verdict
    found = forward_witness_search(bad, el, r.witness)
    assert found is not None
    assert not found.report.verdict
    assert found.quadratic_form < 0


def test_validation():
    with pytest.raises(ValueError):
        CoherentFunction(((0.0, [1.0]),), [1.0])
    with pytest.raises(ValueError):
        KernelSpec(0.0, [])
    with pytest.raises(ValueError):
        log_matrix_element(zero_model(Z2, 2), ONE, 0, ONE, 1.0)
