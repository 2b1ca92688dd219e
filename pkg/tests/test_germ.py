import warnings

import numpy as np
import pytest

from itodilate.germ import (BirthForm, GeneratorModel, ModelError, ScalarPoissonForm,
                            dissipator_kernel, dissipator_of, flat_symmetry_residual,
                            random_dilated_model, scalar_table_model, table_model, zero_model)
from itodilate.pseudo_poisson import BirthSpec
from itodilate.semigroup import FiniteGroup, MatrixBall

Z2 = FiniteGroup.cyclic(2)


def z2_model(value=-1.0):
    return scalar_table_model(Z2, {1: value})


def test_table_germs():
    m = z2_model()
    np.testing.assert_array_equal(m.germ(0), [[0]])
    np.testing.assert_array_equal(m.germ(1), [[-1]])


def test_zero_map_germ():
    m = zero_model(FiniteGroup.cyclic(3), 2)
    for y in range(3):
        np.testing.assert_array_equal(m.germ(y), np.diag([0, 1, 1]))


def test_birth_germ_on_disc():
    m = GeneratorModel(MatrixBall(1), 0, BirthForm(BirthSpec(1, 1, [np.array([1.0])], (), 1.0)))
    for y in (0.0, 0.3, -0.7j, 1.0):
        np.testing.assert_allclose(m.germ(y), [[y - 1]], atol=1e-15)


def test_dissipator_examples():
    m = z2_model()
    assert dissipator_of(m, 1, 1)[0, 0] == 2
    assert dissipator_of(m, 0, 0)[0, 0] == 0
    np.testing.assert_array_equal(dissipator_kernel(m, [0, 1]), np.diag([0, 2]))
    z = zero_model(Z2, 1)
    for x in (0, 1):
        for y in (0, 1):
            np.testing.assert_array_equal(dissipator_of(z, x, y), np.diag([0, 1]))


def test_dissipator_identity_on_random_model():
    rng = np.random.default_rng(3)
    Q = FiniteGroup.quaternion()
    m = random_dilated_model(Q, rng, n_modes=2)
    e = np.diag([1.0, 0, 0])
    lam1 = m.germ(Q.unit)
    for x in Q.elements():
        for z in Q.elements():
            expected = (m.germ(Q.star_compose(x, z)) - e @ m.germ(z) - m.germ(Q.star(x)) @ e
                        + e @ lam1 @ e)
            np.testing.assert_allclose(dissipator_of(m, x, z), expected, atol=1e-12)


def test_flat_symmetry():
    rng = np.random.default_rng(4)
    G = FiniteGroup.cyclic(5)
    m = random_dilated_model(G, rng, n_modes=2)
    assert flat_symmetry_residual(m, G.elements()) <= 1e-12
    for y in G.elements():
        np.testing.assert_allclose(m.germ(G.star(y)), m.germ(y).conj().T, atol=1e-12)
    assert flat_symmetry_residual(zero_model(G, 1), G.elements()) == 0
    # s is self-inverse in Z2 but the table gives different values at s and s★ = s when
    # the germ is not Hermitian; break symmetry through a complex scalar instead.
    broken = table_model(Z2, 0, {0: np.array([[1.0]]), 1: np.array([[2.0 + 1.0j]])})
    assert flat_symmetry_residual(broken, Z2.elements()) >= 1


def test_d_extraction_and_warning():
    m = z2_model()
    assert m.d == 0.0
    pos = table_model(Z2, 0, {0: np.array([[0.5]]), 1: np.array([[0.0]])})
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        assert pos.d == 0.5
    assert caught


def test_table_is_partial():
    m = table_model(MatrixBall(1), 0, [(np.array([[0.5]]), np.array([[1.0]]))])
    np.testing.assert_array_equal(m.germ(0.5), [[1.0]])
    with pytest.raises(ModelError):
        m.germ(0.25)


def test_scalar_poisson_has_no_germ():
    m = GeneratorModel(Z2, 0, ScalarPoissonForm(lambda y: 1.0, lambda y: -1.0))
    with pytest.raises(ModelError):
        m.germ(0)
    alpha, lam = m.scalar_functions()
    assert alpha(1) == 1 and lam(0) == -1


def test_model_validation():
    with pytest.raises(ValueError):
        GeneratorModel(MatrixBall(2), 0, BirthForm(BirthSpec(1, 1, [np.array([1.0])])))
    with pytest.raises(ValueError):
        table_model(Z2, 1, {0: np.zeros((1, 1))})
