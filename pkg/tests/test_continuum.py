import numpy as np
import pytest

from core.continuum import ElasticModuli, SymTensor3, contract, isotropic_stress, lift_plane_strain, split
from errors import ParameterError


def test_split_isotropic_tensor_has_zero_deviator():
    dev, sph = split(SymTensor3.identity(4.2))
    np.testing.assert_allclose(dev.components, 0.0, atol=1e-15)
    np.testing.assert_allclose(sph.components, SymTensor3.identity(4.2).components)


def test_split_traceless_tensor_is_its_own_deviator():
    t = SymTensor3.diag(1.0, -1.0, 0.0)
    dev, sph = split(t)
    np.testing.assert_allclose(dev.components, t.components)
    np.testing.assert_allclose(sph.components, 0.0)


def test_split_diag_300():
    dev, sph = split(SymTensor3.diag(3.0, 0.0, 0.0))
    np.testing.assert_allclose(dev.components, SymTensor3.diag(2.0, -1.0, -1.0).components)
    np.testing.assert_allclose(sph.components, SymTensor3.identity(1.0).components)


def test_split_recomposes_and_parts_are_orthogonal(rng):
    t = SymTensor3(rng.normal(size=(50, 6)))
    dev, sph = split(t)
    np.testing.assert_allclose((dev + sph).components, t.components, rtol=1e-14, atol=1e-14)
    np.testing.assert_allclose(dev.trace(), 0.0, atol=1e-14)
    np.testing.assert_allclose(contract(dev, sph), 0.0, atol=1e-12)


def test_contract_examples():
    eye = SymTensor3.identity()
    assert contract(eye, eye) == pytest.approx(3.0)
    assert contract(eye, SymTensor3.diag(1.0, -2.0, 1.0)) == pytest.approx(0.0)
    shear = SymTensor3(np.array([0.0, 0.0, 0.0, 1.0, 0.0, 0.0]))
    assert contract(shear, shear) == pytest.approx(2.0)


def test_matrix_round_trip():
    m = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 5.0], [3.0, 5.0, 6.0]])
    np.testing.assert_array_equal(SymTensor3.from_matrix(m).to_matrix(), m)


def test_lame_parameters(rock):
    assert rock.lam == pytest.approx(1.67308e10, rel=1e-5)
    assert rock.mu == pytest.approx(1.11538e10, rel=1e-5)


def test_isotropic_stress_of_identity(rock):
    sigma = isotropic_stress(SymTensor3.identity(), rock)
    np.testing.assert_allclose(sigma.components, SymTensor3.identity(2 * rock.mu + 3 * rock.lam).components)


def test_isotropic_stress_uniaxial_strain():
    moduli = ElasticModuli(1.0, 0.25)
    sigma = isotropic_stress(SymTensor3.diag(1.0, 0.0, 0.0), moduli)
    lam, mu = moduli.lam, moduli.mu
    np.testing.assert_allclose(sigma.components, SymTensor3.diag(2 * mu + lam, lam, lam).components)


def test_isotropic_stress_is_linear(rock, rng):
    e1, e2 = SymTensor3(rng.normal(size=6)), SymTensor3(rng.normal(size=6))
    lhs = isotropic_stress(2.5 * e1 - 0.7 * e2, rock).components
    rhs = (2.5 * isotropic_stress(e1, rock) - 0.7 * isotropic_stress(e2, rock)).components
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * np.abs(lhs).max())


def test_lift_plane_strain():
    assert np.all(lift_plane_strain(np.zeros((2, 2))).components == 0.0)
    lifted = lift_plane_strain(np.eye(2))
    np.testing.assert_array_equal(lifted.components, [1.0, 1.0, 0.0, 0.0, 0.0, 0.0])


def test_lifted_uniaxial_strain_has_out_of_plane_stress(rock):
    sigma = isotropic_stress(lift_plane_strain(np.diag([1.0, 0.0])), rock).components
    assert sigma[2] / sigma[0] == pytest.approx(3.0 / 7.0, rel=1e-12)


@pytest.mark.parametrize("E, nu", [(0.0, 0.3), (-1.0, 0.3), (1.0, 0.5), (1.0, 0.7), (1.0, -1.0)])
def test_invalid_moduli(E, nu):
    with pytest.raises(ParameterError):
        ElasticModuli(E, nu)
