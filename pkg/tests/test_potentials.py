import numpy as np
import pytest

from hydrolim import PotentialSpec


def test_power_law_values():
    pot = PotentialSpec.power_law(2.0)
    assert pot.dphi(2.0) == -0.25
    assert pot.phi(2.0) == 0.5
    # Phi(r) = r^(1-p)/(p-1) and -Phi'(r) = r^(-p) across exponents
    for p in (1.5, 2.0, 3.0, 5.0):
        pot = PotentialSpec.power_law(p)
        r = np.array([0.5, 1.0, 2.0, 7.5])
        np.testing.assert_allclose(pot.dphi(r), -(r**-p), rtol=1e-15)
        np.testing.assert_allclose(pot.phi(r), r ** (1 - p) / (p - 1), rtol=1e-15)


def test_power_law_rejects_bad_exponent():
    for p in (1.0, 0.5, -2.0, np.nan):
        with pytest.raises(ValueError):
            PotentialSpec.power_law(p)


def test_free_potential_is_zero():
    pot = PotentialSpec.free()
    r = np.array([0.1, 1.0, 10.0])
    assert (pot.phi(r) == 0).all()
    assert (pot.dphi(r) == 0).all()


def test_custom_callables_pass_through():
    pot = PotentialSpec.custom(lambda q: 1.0 / q, lambda q: -1.0 / q**2)
    assert pot.phi(2.0) == 0.5
    assert pot.dphi(2.0) == -0.25
    assert pot.descriptor == "custom"


def test_descriptor_roundtrips_exponent():
    from hydrolim.io import potential_from_descriptor

    pot = PotentialSpec.power_law(2.5)
    back = potential_from_descriptor(pot.descriptor)
    assert back.p == pot.p
