import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from sbmlab.descriptors import (
    DescriptorError,
    const,
    cutoff_bump,
    gaussian,
    parse_descriptor,
    sine,
    table,
)
from sbmlab.grid import make_grid, sample, total_mass


def test_gaussian_mass_parametrisation():
    g = gaussian(mass=1.5, width=0.5)
    assert g.mass == pytest.approx(1.5)
    assert total_mass(sample(make_grid(10, 1024), g)) == pytest.approx(1.5, rel=1e-10)
    with pytest.raises(DescriptorError):
        gaussian()
    with pytest.raises(DescriptorError):
        gaussian(1.0, mass=1.0)


def test_cutoff_bump_formula():
    d = cutoff_bump(2.0, n=3.0)
    x = np.array([-3.0, -1.0, 0.0, 2.5, 3.0, 4.0])
    expect = np.where(np.abs(x) < 3, 2.0 * np.exp(1.0 / np.minimum(x * x - 9, -1e-300)), 0.0)
    assert_allclose(d(x), expect)
    assert d(np.array([0.0]))[0] == pytest.approx(2.0 * math.exp(-1 / 9))


def test_integrable_flags():
    assert gaussian(mass=1).integrable
    assert cutoff_bump().integrable
    assert not const(1).integrable
    assert not sine().integrable
    assert not (gaussian(mass=1) + const(0.2)).integrable


def test_sum_and_scale():
    x = np.linspace(-2, 2, 9)
    d = gaussian(mass=1) + 0.5 * const(2) + sine(1, k=2)
    assert_allclose(d(x), gaussian(mass=1)(x) + 1.0 + np.sin(2 * x))


@pytest.mark.parametrize(
    "text,probe",
    [
        ("const(1)", lambda x: np.ones_like(x)),
        ("0.5", lambda x: 0.5 * np.ones_like(x)),
        ("gaussian(mass=1.5) + const(0.2)", lambda x: gaussian(mass=1.5)(x) + 0.2),
        ("2*gaussian(1, center=1, width=0.5)", lambda x: 2 * gaussian(1, 1, 0.5)(x)),
        ("const(1) + sine(0.5, k=2*pi)", lambda x: 1 + 0.5 * np.sin(2 * np.pi * x)),
        ("gaussian(mass=1) - 0.5*gaussian(mass=1, center=1)", lambda x: gaussian(mass=1)(x) - gaussian(mass=0.5, center=1)(x)),
        ("cutoff_bump(1, n=2)", lambda x: cutoff_bump(1, 2)(x)),
    ],
)
def test_parse_descriptor(text, probe):
    x = np.linspace(-3, 3, 13)
    assert_allclose(parse_descriptor(text)(x), probe(x), atol=1e-15)


@pytest.mark.parametrize("text", ["nope(1)", "gaussian(", "__import__('os')", "gaussian(x=1, mass=1)", "const(1) * const(2)"])
def test_parse_descriptor_rejects(text):
    with pytest.raises(DescriptorError):
        parse_descriptor(text)


def test_table_samples_values():
    spec = make_grid(1, 4)
    assert_allclose(sample(spec, table(4, 3, 2, 1)).values, [4, 3, 2, 1])
