"""Property-based invariants of the discrete operators and the schemes."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sbmlab.grid import GridFunction, heat_semigroup, make_grid, pair, total_mass
from sbmlab.noise import SeedSpec
from sbmlab.spde import PamState, SbmState, SchemeParams, simulate

SPEC = make_grid(2, 16)
DX2 = SPEC.dx**2
vals = arrays(np.float64, 16, elements=st.floats(-10, 10))
nonneg = arrays(np.float64, 16, elements=st.floats(0, 10))
lams = st.floats(0.05, 1.0)


@settings(max_examples=60, deadline=None)
@given(vals, lams, st.integers(1, 30))
def test_heat_conserves_mass_and_max_principle(v, lam, k):
    f = GridFunction(SPEC, v)
    u = heat_semigroup(f, k * lam * DX2, lam * DX2)
    assert total_mass(u) == pytest.approx(total_mass(f), abs=1e-11 * (1 + np.abs(v).sum()))
    assert u.values.min() >= v.min() - 1e-12 and u.values.max() <= v.max() + 1e-12


@settings(max_examples=60, deadline=None)
@given(vals, st.integers(0, 15), st.integers(0, 15))
def test_semigroup_property(v, a, b):
    f = GridFunction(SPEC, v)
    dt = 0.5 * DX2
    once = heat_semigroup(f, (a + b) * dt, dt)
    twice = heat_semigroup(heat_semigroup(f, a * dt, dt), b * dt, dt)
    np.testing.assert_allclose(once.values, twice.values, atol=1e-12 * (1 + np.abs(v).max()))


@settings(max_examples=60, deadline=None)
@given(vals, vals, vals, st.floats(-5, 5))
def test_pairing_bilinear_and_symmetric(a, b, c, s):
    f, g, h = (GridFunction(SPEC, x) for x in (a, b, c))
    assert pair(f, g) == pytest.approx(pair(g, f), abs=1e-9)
    assert pair(f * s + g, h) == pytest.approx(s * pair(f, h) + pair(g, h), rel=1e-9, abs=1e-8)


@settings(max_examples=60, deadline=None)
@given(vals, vals, st.integers(1, 20))
def test_heat_is_self_adjoint(a, b, k):
    f, g = GridFunction(SPEC, a), GridFunction(SPEC, b)
    dt = 0.5 * DX2
    assert pair(heat_semigroup(f, k * dt, dt), g) == pytest.approx(
        pair(f, heat_semigroup(g, k * dt, dt)), rel=1e-9, abs=1e-9
    )


@settings(max_examples=25, deadline=None)
@given(nonneg, nonneg, st.integers(0, 2**31), st.sampled_from(["split", "euler"]))
def test_sbm_stays_nonnegative_with_exact_difference(a, b, seed, scheme):
    p = SchemeParams(0.5 * DX2, SPEC.dx, scheme=scheme)
    s = SbmState(GridFunction(SPEC, a), GridFunction(SPEC, b))
    tr = simulate(s, 40 * p.dt, p, SeedSpec(seed, 0), record_fields=True)
    U1, U2 = tr.fields["U1"][-1], tr.fields["U2"][-1]
    assert U1.min() >= 0 and U2.min() >= 0
    y = heat_semigroup(GridFunction(SPEC, a - b), 40 * p.dt, p.dt).values
    np.testing.assert_allclose(U1 - U2, y, atol=1e-10 * (1 + np.abs(a - b).max()))


@settings(max_examples=25, deadline=None)
@given(nonneg, st.integers(0, 2**31))
def test_pam_stays_nonnegative(a, seed):
    p = SchemeParams(0.5 * DX2, SPEC.dx)
    tr = simulate(PamState(GridFunction(SPEC, a)), 40 * p.dt, p, SeedSpec(seed, 0), record_fields=True)
    assert tr.fields["V"][-1].min() >= 0
