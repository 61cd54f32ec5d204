import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sbmlab.descriptors import const, gaussian, parse_descriptor, sine
from sbmlab.experiments import (
    EnsembleConfig,
    global_extinction_experiment,
    heat_longtime_suite,
    local_extinction_experiment,
    mean_constant,
    nonincreasing,
    pam_decay_experiment,
    summarize,
)
from sbmlab.grid import GridFunction, HorizonError, make_grid


def test_heat_suite_constant_data():
    rep = heat_longtime_suite(const(1.0), make_grid(5, 64), 1.0)
    assert rep.passed
    assert np.all(rep.stats["sup_dev_mean"]["value"] <= 1e-14)


def test_heat_suite_shipped_two_bump():
    f = gaussian(mass=1, width=0.5) + gaussian(mass=-0.5, center=1, width=0.5)
    rep = heat_longtime_suite(f, make_grid(10, 1024), 1.9073486328125)
    assert rep.params["steps"] == 10**4
    assert rep.passed, rep.notes
    assert {"l1_decreasing", "negative_decreasing", "max_principle"} <= set(rep.verdicts)


def test_heat_suite_shipped_sine():
    rep = heat_longtime_suite(const(1) + sine(0.5, k=2 * np.pi), make_grid(10, 1024), 1.9073486328125)
    assert rep.passed, rep.notes
    assert "converges_to_mean" in rep.verdicts


def test_heat_suite_horizon_rule():
    with pytest.raises(HorizonError, match="torus-horizon rule"):
        heat_longtime_suite(const(1.0), make_grid(5, 64), 100.0)


def test_ensemble_config_rules():
    spec = make_grid(5, 32)
    with pytest.raises(HorizonError):
        EnsembleConfig(spec, 4.0, (2.0,), 10)
    cfg = EnsembleConfig(spec, 4.0, (2.0, 4.0), 10, allow_wraparound=True)
    assert cfg.checkpoints == (0.0, 2.0, 4.0)
    with pytest.raises(ValueError):
        EnsembleConfig(spec, 1.0, (0.5,), 1)


def small(T=0.5, n=40, **kw):
    return EnsembleConfig(make_grid(5, 32), T, (0.25, 0.5), n, **kw)


def test_pam_zero_data_stays_zero():
    rep = pam_decay_experiment(GridFunction.zeros(make_grid(5, 32)), gaussian(mass=1), small())
    for obs in rep.stats.values():
        assert np.all(obs["mean"] == 0)


def test_global_zero_second_component_is_heat_flow():
    rep = global_extinction_experiment(gaussian(mass=1), GridFunction.zeros(make_grid(5, 32)), small())
    assert np.all(rep.stats["mass_U2"]["mean"] == 0)
    m0 = rep.params["mass_U1"]
    assert np.allclose(rep.stats["mass_U1"]["mean"], m0, rtol=1e-12)
    assert rep.stats["mass_U1"]["stderr"].max() < 1e-14


def test_global_swaps_and_rejects_nonintegrable():
    rep = global_extinction_experiment(gaussian(mass=1), gaussian(mass=2), small())
    assert rep.params["swapped"] and rep.params["mass_U1"] == pytest.approx(2.0)
    with pytest.raises(ValueError, match="integrable"):
        global_extinction_experiment(const(1), gaussian(mass=1), small())


def test_local_zero_second_component():
    spec = make_grid(5, 32)
    rep = local_extinction_experiment(const(1), GridFunction.zeros(spec), gaussian(mass=1), small())
    # constant data is a fixed point of the heat flow, so <U1_t, g> = <1, g> on the grid
    g_mass = rep.params["limit"]
    assert np.allclose(rep.stats["U1:g"]["mean"], g_mass, rtol=1e-12)
    assert np.all(rep.stats["U2:g"]["mean"] == 0)


def test_x_dominates_abs_y_in_ensembles():
    rep = local_extinction_experiment(const(1), const(0.5), gaussian(mass=1), small(n=20))
    assert rep.verdicts["x_dominates_abs_y"]


def test_report_rows_are_tidy():
    rep = global_extinction_experiment(gaussian(mass=2), gaussian(mass=1), small(n=10))
    rows = list(rep.rows())
    assert all(len(r) == 5 for r in rows)
    assert {r[2] for r in rows} == {"mass_U1", "mass_U2", "product"}


def test_summarize_fraction():
    x = np.array([[1.0, 0.0], [1.0, 2.0], [1.0, 0.0], [1.0, 0.0]])
    s = summarize(x, eps=0.5)
    assert list(s["frac_above_eps"]) == [1.0, 0.25]
    assert s["frac_stderr"][0] == 0


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(0, 1e6), min_size=2, max_size=20))
def test_nonincreasing_accepts_sorted(values):
    v = sorted(values, reverse=True)
    assert nonincreasing(v)
    if v[0] > v[-1] * (1 + 1e-9) + 1e-9:
        assert not nonincreasing(v[::-1])


def test_nonincreasing_uses_stderr_slack():
    assert nonincreasing([1.0, 1.05], [0.04, 0.04])
    assert not nonincreasing([1.0, 1.1], [0.04, 0.04])


def test_mean_constant():
    assert mean_constant([1.0, 1.1], [0.0, 0.03], 1.0, 4)
    assert not mean_constant([1.0, 1.2], [0.0, 0.03], 1.0, 4)
    assert not mean_constant([1.0 + 1e-6], [0.0], 1.0, 4)
