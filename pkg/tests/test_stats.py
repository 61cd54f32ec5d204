import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sbmlab.stats import MCEstimate, compare, fraction_stderr, hill_tail_index, ks_two_sample, median_stderr


def test_compare_examples():
    a = MCEstimate(0.5, 0.01, 100)
    assert compare(a, a).z == 0 and compare(a, a).passed
    b = MCEstimate(0.5 + 10 * math.hypot(0.01, 0.01), 0.01, 100)
    c = compare(a, b)
    assert c.z == pytest.approx(10.0) and not c.passed
    e = MCEstimate.exact(0.3, 50)
    assert compare(e, e).passed


def test_compare_degenerate_unequal():
    c = compare(MCEstimate.exact(0.3, 50), MCEstimate.exact(0.4, 50))
    assert not c.passed and c.z == math.inf and "standard errors are 0" in c.diagnostic


def test_compare_needs_30():
    with pytest.raises(ValueError):
        compare(MCEstimate(0, 1, 10), MCEstimate(0, 1, 100))


def test_from_samples_matches_numpy():
    x = np.random.default_rng(0).normal(size=1000)
    e = MCEstimate.from_samples(x)
    assert e.mean == pytest.approx(x.mean())
    assert e.stderr == pytest.approx(x.std(ddof=1) / math.sqrt(1000))


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=40),
    st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=40),
    st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=40),
)
def test_merge_is_associative_and_exact(a, b, c):
    ea, eb, ec = (MCEstimate.from_samples(v) for v in (a, b, c))
    left = ea.merge(eb).merge(ec)
    right = ea.merge(eb.merge(ec))
    full = MCEstimate.from_samples(a + b + c)
    for m in (left, right):
        assert m.n == full.n
        assert m.mean == pytest.approx(full.mean, rel=1e-9, abs=1e-9)
        assert m.stderr == pytest.approx(full.stderr, rel=1e-7, abs=1e-9)
    swapped = eb.merge(ea)
    assert swapped.mean == pytest.approx(ea.merge(eb).mean, rel=1e-12, abs=1e-12)


def test_median_and_fraction_stderr():
    x = np.random.default_rng(1).normal(size=20000)
    # normal median: sd * sqrt(pi / 2) / sqrt(n)
    assert median_stderr(x) == pytest.approx(math.sqrt(math.pi / 2) / math.sqrt(20000), rel=0.1)
    assert fraction_stderr(0.5, 100) == pytest.approx(0.05)
    assert fraction_stderr(0.0, 100) == 0.0


def test_ks_two_sample_identical():
    x = np.arange(100.0)
    d, p = ks_two_sample(x, x)
    assert d == 0 and p == 1.0


def test_hill_tail_index_on_pareto():
    # Pareto(alpha) has tail index alpha exactly
    rng = np.random.default_rng(2)
    for alpha in (1.2, 3.0):
        x = rng.pareto(alpha, 200000) + 1.0
        assert hill_tail_index(x, 2000) == pytest.approx(alpha, rel=0.08)
    assert hill_tail_index(np.ones(10)) == math.inf
