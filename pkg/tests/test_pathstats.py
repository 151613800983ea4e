import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fbm_maxloss.core import FbmPath, TimeGrid
from fbm_maxloss.errors import ValidationError
from fbm_maxloss.pathstats import functionals, maximum_loss, maximum_loss_batch


def brute_loss(values):
    n = len(values)
    return max(values[u] - values[v] for u in range(n) for v in range(u, n))


def brute_gain(values):
    n = len(values)
    return max(values[v] - values[u] for u in range(n) for v in range(u, n))


paths = arrays(
    np.float64,
    st.integers(1, 60),
    elements=st.floats(-1e6, 1e6, allow_nan=False, allow_subnormal=False),
)


@pytest.mark.parametrize(
    "values, expected",
    [([0, 0.1, 0.2, 0.3], 0.0), ([0, 1, 0.25, 0.75], 0.75), ([0, -1], 1.0), ([0.0], 0.0)],
)
def test_examples(values, expected):
    assert maximum_loss(np.array(values, dtype=float)) == expected


def test_accepts_fbm_path():
    path = FbmPath(TimeGrid(1.0, 3), np.array([0, 1, 0.25, 0.75]))
    assert maximum_loss(path) == 0.75


def test_matches_brute_force_on_random_paths():
    rng = np.random.default_rng(11)
    for _ in range(300):
        n = int(rng.integers(2, 200))
        values = np.concatenate(([0.0], np.cumsum(rng.standard_normal(n - 1))))
        assert maximum_loss(values) == brute_loss(values)


def test_rejects_nan():
    with pytest.raises(ValidationError):
        maximum_loss(np.array([0.0, np.nan, 1.0]))
    with pytest.raises(ValidationError):
        maximum_loss_batch(np.array([[0.0, np.nan]]))


def test_batch_matches_single():
    rng = np.random.default_rng(5)
    values = np.cumsum(rng.standard_normal((40, 30)), axis=1)
    assert np.array_equal(maximum_loss_batch(values), [maximum_loss(v) for v in values])


def test_functionals_examples():
    f = functionals(np.zeros(5))
    assert (f.supremum, f.infimum, f.range, f.max_loss) == (0, 0, 0, 0)
    f = functionals(np.array([0.0, 1.0, -1.0]))
    assert (f.supremum, f.infimum, f.range, f.max_loss) == (1, -1, 2, 2)


def test_functionals_brute_force():
    rng = np.random.default_rng(2)
    values = np.concatenate(([0.0], np.cumsum(rng.standard_normal(199))))
    f = functionals(values)
    assert f.supremum == max(values) and f.infimum == min(values)
    assert f.range == max(values) - min(values)
    assert f.max_loss == brute_loss(values)


@given(paths, st.floats(-1e3, 1e3))
def test_shift_invariance(values, c):
    # shifting changes rounding, so compare with a tolerance scaled to magnitudes
    scale = 1e-9 * (1 + np.max(np.abs(values)) + abs(c))
    f0, f1 = functionals(values), functionals(values + c)
    assert f1.max_loss == pytest.approx(f0.max_loss, abs=scale)
    assert f1.range == pytest.approx(f0.range, abs=scale)


@given(paths)
def test_reflection_duality(values):
    assert maximum_loss(-values) == brute_gain(values)


@given(paths)
def test_ordering(values):
    values = np.concatenate(([0.0], values))
    f = functionals(values)
    assert f.supremum >= 0 >= f.infimum
    assert 0 <= f.max_loss <= f.range
    assert f.range == f.supremum - f.infimum
