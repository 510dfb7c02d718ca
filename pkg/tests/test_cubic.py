import numpy as np
import pytest

from uot.solver.cubic import root_plus


def _bisect(b, d, lo=0.0, hi=None, steps=200):
    """Largest root of x³ + b x² + d for d <= 0, which lies in [max(0, -b), ...]."""
    lo = np.maximum(lo, -b)
    hi = np.abs(b) + np.abs(d) + 1.0 if hi is None else hi
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        positive = (mid + b) * mid * mid + d > 0
        hi = np.where(positive, mid, hi)
        lo = np.where(positive, lo, mid)
    return 0.5 * (lo + hi)


@pytest.mark.parametrize(
    "coeffs, expected",
    [
        ((1, -1, 0, 0), 1.0),
        ((1, 0, 0, -8), 2.0),
        ((2, 0, 0, -16), 2.0),
        ((1, -6, 11, -6), 3.0),
    ],
)
def test_known_roots(coeffs, expected):
    assert root_plus(*coeffs) == pytest.approx(expected, abs=1e-12)


def test_bisection_example():
    x = root_plus(1, -2, 0, -3)
    assert x == pytest.approx(float(_bisect(np.array(-2.0), np.array(-3.0))), abs=1e-10)
    assert x == pytest.approx(2.485584, abs=1e-6)


def test_double_root_at_zero_gives_positive_part():
    assert root_plus(1, 0.5, 0, 0) == pytest.approx(0.0, abs=1e-12)
    assert root_plus(1, -0.5, 0, 0) == pytest.approx(0.5, abs=1e-12)


def test_vectorised_against_bisection(rng):
    b = rng.uniform(-10, 10, size=1000)
    d = rng.uniform(-10, 0, size=1000)
    x = root_plus(np.ones_like(b), b, np.zeros_like(b), d)
    assert x.shape == (1000,)
    np.testing.assert_allclose(x, _bisect(b, d), rtol=0, atol=1e-10)


def test_zero_leading_coefficient():
    with pytest.raises(ValueError):
        root_plus(0, 1, 0, -1)
