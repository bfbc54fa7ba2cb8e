"""Tests for the incomplete gamma function and the sunflower bound."""

import math

import pytest
from scipy import integrate

from src.core.exceptions import BracketException, QuadratureException
from src.services.bound_service import (
    SUPERSEDED_NOTE,
    incomplete_gamma,
    lower_incomplete_gamma,
    sunflower_alpha_upper,
    sunflower_entropy,
    sunflower_entropy_poisson,
)


@pytest.mark.parametrize("x", [0.01, 0.3, 1.0, 2.5, 10.0, 40.0])
def test_half_order_matches_erfc(x):
    expected = math.sqrt(math.pi) * math.erfc(math.sqrt(x))
    assert incomplete_gamma(0.5, x) == pytest.approx(expected, rel=1e-12)


def test_known_values():
    assert incomplete_gamma(1.0, 1.0) == pytest.approx(math.exp(-1.0), rel=1e-14)
    assert incomplete_gamma(3.0, 0.0) == pytest.approx(2.0)
    assert lower_incomplete_gamma(2.0, 0.0) == 0.0


@pytest.mark.parametrize(("z", "x"), [(0.2, 0.1), (0.5, 3.0), (1.7, 2.7), (4.0, 1.0), (0.25, 12.0)])
def test_against_quadrature(z, x):
    upper, _ = integrate.quad(lambda t: t ** (z - 1) * math.exp(-t), x, math.inf)
    assert incomplete_gamma(z, x) == pytest.approx(upper, rel=1e-9)
    assert lower_incomplete_gamma(z, x) + incomplete_gamma(z, x) == pytest.approx(math.gamma(z), rel=1e-12)


@pytest.mark.parametrize(("z", "x"), [(0.0, 1.0), (-1.0, 1.0), (1.0, -0.5), (1.0, math.inf)])
def test_domain_errors(z, x):
    with pytest.raises(QuadratureException):
        incomplete_gamma(z, x)


@pytest.mark.parametrize("k", [3, 4, 5])
@pytest.mark.parametrize("alpha", [1.0, 5.0, 20.0])
def test_entropy_representations_agree(k, alpha):
    assert sunflower_entropy(k, alpha) == pytest.approx(sunflower_entropy_poisson(k, alpha), abs=1e-8)


def test_entropy_at_low_density_is_ln_two():
    assert sunflower_entropy(4, 1e-9) == pytest.approx(math.log(2.0), abs=1e-8)


def test_entropy_decreases_with_density():
    values = [sunflower_entropy(4, a) for a in (0.5, 2.0, 5.0, 8.0, 12.0)]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert abs(sunflower_entropy(4, 7.98)) < 1e-2


def test_entropy_argument_checks():
    with pytest.raises(QuadratureException):
        sunflower_entropy(2, 1.0)
    with pytest.raises(QuadratureException):
        sunflower_entropy(4, 0.0)


@pytest.mark.parametrize(("k", "expected"), [(4, 7.98), (5, 16.00)])
def test_bound_values(k, expected):
    result = sunflower_alpha_upper(k)
    assert result.alpha_upper == pytest.approx(expected, abs=0.01)
    assert result.note is None
    lo, hi = result.bracket
    assert lo < result.alpha_upper < hi
    s_lo, s_hi = result.entropy_at_bracket
    assert s_lo > 0.0 > s_hi


def test_bound_grows_like_two_to_the_k():
    def ratio(k: int) -> float:
        return sunflower_alpha_upper(k).alpha_upper / (2 ** (k - 1) * math.log(2.0))

    r10, r20 = ratio(10), ratio(20)
    assert 1.0 < r20 < 1.4
    assert r20 < r10


def test_three_local_bound_is_marked_superseded():
    assert sunflower_alpha_upper(3).note == SUPERSEDED_NOTE


def test_bound_needs_k_at_least_three():
    with pytest.raises(BracketException):
        sunflower_alpha_upper(2)
