"""Sunflower upper bound on the critical clause density.

The bound is the root in alpha of an entropy functional ``S(k, alpha)``;
``S`` is evaluated from its single integral over ``s`` (through the
incomplete gamma function) and cross-checked against a Poisson-weighted
double representation.
"""

from __future__ import annotations

import math
import sys

import numpy as np
from pydantic import BaseModel
from scipy import integrate, optimize, stats

from ..core.config import get_settings
from ..core.exceptions import BracketException, QuadratureException
from ..utils.logger import get_logger

logger = get_logger("bound")

_SERIES_EPS = 1e-16
_FPMIN = sys.float_info.min / sys.float_info.epsilon
_MAX_TERMS = 1000
# e^{-s} < 1e-16 beyond this point
_S_CUTOFF = 16.0 * math.log(10.0)
_MAX_DOUBLINGS = 64
_ROOT_RTOL = 1e-6

SUPERSEDED_NOTE = "sunflower, superseded by nosegay"


def _check_domain(z: float, x: float) -> None:
    if not z > 0.0 or not x >= 0.0 or not math.isfinite(x):
        raise QuadratureException(f"incomplete gamma needs z > 0 and finite x >= 0, got z={z}, x={x}")


def _lower_series(z: float, x: float) -> float:
    """``gamma(z, x) = x^z e^-x sum_n x^n / (z (z+1) ... (z+n))``."""
    term = 1.0 / z
    total = term
    ap = z
    for _ in range(_MAX_TERMS):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _SERIES_EPS:
            return total * math.exp(-x + z * math.log(x))
    raise QuadratureException(f"incomplete gamma series did not converge at z={z}, x={x}")


def _upper_continued_fraction(z: float, x: float) -> float:
    """Modified Lentz evaluation of the continued fraction for ``Gamma(z, x)``."""
    b = x + 1.0 - z
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_TERMS + 1):
        an = -i * (i - z)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _SERIES_EPS:
            return math.exp(-x + z * math.log(x)) * h
    raise QuadratureException(f"incomplete gamma continued fraction did not converge at z={z}, x={x}")


def incomplete_gamma(z: float, x: float) -> float:
    """Upper incomplete gamma ``Gamma(z, x) = int_x^inf t^(z-1) e^-t dt``; ``Gamma(z, 0) = Gamma(z)``."""
    _check_domain(z, x)
    if x == 0.0:
        return math.gamma(z)
    if x < z + 1.0:
        return math.gamma(z) - _lower_series(z, x)
    return _upper_continued_fraction(z, x)


def lower_incomplete_gamma(z: float, x: float) -> float:
    """``gamma(z, x) = Gamma(z) - Gamma(z, x)``."""
    _check_domain(z, x)
    if x == 0.0:
        return 0.0
    if x < z + 1.0:
        return _lower_series(z, x)
    return math.gamma(z) - _upper_continued_fraction(z, x)


def _clause_pairs(k: int) -> float:
    return float(2**k - 2)


def _bracket_term(a: float, q: float) -> float:
    """``1 - a q^-a gamma(a, q)``; below q = 1 the alternating series avoids cancellation."""
    if q == 0.0:
        return 0.0
    if q < 1.0:
        total = 0.0
        power = 1.0
        factorial = 1.0
        for n in range(1, _MAX_TERMS):
            power *= q
            factorial *= n
            term = a * power / (factorial * (a + n))
            total += term if n % 2 else -term
            if term < _SERIES_EPS * abs(total):
                return total
        raise QuadratureException(f"bracket series did not converge at q={q}")
    return 1.0 - a * q ** (-a) * lower_incomplete_gamma(a, q)


def _check_entropy_args(k: int, alpha: float) -> None:
    if k < 3:
        raise QuadratureException(f"the sunflower entropy needs k >= 3, got {k}")
    if not alpha > 0.0 or not math.isfinite(alpha):
        raise QuadratureException(f"clause density must be positive and finite, got {alpha}")


def _base_terms(k: int, alpha: float) -> float:
    return math.log(2.0) + alpha * math.log1p(-(2.0 ** (1 - k)))


def _quad(func, lo: float, hi: float) -> tuple[float, float]:
    settings = get_settings()
    value, error = integrate.quad(
        func,
        lo,
        hi,
        epsabs=settings.QUAD_EPSABS,
        epsrel=settings.QUAD_EPSREL,
        limit=settings.QUAD_LIMIT,
    )
    allowed = 1e3 * max(settings.QUAD_EPSABS, settings.QUAD_EPSREL * abs(value))
    if not math.isfinite(value) or error > allowed:
        raise QuadratureException(f"quadrature error estimate {error:.3e} exceeds {allowed:.3e}")
    return value, error


def _entropy_with_error(k: int, alpha: float) -> tuple[float, float]:
    _check_entropy_args(k, alpha)
    a = 1.0 / (k - 1)
    scale = k * alpha
    pairs = _clause_pairs(k)
    at_zero = a * scale / ((a + 1.0) * pairs)

    def integrand(s: float) -> float:
        if s == 0.0:
            return at_zero
        q = -scale * math.expm1(-s / pairs)
        return math.exp(-s) / s * _bracket_term(a, q)

    value, error = _quad(integrand, 0.0, _S_CUTOFF)
    return _base_terms(k, alpha) + value, error


def sunflower_entropy(k: int, alpha: float) -> float:
    """``S(k, alpha)`` from the single ``s``-integral."""
    return _entropy_with_error(k, alpha)[0]


def sunflower_entropy_poisson(k: int, alpha: float) -> float:
    """``S(k, alpha)`` as ``int_0^1 E[ln(1 + d / (2^k - 2))] dt`` over Poisson ``d``.

    The Poisson mean is ``k alpha t^(k-1)``; each sum stops once the remaining
    tail mass is below the configured threshold.
    """
    _check_entropy_args(k, alpha)
    tail = get_settings().POISSON_TAIL_MASS
    pairs = _clause_pairs(k)

    def integrand(t: float) -> float:
        mean = k * alpha * t ** (k - 1)
        if mean == 0.0:
            return 0.0
        top = int(stats.poisson.isf(tail, mean)) + 1
        d = np.arange(top + 1)
        return float(np.sum(stats.poisson.pmf(d, mean) * np.log1p(d / pairs)))

    value, _ = _quad(integrand, 0.0, 1.0)
    return _base_terms(k, alpha) + value


class BoundResult(BaseModel):
    """Root of ``S(alpha) = 0`` with its verified sign change."""

    k: int
    alpha_upper: float
    bracket: tuple[float, float]
    entropy_at_bracket: tuple[float, float]
    quad_error: float
    note: str | None = None


def sunflower_alpha_upper(k: int) -> BoundResult:
    """Bisect ``S(k, alpha) = 0`` to relative precision 1e-6.

    ``S`` decreases in ``alpha`` from ``ln 2`` at zero density, so the bracket
    is found by doubling.
    """
    if k < 3:
        raise BracketException(f"the sunflower bound needs k >= 3, got {k}")

    def entropy(alpha: float) -> float:
        return sunflower_entropy(k, alpha)

    lo, hi = 0.5, 1.0
    while entropy(lo) <= 0.0:
        lo /= 2.0
        if lo < 1e-12:
            raise BracketException(f"k={k}: entropy is not positive at small density")
    doublings = 0
    while entropy(hi) >= 0.0:
        lo, hi = hi, hi * 2.0
        doublings += 1
        if doublings > _MAX_DOUBLINGS:
            raise BracketException(f"k={k}: no sign change found below alpha={hi:.3g}")

    root = optimize.bisect(entropy, lo, hi, xtol=1e-12, rtol=_ROOT_RTOL)
    eps = 2.0 * _ROOT_RTOL * root
    left, right = root - eps, root + eps
    s_left, left_error = _entropy_with_error(k, left)
    s_right, right_error = _entropy_with_error(k, right)
    if not s_left > 0.0 > s_right:
        raise BracketException(f"k={k}: sign change not verified around alpha={root:.8g}")

    note = SUPERSEDED_NOTE if k == 3 else None
    logger.info("sunflower_bound_computed", k=k, alpha_upper=root)
    return BoundResult(
        k=k,
        alpha_upper=float(root),
        bracket=(left, right),
        entropy_at_bracket=(s_left, s_right),
        quad_error=max(left_error, right_error),
        note=note,
    )
