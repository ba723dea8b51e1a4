"""Closed-form references used to cross-check the GL machinery.

Everything here is evaluated from series or gamma-function identities and
never touches the convolution code it is used to validate.
"""

from __future__ import annotations

import math

__all__ = [
    "mittag_leffler",
    "caputo_power_derivative",
    "gl_weight_gamma",
]


def mittag_leffler(alpha: float, z: float, rtol: float = 1e-15, max_terms: int = 600) -> float:
    """One-parameter Mittag-Leffler function E_alpha(z) by direct summation.

    Terms are formed through lgamma so large indices neither overflow nor
    lose the sign.  Summation stops once three consecutive terms are
    negligible, which covers the growth-then-decay shape of the series for
    |z| > 1.
    """
    if alpha <= 0.0 or not math.isfinite(alpha):
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    if z == 0.0:
        return 1.0
    log_abs_z = math.log(abs(z))
    total = 1.0  # k = 0 term
    small_streak = 0
    for k in range(1, max_terms):
        mag = math.exp(k * log_abs_z - math.lgamma(alpha * k + 1.0))
        term = mag if (z > 0.0 or k % 2 == 0) else -mag
        total += term
        if mag <= rtol * max(1.0, abs(total)):
            small_streak += 1
            if small_streak >= 3:
                return total
        else:
            small_streak = 0
    raise ArithmeticError(
        f"Mittag-Leffler series did not converge for alpha={alpha}, z={z}"
    )


def caputo_power_derivative(alpha: float, p: float, t: float) -> float:
    """Caputo derivative of order alpha of t**p, valid for p > 0, t >= 0.

    D^alpha t^p = Gamma(p + 1) / Gamma(p - alpha + 1) * t^(p - alpha).
    """
    if p <= 0.0:
        raise ValueError(f"exponent must be positive, got {p!r}")
    if t < 0.0:
        raise ValueError(f"t must be non-negative, got {t!r}")
    if t == 0.0:
        return 0.0 if p > alpha else math.inf
    return math.gamma(p + 1.0) / math.gamma(p - alpha + 1.0) * t ** (p - alpha)


def gl_weight_gamma(alpha: float, j: int) -> float:
    """(-1)^j * binomial(alpha, j) evaluated directly from gamma ratios.

    Overflows for large j; usable as an independent check for j up to about
    150, which is all the recurrence tests need.
    """
    if j < 0:
        raise ValueError(f"index must be non-negative, got {j}")
    if j == 0:
        return 1.0
    sign = -1.0 if j % 2 else 1.0
    return sign * math.gamma(alpha + 1.0) / (
        math.gamma(j + 1.0) * math.gamma(alpha - j + 1.0)
    )
