"""Closed-form scaling model for repeated-inference success.

A problem attempted with N independent scaling units (sampled candidates or
rethink rounds), each succeeding with probability ``p_x``, is solved with
probability ``f_max * (1 - (1 - p_x)**N)``. The marginal gain of one more
unit decays geometrically, so past some budget the gain drops below any
threshold worth paying for; :func:`saturation_point` computes that budget in
closed form.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass

__all__ = [
    "ScalingModel",
    "GainThreshold",
    "SaturationPoint",
    "hit_probability",
    "all_fail_probability",
    "first_success_pmf",
    "marginal_gain",
    "saturation_point",
]

# Below this, 1 - p_x loses low bits of p_x, so the power is evaluated in the
# log domain via log1p.
_SMALL_P = 1e-3

# Relative tolerance for detecting an exactly-integer ceiling argument; the
# plateau condition is a strict inequality, so an integer argument m must
# round up to m + 1.
_INTEGER_SNAP_RTOL = 1e-9


@dataclass(frozen=True, slots=True)
class ScalingModel:
    """Per-unit success probability and asymptotic ceiling for one problem.

    ``p_x`` is the effective probability that a single scaling unit succeeds
    (a sampled candidate is correct, or one rethink round fixes the answer).
    ``f_max`` is the best performance reachable even with unbounded budget.
    """

    p_x: float
    f_max: float = 1.0

    def __post_init__(self) -> None:
        if not (0.0 < self.p_x <= 1.0):
            raise ValueError(f"p_x must be in (0, 1], got {self.p_x}")
        if not (0.0 < self.f_max <= 1.0):
            raise ValueError(f"f_max must be in (0, 1], got {self.f_max}")


@dataclass(frozen=True, slots=True)
class GainThreshold:
    """Smallest per-unit performance gain still considered worthwhile."""

    epsilon: float

    def __post_init__(self) -> None:
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")


@dataclass(frozen=True, slots=True)
class SaturationPoint:
    """Smallest budget past which every additional unit gains less than epsilon.

    ``degenerate`` is set when even the first unit's gain is at or below the
    threshold (epsilon >= f_max * p_x); the budget is then pinned to 1 so the
    problem still receives one generation.
    """

    n_star: int
    degenerate: bool = False

    def __post_init__(self) -> None:
        if self.n_star < 1:
            raise ValueError(f"n_star must be >= 1, got {self.n_star}")
        if self.degenerate and self.n_star != 1:
            raise ValueError("degenerate saturation points must have n_star == 1")


def _check_count(n: int, minimum: int, name: str) -> int:
    n = operator.index(n)
    if n < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {n}")
    return n


def _fail_pow(p_x: float, n: int) -> float:
    """(1 - p_x)**n, evaluated in the log domain when p_x is small."""
    if n == 0:
        return 1.0
    if p_x == 1.0:
        return 0.0
    if p_x < _SMALL_P:
        return math.exp(n * math.log1p(-p_x))
    return (1.0 - p_x) ** n


def all_fail_probability(model: ScalingModel, n: int) -> float:
    """Probability that all of the first ``n`` units fail, (1 - p_x)**n."""
    n = _check_count(n, 1, "n")
    return _fail_pow(model.p_x, n)


def hit_probability(model: ScalingModel, n: int) -> float:
    """Probability of at least one success within ``n`` units, scaled by f_max.

    Equals ``f_max * (1 - all_fail_probability(model, n))`` exactly.
    """
    n = _check_count(n, 1, "n")
    return model.f_max * (1.0 - _fail_pow(model.p_x, n))


def first_success_pmf(model: ScalingModel, k: int) -> float:
    """Probability that the first success happens exactly at unit ``k``.

    Geometric law (1 - p_x)**(k - 1) * p_x; partial sums over k = 1..N
    telescope to 1 - (1 - p_x)**N. Not scaled by f_max.
    """
    k = _check_count(k, 1, "k")
    return _fail_pow(model.p_x, k - 1) * model.p_x


def marginal_gain(model: ScalingModel, n: int) -> float:
    """Performance gained by the (n+1)-th unit: f_max * p_x * (1 - p_x)**n."""
    n = _check_count(n, 0, "n")
    return model.f_max * model.p_x * _fail_pow(model.p_x, n)


def saturation_point(model: ScalingModel, threshold: GainThreshold) -> SaturationPoint:
    """Smallest integer N with marginal_gain(N) < epsilon for all budgets >= N.

    Closed form: ceil(ln(epsilon / (f_max * p_x)) / ln(1 - p_x)). The result
    brackets the threshold: marginal_gain(n_star) < epsilon and, when
    n_star > 1, marginal_gain(n_star - 1) >= epsilon.

    Degenerate case: epsilon >= f_max * p_x means the very first unit already
    gains no more than the threshold; returns n_star = 1 with the flag set.

    p_x = 1 (with epsilon below f_max) is the defined limit n_star = 1: a
    single unit reaches f_max and every later gain is exactly zero.
    """
    epsilon = threshold.epsilon
    first_gain = model.f_max * model.p_x
    if epsilon >= first_gain:
        return SaturationPoint(1, degenerate=True)
    if model.p_x == 1.0:
        return SaturationPoint(1, degenerate=False)

    x = math.log(epsilon / first_gain) / math.log1p(-model.p_x)
    nearest = round(x)
    if abs(x - nearest) <= _INTEGER_SNAP_RTOL * max(1.0, abs(x)):
        n = int(nearest) + 1
    else:
        n = math.ceil(x)
    n = max(n, 1)

    # The closed form is accurate to ~1e-9 relative; shift by single steps so
    # the strict bracketing holds for the floating-point marginal_gain too.
    while marginal_gain(model, n) >= epsilon:
        n += 1
    while n > 1 and marginal_gain(model, n - 1) < epsilon:
        n -= 1
    return SaturationPoint(n, degenerate=False)
