"""Gaussian source model: density, tail statistics, the SQNR-optimal compressor,
and the adaptive quadrature routine shared by the rest of the package."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

__all__ = [
    "SourceModel",
    "QuadratureSpec",
    "DEFAULT_QUADRATURE",
    "QuadratureError",
    "pdf",
    "upper_tail",
    "compressor",
    "compressor_derivative",
    "support_threshold",
    "tail_centroid",
    "integrate",
    "TAIL_CENTROID_CUTOFF",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_SQRT6 = math.sqrt(6.0)

# Beyond this many standard deviations the upper-tail probability leaves the
# normal double range and the centroid ratio is no longer trustworthy.
TAIL_CENTROID_CUTOFF = 35.0


@dataclass(frozen=True)
class SourceModel:
    """Zero-mean Gaussian amplitude source; ``sigma`` is the standard deviation."""

    sigma: float = 1.0

    def __post_init__(self) -> None:
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and subdivision budget for adaptive quadrature."""

    relative_tolerance: float = 1e-10
    absolute_tolerance: float = 1e-12
    max_subdivisions: int = 100_000

    def __post_init__(self) -> None:
        if self.relative_tolerance <= 0.0 or self.absolute_tolerance <= 0.0:
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be at least 1")


DEFAULT_QUADRATURE = QuadratureSpec()


class QuadratureError(ArithmeticError):
    """Adaptive quadrature ran out of subdivisions before meeting tolerance.

    ``best_estimate`` carries the value assembled so far.
    """

    def __init__(self, message: str, best_estimate: float):
        super().__init__(message)
        self.best_estimate = best_estimate


def pdf(model: SourceModel, x: float) -> float:
    """Gaussian density of ``model`` at amplitude ``x``."""
    z = x / model.sigma
    return math.exp(-0.5 * z * z) / (model.sigma * _SQRT_2PI)


def upper_tail(model: SourceModel, x: float) -> float:
    """P(X > x); computed through erfc so large x does not cancel."""
    return 0.5 * math.erfc(x / (model.sigma * math.sqrt(2.0)))


def compressor(model: SourceModel, x_max: float, x: float) -> float:
    """SQNR-optimal compressor for the Gaussian source on [-x_max, x_max].

    Odd, strictly increasing, maps 0 to 0 and +/-x_max to +/-x_max.  Equals
    x_max * sgn(x) * erf(|x| / (sigma*sqrt(6))) / erf(x_max / (sigma*sqrt(6))),
    the closed form of the normalized cube-root-density integral.
    """
    if x_max <= 0.0:
        raise ValueError(f"x_max must be positive, got {x_max}")
    if abs(x) > x_max * (1.0 + 1e-12):
        raise ValueError(f"|x|={abs(x)} outside compressor domain [0, {x_max}]")
    s = model.sigma * _SQRT6
    return x_max * math.copysign(1.0, x) * math.erf(abs(x) / s) / math.erf(x_max / s)


def compressor_derivative(model: SourceModel, x_max: float, x: float) -> float:
    """Slope of the optimal compressor; positive everywhere on the domain."""
    if x_max <= 0.0:
        raise ValueError(f"x_max must be positive, got {x_max}")
    s = model.sigma * _SQRT6
    z = x / s
    return x_max * (2.0 / math.sqrt(math.pi)) * math.exp(-z * z) / (s * math.erf(x_max / s))


def support_threshold(model: SourceModel, n_levels: int) -> float:
    """Support-region edge for an ``n_levels`` quantizer on this source.

    sigma * sqrt(6 ln N) * [1 - ln(ln N)/(4 ln N) - ln(3 sqrt(pi))/(2 ln N)];
    requires n_levels >= 4 so the inner logarithm is positive and the design
    keeps at least two granular levels.
    """
    if n_levels < 4:
        raise ValueError(f"n_levels must be >= 4, got {n_levels}")
    ln_n = math.log(n_levels)
    bracket = 1.0 - math.log(ln_n) / (4.0 * ln_n) - math.log(3.0 * math.sqrt(math.pi)) / (2.0 * ln_n)
    return model.sigma * math.sqrt(6.0 * ln_n) * bracket


def tail_centroid(model: SourceModel, x_max: float) -> float:
    """Conditional mean of the source beyond ``x_max`` (inverse Mills ratio).

    sigma^2 * pdf(x_max) / P(X > x_max); always exceeds x_max.  Raises
    OverflowError once x_max/sigma > TAIL_CENTROID_CUTOFF, where the tail
    probability underflows.
    """
    if x_max < 0.0:
        raise ValueError(f"x_max must be nonnegative, got {x_max}")
    if x_max / model.sigma > TAIL_CENTROID_CUTOFF:
        raise OverflowError(
            f"tail centroid not computable beyond {TAIL_CENTROID_CUTOFF} standard deviations"
        )
    return model.sigma**2 * pdf(model, x_max) / upper_tail(model, x_max)


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
) -> float:
    """Adaptive Simpson quadrature of ``f`` over [a, b].

    Deterministic for identical inputs.  The interval is split until the
    Richardson error estimate of each piece falls under its share of
    max(absolute_tolerance, relative_tolerance * |whole|); exceeding
    ``spec.max_subdivisions`` raises QuadratureError carrying the best
    estimate assembled so far.
    """
    if a > b:
        raise ValueError(f"integration bounds out of order: {a} > {b}")
    if a == b:
        return 0.0

    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    if not all(map(math.isfinite, (fa, fm, fb))):
        raise ValueError("integrand not finite on the integration interval")
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0
    tol = max(spec.absolute_tolerance, spec.relative_tolerance * abs(whole))

    budget = [spec.max_subdivisions]
    exhausted = [False]
    max_depth = 60  # interval width shrinks by 2^-60; past that refinement is noise

    def recurse(
        x0: float, x2: float, f0: float, f1: float, f2: float, s: float, tol_i: float, depth: int
    ) -> float:
        x1 = 0.5 * (x0 + x2)
        left_mid = 0.5 * (x0 + x1)
        right_mid = 0.5 * (x1 + x2)
        fl, fr = f(left_mid), f(right_mid)
        h = x2 - x0
        s_left = h * (f0 + 4.0 * fl + f1) / 12.0
        s_right = h * (f1 + 4.0 * fr + f2) / 12.0
        err = (s_left + s_right - s) / 15.0
        if abs(err) <= tol_i:
            return s_left + s_right + err
        if budget[0] <= 0 or depth >= max_depth:
            exhausted[0] = True
            return s_left + s_right + err
        budget[0] -= 1
        half_tol = 0.5 * tol_i
        return recurse(x0, x1, f0, fl, f1, s_left, half_tol, depth + 1) + recurse(
            x1, x2, f1, fr, f2, s_right, half_tol, depth + 1
        )

    result = recurse(a, b, fa, fm, fb, whole, tol, 0)
    if exhausted[0]:
        raise QuadratureError(
            f"quadrature did not converge within {spec.max_subdivisions} subdivisions",
            best_estimate=result,
        )
    return result
