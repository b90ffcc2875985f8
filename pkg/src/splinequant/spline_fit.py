"""Least-squares fitting of a piecewise-quadratic curve to a target function,
plus evaluation, differentiation, and per-segment inversion of the result.

Each segment is fitted independently: the squared-error integral over one knot
interval is minimized by its own quadratic, so the normal equations decouple
into 3x3 systems.  No continuity is imposed across knots; the jump sizes are
available as a diagnostic through ``QuadraticSpline.knot_jumps``.
"""

from __future__ import annotations

import bisect
import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .gauss_analytics import DEFAULT_QUADRATURE, QuadratureSpec, integrate

__all__ = [
    "KnotVector",
    "QuadSegment",
    "QuadraticSpline",
    "FitError",
    "InversionError",
    "fit",
    "fit_objective",
    "invert_segment",
]

log = logging.getLogger(__name__)

_DOMAIN_SLACK = 1e-9


class FitError(ArithmeticError):
    """Raised when the per-segment normal equations cannot be solved."""


class InversionError(ValueError):
    """Raised when a segment polynomial has no usable root for a target value."""


@dataclass(frozen=True)
class KnotVector:
    """Strictly increasing breakpoints starting at 0; the last one is the design edge."""

    knots: tuple[float, ...]

    def __init__(self, knots: Sequence[float]):
        object.__setattr__(self, "knots", tuple(float(k) for k in knots))
        if len(self.knots) < 2:
            raise ValueError("need at least two knots (one segment)")
        if self.knots[0] != 0.0:
            raise ValueError(f"first knot must be 0, got {self.knots[0]}")
        if any(a >= b for a, b in zip(self.knots, self.knots[1:])):
            raise ValueError(f"knots must be strictly increasing, got {self.knots}")

    def __len__(self) -> int:
        return len(self.knots)

    def __getitem__(self, i: int) -> float:
        return self.knots[i]

    @property
    def n_segments(self) -> int:
        return len(self.knots) - 1

    @property
    def x_max(self) -> float:
        return self.knots[-1]


@dataclass(frozen=True)
class QuadSegment:
    """One polynomial piece c0 + c1*x + c2*x^2 on [lo, hi]."""

    c0: float
    c1: float
    c2: float
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError(f"segment bounds out of order: [{self.lo}, {self.hi}]")

    def value(self, x: float) -> float:
        return self.c0 + x * (self.c1 + self.c2 * x)

    def slope(self, x: float) -> float:
        return self.c1 + 2.0 * self.c2 * x


@dataclass(frozen=True)
class QuadraticSpline:
    """Ordered segments tiling [knots[0], knots[-1]]; immutable once built."""

    segments: tuple[QuadSegment, ...]

    def __post_init__(self) -> None:
        if not self.segments:
            raise ValueError("spline needs at least one segment")
        for left, right in zip(self.segments, self.segments[1:]):
            if left.hi != right.lo:
                raise ValueError(
                    f"segments do not tile the domain: {left.hi} != {right.lo}"
                )

    @property
    def knots(self) -> tuple[float, ...]:
        return tuple(s.lo for s in self.segments) + (self.segments[-1].hi,)

    @property
    def lo(self) -> float:
        return self.segments[0].lo

    @property
    def hi(self) -> float:
        return self.segments[-1].hi

    def segment_index(self, x: float) -> int:
        """Owning segment of ``x``; interior knots resolve to the left segment."""
        if x < self.lo or x > self.hi:
            raise ValueError(f"x={x} outside spline domain [{self.lo}, {self.hi}]")
        return max(0, bisect.bisect_left(self.knots, x) - 1)

    def value(self, x: float) -> float:
        return self.segments[self.segment_index(x)].value(x)

    def derivative(self, x: float) -> float:
        return self.segments[self.segment_index(x)].slope(x)

    def knot_values(self) -> tuple[float, ...]:
        """Values at all knots under the left-segment tie-break; the first entry
        is the leading segment's value at its own left edge."""
        return (self.segments[0].value(self.lo),) + tuple(
            s.value(s.hi) for s in self.segments
        )

    def knot_jumps(self) -> tuple[float, ...]:
        """Discontinuity magnitude at each interior knot (fit diagnostic)."""
        return tuple(
            abs(right.value(right.lo) - left.value(left.hi))
            for left, right in zip(self.segments, self.segments[1:])
        )


def _solve3(m: list[list[float]], b: list[float]) -> list[float]:
    """3x3 solve by LU with partial pivoting; logs a 1-norm condition estimate."""
    a = [row[:] for row in m]
    x = b[:]
    idx = [0, 1, 2]
    for col in range(3):
        piv = max(range(col, 3), key=lambda r: abs(a[r][col]))
        if abs(a[piv][col]) < 1e-300:
            raise FitError("singular moment matrix")
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            x[col], x[piv] = x[piv], x[col]
            idx[col], idx[piv] = idx[piv], idx[col]
        for r in range(col + 1, 3):
            f = a[r][col] / a[col][col]
            a[r][col] = 0.0
            for c in range(col + 1, 3):
                a[r][c] -= f * a[col][c]
            x[r] -= f * x[col]
    for r in (2, 1, 0):
        s = x[r] - sum(a[r][c] * x[c] for c in range(r + 1, 3))
        x[r] = s / a[r][r]
    if log.isEnabledFor(logging.DEBUG):
        log.debug("moment matrix condition estimate: %.3e", _cond1(m))
    return x


def _cond1(m: list[list[float]]) -> float:
    det = (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )
    if det == 0.0:
        return math.inf
    cof = [
        [
            (m[(i + 1) % 3][(j + 1) % 3] * m[(i + 2) % 3][(j + 2) % 3]
             - m[(i + 1) % 3][(j + 2) % 3] * m[(i + 2) % 3][(j + 1) % 3])
            for i in range(3)
        ]
        for j in range(3)
    ]
    norm = max(sum(abs(m[r][c]) for r in range(3)) for c in range(3))
    inv_norm = max(sum(abs(cof[r][c] / det) for r in range(3)) for c in range(3))
    return norm * inv_norm


def fit(
    target: Callable[[float], float],
    knots: KnotVector,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> QuadraticSpline:
    """Per-segment least-squares quadratic approximation of ``target``.

    For each knot interval the returned coefficients minimize the integral of
    (target - polynomial)^2; the residual is therefore orthogonal to 1, x, x^2
    on that interval.  Monomial moments use closed-form antiderivatives, only
    the target-weighted moments are integrated numerically.
    """
    segments = []
    for lo, hi in zip(knots.knots, knots.knots[1:]):
        moments = [
            [(hi ** (j + k + 1) - lo ** (j + k + 1)) / (j + k + 1) for k in range(3)]
            for j in range(3)
        ]
        rhs = [integrate(lambda x, k=k: target(x) * x**k, lo, hi, quad) for k in range(3)]
        c0, c1, c2 = _solve3(moments, rhs)
        segments.append(QuadSegment(c0, c1, c2, lo, hi))
    return QuadraticSpline(tuple(segments))


def fit_objective(
    target: Callable[[float], float],
    spline: QuadraticSpline,
    knots: KnotVector,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> float:
    """Length-weighted squared fit error: sum over segments of
    (1 / segment length) * integral of (target - spline)^2."""
    if spline.knots != knots.knots:
        raise ValueError(
            f"spline segments {spline.knots} do not align with knots {knots.knots}"
        )
    total = 0.0
    for seg in spline.segments:
        err = integrate(lambda x, s=seg: (target(x) - s.value(x)) ** 2, seg.lo, seg.hi, quad)
        total += err / (seg.hi - seg.lo)
    return total


def invert_segment(spline: QuadraticSpline, segment_index: int, target: float) -> float:
    """Solve segment polynomial == target inside that segment's interval.

    Uses the cancellation-free quadratic formula; falls back to the linear
    solve when the quadratic coefficient is negligible.  Exactly one root may
    lie in [lo, hi] (widened by 1e-9): none raises InversionError, two signal
    a non-monotonic segment and also raise.
    """
    seg = spline.segments[segment_index]
    a, b, c = seg.c2, seg.c1, seg.c0 - target
    if abs(a) < 1e-12 * abs(b):
        if b == 0.0:
            raise InversionError("degenerate segment polynomial (constant)")
        roots = [-c / b]
    else:
        disc = b * b - 4.0 * a * c
        if disc < 0.0:
            raise InversionError(
                f"no real root for target {target} on segment {segment_index}"
            )
        s = math.sqrt(disc)
        q = -0.5 * (b + math.copysign(s, b)) if b != 0.0 else -0.5 * s
        roots = [q / a]
        if q != 0.0:
            roots.append(c / q)
        else:
            roots.append(0.0)  # double root at the vertex when b == 0 and disc == 0
        roots = sorted(set(roots))
    inside = [r for r in roots if seg.lo - _DOMAIN_SLACK <= r <= seg.hi + _DOMAIN_SLACK]
    if not inside:
        raise InversionError(
            f"no root in [{seg.lo}, {seg.hi}] for target {target} on segment {segment_index}"
        )
    if len(inside) > 1 and abs(inside[1] - inside[0]) > _DOMAIN_SLACK:
        raise InversionError(
            f"both roots {inside} inside segment {segment_index}: non-monotonic segment"
        )
    return min(max(inside[0], seg.lo), seg.hi)
