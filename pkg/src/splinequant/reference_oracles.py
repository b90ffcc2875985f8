"""Independent validators for the analytic design pipeline.

Three separate routes to distortion live here so the model numbers can be
cross-checked without sharing code paths:

* ``mc_distortion``     seeded Monte-Carlo through the realized encode/decode
                        tables;
* ``true_distortion``   per-cell quadrature of the realized quantizer's error;
* ``lloyd_max``         the MSE-optimal fixed-rate quantizer, which no design
                        for the same source and level count may beat;
* ``exact_compressor_sqnr``  the companding model evaluated on the closed-form
                        optimal compressor instead of a fitted curve.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .gauss_analytics import (
    DEFAULT_QUADRATURE,
    QuadratureSpec,
    SourceModel,
    compressor,
    compressor_derivative,
    integrate,
    pdf,
    support_threshold,
    tail_centroid,
    upper_tail,
)
from .quantizer_design import (
    CompandingQuantizer,
    DistortionReport,
    overload_distortion_closed,
    overload_distortion_exact,
)

__all__ = [
    "McEstimate",
    "LloydMaxResult",
    "ConvergenceError",
    "mc_distortion",
    "true_distortion",
    "lloyd_max",
    "exact_compressor_sqnr",
]

log = logging.getLogger(__name__)

_SHARD_SIZE = 1_000_000
_LLOYD_MAX_ITERATIONS = 10_000
_GL_ORDER = 24
_ERF = np.vectorize(math.erf)


class ConvergenceError(RuntimeError):
    """Iteration cap reached before the distortion change met tolerance."""


@dataclass(frozen=True)
class McEstimate:
    """Monte-Carlo distortion with its standard error; reproducible by seed."""

    mean_distortion: float
    std_error: float
    n_samples: int
    seed: int


@dataclass(frozen=True)
class LloydMaxResult:
    levels: tuple[float, ...]
    thresholds: tuple[float, ...]
    distortion: float
    sqnr_db: float
    iterations: int


def _quantizer_tables(q) -> tuple[np.ndarray, np.ndarray, float]:
    boundaries = np.asarray(q.all_boundaries, dtype=float)
    levels = np.asarray(q.all_levels, dtype=float)
    sigma = getattr(getattr(getattr(q, "config", None), "source", None), "sigma", 1.0)
    return boundaries, levels, sigma


def mc_distortion(q: CompandingQuantizer, n_samples: int, seed: int) -> McEstimate:
    """Mean squared quantization error over seeded Gaussian draws.

    Samples are generated in fixed-size shards whose generators are seeded
    from (seed, shard index), so the estimate depends only on the arguments,
    never on how the shards are scheduled.  Any object exposing
    ``all_boundaries`` and ``all_levels`` can be measured.
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    boundaries, levels, sigma = _quantizer_tables(q)
    total = 0.0
    total_sq = 0.0
    remaining = n_samples
    shard = 0
    while remaining > 0:
        count = min(_SHARD_SIZE, remaining)
        rng = np.random.default_rng(np.random.SeedSequence((seed, shard)))
        x = sigma * rng.standard_normal(count)
        if boundaries.size:
            reproduced = levels[np.searchsorted(boundaries, x, side="right")]
        else:
            reproduced = np.full(count, levels[0])
        err_sq = (x - reproduced) ** 2
        total += float(err_sq.sum())
        total_sq += float((err_sq**2).sum())
        remaining -= count
        shard += 1
    mean = total / n_samples
    variance = max(total_sq / n_samples - mean * mean, 0.0)
    std_error = math.sqrt(variance / n_samples)
    return McEstimate(mean, std_error, n_samples, seed)


def true_distortion(
    q: CompandingQuantizer, quad: QuadratureSpec = DEFAULT_QUADRATURE
) -> float:
    """Noise power of the realized quantizer by per-cell quadrature.

    Integrates (x - level)^2 against the source density over every granular
    cell actually used by encode/decode, then adds the exact overload term.
    Independent of the companding-model formulas.
    """
    src = q.config.source
    bounds = (0.0,) + q.thresholds
    granular = 0.0
    for y, lo, hi in zip(q.levels, bounds, bounds[1:]):
        granular += integrate(lambda x, y=y: (x - y) ** 2 * pdf(src, x), lo, hi, quad)
    return 2.0 * granular + overload_distortion_exact(q, quad)


def _initial_levels(source: SourceModel, n_levels: int) -> list[float]:
    if n_levels >= 4 and n_levels % 2 == 0:
        report_levels = _companding_levels(source, n_levels)
        if report_levels is not None:
            return report_levels
    nd = NormalDist(0.0, source.sigma)
    return [nd.inv_cdf((i + 0.5) / n_levels) for i in range(n_levels)]


def _companding_levels(source: SourceModel, n_levels: int) -> list[float] | None:
    try:
        x_max = support_threshold(source, n_levels)
    except ValueError:
        return None
    delta = 2.0 * x_max / (n_levels - 2)
    positive = [
        _invert_compressor(source, x_max, (k - 0.5) * delta)
        for k in range(1, (n_levels - 2) // 2 + 1)
    ]
    positive.append(tail_centroid(source, x_max))
    return [-y for y in reversed(positive)] + positive


def _invert_compressor(source: SourceModel, x_max: float, value: float) -> float:
    lo, hi = 0.0, x_max
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if compressor(source, x_max, mid) < value:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _gl_nodes(order: int = _GL_ORDER) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def lloyd_max(
    source: SourceModel,
    n_levels: int,
    tolerance: float = 1e-12,
    max_iterations: int = _LLOYD_MAX_ITERATIONS,
) -> LloydMaxResult:
    """MSE-optimal scalar quantizer by alternating centroids and midpoints.

    Cell centroids use the closed-form Gaussian tail moments; the distortion
    deciding convergence is re-evaluated every iteration by per-cell
    Gauss-Legendre quadrature (end cells truncated 12 sigma out) and must
    never increase.  Stops when its relative change drops below ``tolerance``.
    """
    if n_levels < 2:
        raise ValueError(f"n_levels must be >= 2, got {n_levels}")
    if tolerance <= 0.0:
        raise ValueError(f"tolerance must be positive, got {tolerance}")
    sigma = source.sigma
    levels = np.asarray(_initial_levels(source, n_levels), dtype=float)
    nodes, weights = _gl_nodes()
    prev = math.inf
    distortion = math.inf
    for iteration in range(1, max_iterations + 1):
        mids = 0.5 * (levels[:-1] + levels[1:])
        lo = np.concatenate(([levels[0] - 12.0 * sigma], mids))
        hi = np.concatenate((mids, [levels[-1] + 12.0 * sigma]))
        # centroid of each cell: sigma^2 * (pdf(lo) - pdf(hi)) / mass
        p_lo = np.exp(-0.5 * (lo / sigma) ** 2) / (sigma * math.sqrt(2.0 * math.pi))
        p_hi = np.exp(-0.5 * (hi / sigma) ** 2) / (sigma * math.sqrt(2.0 * math.pi))
        mass = 0.5 * (
            _ERF(hi / (sigma * math.sqrt(2.0))) - _ERF(lo / (sigma * math.sqrt(2.0)))
        )
        levels = sigma**2 * (p_lo - p_hi) / mass
        mids = 0.5 * (levels[:-1] + levels[1:])
        lo = np.concatenate(([levels[0] - 12.0 * sigma], mids))
        hi = np.concatenate((mids, [levels[-1] + 12.0 * sigma]))
        x = 0.5 * (hi - lo)[:, None] * nodes[None, :] + 0.5 * (hi + lo)[:, None]
        w = 0.5 * (hi - lo)[:, None] * weights[None, :]
        dens = np.exp(-0.5 * (x / sigma) ** 2) / (sigma * math.sqrt(2.0 * math.pi))
        distortion = float(np.sum(w * (x - levels[:, None]) ** 2 * dens))
        if distortion > prev * (1.0 + 1e-12):
            raise ArithmeticError(
                f"distortion increased at iteration {iteration}: {prev!r} -> {distortion!r}"
            )
        if prev - distortion < tolerance * distortion:
            break
        prev = distortion
    else:
        raise ConvergenceError(
            f"no convergence to {tolerance} within {max_iterations} iterations"
        )
    thresholds = tuple(0.5 * (levels[:-1] + levels[1:]))
    return LloydMaxResult(
        levels=tuple(levels),
        thresholds=thresholds,
        distortion=distortion,
        sqnr_db=10.0 * math.log10(sigma**2 / distortion),
        iterations=iteration,
    )


def exact_compressor_sqnr(
    source: SourceModel,
    n_levels: int,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> DistortionReport:
    """Companding-model SQNR with the closed-form optimal compressor itself.

    Same level grid and distortion formulas as the fitted designs, but levels
    and slopes come straight from the ideal curve; serves as the no-fit-error
    comparator.
    """
    if n_levels < 4:
        raise ValueError(f"n_levels must be >= 4, got {n_levels}")
    x_max = support_threshold(source, n_levels)
    return _companding_model_report(
        source,
        n_levels,
        x_max,
        lambda v: _invert_compressor(source, x_max, v),
        lambda y: compressor_derivative(source, x_max, y),
        quad,
    )


def _companding_model_report(
    source: SourceModel,
    n_levels: int,
    x_max: float,
    inverse,
    slope,
    quad: QuadratureSpec,
) -> DistortionReport:
    delta = 2.0 * x_max / (n_levels - 2)
    granular = 0.0
    for k in range(1, (n_levels - 2) // 2 + 1):
        y = inverse((k - 0.5) * delta)
        granular += pdf(source, y) * (delta / slope(y)) ** 3
    granular /= 6.0
    overload = source.sigma**2 * overload_distortion_closed(x_max / source.sigma)
    y_max = tail_centroid(source, x_max)
    hi = x_max + 12.0 * source.sigma
    exact = 2.0 * (
        integrate(lambda x: (x - y_max) ** 2 * pdf(source, x), x_max, hi, quad)
        + _tail_remainder(source, hi, y_max)
    )
    total = granular + overload
    return DistortionReport(
        granular=granular,
        overload=overload,
        total=total,
        sqnr_db=10.0 * math.log10(source.sigma**2 / total),
        overload_exact=exact,
    )


def _tail_remainder(source: SourceModel, a: float, y: float) -> float:
    s2 = source.sigma**2
    return (s2 + y * y) * upper_tail(source, a) + s2 * (a - 2.0 * y) * pdf(source, a)
