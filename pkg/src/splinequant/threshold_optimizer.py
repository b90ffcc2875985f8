"""Grid sweep of the free segment threshold with optional golden-section
refinement of the SQNR maximum."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

from .gauss_analytics import (
    DEFAULT_QUADRATURE,
    QuadratureSpec,
    SourceModel,
    compressor,
    support_threshold,
)
from .quantizer_design import DesignError, DistortionReport, build, sqnr, standard_config
from .spline_fit import fit

__all__ = [
    "SweepCandidate",
    "SweepResult",
    "RefineResult",
    "SweepError",
    "evaluate_candidate",
    "sweep",
    "refine",
    "unimodality_violations",
]

log = logging.getLogger(__name__)

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class SweepError(RuntimeError):
    """No sweep candidate produced a usable design."""


@dataclass(frozen=True)
class SweepCandidate:
    x1: float
    sqnr_db: float | None
    report: DistortionReport | None
    valid: bool
    failure: str | None = None


@dataclass(frozen=True)
class SweepResult:
    """Full threshold-sweep curve plus its argmax and the inputs that made it."""

    candidates: tuple[SweepCandidate, ...]
    best_x1: float
    best_sqnr_db: float
    best_report: DistortionReport
    n_levels: int
    x_max: float
    grid_step: float
    source: SourceModel


@dataclass(frozen=True)
class RefineResult:
    x1: float
    sqnr_db: float
    interior: bool


def evaluate_candidate(
    n_levels: int,
    x1: float,
    source: SourceModel = SourceModel(),
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> DistortionReport:
    """Fit the compressor on knots (0, x1, x_max), build, and score one design."""
    config = standard_config(n_levels, (x1,), source)
    x_max = config.x_max
    target = lambda x: compressor(source, x_max, x)
    spline = fit(target, config.knots, quad)
    return sqnr(build(spline, config), quad)


def sweep(
    n_levels: int,
    grid_step: float = 0.01,
    source: SourceModel = SourceModel(),
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> SweepResult:
    """Evaluate every threshold on the grid x_max/2, x_max/2 + step, ... < x_max.

    Candidates whose fit cannot produce a monotone quantizer are kept in the
    curve but marked invalid and skipped by the argmax.  Ties break toward the
    smaller threshold.
    """
    x_max = support_threshold(source, n_levels)
    if grid_step <= 0.0:
        raise ValueError(f"grid_step must be positive, got {grid_step}")
    if grid_step >= 0.5 * x_max:
        raise ValueError(f"grid_step {grid_step} too coarse for sweep range (0, {0.5 * x_max})")

    candidates: list[SweepCandidate] = []
    best: SweepCandidate | None = None
    k = 0
    while True:
        x1 = 0.5 * x_max + k * grid_step
        if x1 >= x_max * (1.0 - 1e-12):
            break
        k += 1
        try:
            report = evaluate_candidate(n_levels, x1, source, quad)
        except DesignError as exc:
            candidates.append(SweepCandidate(x1, None, None, False, str(exc)))
            continue
        cand = SweepCandidate(x1, report.sqnr_db, report, True)
        candidates.append(cand)
        if best is None or cand.sqnr_db > best.sqnr_db:
            best = cand
    if best is None:
        raise SweepError(f"all {len(candidates)} sweep candidates failed to build")

    result = SweepResult(
        candidates=tuple(candidates),
        best_x1=best.x1,
        best_sqnr_db=best.sqnr_db,
        best_report=best.report,
        n_levels=n_levels,
        x_max=x_max,
        grid_step=grid_step,
        source=source,
    )
    bumps = unimodality_violations(result)
    if bumps:
        log.warning(
            "sweep curve for N=%d is not unimodal within 0.05 dB at x1=%s",
            n_levels,
            [round(b, 4) for b in bumps],
        )
    return result


def unimodality_violations(result: SweepResult, tolerance_db: float = 0.05) -> list[float]:
    """Thresholds that poke more than ``tolerance_db`` above both neighbours
    while staying below the maximum; empty for a single-peak curve."""
    valid = [c for c in result.candidates if c.valid]
    out = []
    for prev, cur, nxt in zip(valid, valid[1:], valid[2:]):
        if (
            cur.sqnr_db < result.best_sqnr_db
            and cur.sqnr_db > prev.sqnr_db + tolerance_db
            and cur.sqnr_db > nxt.sqnr_db + tolerance_db
        ):
            out.append(cur.x1)
    return out


def refine(
    result: SweepResult,
    tolerance: float = 1e-4,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
    objective: Callable[[float], float] | None = None,
) -> RefineResult:
    """Golden-section polish of the sweep maximum within one grid step.

    Requires the grid maximum to be interior; a boundary maximum is returned
    unchanged with ``interior=False``.  The refined SQNR never falls below the
    grid best.  ``objective`` overrides the default full-design evaluation
    (useful for testing against a known curve).
    """
    if tolerance <= 0.0:
        raise ValueError(f"tolerance must be positive, got {tolerance}")
    valid = [c for c in result.candidates if c.valid]
    first, last = valid[0], valid[-1]
    if result.best_x1 in (first.x1, last.x1):
        return RefineResult(result.best_x1, result.best_sqnr_db, interior=False)

    if objective is None:

        def objective(x1: float) -> float:
            try:
                return evaluate_candidate(result.n_levels, x1, result.source, quad).sqnr_db
            except DesignError:
                return -math.inf

    lo = result.best_x1 - result.grid_step
    hi = result.best_x1 + result.grid_step
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = objective(c), objective(d)
    while b - a > tolerance:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = objective(d)
    x1 = c if fc > fd else d
    val = max(fc, fd)
    if val < result.best_sqnr_db:
        return RefineResult(result.best_x1, result.best_sqnr_db, interior=True)
    return RefineResult(x1, val, interior=True)
