import dataclasses
import math

import numpy as np
import pytest

import splinequant as sq
from splinequant import (
    DesignConfig,
    DesignError,
    KnotVector,
    QuadraticSpline,
    QuadSegment,
    SourceModel,
    allocate_levels,
    build,
    decode,
    encode,
    granular_distortion,
    overload_distortion_closed,
    overload_distortion_exact,
    pdf,
    sqnr,
    standard_config,
    step_size,
    support_threshold,
    tail_centroid,
)

from _oracles import gaussian_cell_distortion, uniform_midpoint_quantizer

UNIT = SourceModel()
X_MAX_16 = support_threshold(UNIT, 16)


def identity_spline(knots) -> QuadraticSpline:
    return QuadraticSpline(
        tuple(QuadSegment(0.0, 1.0, 0.0, lo, hi) for lo, hi in zip(knots, knots[1:]))
    )


def identity_build(n_levels: int, knots) -> sq.CompandingQuantizer:
    config = DesignConfig(n_levels, KnotVector(knots), UNIT)
    return build(identity_spline(knots), config)


@pytest.fixture(scope="module")
def fitted16():
    config = standard_config(16, (1.68,))
    spline = sq.fit(lambda x: sq.compressor(UNIT, config.x_max, x), config.knots)
    return config, spline, build(spline, config)


class TestDesignConfig:
    def test_rejects_odd_levels(self):
        with pytest.raises(ValueError):
            DesignConfig(15, KnotVector((0.0, 1.0, 2.0)), UNIT)

    def test_rejects_tiny_levels(self):
        with pytest.raises(ValueError):
            DesignConfig(2, KnotVector((0.0, 2.0)), UNIT)

    def test_rejects_too_many_segments(self):
        with pytest.raises(ValueError):
            DesignConfig(6, KnotVector((0.0, 0.5, 1.0, 2.0)), UNIT)

    def test_standard_config_edge(self):
        config = standard_config(16, (1.68,))
        assert config.x_max == pytest.approx(X_MAX_16, rel=1e-15)
        assert config.granular_per_side == 7

    def test_standard_config_rejects_outside_knot(self):
        with pytest.raises(ValueError):
            standard_config(16, (3.0,))


class TestStepSize:
    def test_n4(self):
        assert step_size(DesignConfig(4, KnotVector((0.0, 1.0)), UNIT)) == pytest.approx(1.0)

    def test_n16(self):
        config = DesignConfig(16, KnotVector((0.0, 2.4744)), UNIT)
        assert step_size(config) == pytest.approx(0.35349, abs=5e-6)

    def test_n32(self):
        config = DesignConfig(32, KnotVector((0.0, 3.0518)), UNIT)
        assert step_size(config) == pytest.approx(0.20345, abs=5e-6)


class TestAllocateLevels:
    def test_identity_two_segments_midpoint_knot(self):
        knots = (0.0, X_MAX_16 / 2, X_MAX_16)
        config = DesignConfig(16, KnotVector(knots), UNIT)
        counts = allocate_levels(identity_spline(knots), config)
        # independent enumeration of the half-step grid against the knot
        # values; the fourth target falls exactly on the midpoint knot and the
        # half-open convention sends it right
        delta = step_size(config)
        expected = [0, 0]
        for k in range(1, 8):
            expected[1 if (k - 0.5) * delta >= knots[1] else 0] += 1
        assert counts == tuple(expected) == (3, 4)

    def test_identity_single_segment(self):
        knots = (0.0, X_MAX_16)
        config = DesignConfig(16, KnotVector(knots), UNIT)
        assert allocate_levels(identity_spline(knots), config) == (7,)

    def test_fitted_counts_sum(self, fitted16):
        config, spline, _ = fitted16
        assert sum(allocate_levels(spline, config)) == 7

    def test_matches_real_valued_ratio_within_one(self, fitted16):
        config, spline, _ = fitted16
        counts = allocate_levels(spline, config)
        kv = spline.knot_values()
        m = config.granular_per_side
        for i, count in enumerate(counts):
            ratio = m * (kv[i + 1] - kv[i]) / (kv[-1] - kv[0])
            assert abs(count - ratio) <= 1.0

    def test_decreasing_spline_rejected(self):
        knots = (0.0, 1.0)
        spline = QuadraticSpline((QuadSegment(0.0, -1.0, 0.0, 0.0, 1.0),))
        with pytest.raises(DesignError):
            allocate_levels(spline, DesignConfig(8, KnotVector(knots), UNIT))

    def test_offset_start_rejected(self):
        # curve starts above the first target: no level can land below it
        knots = (0.0, 2.0)
        spline = QuadraticSpline((QuadSegment(1.0, 1.0, 0.0, 0.0, 2.0),))
        with pytest.raises(DesignError):
            allocate_levels(spline, DesignConfig(8, KnotVector(knots), UNIT))


class TestBuild:
    def test_identity_is_uniform_quantizer(self):
        q = identity_build(16, (0.0, X_MAX_16))
        step, levels, thresholds = uniform_midpoint_quantizer(16, X_MAX_16)
        assert q.step == pytest.approx(step, rel=1e-15)
        assert np.allclose(q.levels, levels, rtol=0, atol=1e-12)
        assert np.allclose(q.thresholds, thresholds, rtol=0, atol=1e-12)
        assert q.overload_level == pytest.approx(tail_centroid(UNIT, X_MAX_16), rel=1e-15)

    def test_counts_match_allocation(self, fitted16):
        config, spline, q = fitted16
        assert q.counts == allocate_levels(spline, config)
        assert sum(q.counts) == 7

    def test_levels_inside_segments(self, fitted16):
        config, _, q = fitted16
        knots = config.knots.knots
        for i, y in zip(q.level_segments, q.levels):
            assert knots[i] <= y <= knots[i + 1]

    def test_interleaving(self, fitted16):
        _, _, q = fitted16
        seq = [0.0]
        for y, t in zip(q.levels, q.thresholds):
            seq += [y, t]
        seq.append(q.overload_level)
        assert all(a < b for a, b in zip(seq, seq[1:]))
        assert q.thresholds[-1] == q.config.x_max
        assert q.overload_level > q.config.x_max

    def test_cell_length_families_close(self, fitted16):
        _, _, q = fitted16
        for asym, exact in zip(q.cell_lengths_asymptotic, q.cell_lengths_exact):
            assert asym == pytest.approx(exact, rel=0.2)

    def test_knots_mismatch_rejected(self, fitted16):
        _, spline, _ = fitted16
        other = standard_config(16, (1.7,))
        with pytest.raises(DesignError):
            build(spline, other)

    def test_decreasing_spline_rejected(self):
        knots = (0.0, 1.0)
        spline = QuadraticSpline((QuadSegment(0.0, 1.0, -0.8, 0.0, 1.0),))
        with pytest.raises(DesignError):
            build(spline, DesignConfig(8, KnotVector(knots), UNIT))

    def test_unknown_level_rule_rejected(self, fitted16):
        config, spline, _ = fitted16
        with pytest.raises(ValueError):
            build(spline, config, level_rule="nonsense")

    def test_restart_rule_builds(self, fitted16):
        config, spline, _ = fitted16
        q = build(spline, config, level_rule="segment-restart")
        assert sum(q.counts) == 7
        assert all(a < b for a, b in zip(q.levels, q.levels[1:]))

    def test_literal_offset_rule_cannot_build(self, fitted16):
        # reading the level offsets at each segment's right knot pushes the
        # targets past the fitted curve's range, so the build must fail
        config, spline, _ = fitted16
        with pytest.raises(DesignError):
            build(spline, config, level_rule="literal-right-offset")


class TestGranularDistortion:
    def test_identity_equals_midpoint_rule(self):
        q = identity_build(16, (0.0, X_MAX_16))
        step = q.step
        expected = (step**2 / 12.0) * sum(2.0 * pdf(UNIT, y) * step for y in q.levels)
        assert granular_distortion(q) == pytest.approx(expected, rel=1e-12)

    def test_two_forms_agree(self, fitted16):
        _, _, q = fitted16
        slopes = [q.spline.segments[i].slope(y) for i, y in zip(q.level_segments, q.levels)]
        lead = 2.0 * q.config.x_max**2 / (3.0 * 14**2) * sum(
            pdf(UNIT, y) / s**2 * d
            for y, s, d in zip(q.levels, slopes, q.cell_lengths_asymptotic)
        )
        alt = sum(pdf(UNIT, y) * d**3 for y, d in zip(q.levels, q.cell_lengths_asymptotic)) / 6.0
        assert granular_distortion(q) == pytest.approx(lead, rel=1e-13)
        assert lead == pytest.approx(alt, rel=1e-12)

    def test_six_db_per_bit_scaling(self):
        # doubling the granular level count at fixed support shrinks the
        # noise power about fourfold
        x_max = 2.0
        d_small = granular_distortion(identity_build(16, (0.0, x_max)))
        d_large = granular_distortion(identity_build(30, (0.0, x_max)))
        assert d_small / d_large == pytest.approx(4.0, rel=0.10)


class TestOverloadDistortion:
    def test_closed_form_values(self):
        assert overload_distortion_closed(2.4744) == pytest.approx(2.4661110080805957e-3, rel=1e-12)
        assert overload_distortion_closed(3.0518) == pytest.approx(2.66608914226203e-4, rel=1e-12)

    def test_closed_form_decreasing(self):
        xs = np.linspace(1.0, 6.0, 26)
        vals = [overload_distortion_closed(x) for x in xs]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_exact_matches_closed_tail_moments(self, fitted16):
        _, _, q = fitted16
        x_max, y = q.config.x_max, q.overload_level
        expected = 2.0 * gaussian_cell_distortion(x_max, x_max + 14.0, y)
        assert overload_distortion_exact(q) == pytest.approx(expected, rel=1e-10)

    def test_vanishes_for_wide_support(self):
        knots = (0.0, 8.0)
        q = identity_build(16, knots)
        assert overload_distortion_exact(q) < 1e-12

    def test_centroid_minimizes_exact_overload(self, fitted16):
        _, _, q = fitted16
        base = overload_distortion_exact(q)
        for off in (-0.2, -0.05, 0.05, 0.2):
            moved = dataclasses.replace(q, overload_level=q.overload_level + off)
            assert overload_distortion_exact(moved) > base

    def test_asymptotic_gap_against_exact(self, fitted16):
        # the closed form is a genuine asymptotic: at these support edges it
        # overshoots the exact tail integral by a factor around two
        _, _, q = fitted16
        ratio16 = overload_distortion_closed(q.config.x_max) / overload_distortion_exact(q)
        assert ratio16 == pytest.approx(2.051, abs=0.01)
        config32 = standard_config(32, (2.25,))
        spline32 = sq.fit(lambda x: sq.compressor(UNIT, config32.x_max, x), config32.knots)
        q32 = build(spline32, config32)
        ratio32 = overload_distortion_closed(config32.x_max) / overload_distortion_exact(q32)
        assert ratio32 == pytest.approx(1.700, abs=0.01)

    def test_rejects_nonpositive_edge(self):
        with pytest.raises(ValueError):
            overload_distortion_closed(0.0)


class TestSqnr:
    def test_report_consistency(self, fitted16):
        _, _, q = fitted16
        report = sqnr(q)
        assert report.total == pytest.approx(report.granular + report.overload, rel=1e-15)
        assert report.sqnr_db == pytest.approx(10.0 * math.log10(1.0 / report.total), rel=1e-15)
        assert report.overload == pytest.approx(overload_distortion_closed(q.config.x_max), rel=1e-15)
        assert report.overload_exact == pytest.approx(overload_distortion_exact(q), rel=1e-12)

    def test_fitted_value_regression(self, fitted16):
        _, _, q = fitted16
        assert sqnr(q).sqnr_db == pytest.approx(19.763802, abs=1e-4)


class TestEncodeDecode:
    def test_zero_lands_in_first_positive_cell(self, fitted16):
        _, _, q = fitted16
        n = q.config.n_levels
        assert encode(q, 0.0) == n // 2
        assert 0.0 < decode(q, n // 2) < q.thresholds[0]

    def test_overload_cells(self, fitted16):
        _, _, q = fitted16
        n = q.config.n_levels
        assert encode(q, q.config.x_max + 1.0) == n - 1
        assert decode(q, n - 1) == q.overload_level
        assert encode(q, -q.config.x_max - 1.0) == 0
        assert decode(q, 0) == -q.overload_level

    def test_levels_round_trip(self, fitted16):
        _, _, q = fitted16
        for idx in range(q.config.n_levels):
            y = decode(q, idx)
            assert encode(q, y) == idx

    def test_half_open_boundaries(self, fitted16):
        _, _, q = fitted16
        t = q.thresholds[0]
        assert decode(q, encode(q, t)) > t
        assert decode(q, encode(q, t - 1e-12)) < t

    def test_odd_symmetry_random(self, fitted16):
        _, _, q = fitted16
        n = q.config.n_levels
        rng = np.random.default_rng(11)
        for x in rng.standard_normal(10_000):
            i = encode(q, float(x))
            j = encode(q, float(-x))
            assert j == n - 1 - i
            assert decode(q, j) == -decode(q, i)

    def test_decode_range_check(self, fitted16):
        _, _, q = fitted16
        with pytest.raises(IndexError):
            decode(q, -1)
        with pytest.raises(IndexError):
            decode(q, q.config.n_levels)

    def test_encode_rejects_non_finite(self, fitted16):
        _, _, q = fitted16
        with pytest.raises(ValueError):
            encode(q, math.nan)

    def test_mirror_decode_identity(self, fitted16):
        _, _, q = fitted16
        n = q.config.n_levels
        for k in range(n):
            assert decode(q, n - 1 - k) == -decode(q, k)


class TestTrueDistortionOracle:
    def test_identity_uniform_matches_closed_form(self):
        q = identity_build(8, (0.0, 2.0))
        bounds = (0.0,) + q.thresholds
        expected = 2.0 * sum(
            gaussian_cell_distortion(lo, hi, y)
            for y, lo, hi in zip(q.levels, bounds, bounds[1:])
        ) + 2.0 * gaussian_cell_distortion(2.0, 16.0, q.overload_level)
        assert sq.true_distortion(q) == pytest.approx(expected, rel=1e-9)
