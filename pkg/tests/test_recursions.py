import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maho_rd import recursions as rc
from maho_rd.audits import random_spec
from maho_rd.oracle import f0_tail_form
from maho_rd.source_model import RateAllocation, SourceSpec, ci_spec

from conftest import spec_and_alloc


class TestFSequence:
    def test_zero_rates(self, ts3):
        assert np.all(rc.f_seq(ts3, np.zeros(3)) == 0.0)

    def test_base_case(self, ts3):
        r = np.array([0.3, 0.5, 0.7])
        f = rc.f_seq(ts3, r)
        assert f[2] == pytest.approx(-math.expm1(-1.0) - math.expm1(-1.4), abs=1e-15)

    def test_matches_tail_form(self, ts3):
        r = np.full(3, 0.5)
        assert rc.f0(ts3, r) == pytest.approx(f0_tail_form(ts3, r), abs=1e-12)

    def test_include_last(self, ts3):
        r = np.array([0.2, 0.3, 0.4])
        full = rc.f_seq(ts3, r, include_last=True)
        assert full.size == 4
        assert full[3] == pytest.approx(math.expm1(0.8) / 1.0)

    def test_large_rates_reach_star(self, ts3):
        assert np.allclose(rc.f_seq(ts3, np.full(3, 50.0))[1:], rc.f_star(ts3), atol=1e-10)


class TestFStar:
    def test_unit_values(self):
        s = SourceSpec(3, 1.0, [0.1, 0.2, 1.0], [1.0, 1.0, 1.0])
        assert rc.f_star(s) == pytest.approx([2.0 / 1.4 + 1.0, 2.0])

    def test_two_helpers(self):
        s = SourceSpec(2, 1.0, [0.3, 2.0], [0.5, 2.0])
        assert rc.f_star(s) == pytest.approx([1 / 0.5 + 1 / 2.0])

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 6), st.integers(0, 10_000))
    def test_bounds_every_f(self, big_l, seed):
        rng = np.random.default_rng(seed)
        s = random_spec(rng, big_l)
        r = rng.uniform(0, 4, big_l)
        assert np.all(rc.f_seq(s, r)[1:] <= rc.f_star(s) + 1e-12)


class TestGSequence:
    def test_no_distortion_needed(self, ts3):
        assert np.all(rc.g_seq(ts3, 1.0, 0.0, [0.4]) == 0.0)

    def test_ci_is_subtractive(self):
        s = ci_spec(4, [1.0, 1.5, 2.0, 1.0], 1.0)
        r = np.array([0.1, 0.2])
        g = rc.g_seq(s, 0.4, 0.05, r)
        expect = [rc.g0(s, 0.4, 0.05)]
        expect.append(expect[0])
        for l in range(1, 3):
            expect.append(max(expect[-1] + math.expm1(-2 * r[l - 1]) / s.sigma_n_sq[l - 1], 0.0))
        assert g == pytest.approx(expect, abs=1e-14)

    def test_eta_path(self, ts3):
        a = rc.big_g(ts3, 0.5, 0.1, [0.3])
        b = rc.big_g_via_eta(ts3, 0.5, 0.1, [0.3])
        assert math.isfinite(a) and a == pytest.approx(b, rel=1e-10)

    def test_pole_raises(self):
        s = SourceSpec(3, 1.0, [0.9, 0.9, 1.0], [1.0, 1.0, 1.0])
        with pytest.raises(rc.GPoleError) as exc:
            rc.g_seq(s, 0.05, 0.0, [0.0])
        assert exc.value.level >= 1

    def test_prefix_too_short(self, ts3):
        with pytest.raises(ValueError):
            rc.g_seq(ts3, 0.5, 0.0, [])

    @settings(max_examples=40, deadline=None)
    @given(st.integers(3, 6), st.integers(0, 10_000))
    def test_eta_agreement(self, big_l, seed):
        rng = np.random.default_rng(seed)
        s, d, alloc = spec_and_alloc(rng, big_l, boundary=False)
        a = math.log(rc.big_g(s, d, alloc.r0, alloc.r))
        b = math.log(rc.big_g_via_eta(s, d, alloc.r0, alloc.r))
        assert a == pytest.approx(b, abs=1e-10)


class TestAggregates:
    def test_empty_restriction(self, ts3):
        assert rc.big_f_restricted(ts3, [1.0, 1.0, 1.0], ()) == 1.0
        assert rc.big_f(ts3, np.zeros(3)) == 1.0

    def test_restriction_zeroes_complement(self, ts3):
        r = np.array([0.3, 0.6, 0.9])
        assert rc.f0_restricted(ts3, r, {1, 3}) == rc.f0(ts3, [0.3, 0.0, 0.9])

    def test_mask_forms_agree(self):
        assert rc.as_mask({1, 3}, 3) == 0b101 == rc.as_mask(5, 3)
        with pytest.raises(ValueError):
            rc.as_mask({4}, 3)

    def test_report_fields(self, ts3):
        rep = rc.fg_report(ts3, 0.6, RateAllocation(0.2, [0.3, 0.4, 0.5]))
        assert rep.big_f >= 1.0 and rep.big_g >= 1.0
        assert rep.f.size == rep.g.size == 3


class TestClassification:
    def test_trivial_boundary(self, ts3):
        c = rc.classify(ts3, 1.0, RateAllocation(0.0, np.zeros(3)))
        assert c.region == rc.Region.BOUNDARY and c.slack == 0.0

    def test_interior(self, ts3):
        assert rc.classify(ts3, 1.0, RateAllocation(0.0, np.ones(3))).region == rc.Region.INTERIOR

    def test_outside(self, ts3):
        assert rc.classify(ts3, 0.5, RateAllocation(0.0, np.zeros(3))).region == rc.Region.OUTSIDE

    def test_boundary_r0_matches_bisection(self):
        s = ci_spec(2, [1.0, 1.0], 1.0)
        r = np.array([0.4, 0.6])
        lo, hi = 0.0, 5.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if rc.slack(s, 0.5, mid, r) < 0:
                lo = mid
            else:
                hi = mid
        assert rc.boundary_r0(s, 0.5, r) == pytest.approx(hi, abs=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(2, 6), st.integers(0, 10_000))
    def test_boundary_round_trip(self, big_l, seed):
        rng = np.random.default_rng(seed)
        s = random_spec(rng, big_l)
        d = rng.uniform(0.05, 1.0)
        r = rng.uniform(0, 1, big_l)
        b0 = rc.boundary_r0(s, d, r)
        cls = rc.classify(s, d, RateAllocation(b0, r)).region
        assert cls != rc.Region.OUTSIDE
        if b0 > 0:
            assert cls == rc.Region.BOUNDARY


class TestMonotonicity:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 6), st.integers(0, 10_000))
    def test_f_increases_in_downstream_rates(self, big_l, seed):
        rng = np.random.default_rng(seed)
        s = random_spec(rng, big_l)
        r = rng.uniform(0, 1.5, big_l)
        base = rc.f_seq(s, r)
        for i in range(big_l):
            up = r.copy()
            up[i] += 1e-3
            assert np.all((rc.f_seq(s, up) - base)[: i + 2] >= -1e-13)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(3, 6), st.integers(0, 10_000))
    def test_g_decreases_in_upstream_rates(self, big_l, seed):
        rng = np.random.default_rng(seed)
        s, d, alloc = spec_and_alloc(rng, big_l, boundary=False)
        base = rc.g_seq(s, d, alloc.r0, alloc.r)
        assert np.all(rc.g_seq(s, d, alloc.r0 + 1e-3, alloc.r) <= base + 1e-13)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 6), st.integers(0, 10_000), st.booleans())
    def test_g_below_f_on_region(self, big_l, seed, boundary):
        rng = np.random.default_rng(seed)
        s, d, alloc = spec_and_alloc(rng, big_l, boundary)
        rep = rc.fg_report(s, d, alloc)
        assert np.all(rep.g <= rep.f + 1e-9)
        assert rep.big_g <= rep.big_f * (1 + 1e-9)
        if rc.classify(s, d, alloc).region == rc.Region.BOUNDARY:
            assert rep.g == pytest.approx(rep.f, rel=1e-9, abs=1e-9)
