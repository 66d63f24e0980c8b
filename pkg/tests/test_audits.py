import numpy as np
import pytest

from maho_rd import audits
from maho_rd import recursions as rc
from maho_rd import sum_rate as sr
from maho_rd.source_model import ci_spec


class TestSamplers:
    def test_condz_specs(self, rng):
        for l in range(2, 7):
            assert sr.cond_z_check(audits.random_spec(rng, l, condz=True))

    def test_boundary_sample(self, rng):
        s = audits.random_spec(rng, 4)
        for _ in range(20):
            alloc = audits.sample_allocation(s, 0.6, rng, boundary=True)
            assert rc.classify(s, 0.6, alloc).region == rc.Region.BOUNDARY

    def test_interior_sample(self, rng):
        s = audits.random_spec(rng, 4)
        alloc = audits.sample_allocation(s, 0.6, rng, boundary=False)
        assert rc.classify(s, 0.6, alloc).region == rc.Region.INTERIOR

    def test_no_distortion_boundary(self, ts3, rng):
        alloc = audits.sample_allocation(ts3, 1.0, rng, boundary=True)
        assert np.all(alloc.r == 0.0) and alloc.r0 == 0.0


class TestBattery:
    @pytest.mark.parametrize("condz", [False, True])
    def test_passes(self, condz):
        rng = np.random.default_rng(3)
        s = audits.random_spec(rng, 3, condz)
        checks = audits.run_battery(s, None, np.random.default_rng(0), 10)
        assert all(c.passed for c in checks), [c for c in checks if not c.passed]

    def test_deterministic(self):
        s = ci_spec(3, [1.0, 1.5, 1.0], 1.0)
        a = audits.run_battery(s, 0.5, np.random.default_rng(9), 5)
        b = audits.run_battery(s, 0.5, np.random.default_rng(9), 5)
        assert a == b

    def test_check_reports_failure(self):
        c = audits._check("x", [0.1, -0.5], 1e-9)
        assert not c.passed and c.worst == -0.5 and c.count == 2
