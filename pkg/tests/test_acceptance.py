"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run under pytest (the lines are printed even when output is captured) or
directly with ``python3 tests/test_acceptance.py``.
"""

import math
import sys
import time

import numpy as np
import pytest

from maho_rd import gaussian_verify as gv
from maho_rd import mi_condition as mi
from maho_rd import oracle as orc
from maho_rd import rate_region as rr
from maho_rd import recursions as rc
from maho_rd import sum_rate as sr
from maho_rd.audits import OMEGA_GRID, random_spec, sample_allocation
from maho_rd.source_model import SourceSpec, ceo_spec

CEO3_VALUE = -1.5 * math.log(1.0 - 1.0 / 3.0) + 0.5 * math.log(2.0)
CEO_LIMIT_UNIT = 0.8465736


def _instance(rng, big_l, boundary):
    spec = random_spec(rng, big_l)
    d = rng.uniform(0.2, 1.0)
    return spec, d, sample_allocation(spec, d, rng, boundary)


def recursion_forms():
    rng = np.random.default_rng(101)
    worst = 0.0
    for k in range(1000):
        big_l = 2 + k % 5
        spec = random_spec(rng, big_l)
        r = rng.uniform(0.0, 3.0, big_l)
        worst = max(worst, abs(rc.f0(spec, r) - orc.f0_tail_form(spec, r)))
    return worst <= 1e-12, f"max |f0 difference| = {worst:.2e} over 1000 samples"


def region_orderings(h=1e-4):
    rng = np.random.default_rng(102)
    f_mono = g_mono = gf = gf_edge = jk = jk_edge = bigs = 0.0
    edges = 0
    for k in range(200):
        big_l = 2 + k % 4
        spec, d, alloc = _instance(rng, big_l, boundary=bool(k % 2))
        r = np.asarray(alloc.r)
        f = rc.f_seq(spec, r)
        for i in range(big_l):
            up = r.copy()
            up[i] += h
            f_mono = min(f_mono, float(np.min((rc.f_seq(spec, up) - f)[: i + 2])))
        g = rc.g_seq(spec, d, alloc.r0, r)
        g_mono = min(g_mono, float(np.min(g - rc.g_seq(spec, d, alloc.r0 + h, r))))
        for i in range(big_l - 2):
            up = r.copy()
            up[i] += h
            g_mono = min(g_mono, float(np.min(g - rc.g_seq(spec, d, alloc.r0, up))))
        big_f, big_g = rc.big_f(spec, r), rc.big_g(spec, d, alloc.r0, r)
        outer = rr.subset_rates(spec, d, alloc, "outer").rho
        inner = rr.subset_rates(spec, d, alloc, "inner").rho
        gf = min(gf, float(np.min(f - g)))
        bigs = min(bigs, big_f - big_g)
        jk = min(jk, float(np.min(inner - outer)))
        if rc.classify(spec, d, alloc).region == rc.Region.BOUNDARY:
            edges += 1
            gf_edge = max(gf_edge, float(np.max(np.abs(f - g))), abs(big_f - big_g))
            jk_edge = max(jk_edge, float(np.max(np.abs(inner - outer))))
    ok = (f_mono >= -1e-12 and g_mono >= -1e-12 and gf >= -1e-9 and bigs >= -1e-9
          and jk >= -1e-9 and gf_edge <= 1e-9 and jk_edge <= 1e-9 and edges >= 50)
    return ok, (f"f/g monotone slack {f_mono:.1e}/{g_mono:.1e}, min f-g {gf:.1e}, "
                f"min K-J {jk:.1e}, boundary gaps {gf_edge:.1e}/{jk_edge:.1e} ({edges} boundary)")


def copolymatroid_axioms():
    rng = np.random.default_rng(103)
    worst, failures = math.inf, 0
    for k in range(50):
        spec, d, alloc = _instance(rng, 2 + k % 4, boundary=bool(k % 2))
        for kind in ("outer", "inner"):
            rep = orc.axiom_audit(rr.subset_rates(spec, d, alloc, kind))
            failures += not rep.ok
            worst = min(worst, rep.worst_monotone, rep.worst_supermodular)
    return failures == 0, f"{failures} failing maps of 100, worst slack {worst:.2e}"


def ceo_reproduction():
    theta_err = 0.0
    for big_l in range(2, 9):
        spec = ceo_spec(big_l, 1.0, 1.0)
        for omega in OMEGA_GRID:
            expect = (big_l - np.arange(1, big_l + 1) + 1) * omega
            theta_err = max(theta_err, float(np.max(np.abs(sr.theta_seq(spec, omega) - expect))))
    spec = ceo_spec(3, 1.0, 1.0)
    par = sr.parametric_sum_rate(spec, 0.5, 0.0).value
    num = sr.numeric_sum_rate(spec, 0.5, 0.0).value
    grid = orc.grid_sum_rate(spec, 0.5, 0.0).value
    ok = (theta_err <= 1e-12 and abs(grid - CEO3_VALUE) <= 1e-3 and abs(num - par) <= 1e-6
          and abs(par - CEO3_VALUE) <= 1e-6 and abs(num - CEO3_VALUE) <= 1e-6)
    return ok, (f"theta err {theta_err:.1e}; parametric {par:.9f}, numeric {num:.9f}, "
                f"oracle {grid:.6f}, closed form {CEO3_VALUE:.9f}")


def ceo_limit():
    vals = [sr.ceo_closed_form(ceo_spec(l, 1.0, 1.0), 0.5, 0.0) for l in range(2, 65)]
    lim = sr.ceo_limit(1.0, 1.0, 0.5)
    decreasing = all(b < a for a, b in zip(vals, vals[1:]))
    gap = vals[-1] - lim
    ok = decreasing and 0.0 < gap < 1e-2 and abs(lim - CEO_LIMIT_UNIT) < 1e-7
    return ok, f"monotone={decreasing}, limit {lim:.7f}, gap at L=64 {gap:.2e}"


def theta_family():
    rng = np.random.default_rng(106)
    max_eig, max_grad, infeasible, min_deriv = -math.inf, 0.0, 0, math.inf
    h = 1e-6
    for k in range(20):
        spec = random_spec(rng, 2 + k % 4, condz=True)
        for omega in OMEGA_GRID:
            th = sr.theta_seq(spec, omega)
            infeasible += not sr.alpha_feasible(spec, th, tol=1e-12)
            lo = max(omega - h, 0.0)
            deriv = (sr.theta_seq(spec, omega + h) - sr.theta_seq(spec, lo)) / (omega + h - lo)
            min_deriv = min(min_deriv, float(np.min(deriv)))
            if omega == 0.0:
                continue
            tail = lambda t, a=th[0]: sr.zeta(spec, np.concatenate([[a], t]))
            max_grad = max(max_grad, float(np.max(np.abs(orc.fd_gradient(tail, th[1:], h)))))
            hess = orc.fd_hessian(lambda a: sr.zeta(spec, a), th, 1e-5)
            max_eig = max(max_eig, float(np.max(np.linalg.eigvalsh(hess))))
    ok = max_eig <= 1e-8 and max_grad <= 1e-7 and infeasible == 0 and min_deriv > 0
    return ok, (f"max Hessian eig {max_eig:.2e}, max |grad| {max_grad:.1e}, "
                f"{infeasible} infeasible, min dtheta/domega {min_deriv:.2e}")


def mi_sufficiency():
    rng = np.random.default_rng(107)
    passing, probe_failures, tries = 0, 0, 0
    while passing < 50:
        tries += 1
        spec = random_spec(rng, 3 + tries % 3, z_scale=0.4)
        if not mi.prop1_check(spec).prop1_holds:
            continue
        passing += 1
        holds, _, _, _ = mi.numeric_mi_probe(spec, rng.uniform(0.2, 1.0))
        probe_failures += not holds
    flip_errors = 0
    for n in [(1.0, 1.0, 1.0)] + [tuple(rng.uniform(0.3, 3.0, 3)) for _ in range(20)]:
        b = mi.l3_bound(SourceSpec(3, 1.0, [0.1, 0.1, n[2]], list(n)))
        below = SourceSpec(3, 1.0, [0.1, b - 1e-9, n[2]], list(n))
        above = SourceSpec(3, 1.0, [0.1, b + 1e-9, n[2]], list(n))
        flip_errors += not (mi.prop1_check(below).prop1_holds and not mi.prop1_check(above).prop1_holds)
    unit = mi.l3_bound(SourceSpec(3, 1.0, [0.0, 0.1, 1.0], [1.0, 1.0, 1.0]))
    ok = probe_failures == 0 and flip_errors == 0 and abs(unit - 0.5) < 1e-15
    return ok, (f"{probe_failures} probe failures on 50 passing specs, "
                f"{flip_errors} misplaced flips, unit bound {unit}")


def gaussian_identities():
    rng = np.random.default_rng(108)
    failures, worst_markov, boundary = 0, 0.0, 0
    for k in range(200):
        spec, d, alloc = _instance(rng, 2 + k % 3, boundary=bool(k % 2))
        rep = gv.verify_identities(spec, d, alloc, 1e-9)
        failures += not rep.ok
        boundary += rep.region == "boundary"
        model = gv.build_covariance(spec, d, alloc)
        for mask in range(1, (1 << spec.big_l) - 1):
            worst_markov = max(worst_markov, gv.markov_audit(model, mask))
    ok = failures == 0 and worst_markov <= 1e-9 and boundary >= 50
    return ok, f"{failures} failing instances of 200 ({boundary} boundary), worst Markov {worst_markov:.1e}"


def outer_inner_sum_rate():
    rng = np.random.default_rng(109)
    grid = orc.GridSpec(points=9, upper=2.5, levels=5, zoom=4.0)
    worst = 0.0
    for k in range(10):
        spec = random_spec(rng, 2 + k % 2)
        r0 = rng.uniform(0.0, 0.1)
        target = rng.uniform(0.1, 0.8) * rc.f0_sup(spec)
        d = math.exp(-2.0 * r0) / (target + 1.0 / spec.sigma_x0_sq)
        kv, _ = orc.boundary_min_k(spec, d, r0, grid)
        jv, _ = orc.region_min_j(spec, d, r0, grid)
        worst = max(worst, abs(kv - jv))
    return worst <= 1e-4, f"max |min K - min J| = {worst:.2e} over 10 instances"


CRITERIA = [
    ("1 recursion-form equivalence", recursion_forms, 1.0),
    ("2 monotonicity and g<=f, J<=K", region_orderings, 10.0),
    ("3 co-polymatroid axioms", copolymatroid_axioms, 30.0),
    ("4 CEO reproduction", ceo_reproduction, 5.0),
    ("5 CEO limit", ceo_limit, 1.0),
    ("6 concavity and theta family", theta_family, 30.0),
    ("7 sufficient MI inequality", mi_sufficiency, 30.0),
    ("8 Gaussian construction identities", gaussian_identities, 30.0),
    ("9 outer/inner sum-rate equality", outer_inner_sum_rate, 60.0),
]


def evaluate(name, fn, limit):
    start = time.perf_counter()
    ok, detail = fn()
    elapsed = time.perf_counter() - start
    passed = ok and elapsed < limit
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {name}: {detail}; {elapsed:.2f}s (limit {limit:g}s)"
    return passed, line


@pytest.mark.parametrize("name,fn,limit", CRITERIA, ids=[c[0].split()[0] for c in CRITERIA])
def test_criterion(name, fn, limit, capsys):
    passed, line = evaluate(name, fn, limit)
    with capsys.disabled():
        print("\n" + line)
    assert passed, line


if __name__ == "__main__":
    results = [evaluate(*c) for c in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(p for p, _ in results) else 1)
