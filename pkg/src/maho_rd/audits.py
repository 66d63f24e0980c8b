"""Sampled invariant battery behind ``maho-rd verify``.

Each check draws allocations from one seeded generator, evaluates an
identity or inequality that must hold for every tree-structured source,
and records the worst margin seen.  Margins are signed so that a
negative value is a violation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gaussian_verify as gv
from . import mi_condition as mi
from . import oracle as orc
from . import rate_region as rr
from . import recursions as rc
from . import sum_rate as sr
from .source_model import RateAllocation, SourceSpec

FD_STEP = 1e-6
OMEGA_GRID = tuple(round(0.05 * k, 2) for k in range(20))


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    worst: float
    tol: float
    count: int
    note: str = ""

    def to_dict(self) -> dict:
        out = {"name": self.name, "passed": self.passed, "worst_slack": self.worst,
               "tol": self.tol, "count": self.count}
        if self.note:
            out["note"] = self.note
        return out


def _check(name, margins, tol, note=""):
    # margins: values that must be >= -tol
    margins = list(margins)
    if not margins:
        return Check(name, True, 0.0, tol, 0, note or "no applicable samples")
    worst = float(min(margins))
    return Check(name, worst >= -tol, worst, tol, len(margins), note)


# -- samplers ---------------------------------------------------------------

def random_spec(rng: np.random.Generator, big_l: int, condz: bool = False,
                z_scale: float = 0.5) -> SourceSpec:
    """Random tree-structured source with ``sigma_X0^2 = 1``.

    With ``condz=True`` the variance ratios are drawn so that the
    parametric sum-rate condition holds.
    """
    eps = rng.uniform(0.0, z_scale, big_l - 1)
    n = np.empty(big_l)
    n[0] = rng.uniform(0.5, 2.0)
    for l in range(1, big_l):
        if condz:
            low = 1.0 if l == big_l - 1 else 1.0 / (1.0 + eps[l])
            n[l] = n[l - 1] * rng.uniform(low, 1.6)
        else:
            n[l] = rng.uniform(0.5, 2.0)
    z = np.append(eps * n[:-1], n[-1])
    return SourceSpec(big_l, 1.0, z, n)


def scale_to_boundary(spec: SourceSpec, target: float, r) -> np.ndarray:
    """Shrink ``r`` along its ray until ``f_0 = target`` (needs ``f_0(r) >= target``)."""
    r = np.asarray(r, dtype=float)
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if rc.f0(spec, mid * r) < target:
            lo = mid
        else:
            hi = mid
    return hi * r


def sample_allocation(spec: SourceSpec, d: float, rng: np.random.Generator,
                      boundary: bool, upper: float = 1.5) -> RateAllocation:
    """A random allocation in the feasible set, on its boundary or strictly inside."""
    r = rng.uniform(0.0, upper, spec.big_l)
    b0 = rc.boundary_r0(spec, d, r)
    if not boundary:
        return RateAllocation(b0 + rng.uniform(0.01, 0.5), r)
    if b0 > 0.0:
        return RateAllocation(b0, r)
    # the helpers alone overshoot: pull them back with r_0 = 0
    target = rc.g0(spec, d, 0.0)
    if target <= 0.0:
        return RateAllocation(0.0, np.zeros(spec.big_l))
    return RateAllocation(0.0, scale_to_boundary(spec, target, r))


def _draw_d(spec, rng, d):
    return d if d is not None else spec.sigma_x0_sq * rng.uniform(0.2, 1.0)


# -- individual checks ------------------------------------------------------

def check_recursion_forms(spec, rng, samples):
    m = []
    for _ in range(samples):
        r = rng.uniform(0.0, 2.0, spec.big_l)
        a, b = rc.f0(spec, r), orc.f0_tail_form(spec, r)
        m.append(1e-12 * max(1.0, abs(a)) - abs(a - b))
    return _check("recursion_forms", m, 0.0)


def check_f_monotone(spec, rng, samples, h=1e-4):
    m = []
    for _ in range(samples):
        r = rng.uniform(0.0, 1.5, spec.big_l)
        base = rc.f_seq(spec, r)
        for i in range(spec.big_l):
            up = r.copy()
            up[i] += h
            diff = rc.f_seq(spec, up) - base
            m.extend(diff[: i + 2 if i + 1 < spec.big_l else spec.big_l])
    return _check("f_monotone", m, 1e-12)


def check_f_below_star(spec, rng, samples):
    fs = rc.f_star(spec)
    m = []
    for _ in range(samples):
        r = rng.uniform(0.0, 5.0, spec.big_l)
        m.extend(fs - rc.f_seq(spec, r)[1:])
    return _check("f_below_star", m, 1e-12)


def check_g_monotone(spec, d, rng, samples, h=1e-4):
    m = []
    for _ in range(samples):
        dd = _draw_d(spec, rng, d)
        alloc = sample_allocation(spec, dd, rng, boundary=False)
        prefix = alloc.r[: max(spec.big_l - 2, 0)]
        base = rc.g_seq(spec, dd, alloc.r0, prefix)
        m.extend(base - rc.g_seq(spec, dd, alloc.r0 + h, prefix))
        for i in range(prefix.size):
            up = prefix.copy()
            up[i] += h
            # only g_l with l > i+1 see r_{i+1}
            m.extend((base - rc.g_seq(spec, dd, alloc.r0, up))[i + 1:])
    return _check("g_monotone", m, 1e-12)


def check_g_below_f(spec, d, rng, samples, tol=1e-9):
    inside, edge, gf_in, gf_edge = [], [], [], []
    for k in range(samples):
        dd = _draw_d(spec, rng, d)
        alloc = sample_allocation(spec, dd, rng, boundary=bool(k % 2))
        cls = rc.classify(spec, dd, alloc, rc.TOL_BOUNDARY).region
        f = rc.f_seq(spec, alloc.r)
        g = rc.g_seq(spec, dd, alloc.r0, alloc.r)
        big_f = rc.big_f(spec, alloc.r)
        big_g = rc.big_g(spec, dd, alloc.r0, alloc.r)
        if cls == rc.Region.BOUNDARY:
            edge.extend(tol * np.maximum(1.0, f) - np.abs(f - g))
            gf_edge.append(tol * big_f - abs(big_f - big_g))
        elif cls == rc.Region.INTERIOR:
            inside.extend(f - g)
            gf_in.append(big_f - big_g)
    return [_check("g_below_f_interior", inside, tol),
            _check("g_equals_f_boundary", edge, 0.0),
            _check("big_g_below_big_f", gf_in, tol),
            _check("big_g_equals_big_f_boundary", gf_edge, 0.0)]


def check_g_two_paths(spec, d, rng, samples, tol=1e-10):
    m = []
    for _ in range(samples):
        dd = _draw_d(spec, rng, d)
        alloc = sample_allocation(spec, dd, rng, boundary=False)
        a = math.log(rc.big_g(spec, dd, alloc.r0, alloc.r))
        b = math.log(rc.big_g_via_eta(spec, dd, alloc.r0, alloc.r))
        m.append(tol - abs(a - b))
    return _check("big_g_eta_path", m, 0.0)


def check_j_below_k(spec, d, rng, samples, tol=1e-9):
    below, equal = [], []
    for k in range(samples):
        dd = _draw_d(spec, rng, d)
        alloc = sample_allocation(spec, dd, rng, boundary=bool(k % 2))
        cls = rc.classify(spec, dd, alloc, rc.TOL_BOUNDARY).region
        if cls == rc.Region.OUTSIDE:
            continue
        outer = rr.subset_rates(spec, dd, alloc, "outer").rho
        inner = rr.subset_rates(spec, None, alloc, "inner").rho
        below.extend(inner - outer)
        if cls == rc.Region.BOUNDARY:
            equal.extend(tol - np.abs(inner - outer))
    return [_check("j_below_k", below, tol), _check("j_equals_k_boundary", equal, 0.0)]


def check_copolymatroid(spec, d, rng, samples, tol=1e-9):
    if spec.big_l > 5:
        return [Check("copolymatroid", True, 0.0, tol, 0, "skipped: L > 5")]
    m = []
    for k in range(samples):
        dd = _draw_d(spec, rng, d)
        alloc = sample_allocation(spec, dd, rng, boundary=bool(k % 2))
        for kind in ("outer", "inner"):
            rep = orc.axiom_audit(rr.subset_rates(spec, dd, alloc, kind), tol)
            m.extend([tol - abs(rep.empty_value), rep.worst_monotone, rep.worst_supermodular])
    return [_check("copolymatroid", m, tol)]


def check_vertices(spec, d, rng, samples, tol=1e-9):
    if spec.big_l > 5:
        return [Check("vertices", True, 0.0, tol, 0, "skipped: L > 5")]
    tele, match = [], []
    for _ in range(samples):
        dd = _draw_d(spec, rng, d)
        alloc = sample_allocation(spec, dd, rng, boundary=True)
        tables = {k: rr.subset_rates(spec, dd, alloc, k) for k in ("outer", "inner")}
        full = (1 << spec.big_l) - 1
        for (pi, vo), (_, vi) in zip(rr.all_vertices(spec, tables["outer"]),
                                     rr.all_vertices(spec, tables["inner"])):
            for kind, v in (("outer", vo), ("inner", vi)):
                tele.append(tol - abs(v.sum() - tables[kind].rho[full]))
            match.append(tol - float(np.max(np.abs(vo - vi))))
    return [_check("vertex_telescoping", tele, 0.0),
            _check("vertex_inner_equals_outer_boundary", match, 0.0)]


def check_gaussian(spec, d, rng, samples, tol=1e-9):
    rows = {"gaussian_identities": [], "markov_chain": []}
    for k in range(samples):
        dd = _draw_d(spec, rng, d)
        alloc = sample_allocation(spec, dd, rng, boundary=bool(k % 2))
        rep = gv.verify_identities(spec, dd, alloc, tol)
        rows["gaussian_identities"].append(0.0 if rep.ok else -1.0)
        model = gv.build_covariance(spec, dd, alloc)
        for mask in range(1, (1 << spec.big_l) - 1):
            rows["markov_chain"].append(tol - gv.markov_audit(model, mask))
    return [_check("gaussian_identities", rows["gaussian_identities"], 0.0),
            _check("markov_chain", rows["markov_chain"], 0.0)]


def check_mi_implication(spec, d, rng):
    rep = mi.prop1_check(spec)
    if not rep.prop1_holds:
        return Check("mi_sufficiency", True, 0.0, 0.0, 0, "sufficient inequality fails; nothing to imply")
    dd = _draw_d(spec, rng, d)
    holds, worst, _, checked = mi.numeric_mi_probe(spec, dd)
    return Check("mi_sufficiency", holds, worst, mi.ProbeGrid().tol, checked)


def _zeta_tail(spec, head):
    return lambda tail: sr.zeta(spec, np.concatenate([[head], tail]))


def check_parametric(spec, rng, samples):
    """Concavity, stationarity, feasibility and monotonicity of the ``theta`` family."""
    if not sr.cond_z_check(spec):
        note = "skipped: variance-ratio condition fails"
        return [Check(n, True, 0.0, t, 0, note) for n, t in
                (("zeta_concave", 1e-8), ("theta_stationary", 1e-7),
                 ("theta_feasible", 0.0), ("theta_increasing", 0.0))]
    hess, grad, feas, incr = [], [], [], []
    for _ in range(samples):
        alpha = sr.alpha_from_r(spec, rng.uniform(0.05, 1.5, spec.big_l))
        eig = np.linalg.eigvalsh(orc.fd_hessian(lambda a: sr.zeta(spec, a), alpha))
        hess.append(-float(np.max(eig)))
    for omega in OMEGA_GRID:
        th = sr.theta_seq(spec, omega)
        feas.append(0.0 if sr.alpha_feasible(spec, th, tol=1e-12) else -1.0)
        if spec.big_l > 1 and omega > 0.0:
            g = orc.fd_gradient(_zeta_tail(spec, th[0]), th[1:], FD_STEP)
            grad.append(-float(np.max(np.abs(g))))
        lo = max(omega - FD_STEP, 0.0)
        deriv = (sr.theta_seq(spec, omega + FD_STEP) - sr.theta_seq(spec, lo)) / (omega + FD_STEP - lo)
        incr.append(float(np.min(deriv)))
    return [_check("zeta_concave", hess, 1e-8),
            _check("theta_stationary", grad, 1e-7),
            _check("theta_feasible", feas, 0.0),
            Check("theta_increasing", min(incr) > 0.0, float(min(incr)), 0.0, len(incr))]


def check_sum_rate_paths(spec, d, tol=1e-6):
    """Numeric and parametric sum rates agree; minimisers sit on the boundary."""
    try:
        num = sr.numeric_sum_rate(spec, d, 0.0)
    except sr.InfeasibleBudgetError as exc:
        return [Check("sum_rate_paths", True, 0.0, tol, 0, f"skipped: {exc}")]
    m = [1e-9 - num.residual]
    note = ""
    try:
        par = sr.parametric_sum_rate(spec, d, 0.0)
        m.extend([tol - abs(num.value - par.value), 1e-9 - par.residual])
    except (sr.CondZError, sr.OmegaRangeError) as exc:
        note = f"numeric only: {exc}"
    return [_check("sum_rate_paths", m, 0.0, note)]


def run_battery(spec: SourceSpec, d: float | None, rng: np.random.Generator,
                samples: int) -> list[Check]:
    """Every sampled check, in a fixed order so reports are reproducible."""
    checks = [
        check_recursion_forms(spec, rng, samples),
        check_f_monotone(spec, rng, samples),
        check_f_below_star(spec, rng, samples),
        check_g_monotone(spec, d, rng, samples),
        *check_g_below_f(spec, d, rng, samples),
        check_g_two_paths(spec, d, rng, samples),
        *check_j_below_k(spec, d, rng, samples),
        *check_copolymatroid(spec, d, rng, samples),
        *check_vertices(spec, d, rng, min(samples, 20)),
        *check_gaussian(spec, d, rng, samples),
        check_mi_implication(spec, d, rng),
        *check_parametric(spec, rng, min(samples, 20)),
        *check_sum_rate_paths(spec, d if d is not None else 0.5 * spec.sigma_x0_sq),
    ]
    return checks
