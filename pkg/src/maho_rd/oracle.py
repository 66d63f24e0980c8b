"""Deliberately naive reference computations used to cross-check the library."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import recursions as rc
from .rate_region import SubsetRates, j_subset, k_subset
from .source_model import RateAllocation, SourceSpec
from .sum_rate import InfeasibleBudgetError, SumRateResult, sum_rate_objective


def f0_tail_form(spec: SourceSpec, r) -> float:
    """``f_0`` from the recursion that starts at ``f_L = (e^{2 r_L} - 1)/sigma_L^2``.

    Written in the ``sigma_l^2, eps_l`` parametrisation and kept separate
    from :func:`recursions.f_seq` on purpose.
    """
    sig = spec.sigma_n_sq
    eps = spec.eps
    big_l = spec.big_l
    f = (math.exp(2.0 * r[big_l - 1]) - 1.0) / sig[big_l - 1]
    for l in range(big_l, 1, -1):
        f = f / (1.0 + eps[l - 1] * sig[l - 1] * f) + (1.0 - math.exp(-2.0 * r[l - 2])) / sig[l - 2]
    return f / (1.0 + eps[0] * sig[0] * f)


@dataclass(frozen=True)
class GridSpec:
    points: int = 13
    upper: float = 2.5
    levels: int = 1
    zoom: float = 5.0

    def __post_init__(self):
        if self.points < 2 or self.upper <= 0 or self.levels < 0:
            raise ValueError("grid needs >= 2 points, positive range, levels >= 0")


def _bisect_r1(spec, target, tail, hi=40.0, iters=200):
    # smallest r_1 with f_0(r_1, tail) >= target, or None
    def f0_at(v):
        return rc.f0(spec, np.concatenate([[v], tail]))
    if f0_at(0.0) > target + 1e-13:
        return None
    if f0_at(hi) < target:
        return None
    lo = 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if f0_at(mid) < target:
            lo = mid
        else:
            hi = mid
    return hi


def boundary_grid_min(spec: SourceSpec, target: float, fn, grid: GridSpec):
    """Minimise ``fn(r)`` over ``f_0(r) = target`` by gridding ``r_2..r_L``."""
    dim = spec.big_l - 1
    centre = None
    half = None
    best_val, best_r = math.inf, None
    for level in range(grid.levels + 1):
        if level == 0:
            axes = [np.linspace(0.0, grid.upper, grid.points)] * dim
            step = grid.upper / (grid.points - 1)
        else:
            step /= grid.zoom
            half = step * (grid.points - 1) / 2.0
            axes = [np.linspace(max(c - half, 0.0), c + half, grid.points) for c in centre]
        for tail in itertools.product(*axes):
            tail = np.array(tail)
            r1 = _bisect_r1(spec, target, tail)
            if r1 is None:
                continue
            r = np.concatenate([[r1], tail])
            val = fn(r)
            if val < best_val:
                best_val, best_r = val, r
        if best_r is None:
            raise InfeasibleBudgetError("no grid point reaches the boundary")
        centre = best_r[1:]
    return best_val, best_r


def grid_sum_rate(spec: SourceSpec, d: float, r0_budget: float,
                  grid: GridSpec = GridSpec()) -> SumRateResult:
    if spec.big_l > 4:
        raise ValueError("grid oracle limited to L <= 4")
    target = rc.g0(spec, d, r0_budget)
    if target >= rc.f0_sup(spec):
        raise InfeasibleBudgetError("distortion budget unreachable")
    if target <= 0.0:
        return SumRateResult(0.0, np.zeros(spec.big_l), "oracle")
    val, r = boundary_grid_min(
        spec, target, lambda r: sum_rate_objective(spec, d, r0_budget, r), grid)
    return SumRateResult(max(val, 0.0), r, "oracle", residual=abs(rc.f0(spec, r) - target))


def boundary_min_k(spec: SourceSpec, d: float, r0_budget: float,
                   grid: GridSpec) -> tuple[float, np.ndarray]:
    """Minimum of ``K_Lambda`` over the boundary, by grid."""
    full = (1 << spec.big_l) - 1
    target = rc.g0(spec, d, r0_budget)
    return boundary_grid_min(spec, target, lambda r: k_subset(spec, r, full), grid)


def _bisect_last(spec, target, head, hi=40.0, iters=70):
    # smallest r_L with f_0(head, r_L) >= target, or None
    def f0_at(v):
        return rc.f0(spec, np.concatenate([head, [v]]))
    if f0_at(0.0) >= target:
        return 0.0
    if f0_at(hi) < target:
        return None
    lo = 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if f0_at(mid) < target:
            lo = mid
        else:
            hi = mid
    return hi


def _min_last_pair(spec, target, prefix, grid: GridSpec):
    """Smallest ``r_{L-1} + r_L`` meeting ``f_0 >= target`` for a fixed prefix."""
    def cost(v):
        head = np.concatenate([prefix, [v]])
        last = _bisect_last(spec, target, head)
        return (math.inf, None) if last is None else (v + last, np.concatenate([head, [last]]))

    axis = np.linspace(0.0, grid.upper, 4 * grid.points)
    vals = [cost(v)[0] for v in axis]
    k = int(np.argmin(vals))
    if not math.isfinite(vals[k]):
        return math.inf, None
    a, b = axis[max(k - 1, 0)], axis[min(k + 1, axis.size - 1)]
    for _ in range(50):
        m1, m2 = a + (b - a) / 3.0, b - (b - a) / 3.0
        if cost(m1)[0] <= cost(m2)[0]:
            b = m2
        else:
            a = m1
    cands = [cost(axis[k]), cost(0.5 * (a + b))]
    return min(cands, key=lambda c: c[0])


def region_min_j(spec: SourceSpec, d: float, r0_budget: float,
                 grid: GridSpec) -> tuple[float, np.ndarray]:
    """Minimum of ``J_Lambda`` over the whole feasible set.

    ``J_Lambda`` is the helper sum rate plus a term in ``G``, and ``G`` only
    sees ``r_1..r_{L-2}``.  Those are gridded (with zoom); the last two
    rates are then the cheapest pair reaching the distortion target.
    """
    big_l = spec.big_l
    full = (1 << big_l) - 1
    target = rc.g0(spec, d, r0_budget)
    dim = big_l - 2
    best_val, best_r = math.inf, None
    step = grid.upper / (grid.points - 1)
    axes = [np.linspace(0.0, grid.upper, grid.points)] * dim
    for level in range(grid.levels + 1):
        if level:
            step /= grid.zoom
            half = step * (grid.points - 1) / 2.0
            axes = [np.linspace(max(c - half, 0.0), c + half, grid.points) for c in best_r[:dim]]
        for pt in itertools.product(*axes):
            prefix = np.array(pt, dtype=float)
            _, r = _min_last_pair(spec, target, prefix, grid)
            if r is None:
                continue
            try:
                val = j_subset(spec, d, RateAllocation(r0_budget, r), full)
            except rc.GPoleError:
                continue
            if val < best_val:
                best_val, best_r = val, r
        if best_r is None:
            raise InfeasibleBudgetError("no feasible grid point")
        if dim == 0:
            break
    return best_val, best_r


def fd_gradient(fn, point, h: float = 1e-5) -> np.ndarray:
    x = np.array(point, dtype=float)
    g = np.empty(x.size)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fn(x + e) - fn(x - e)) / (2.0 * h)
    return g


def fd_hessian(fn, point, h: float = 1e-4) -> np.ndarray:
    x = np.array(point, dtype=float)
    n = x.size
    hess = np.empty((n, n))
    f0 = fn(x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h
        hess[i, i] = (fn(x + ei) - 2.0 * f0 + fn(x - ei)) / h ** 2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h
            v = (fn(x + ei + ej) - fn(x + ei - ej) - fn(x - ei + ej) + fn(x - ei - ej)) / (4.0 * h * h)
            hess[i, j] = hess[j, i] = v
    return hess


@dataclass(frozen=True)
class AuditReport:
    ok: bool
    empty_value: float
    worst_monotone: float
    monotone_pair: tuple | None
    worst_supermodular: float
    supermodular_pair: tuple | None


def axiom_audit(rates: SubsetRates, tol: float = 1e-9) -> AuditReport:
    """Exhaustive co-polymatroid check: ``rho(empty) = 0``, monotone, supermodular.

    Slacks are reported so that negative means violated.
    """
    big_l = rates.big_l
    if big_l > 5:
        raise ValueError("exhaustive audit limited to L <= 5")
    rho = np.asarray(rates.rho, dtype=float)
    n = 1 << big_l
    a = np.arange(n)[:, None]
    b = np.arange(n)[None, :]
    subset = (a & b) == a
    mono = np.where(subset, rho[None, :] - rho[:, None], np.inf)
    sup = rho[a & b] + rho[a | b] - rho[:, None] - rho[None, :]
    im = np.unravel_index(np.argmin(mono), mono.shape)
    isup = np.unravel_index(np.argmin(sup), sup.shape)
    wm, ws = float(mono[im]), float(sup[isup])
    ok = abs(rho[0]) <= tol and wm >= -tol and ws >= -tol
    return AuditReport(ok, float(rho[0]), wm, (int(im[0]), int(im[1])) if wm < -tol else None,
                       ws, (int(isup[0]), int(isup[1])) if ws < -tol else None)
