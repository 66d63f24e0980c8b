"""Optimal helper sum rate for a tree-structured source.

The minimum of ``sum_l r_l + 1/2 log F(r)`` over the boundary
``f_0(r) = g_0(D, R_0)``, shifted by ``1/2 log(sigma_X0^2/D) - R_0``, is
computed three ways:

* :func:`numeric_sum_rate` eliminates one rate exactly and runs coordinate
  descent with golden-section line searches over the others;
* :func:`parametric_sum_rate` solves the stationarity conditions in the
  transformed coordinates ``alpha`` through the one-parameter family
  ``theta(omega)`` (valid under :func:`cond_z_check`);
* :func:`ceo_closed_form` covers the CEO special case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import recursions as rc
from .source_model import SourceSpec

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
OMEGA_MAX = 1.0 - 1e-12
RATE_CAP = 30.0


class InfeasibleBudgetError(ValueError):
    """``g_0(D, R_0)`` is not reachable by any helper allocation."""


class CondZError(ValueError):
    """The parametric solution needs the variance-ratio condition."""


class OmegaRangeError(ValueError):
    """The target ``sigma_1^2 g_0`` lies outside the range of ``theta_1``."""


class InfeasibleAlphaError(ValueError):
    pass


@dataclass
class SumRateResult:
    value: float
    minimizer_r: np.ndarray
    method: str
    omega: float | None = None
    residual: float = 0.0
    sweeps: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "value_nats": self.value,
            "value_bits": self.value / math.log(2.0),
            "minimizer_r": [float(v) for v in self.minimizer_r],
            "method": self.method,
            "residual": self.residual,
        }
        if self.omega is not None:
            out["omega"] = self.omega
        return out


def _offset(spec: SourceSpec, d: float, r0_budget: float) -> float:
    return 0.5 * math.log(spec.sigma_x0_sq / d) - r0_budget


def sum_rate_objective(spec: SourceSpec, d: float, r0_budget: float, r) -> float:
    r = np.asarray(r, dtype=float)
    return float(np.sum(r)) + 0.5 * math.log(rc.big_f(spec, r)) + _offset(spec, d, r0_budget)


def boundary_target(spec: SourceSpec, d: float, r0_budget: float) -> float:
    """``g_0(D, R_0)``, raising when no allocation can reach it."""
    target = rc.g0(spec, d, r0_budget)
    if target >= rc.f0_sup(spec):
        raise InfeasibleBudgetError(
            f"g_0 = {target:.6g} is not below sup f_0 = {rc.f0_sup(spec):.6g}")
    return target


def _trivial(spec: SourceSpec, method: str) -> SumRateResult:
    # R_0 alone meets the distortion: no helper rate needed
    return SumRateResult(0.0, np.zeros(spec.big_l), method, omega=0.0 if method == "parametric" else None)


# -- numeric path -----------------------------------------------------------

def solve_r1(spec: SourceSpec, target: float, tail) -> float | None:
    """Rate ``r_1`` placing ``(r_1, tail)`` on ``f_0 = target``, or None.

    ``f_1`` is affine in ``(1 - e^{-2 r_1})`` once the tail is fixed, so
    the inversion is exact.
    """
    z1 = spec.sigma_z_sq[0]
    n1 = spec.sigma_n_sq[0]
    r = np.concatenate([[0.0], np.asarray(tail, dtype=float)])
    c = rc.f_seq(spec, r)[1]
    den = 1.0 - z1 * target
    if den <= 0.0:
        return None
    gain = target / den - c
    x = gain * n1  # 1 - e^{-2 r_1}
    if x < 0.0:
        # tail alone overshoots; allow rounding noise at r_1 = 0
        return 0.0 if x > -1e-13 else None
    if x >= 1.0:
        return None
    return -0.5 * math.log1p(-x)


def solve_pivot(spec: SourceSpec, target: float, r, i: int) -> tuple[int, float]:
    """Solve ``f_0 = target`` for the 0-based coordinate ``i`` of ``r``.

    The other coordinates stay fixed.  Returns ``(status, rate)`` where
    status 0 means success, -1 means no finite rate is large enough and +1
    means the other helpers already overshoot the target.  The recursion is
    inverted level by level, so the result is exact.
    """
    big_l = spec.big_l
    z = spec.sigma_z_sq
    rr = np.array(r, dtype=float)
    rr[i] = 0.0
    gain = -np.expm1(-2.0 * rr) / spec.sigma_n_sq
    level = min(i + 1, big_l - 1)
    h = rc.f_seq(spec, rr)[level]
    y = target
    for k in range(1, level + 1):
        if k > 1:
            y -= gain[k - 2]
            if y < 0.0:
                return 1, 0.0
        den = 1.0 - z[k - 1] * y
        if den <= 0.0:
            return -1, math.inf
        y = y / den
    x = (y - h) * spec.sigma_n_sq[i]  # 1 - e^{-2 r_i}
    if x < 0.0:
        # rounding noise at r_i = 0 is accepted
        return (0, 0.0) if x > -1e-13 else (1, 0.0)
    if x >= 1.0:
        return -1, math.inf
    return 0, -0.5 * math.log1p(-x)


def _pivot_objective(spec, d, r0_budget, target, r, pivot):
    status, v = solve_pivot(spec, target, r, pivot)
    if status:
        return math.inf, None
    full = np.array(r, dtype=float)
    full[pivot] = v
    return sum_rate_objective(spec, d, r0_budget, full), full


def _coord_interval(spec, target, r, j, pivot):
    """Range of ``r[j]`` keeping the pivot rate finite and nonnegative."""

    def status(v):
        t = np.array(r, dtype=float)
        t[j] = v
        return solve_pivot(spec, target, t, pivot)[0]

    def crossing(bad):
        # last point with status ``bad`` and first without, scanning up or down
        a, b = (0.0, RATE_CAP) if bad < 0 else (RATE_CAP, 0.0)
        while abs(b - a) > 1e-14:
            m = 0.5 * (a + b)
            if status(m) == bad:
                a = m
            else:
                b = m
        return b

    lo = 0.0 if status(0.0) >= 0 else crossing(-1)
    hi = RATE_CAP if status(RATE_CAP) <= 0 else crossing(1)
    return lo, hi


def golden_section(fn, a: float, b: float, xtol: float = 1e-11, max_iter: int = 200):
    """Minimise a unimodal ``fn`` on ``[a, b]``; returns ``(x, fn(x))``."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(max_iter):
        if b - a <= xtol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = fn(d)
    cands = [(fc, c), (fd, d), (fn(a), a), (fn(b), b)]
    fx, x = min(cands)
    return x, fx


@dataclass(frozen=True)
class SolverConfig:
    max_sweeps: int = 500
    tol: float = 1e-12
    xtol: float = 1e-11


def _symmetric_start(spec, target):
    # equal rates on every helper, scaled to hit the boundary
    lo, hi = 0.0, RATE_CAP
    for _ in range(200):
        m = 0.5 * (lo + hi)
        if rc.f0(spec, np.full(spec.big_l, m)) < target:
            lo = m
        else:
            hi = m
    return np.full(spec.big_l, hi)


def numeric_sum_rate(spec: SourceSpec, d: float, r0_budget: float,
                     cfg: SolverConfig = SolverConfig(), start=None) -> SumRateResult:
    """Coordinate descent on the boundary ``f_0(r) = g_0``.

    One coordinate, the pivot, is solved exactly from the boundary equation
    and the others are line-searched.  The pivot is re-chosen as the largest
    rate at every sweep: a pivot pinned at zero would block moves along
    that face.
    """
    target = boundary_target(spec, d, r0_budget)
    if target <= 0.0:
        return _trivial(spec, "numeric")
    r = np.array(start, dtype=float) if start is not None else _symmetric_start(spec, target)
    pivot = int(np.argmax(r))
    best, full = _pivot_objective(spec, d, r0_budget, target, r, pivot)
    if not math.isfinite(best):
        raise InfeasibleBudgetError("no feasible starting allocation")
    r = full
    sweeps = 0
    for sweeps in range(1, cfg.max_sweeps + 1):
        before = best
        pivot = int(np.argmax(r))
        for j in range(spec.big_l):
            if j == pivot:
                continue
            lo, hi = _coord_interval(spec, target, r, j, pivot)

            def fn(v, j=j, pivot=pivot):
                t = r.copy()
                t[j] = v
                return _pivot_objective(spec, d, r0_budget, target, t, pivot)[0]

            x, fx = golden_section(fn, lo, hi, cfg.xtol)
            if fx < best:
                t = r.copy()
                t[j] = x
                best, r = _pivot_objective(spec, d, r0_budget, target, t, pivot)
        if before - best < cfg.tol:
            break
    resid = abs(rc.f0(spec, r) - target)
    return SumRateResult(max(best, 0.0), r, "numeric", residual=resid, sweeps=sweeps)


# -- transformed coordinates ------------------------------------------------

def alpha_from_r(spec: SourceSpec, r) -> np.ndarray:
    """``alpha_l = sigma_l^2 f_l / (1 + eps_l sigma_l^2 f_l)`` for ``l = 1..L``."""
    f = rc.f_seq(spec, r, include_last=True)[1:]
    x = spec.sigma_n_sq * f
    return x / (1.0 + spec.eps * x)


def alpha_feasible(spec: SourceSpec, alpha, tol: float = 0.0) -> bool:
    alpha = np.asarray(alpha, dtype=float)
    eps, tau = spec.eps, spec.tau
    if np.any(alpha < -tol) or np.any(eps * alpha >= 1.0):
        return False
    for l in range(2, spec.big_l + 1):
        prev = alpha[l - 2] / (1.0 - eps[l - 2] * alpha[l - 2])
        t = tau[l - 2]
        a = alpha[l - 1]
        if a > t * prev + tol or not t * (prev - 1.0) < a:
            return False
    return bool(alpha[-1] < 1.0)


def r_from_alpha(spec: SourceSpec, alpha) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    big_l = spec.big_l
    eps, tau = spec.eps, spec.tau
    if alpha.shape != (big_l,) or not alpha_feasible(spec, alpha, tol=1e-13):
        raise InfeasibleAlphaError(f"alpha outside the feasible set: {alpha}")
    r = np.empty(big_l)
    for l in range(2, big_l + 1):
        arg = 1.0 - alpha[l - 2] / (1.0 - eps[l - 2] * alpha[l - 2]) + alpha[l - 1] / tau[l - 2]
        r[l - 2] = max(-0.5 * math.log(arg), 0.0)
    r[-1] = -0.5 * math.log1p(-alpha[-1])
    return r


def zeta(spec: SourceSpec, alpha) -> float:
    """Concave potential whose negative half is the sum-rate objective."""
    alpha = np.asarray(alpha, dtype=float)
    eps, tau = spec.eps, spec.tau
    total = 0.0
    for l in range(1, spec.big_l):
        a = alpha[l - 1]
        q = 1.0 - eps[l - 1] * a
        arg = 1.0 - a / q + alpha[l] / tau[l - 1]
        if arg <= 0.0 or q <= 0.0:
            raise InfeasibleAlphaError(f"log argument <= 0 at level {l}")
        total += math.log(arg) + math.log(q)
    if alpha[-1] >= 1.0:
        raise InfeasibleAlphaError("alpha_L >= 1")
    return total + math.log1p(-alpha[-1])


# -- parametric path --------------------------------------------------------

def theta_seq(spec: SourceSpec, omega: float) -> np.ndarray:
    """``[theta_1(omega), .., theta_L(omega)]``."""
    big_l = spec.big_l
    eps = spec.eps
    th = np.empty(big_l)
    th[big_l - 1] = omega
    tl = spec.tau_at(big_l)
    inner = (2.0 * omega - 1.0) / tl + 1.0
    th[big_l - 2] = inner / (1.0 + eps[big_l - 2] * inner)
    for l in range(big_l - 1, 1, -1):
        # theta_{l-1} from theta_l and theta_{l+1}
        t_l = spec.tau_at(l)
        u = 1.0 + th[l] / spec.tau_at(l + 1)
        bracket = 2.0 * th[l - 1] - u / (1.0 + eps[l - 1] * u) + t_l
        th[l - 2] = (bracket / t_l) / (1.0 + eps[l - 2] / t_l * bracket)
    return th


def cond_z_check(spec: SourceSpec) -> bool:
    big_l = spec.big_l
    if spec.tau_at(big_l) < 1.0:
        return False
    return all(spec.tau_at(l) >= 1.0 / (1.0 + spec.eps[l - 1]) for l in range(2, big_l))


def solve_omega(spec: SourceSpec, d: float, r0_budget: float) -> float:
    """``omega`` with ``theta_1(omega) = sigma_1^2 g_0(D, R_0)``, by bisection."""
    if not cond_z_check(spec):
        raise CondZError("variance ratios violate the parametric condition")
    target = spec.sigma_n_sq[0] * rc.g0(spec, d, r0_budget)
    lo, hi = 0.0, OMEGA_MAX
    t_lo, t_hi = theta_seq(spec, lo)[0], theta_seq(spec, hi)[0]
    if abs(target - t_lo) <= 1e-12:
        return 0.0
    if not t_lo <= target <= t_hi:
        raise OmegaRangeError(
            f"target {target:.6g} outside theta_1 range [{t_lo:.6g}, {t_hi:.6g}]")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if theta_seq(spec, mid)[0] < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16:
            break
    return 0.5 * (lo + hi)


def parametric_sum_rate(spec: SourceSpec, d: float, r0_budget: float) -> SumRateResult:
    if not cond_z_check(spec):
        raise CondZError("variance ratios violate the parametric condition")
    if rc.g0(spec, d, r0_budget) <= 0.0:
        return _trivial(spec, "parametric")
    omega = solve_omega(spec, d, r0_budget)
    th = theta_seq(spec, omega)
    value = -0.5 * zeta(spec, th) + _offset(spec, d, r0_budget)
    r = r_from_alpha(spec, th)
    resid = abs(rc.f0(spec, r) - rc.g0(spec, d, r0_budget))
    return SumRateResult(max(value, 0.0), r, "parametric", omega=omega, residual=resid)


# -- CEO special case -------------------------------------------------------

def ceo_closed_form(spec: SourceSpec, d: float, r0_budget: float) -> float:
    if not spec.is_ceo():
        raise ValueError("closed form needs a CEO source (eps_l = 0 for l < L, tau_l = 1)")
    x = spec.sigma_n_sq[0] * rc.g0(spec, d, r0_budget)
    if x <= 0.0:
        return 0.0
    big_l = spec.big_l
    return -0.5 * big_l * math.log1p(-x / big_l) + _offset(spec, d, r0_budget)


def ceo_limit(sigma1_sq: float, sigma_x0_sq: float, d: float) -> float:
    """Sum rate of the CEO problem as the number of helpers grows without bound."""
    return sigma1_sq / (2.0 * sigma_x0_sq) * (sigma_x0_sq / d - 1.0) + 0.5 * math.log(sigma_x0_sq / d)
