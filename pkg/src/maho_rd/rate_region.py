"""Subset rate functions, co-polymatroid vertices and membership witnesses.

For a fixed auxiliary allocation ``(r_0, r)`` the outer bound is the
polytope ``{sum_{i in S} R_i >= J_S}`` and the inner bound the polytope
``{sum_{i in S} R_i >= K_S}``.  Both set functions are co-polymatroids, so
each polytope is described by the ``L!`` corner points returned by
:func:`vertex`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import recursions as rc
from .source_model import RateAllocation, SourceSpec

Kind = Literal["outer", "inner"]

MAX_TABLE_L = 20
VERTEX_NOISE = 1e-12
CERT_TOL = 1e-9


class InconsistentRatesError(ArithmeticError):
    """A vertex component came out clearly negative."""


@dataclass(frozen=True)
class SubsetRates:
    """``rho[mask]`` for every subset ``mask`` of ``{1..L}``."""

    big_l: int
    rho: np.ndarray
    kind: str = ""

    def __getitem__(self, s) -> float:
        return float(self.rho[rc.as_mask(s, self.big_l)])


@dataclass(frozen=True)
class RegionPoint:
    r0_rate: float
    helper_rates: np.ndarray

    def __post_init__(self):
        h = np.array(self.helper_rates, dtype=float).reshape(-1)
        if not math.isfinite(self.r0_rate) or self.r0_rate < 0:
            raise ValueError("r0_rate must be finite and nonnegative")
        if np.any(~np.isfinite(h)) or np.any(h < 0):
            raise ValueError("helper rates must be finite and nonnegative")
        object.__setattr__(self, "r0_rate", float(self.r0_rate))
        object.__setattr__(self, "helper_rates", h)


def _log_f_terms(spec: SourceSpec, r) -> tuple[float, float]:
    """``(log F(r), log(1 + sigma_X0^2 f_0(r)))``."""
    f = rc.f_seq(spec, r)
    log_f = float(np.sum(np.log1p(spec.sigma_z_sq[:-1] * f[1:])))
    return log_f, math.log1p(spec.sigma_x0_sq * f[0])


def _subset_rate_sum(r, mask: int) -> float:
    return float(sum(r[i] for i in range(len(r)) if mask >> i & 1))


def j_subset(spec: SourceSpec, d: float, alloc: RateAllocation, s) -> float:
    """Outer-bound subset function ``J_S`` (nats)."""
    mask = rc.as_mask(s, spec.big_l)
    full = (1 << spec.big_l) - 1
    log_g = math.log(rc.big_g(spec, d, alloc.r0, alloc.r))
    log_fc, log_hc = _log_f_terms(spec, rc.restrict(alloc.r, full ^ mask))
    val = 0.5 * (log_g - log_fc + math.log(spec.sigma_x0_sq) - 2.0 * alloc.r0
                 - log_hc - math.log(d)) + _subset_rate_sum(alloc.r, mask)
    return max(val, 0.0)


def k_subset(spec: SourceSpec, r, s) -> float:
    """Inner-bound subset function ``K_S`` (nats); depends on helper rates only."""
    mask = rc.as_mask(s, spec.big_l)
    full = (1 << spec.big_l) - 1
    r = np.asarray(r, dtype=float)
    log_f, log_h = _log_f_terms(spec, r)
    log_fc, log_hc = _log_f_terms(spec, rc.restrict(r, full ^ mask))
    val = 0.5 * (log_f - log_fc + log_h - log_hc) + _subset_rate_sum(r, mask)
    return max(val, 0.0)


def hat_j_subset(spec: SourceSpec, d: float, alloc: RateAllocation, s,
                 r0_cap: float) -> float:
    """Outer-bound function with the primary rate ``r0_cap`` subtracted outside the log."""
    if math.isinf(r0_cap):
        return 0.0
    mask = rc.as_mask(s, spec.big_l)
    full = (1 << spec.big_l) - 1
    log_g = math.log(rc.big_g(spec, d, alloc.r0, alloc.r))
    log_fc, log_hc = _log_f_terms(spec, rc.restrict(alloc.r, full ^ mask))
    inner = 0.5 * max(log_g + math.log(spec.sigma_x0_sq) - log_fc - log_hc - math.log(d), 0.0)
    return max(inner + float(np.sum(alloc.r)) - r0_cap, 0.0)


def subset_rates(spec: SourceSpec, d: float | None, alloc: RateAllocation,
                 kind: Kind) -> SubsetRates:
    """Tabulate ``J_S`` (``kind="outer"``) or ``K_S`` (``kind="inner"``) over all subsets."""
    big_l = spec.big_l
    if big_l > MAX_TABLE_L:
        raise ValueError(f"subset tables limited to L <= {MAX_TABLE_L}, got {big_l}")
    if kind not in ("outer", "inner"):
        raise ValueError(f"kind must be 'outer' or 'inner', got {kind!r}")
    if kind == "outer" and d is None:
        raise ValueError("outer rates need a distortion level")
    n = 1 << big_l
    full = n - 1
    r = np.asarray(alloc.r, dtype=float)
    # log F(r_T) + log(1 + sigma^2 f_0(r_T)) for every subset T
    log_terms = np.empty(n)
    for mask in range(n):
        a, b = _log_f_terms(spec, rc.restrict(r, mask))
        log_terms[mask] = a + b
    sums = np.array([_subset_rate_sum(r, m) for m in range(n)])
    comp = full ^ np.arange(n)
    if kind == "inner":
        rho = 0.5 * (log_terms[full] - log_terms[comp]) + sums
    else:
        log_g = math.log(rc.big_g(spec, d, alloc.r0, r))
        const = log_g + math.log(spec.sigma_x0_sq) - 2.0 * alloc.r0 - math.log(d)
        rho = 0.5 * (const - log_terms[comp]) + sums
    rho = np.maximum(rho, 0.0)
    rho[0] = 0.0
    return SubsetRates(big_l, rho, kind)


def vertex(spec: SourceSpec, rates: SubsetRates, pi) -> np.ndarray:
    """Corner point of ``{sum_S R_i >= rho_S}`` for the ordering ``pi``.

    ``pi`` lists 1-based helper indices ``pi(1), .., pi(L)``; the returned
    vector holds ``R_1..R_L``.
    """
    big_l = spec.big_l
    pi = [int(p) for p in pi]
    if sorted(pi) != list(range(1, big_l + 1)):
        raise ValueError(f"not a permutation of 1..{big_l}: {pi}")
    if rates.big_l != big_l or rates.rho.shape != (1 << big_l,):
        raise KeyError("subset table does not cover every subset of the helpers")
    out = np.zeros(big_l)
    tail = 0  # mask of {pi(i+1), .., pi(L)}
    for i in range(big_l - 1, -1, -1):
        with_i = tail | 1 << (pi[i] - 1)
        val = rates.rho[with_i] - rates.rho[tail]
        if val < -VERTEX_NOISE:
            raise InconsistentRatesError(
                f"vertex component R_{pi[i]} = {val:.3e} < 0; subset table not monotone")
        out[pi[i] - 1] = max(val, 0.0)
        tail = with_i
    return out


def all_vertices(spec: SourceSpec, rates: SubsetRates):
    """Yield ``(pi, R)`` for every ordering of the helpers."""
    for pi in itertools.permutations(range(1, spec.big_l + 1)):
        yield pi, vertex(spec, rates, pi)


@dataclass(frozen=True)
class Certificate:
    ok: bool
    r0_ok: bool
    worst_subset: int
    worst_slack: float

    def __bool__(self):
        return self.ok


def certificate_check(spec: SourceSpec, d: float, candidate: RegionPoint,
                      alloc: RateAllocation, kind: Kind = "outer",
                      tol: float = CERT_TOL, rates: SubsetRates | None = None) -> Certificate:
    """Check ``candidate`` against the polytope of ``alloc``.

    ``worst_subset`` is the bitmask with the most negative slack
    ``sum_{i in S} R_i - rho_S`` (0 when no subset is violated).  Ties
    within rounding go to the subset with the fewest helpers.
    """
    if rates is None:
        rates = subset_rates(spec, d, alloc, kind)
    big_l = spec.big_l
    n = 1 << big_l
    h = candidate.helper_rates
    sums = np.array([_subset_rate_sum(h, m) for m in range(n)])
    slack = sums - rates.rho
    worst_slack = float(np.min(slack))
    # among (numerically) tied subsets report the smallest one
    tied = np.flatnonzero(slack <= worst_slack + VERTEX_NOISE)
    worst = int(min(tied, key=lambda m: (bin(int(m)).count("1"), int(m))))
    r0_ok = candidate.r0_rate >= alloc.r0 - tol
    ok = r0_ok and worst_slack >= -tol
    return Certificate(ok, r0_ok, worst if worst_slack < -tol else 0, worst_slack)


@dataclass(frozen=True)
class SearchConfig:
    points: int = 9
    upper: float = 3.0
    steps: int = 200
    kind: Kind = "outer"
    tol: float = CERT_TOL


@dataclass(frozen=True)
class SearchResult:
    found: bool
    alloc: RateAllocation | None
    score: float
    evaluations: int


def _witness_score(spec, d, candidate, r, kind):
    # min over the primary-rate margin and every subset slack
    b0 = rc.boundary_r0(spec, d, r)
    # the largest admissible r_0 loosens every J_S
    alloc = RateAllocation(max(b0, candidate.r0_rate), r)
    try:
        rates = subset_rates(spec, d, alloc, kind)
    except rc.GPoleError:
        return -math.inf, alloc
    cert = certificate_check(spec, d, candidate, alloc, kind, rates=rates)
    return min(candidate.r0_rate - b0, cert.worst_slack), alloc


def membership_search(spec: SourceSpec, d: float, candidate: RegionPoint,
                      cfg: SearchConfig = SearchConfig()) -> SearchResult:
    """Look for an allocation whose polytope contains ``candidate``.

    A coarse grid over the helper rates is followed by coordinate ascent on
    the minimum certificate slack.  ``found=False`` is inconclusive: the
    bounds are unions over all allocations and the search is local.
    """
    big_l = spec.big_l
    axis = np.linspace(0.0, cfg.upper, cfg.points)
    best_score, best_alloc, best_r = -math.inf, None, None
    evals = 0
    for pt in itertools.product(axis, repeat=big_l):
        r = np.array(pt)
        score, alloc = _witness_score(spec, d, candidate, r, cfg.kind)
        evals += 1
        if score >= -cfg.tol:
            return SearchResult(True, alloc, score, evals)
        if score > best_score:
            best_score, best_alloc, best_r = score, alloc, r
    step = axis[1] - axis[0] if cfg.points > 1 else 0.5
    r = best_r.copy()
    for _ in range(cfg.steps):
        improved = False
        for i in range(big_l):
            for sgn in (1.0, -1.0):
                trial = r.copy()
                trial[i] = max(trial[i] + sgn * step, 0.0)
                score, alloc = _witness_score(spec, d, candidate, trial, cfg.kind)
                evals += 1
                if score > best_score:
                    best_score, best_alloc, r = score, alloc, trial
                    improved = True
                    if score >= -cfg.tol:
                        return SearchResult(True, alloc, score, evals)
        if not improved:
            step *= 0.5
            if step < 1e-12:
                break
    return SearchResult(False, best_alloc, best_score, evals)
