"""The f / g / f* recursions and the products built from them.

Index conventions: rate vectors ``r`` hold ``r_1..r_L`` at positions
``0..L-1``.  Returned sequences ``[f_0, .., f_{L-1}]`` and
``[g_0, .., g_{L-1}]`` are indexed by level, so ``f[l]`` is ``f_l``.
Subsets of helpers are bitmasks with bit ``i-1`` standing for helper ``i``;
any iterable of 1-based helper indices is accepted as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .source_model import RateAllocation, SourceSpec

TOL_BOUNDARY = 1e-9


class GPoleError(ArithmeticError):
    """The g-recursion crossed its pole ``1 - sigma_Z^2 [.]^+ <= 0``."""

    def __init__(self, level: int, value: float):
        self.level = level
        self.value = value
        super().__init__(f"g-pole at level {level} (denominator {value:.3e})")


def as_mask(s, big_l: int) -> int:
    if s is None:
        return 0
    if isinstance(s, (int, np.integer)):
        mask = int(s)
    else:
        mask = 0
        for i in s:
            i = int(i)
            if not 1 <= i <= big_l:
                raise ValueError(f"helper index {i} outside 1..{big_l}")
            mask |= 1 << (i - 1)
    if mask < 0 or mask >> big_l:
        raise ValueError(f"subset mask {mask} outside 0..{(1 << big_l) - 1}")
    return mask


def mask_members(mask: int, big_l: int) -> list[int]:
    return [i + 1 for i in range(big_l) if mask >> i & 1]


def restrict(r, mask: int) -> np.ndarray:
    """Copy of ``r`` with every helper outside ``mask`` set to zero."""
    r = np.asarray(r, dtype=float)
    keep = np.array([(mask >> i) & 1 for i in range(r.size)], dtype=bool)
    return np.where(keep, r, 0.0)


def _gain(spec: SourceSpec, r) -> np.ndarray:
    # (1 - e^{-2 r_l}) / sigma_N_l^2 for every helper
    return -np.expm1(-2.0 * np.asarray(r, dtype=float)) / spec.sigma_n_sq


def f_seq(spec: SourceSpec, r, include_last: bool = False) -> np.ndarray:
    """``[f_0, f_1, .., f_{L-1}]`` for helper rates ``r``.

    With ``include_last`` a final entry ``f_L = (e^{2 r_L} - 1)/sigma_N_L^2``
    is appended.
    """
    big_l = spec.big_l
    r = np.asarray(r, dtype=float)
    if r.shape != (big_l,):
        raise ValueError(f"expected {big_l} rates, got shape {r.shape}")
    gain = _gain(spec, r)
    z = spec.sigma_z_sq
    f = np.empty(big_l + 1 if include_last else big_l)
    cur = gain[big_l - 2] + gain[big_l - 1]
    f[big_l - 1] = cur
    for l in range(big_l - 2, 0, -1):
        cur = cur / (1.0 + z[l] * cur) + gain[l - 1]
        f[l] = cur
    f[0] = cur / (1.0 + z[0] * cur)
    if include_last:
        f[big_l] = math.expm1(2.0 * r[-1]) / spec.sigma_n_sq[-1]
    return f


def f0(spec: SourceSpec, r) -> float:
    return float(f_seq(spec, r)[0])


def g0(spec: SourceSpec, d: float, r0: float) -> float:
    """Unclipped ``g_0 = e^{-2 r_0}/D - 1/sigma_X0^2``."""
    return math.exp(-2.0 * r0) / d - 1.0 / spec.sigma_x0_sq


def _prefix(spec: SourceSpec, r_prefix) -> np.ndarray:
    r = np.asarray(r_prefix, dtype=float).reshape(-1)
    need = spec.big_l - 2
    if r.size < need:
        raise ValueError(f"need at least {need} prefix rates, got {r.size}")
    return r[:need]


def g_seq(spec: SourceSpec, d: float, r0: float, r_prefix) -> np.ndarray:
    """``[g_0, .., g_{L-1}]`` with every entry clipped at zero.

    Only ``r_1..r_{L-2}`` enter; longer rate vectors are truncated.
    ``g_1`` is formed from ``[g_0]^+`` so that a negative ``g_0`` (an
    allocation that already meets the distortion with ``r_0`` alone)
    contributes unit factors to ``G``.
    """
    big_l = spec.big_l
    r = _prefix(spec, r_prefix)
    z = spec.sigma_z_sq
    g = np.empty(big_l)
    raw = g0(spec, d, r0)
    g[0] = max(raw, 0.0)
    a = g[0]
    for l in range(1, big_l):
        # a is the clipped argument feeding level l
        den = 1.0 - z[l - 1] * a
        if den <= 0.0:
            raise GPoleError(l, den)
        g[l] = a / den
        if l < big_l - 1:
            a = max(g[l] - (-math.expm1(-2.0 * r[l - 1])) / spec.sigma_n_sq[l - 1], 0.0)
    return g


def f_star(spec: SourceSpec) -> np.ndarray:
    """``[f*_1, .., f*_{L-1}]``, the supremum of each ``f_l`` over all rates."""
    big_l = spec.big_l
    inv = 1.0 / spec.sigma_n_sq
    z = spec.sigma_z_sq
    out = np.empty(big_l - 1)
    cur = inv[big_l - 2] + inv[big_l - 1]
    out[big_l - 2] = cur
    for l in range(big_l - 2, 0, -1):
        cur = cur / (1.0 + z[l] * cur) + inv[l - 1]
        out[l - 1] = cur
    return out


def f0_sup(spec: SourceSpec) -> float:
    """Limit of ``f_0`` as every helper rate grows without bound."""
    f1 = f_star(spec)[0]
    return f1 / (1.0 + spec.sigma_z_sq[0] * f1)


def big_f(spec: SourceSpec, r) -> float:
    f = f_seq(spec, r)
    return float(np.prod(1.0 + spec.sigma_z_sq[:-1] * f[1:]))


def big_f_restricted(spec: SourceSpec, r, s) -> float:
    """``F`` with the rates outside ``s`` zeroed; the empty set gives 1."""
    return big_f(spec, restrict(r, as_mask(s, spec.big_l)))


def f0_restricted(spec: SourceSpec, r, s) -> float:
    return f0(spec, restrict(r, as_mask(s, spec.big_l)))


def big_g(spec: SourceSpec, d: float, r0: float, r_prefix) -> float:
    g = g_seq(spec, d, r0, r_prefix)
    return float(np.prod(1.0 + spec.sigma_z_sq[:-1] * g[1:]))


def eta_seq(spec: SourceSpec, d: float, r0: float, r_prefix) -> np.ndarray:
    """``[eta_0, .., eta_{L-2}]``: the unclipped arguments of the g-recursion.

    ``eta_0 = g_0`` and ``eta_l = h_l(eta_{l-1})`` with
    ``h_l(a) = [a]^+/(1 - sigma_Z_l^2 [a]^+) - (1 - e^{-2 r_l})/sigma_N_l^2``.
    """
    r = _prefix(spec, r_prefix)
    z = spec.sigma_z_sq
    eta = np.empty(spec.big_l - 1)
    eta[0] = g0(spec, d, r0)
    for l in range(1, spec.big_l - 1):
        a = max(eta[l - 1], 0.0)
        den = 1.0 - z[l - 1] * a
        if den <= 0.0:
            raise GPoleError(l, den)
        eta[l] = a / den + math.expm1(-2.0 * r[l - 1]) / spec.sigma_n_sq[l - 1]
    return eta


def big_g_via_eta(spec: SourceSpec, d: float, r0: float, r_prefix) -> float:
    eta = eta_seq(spec, d, r0, r_prefix)
    log_g = 0.0
    for k, e in enumerate(eta):
        den = 1.0 - spec.sigma_z_sq[k] * max(e, 0.0)
        if den <= 0.0:
            raise GPoleError(k + 1, den)
        log_g -= math.log(den)
    return math.exp(log_g)


@dataclass(frozen=True)
class FGReport:
    f: np.ndarray
    g: np.ndarray
    big_f: float
    big_g: float


def fg_report(spec: SourceSpec, d: float, alloc: RateAllocation) -> FGReport:
    f = f_seq(spec, alloc.r)
    g = g_seq(spec, d, alloc.r0, alloc.r)
    z = spec.sigma_z_sq[:-1]
    return FGReport(f, g, float(np.prod(1.0 + z * f[1:])), float(np.prod(1.0 + z * g[1:])))


class Region(str, Enum):
    OUTSIDE = "outside"
    INTERIOR = "interior"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class RegionClass:
    region: Region
    slack: float


def slack(spec: SourceSpec, d: float, r0: float, r) -> float:
    return f0(spec, r) - g0(spec, d, r0)


def classify(spec: SourceSpec, d: float, alloc: RateAllocation,
             tol: float = TOL_BOUNDARY) -> RegionClass:
    s = slack(spec, d, alloc.r0, alloc.r)
    if abs(s) <= tol:
        return RegionClass(Region.BOUNDARY, s)
    return RegionClass(Region.INTERIOR if s > 0 else Region.OUTSIDE, s)


def in_region(spec: SourceSpec, d: float, r0: float, r, tol: float = TOL_BOUNDARY) -> bool:
    return slack(spec, d, r0, r) >= -tol


def boundary_r0(spec: SourceSpec, d: float, r) -> float:
    """Smallest ``r_0 >= 0`` for which ``(r_0, r)`` lies in the feasible set.

    When positive the pair sits on the boundary; a zero return means
    ``(0, r)`` is already strictly feasible (or exactly on the boundary).
    """
    return max(0.0, -0.5 * math.log(d * (f0(spec, r) + 1.0 / spec.sigma_x0_sq)))
