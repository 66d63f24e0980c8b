"""Checks for the matching (MI) condition on ``G``.

The condition asks that ``e^{2 r_l} G(D, r_0, r^{L-2})`` be nondecreasing
in each ``r_l`` for ``l = 1..L-2``.  :func:`prop1_check` evaluates a
closed-form sufficient inequality; :func:`numeric_mi_probe` looks for a
counterexample on a grid.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import recursions as rc
from .source_model import SourceSpec


@dataclass
class MiReport:
    prop1_lhs: list[float]
    prop1_holds: bool
    numeric_holds: bool | None = None
    worst_violation: float = 0.0
    worst_point: dict | None = None
    l3_bound: float | None = None
    points_checked: int = 0

    def to_dict(self) -> dict:
        return {
            "prop1_lhs": list(self.prop1_lhs),
            "prop1_holds": self.prop1_holds,
            "numeric_holds": self.numeric_holds,
            "worst_violation": self.worst_violation,
            "worst_point": self.worst_point,
            "l3_bound": self.l3_bound,
            "points_checked": self.points_checked,
        }


def prop1_lhs(spec: SourceSpec) -> list[float]:
    """Left-hand sides of the sufficient inequality, one per ``l = 1..L-2``."""
    big_l = spec.big_l
    if big_l < 3:
        return []
    fs = rc.f_star(spec)  # fs[j-1] = f*_j
    z = spec.sigma_z_sq  # z[j-1] = sigma_Z_j^2
    n = spec.sigma_n_sq
    out = []
    for l in range(1, big_l - 1):
        total = 0.0
        prod_sq = 1.0
        for k in range(l, big_l - 1):
            if k > l:
                prod_sq *= (1.0 + z[k - 1] * fs[k - 1]) ** 2
            total += z[k] / n[l - 1] * (1.0 + z[k] * fs[k]) * prod_sq
        out.append(float(total))
    return out


def prop1_check(spec: SourceSpec) -> MiReport:
    lhs = prop1_lhs(spec)
    report = MiReport(lhs, all(v <= 1.0 for v in lhs))
    if spec.big_l == 3:
        report.l3_bound = l3_bound(spec)
    return report


def l3_bound(spec: SourceSpec) -> float:
    """Largest ``sigma_Z_2^2`` passing the sufficient inequality when ``L = 3``."""
    if spec.big_l != 3:
        raise ValueError(f"closed-form bound only for L = 3, got L = {spec.big_l}")
    n1, n2, n3 = spec.sigma_n_sq
    return float(2.0 * n1) / (1.0 + math.sqrt(1.0 + 4.0 * n1 * (1.0 / n2 + 1.0 / n3)))


@dataclass(frozen=True)
class ProbeGrid:
    r0_values: tuple = (0.0, 0.2, 0.5)
    r_values: tuple = (0.0, 0.25, 0.5, 1.0)
    delta: float = 1e-4
    tol: float = 1e-10
    extendable_only: bool = True


def _extendable(spec, d, r0, prefix) -> bool:
    # some choice of r_{L-1}, r_L puts (r_0, prefix, .) in the feasible set
    r = np.concatenate([prefix, [np.inf, np.inf]])
    return rc.f0(spec, r) >= rc.g0(spec, d, r0)


def _scaled_g(spec, d, r0, prefix, l):
    try:
        return math.exp(2.0 * prefix[l - 1]) * rc.big_g(spec, d, r0, prefix)
    except rc.GPoleError:
        return None


def numeric_mi_probe(spec: SourceSpec, d: float,
                     grid: ProbeGrid = ProbeGrid()) -> tuple[bool, float, dict | None, int]:
    """Finite-difference search for a decrease of ``e^{2 r_l} G`` in ``r_l``.

    Returns ``(holds, worst_violation, worst_point, points_checked)`` where
    ``worst_violation`` is the most negative increment seen (0 if none).
    A ``True`` result only means no violation was found on the grid.
    """
    big_l = spec.big_l
    if big_l < 3:
        return True, 0.0, None, 0
    worst, worst_pt, checked = 0.0, None, 0
    for r0 in grid.r0_values:
        for pt in itertools.product(grid.r_values, repeat=big_l - 2):
            prefix = np.array(pt, dtype=float)
            if grid.extendable_only and not _extendable(spec, d, r0, prefix):
                continue
            for l in range(1, big_l - 1):
                base = _scaled_g(spec, d, r0, prefix, l)
                bumped = prefix.copy()
                bumped[l - 1] += grid.delta
                up = _scaled_g(spec, d, r0, bumped, l)
                if base is None or up is None:
                    continue
                checked += 1
                inc = up - base
                if inc < worst:
                    worst = inc
                    worst_pt = {"r0": r0, "r_prefix": prefix.tolist(), "l": l}
    return worst >= -grid.tol, worst, worst_pt, checked


def mi_report(spec: SourceSpec, d: float | None = None,
              grid: ProbeGrid = ProbeGrid()) -> MiReport:
    report = prop1_check(spec)
    if d is not None:
        holds, worst, pt, checked = numeric_mi_probe(spec, d, grid)
        report.numeric_holds = holds
        report.worst_violation = worst
        report.worst_point = pt
        report.points_checked = checked
    return report
