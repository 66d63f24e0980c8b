"""Tree-structured Gaussian sources for the many-help-one problem.

The primary source ``X_0`` feeds a Markov trunk ``Y_l = Y_{l-1} + Z_l``
and helper ``l`` observes ``X_l = Y_l + N_l``.  The last helper has no
separate observation noise (``X_L = Y_L``, ``N_L = Z_L``), so its two
variances must coincide.

All variances are stored as variances, never as standard deviations, and
every rate in the package is measured in nats.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class SpecError(ValueError):
    """Invalid source description.  ``field`` names the offending entry."""

    def __init__(self, message: str, field: str = ""):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


@dataclass(frozen=True)
class SourceSpec:
    big_l: int
    sigma_x0_sq: float
    sigma_z_sq: np.ndarray
    sigma_n_sq: np.ndarray
    eps: np.ndarray = field(init=False, repr=False, compare=False)
    tau: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        z = np.array(self.sigma_z_sq, dtype=float).reshape(-1)
        n = np.array(self.sigma_n_sq, dtype=float).reshape(-1)
        _check(int(self.big_l), float(self.sigma_x0_sq), z, n)
        z.setflags(write=False)
        n.setflags(write=False)
        eps = z / n
        tau = n[1:] / n[:-1]
        eps.setflags(write=False)
        tau.setflags(write=False)
        object.__setattr__(self, "big_l", int(self.big_l))
        object.__setattr__(self, "sigma_x0_sq", float(self.sigma_x0_sq))
        object.__setattr__(self, "sigma_z_sq", z)
        object.__setattr__(self, "sigma_n_sq", n)
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "tau", tau)

    def __eq__(self, other):
        if not isinstance(other, SourceSpec):
            return NotImplemented
        return (
            self.big_l == other.big_l
            and self.sigma_x0_sq == other.sigma_x0_sq
            and np.array_equal(self.sigma_z_sq, other.sigma_z_sq)
            and np.array_equal(self.sigma_n_sq, other.sigma_n_sq)
        )

    def __hash__(self):
        return hash((self.big_l, self.sigma_x0_sq,
                     self.sigma_z_sq.tobytes(), self.sigma_n_sq.tobytes()))

    def tau_at(self, l: int) -> float:
        """``sigma_N_l^2 / sigma_N_{l-1}^2`` with 1-based ``l`` in ``2..L``."""
        return float(self.tau[l - 2])

    def is_ceo(self, rtol: float = 1e-12) -> bool:
        """True when every intermediate ``Z`` vanishes and all ``N`` variances agree."""
        n = self.sigma_n_sq
        return bool(np.all(self.sigma_z_sq[:-1] == 0.0)
                    and np.allclose(n, n[0], rtol=rtol, atol=0.0))

    def to_dict(self) -> dict:
        return {
            "L": self.big_l,
            "sigma_x0_sq": self.sigma_x0_sq,
            "sigma_z_sq": self.sigma_z_sq.tolist(),
            "sigma_n_sq": self.sigma_n_sq.tolist(),
        }


def _check(big_l, sigma_x0_sq, z, n):
    if big_l < 2:
        raise SpecError(f"need at least 2 helpers, got {big_l}", "L")
    if not np.isfinite(sigma_x0_sq) or sigma_x0_sq <= 0:
        raise SpecError("must be a positive finite variance", "sigma_x0_sq")
    if z.shape != (big_l,):
        raise SpecError(f"expected {big_l} entries, got {z.size}", "sigma_z_sq")
    if n.shape != (big_l,):
        raise SpecError(f"expected {big_l} entries, got {n.size}", "sigma_n_sq")
    for i, v in enumerate(n):
        if not np.isfinite(v) or v <= 0:
            raise SpecError("must be a positive finite variance", f"sigma_n_sq[{i}]")
    for i, v in enumerate(z):
        if not np.isfinite(v) or v < 0:
            raise SpecError("must be a nonnegative finite variance", f"sigma_z_sq[{i}]")
    if z[-1] != n[-1]:
        raise SpecError(
            f"last helper needs sigma_z_sq == sigma_n_sq, got {z[-1]!r} vs {n[-1]!r}",
            f"sigma_z_sq[{big_l - 1}]",
        )


def validate(spec: SourceSpec) -> SourceSpec:
    """Re-run every check on ``spec`` and return a fresh validated copy."""
    return SourceSpec(spec.big_l, spec.sigma_x0_sq, spec.sigma_z_sq, spec.sigma_n_sq)


def ceo_spec(l_count: int, sigma_sq: float, sigma_x0_sq: float) -> SourceSpec:
    if sigma_sq <= 0:
        raise SpecError("must be positive", "sigma_sq")
    if l_count < 2:
        raise SpecError(f"need at least 2 helpers, got {l_count}", "L")
    z = np.zeros(l_count)
    z[-1] = sigma_sq
    return SourceSpec(l_count, sigma_x0_sq, z, np.full(l_count, float(sigma_sq)))


def ci_spec(l_count: int, sigma_n_sq_vec, sigma_x0_sq: float) -> SourceSpec:
    n = np.asarray(sigma_n_sq_vec, dtype=float).reshape(-1)
    if n.size != l_count:
        raise SpecError(f"expected {l_count} entries, got {n.size}", "sigma_n_sq")
    z = np.zeros(l_count)
    z[-1] = n[-1]
    return SourceSpec(l_count, sigma_x0_sq, z, n)


@dataclass(frozen=True)
class RateAllocation:
    """Auxiliary rates ``(r_0, r_1..r_L)`` in nats."""

    r0: float
    r: np.ndarray

    def __post_init__(self):
        r = np.array(self.r, dtype=float).reshape(-1)
        if not np.isfinite(self.r0) or self.r0 < 0:
            raise SpecError("must be a nonnegative rate", "r0")
        if np.any(~np.isfinite(r)) or np.any(r < 0):
            raise SpecError("rates must be nonnegative", "r")
        r.setflags(write=False)
        object.__setattr__(self, "r0", float(self.r0))
        object.__setattr__(self, "r", r)


def check_distortion(spec: SourceSpec, d: float) -> float:
    d = float(d)
    if not (0 < d <= spec.sigma_x0_sq):
        raise SpecError(f"need 0 < d <= sigma_x0_sq={spec.sigma_x0_sq}, got {d}", "d")
    return d


def spec_from_dict(data: dict) -> SourceSpec:
    for key in ("L", "sigma_x0_sq", "sigma_z_sq", "sigma_n_sq"):
        if key not in data:
            raise SpecError("missing field", key)
    try:
        big_l = int(data["L"])
        x0 = float(data["sigma_x0_sq"])
        z = [float(v) for v in data["sigma_z_sq"]]
        n = [float(v) for v in data["sigma_n_sq"]]
    except (TypeError, ValueError) as exc:
        raise SpecError(f"malformed value ({exc})") from exc
    return SourceSpec(big_l, x0, np.array(z), np.array(n))


def load_spec(path) -> SourceSpec:
    with open(Path(path)) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecError(f"invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise SpecError("top level must be an object")
    return spec_from_dict(data)
