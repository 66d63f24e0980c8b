"""Covariance-level check of the Gaussian test-channel construction.

Each active helper sends ``U_i = X_i + V_i`` with
``1/sigma_V_i^2 = (e^{2 r_i} - 1)/sigma_N_i^2`` and the primary encoder
sends ``U_0 = X_0 + V_0`` with ``1/sigma_V_0^2 = (1 - e^{-2 r_0})/D``.
Zero-rate channels are left out of the model entirely.  Conditional
mutual informations are log-determinant differences of Schur complements.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import recursions as rc
from .source_model import RateAllocation, SourceSpec

PSD_TOL = 1e-10


class SingularCovarianceError(np.linalg.LinAlgError):
    def __init__(self, block: str):
        self.block = block
        super().__init__(f"conditional covariance of {block} is singular")


@dataclass(frozen=True)
class CovarianceModel:
    labels: tuple
    matrix: np.ndarray
    active_set: tuple = ()
    u0_active: bool = False

    def index(self, names) -> list[int]:
        pos = {lab: i for i, lab in enumerate(self.labels)}
        try:
            return [pos[n] for n in names]
        except KeyError as exc:
            raise KeyError(f"unknown variable {exc.args[0]!r}") from None

    def cov(self, a, b=None) -> np.ndarray:
        ia = self.index(a)
        ib = ia if b is None else self.index(b)
        return self.matrix[np.ix_(ia, ib)]

    @property
    def trunk(self) -> list[str]:
        """``X_0`` followed by ``Y_1..Y_{L-1}``."""
        return [lab for lab in self.labels if lab == "X0" or lab.startswith("Y")]

    def u_labels(self, helpers) -> list[str]:
        return [f"U{i}" for i in helpers if i in self.active_set]


def build_covariance(spec: SourceSpec, d: float, alloc: RateAllocation) -> CovarianceModel:
    big_l = spec.big_l
    r = np.asarray(alloc.r, dtype=float)
    active = tuple(i + 1 for i in range(big_l) if r[i] > 0.0)
    u0 = alloc.r0 > 0.0
    # independent base variables: X0, Z_1..Z_L, N_1..N_{L-1}, V_0?, V_i (active)
    base_var = [spec.sigma_x0_sq, *spec.sigma_z_sq, *spec.sigma_n_sq[:-1]]
    iz = 1
    in_ = 1 + big_l
    nb = len(base_var)
    iv0 = None
    if u0:
        iv0 = nb
        base_var.append(d / -math.expm1(-2.0 * alloc.r0))
        nb += 1
    iv = {}
    for i in active:
        iv[i] = nb
        base_var.append(spec.sigma_n_sq[i - 1] / math.expm1(2.0 * r[i - 1]))
        nb += 1

    rows, labels = [], []

    def add(label, row):
        labels.append(label)
        rows.append(row)

    y = np.zeros(nb)
    y[0] = 1.0
    add("X0", y.copy())
    trunk = [y.copy()]  # Y_0 .. Y_{L-1}
    for l in range(1, big_l):
        y = trunk[-1].copy()
        y[iz + l - 1] = 1.0
        trunk.append(y)
        add(f"Y{l}", y)
    xs = {}
    for l in range(1, big_l):
        x = trunk[l].copy()
        x[in_ + l - 1] = 1.0
        xs[l] = x
    x = trunk[big_l - 1].copy()
    x[iz + big_l - 1] = 1.0
    xs[big_l] = x
    for l in range(1, big_l + 1):
        add(f"X{l}", xs[l])
    if u0:
        u = rows[0].copy()
        u[iv0] = 1.0
        add("U0", u)
    for i in active:
        u = xs[i].copy()
        u[iv[i]] = 1.0
        add(f"U{i}", u)
    a = np.array(rows)
    mat = a @ np.diag(base_var) @ a.T
    return CovarianceModel(tuple(labels), 0.5 * (mat + mat.T), active, u0)


def _logdet_pd(mat: np.ndarray, block: str) -> float:
    if mat.size == 0:
        return 0.0
    scale = max(float(np.max(np.diag(mat))), 1e-300)
    try:
        chol = np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        raise SingularCovarianceError(block) from None
    diag = np.diag(chol)
    if np.min(diag) ** 2 <= PSD_TOL * scale:
        raise SingularCovarianceError(block)
    return 2.0 * float(np.sum(np.log(diag)))


def _independent_subset(model: CovarianceModel, names) -> list[str]:
    # drop conditioning variables that are linear functions of earlier ones
    kept: list[str] = []
    for n in names:
        v = model.cov([n])[0, 0]
        if kept:
            c = model.cov(kept)
            b = model.cov(kept, [n])
            v = v - (b.T @ np.linalg.solve(c, b)).item()
        if v > PSD_TOL * max(model.cov([n])[0, 0], 1e-300):
            kept.append(n)
    return kept


def conditional_cov(model: CovarianceModel, a, c) -> np.ndarray:
    a = list(a)
    c = _independent_subset(model, list(c))
    saa = model.cov(a)
    if not c:
        return saa
    sac = model.cov(a, c)
    scc = model.cov(c)
    return saa - sac @ np.linalg.solve(scc, sac.T)


def mutual_info(model: CovarianceModel, set_a, set_b, set_c=()) -> float:
    """``I(A; B | C)`` in nats for jointly Gaussian labelled variables."""
    a, b, c = list(set_a), list(set_b), list(set_c)
    if set(a) & set(c) or set(b) & set(c):
        raise ValueError("conditioning set overlaps the arguments")
    if not a or not b:
        return 0.0
    la = _logdet_pd(conditional_cov(model, a, c), "A|C")
    lb = _logdet_pd(conditional_cov(model, b, c), "B|C")
    lab = _logdet_pd(conditional_cov(model, a + b, c), "AB|C")
    val = 0.5 * (la + lb - lab)
    return max(val, 0.0)


def achieved_distortion(spec: SourceSpec, d: float, alloc: RateAllocation) -> float:
    """Mean-square error of the linear estimate of ``X_0`` from ``(U_0, U^L)``."""
    return 1.0 / (1.0 / spec.sigma_x0_sq - math.expm1(-2.0 * alloc.r0) / d
                  + rc.f0(spec, alloc.r))


def mmse_residual(model: CovarianceModel) -> float:
    obs = (["U0"] if model.u0_active else []) + model.u_labels(model.active_set)
    return float(conditional_cov(model, ["X0"], obs)[0, 0])


def omega_weights(spec: SourceSpec, d: float, alloc: RateAllocation) -> tuple[float, np.ndarray]:
    """Coefficients of the estimator built from the ``Omega`` recursion.

    Returns ``(w0, w)`` so that the estimate is ``w0 U_0 + sum_i w[i-1] U_i``.
    """
    big_l = spec.big_l
    r = np.asarray(alloc.r, dtype=float)
    gain = -np.expm1(-2.0 * r) / spec.sigma_n_sq
    f = rc.f_seq(spec, r)
    z = spec.sigma_z_sq
    w = np.zeros(big_l)
    w[big_l - 2] = gain[big_l - 2]
    w[big_l - 1] = gain[big_l - 1]
    for l in range(big_l - 2, 0, -1):
        w /= 1.0 + z[l] * f[l + 1]
        w[l - 1] = gain[l - 1]
    w /= 1.0 + z[0] * f[1]
    inv_v0 = -math.expm1(-2.0 * alloc.r0) / d
    scale = 1.0 / (1.0 / spec.sigma_x0_sq + inv_v0 + f[0])
    return scale * inv_v0, scale * w


def omega_residual(spec: SourceSpec, d: float, alloc: RateAllocation,
                   model: CovarianceModel | None = None) -> float:
    if model is None:
        model = build_covariance(spec, d, alloc)
    w0, w = omega_weights(spec, d, alloc)
    names, coef = ["X0"], [1.0]
    if model.u0_active:
        names.append("U0")
        coef.append(-w0)
    for i in model.active_set:
        names.append(f"U{i}")
        coef.append(-w[i - 1])
    coef = np.array(coef)
    return float(coef @ model.cov(names) @ coef)


def markov_audit(model: CovarianceModel, s, conditioning=None) -> float:
    """``I(U_S; U_{S^c} | X_0, Y^{L-1})``; zero for a valid construction."""
    big_l = sum(1 for lab in model.labels if lab.startswith("X")) - 1
    mask = rc.as_mask(s, big_l)
    inside = model.u_labels(rc.mask_members(mask, big_l))
    outside = model.u_labels(rc.mask_members(((1 << big_l) - 1) ^ mask, big_l))
    cond = model.trunk if conditioning is None else list(conditioning)
    if not inside or not outside:
        return 0.0
    return mutual_info(model, inside, outside, cond)


@dataclass
class IdentityReport:
    region: str
    dev_r0: float
    i_r0: float
    dev_ri: np.ndarray
    dev_fs: dict = field(default_factory=dict)
    achieved_distortion: float = math.nan
    mmse_residual: float = math.nan
    omega_residual: float = math.nan
    d: float = math.nan
    checks: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def verify_identities(spec: SourceSpec, d: float, alloc: RateAllocation,
                      tol: float = 1e-9) -> IdentityReport:
    model = build_covariance(spec, d, alloc)
    big_l = spec.big_l
    r = np.asarray(alloc.r, dtype=float)
    region = rc.classify(spec, d, alloc, tol).region.value

    obs = model.u_labels(model.active_set)
    i_r0 = mutual_info(model, ["U0"], ["X0"], obs) if model.u0_active else 0.0
    dev_r0 = abs(alloc.r0 - i_r0)

    # zero Z variances make trunk entries copies of one another
    trunk = _independent_subset(model, model.trunk)
    dev_ri = np.zeros(big_l)
    for i in model.active_set:
        dev_ri[i - 1] = abs(r[i - 1] - mutual_info(model, [f"X{i}"], [f"U{i}"], trunk))

    dev_fs = {}
    act = list(model.active_set)
    for k in range(len(act) + 1):
        for sub in itertools.combinations(act, k):
            mask = rc.as_mask(sub, big_l)
            rs = rc.restrict(r, mask)
            closed = 0.5 * (math.log(rc.big_f(spec, rs))
                            + math.log1p(spec.sigma_x0_sq * rc.f0(spec, rs)))
            dev_fs[mask] = abs(closed - mutual_info(model, trunk, model.u_labels(sub)))

    dist = achieved_distortion(spec, d, alloc)
    mmse = mmse_residual(model)
    omr = omega_residual(spec, d, alloc, model)
    checks = {
        "helper_rates": bool(np.all(dev_ri <= tol)),
        "subset_information": all(v <= tol for v in dev_fs.values()),
        "distortion_closed_form": abs(dist - mmse) <= tol,
        "omega_estimator": abs(omr - mmse) <= tol,
    }
    if region == "boundary":
        checks["primary_rate"] = dev_r0 <= tol
    elif region == "interior":
        checks["primary_rate"] = i_r0 <= alloc.r0 + tol
    if region != "outside":
        checks["distortion_budget"] = dist <= d * (1.0 + tol)
    return IdentityReport(region, dev_r0, i_r0, dev_ri, dev_fs, dist, mmse, omr, d, checks)
