"""Decay constants and verification of exponential bounds.

Convention: ``C_P = 1 / lambda_1`` with ``lambda_1`` the first eigenvalue of
the Dirichlet Laplacian, so that ``||v||^2 <= C_P int |grad v|^2 =
C_P int 2 D:D`` for divergence-free fields vanishing on the walls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import splu

from . import constitutive as cm
from .steady_state import Grid2D, dirichlet_operator

CONVENTION = "C_P = 1/lambda_1 (first Dirichlet Laplacian eigenvalue); Korn equality folded in"


def poincare_constant(lx: float, ly: float) -> float:
    """``1 / (pi^2 (1/lx^2 + 1/ly^2))`` for the rectangle ``lx x ly``."""
    if not (lx > 0 and ly > 0):
        raise ValueError(f"extents must be positive (got lx={lx}, ly={ly})")
    return 1.0 / (math.pi**2 * (1.0 / lx**2 + 1.0 / ly**2))


def discrete_poincare(grid: Grid2D, tol: float = 1e-12, maxiter: int = 500) -> float:
    """``1 / lambda_min`` of the cell-centred Dirichlet Laplacian, by inverse iteration."""
    a = dirichlet_operator(grid) / grid.h**2
    lu = splu(a.tocsc())
    X, Y = grid.centers()
    x = (np.sin(np.pi * X / grid.lx) * np.sin(np.pi * Y / grid.ly)).ravel()
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(maxiter):
        y = lu.solve(x)
        new = 1.0 / np.linalg.norm(y)
        x = y * new
        if abs(new - lam) <= tol * new:
            lam = new
            break
        lam = new
    return 1.0 / lam


def c_mech(model: cm.ModelSpec, c_p: float) -> float:
    """``min(2 inf nu / (rho C_P), mu / (C_f sup nu1))`` [1/s]."""
    if not c_p > 0:
        raise ValueError("C_P must be positive")
    cf = cm.cf_model(model)
    if not math.isfinite(cf):
        raise ValueError(f"no finite C_f for {model.label}; C_mech is undefined")
    return min(2.0 * model.nu.inf / (model.rho * c_p), model.mu / (cf * model.nu1.sup))


def fit_rate(t: np.ndarray, v: np.ndarray, skip: float = 0.05) -> float:
    """Least-squares decay rate of ``log v`` over samples after the first ``skip`` fraction."""
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    start = int(math.ceil(skip * t.size))
    tt, vv = t[start:], v[start:]
    keep = vv > 0
    if keep.sum() < 2:
        return math.nan
    slope = np.polyfit(tt[keep], np.log(vv[keep]), 1)[0]
    return float(-slope)


@dataclass
class BoundCheck:
    """Worst ratio ``value / bound`` over samples and the first violation."""

    name: str
    worst_ratio: float
    first_violation: int | None
    first_violation_t: float | None
    slack: float

    @property
    def passed(self) -> bool:
        return self.first_violation is None


def _bound(name, t, values, bound, slack) -> BoundCheck:
    values = np.asarray(values, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(bound > 0, values / bound, np.where(values > 0, np.inf, 0.0))
    bad = np.nonzero(ratio > 1.0 + slack)[0]
    first = int(bad[0]) if bad.size else None
    return BoundCheck(name, float(np.max(ratio)), first, float(t[first]) if first is not None else None, slack)


@dataclass
class DecayReport:
    """Outcome of :func:`verify_decay`."""

    c_p: float
    c_mech: float
    fitted_rate: float
    bounds: list[BoundCheck]
    y_ratio: float | None = None
    y_threshold: float = 0.01
    rate_rtol: float = 1e-6
    notes: list[str] = field(default_factory=list)

    @property
    def rate_ok(self) -> bool:
        return self.fitted_rate >= self.c_mech * (1.0 - self.rate_rtol)

    @property
    def y_ok(self) -> bool:
        return self.y_ratio is None or self.y_ratio < self.y_threshold

    @property
    def margin(self) -> float:
        """``1 + slack - worst ratio`` of the main bound (negative when violated)."""
        b = self.bounds[0]
        return 1.0 + b.slack - b.worst_ratio

    @property
    def passed(self) -> bool:
        return all(b.passed for b in self.bounds) and self.rate_ok and self.y_ok

    def to_kv(self) -> list[tuple[str, str]]:
        rows = [
            ("convention", CONVENTION),
            ("c_p", f"{self.c_p:.17g}"),
            ("c_mech", f"{self.c_mech:.17g}"),
            ("fitted_rate", f"{self.fitted_rate:.17g}"),
            ("rate_ok", str(self.rate_ok).lower()),
            ("margin", f"{self.margin:.17g}"),
        ]
        for b in self.bounds:
            rows.append((f"{b.name}.worst_ratio", f"{b.worst_ratio:.17g}"))
            rows.append((f"{b.name}.passed", str(b.passed).lower()))
            if b.first_violation is not None:
                rows.append((f"{b.name}.first_violation_t", f"{b.first_violation_t:.17g}"))
        if self.y_ratio is not None:
            rows.append(("y_ratio", f"{self.y_ratio:.17g}"))
            rows.append(("y_ok", str(self.y_ok).lower()))
        rows.append(("passed", str(self.passed).lower()))
        return rows


def verify_decay(
    t,
    v_mech,
    c_mech_value: float,
    slack: float = 0.05,
    kinetic_sq=None,
    psi_int=None,
    rho: float = 1.0,
    y=None,
    y_threshold: float = 0.01,
    c_p: float = math.nan,
    fit_skip: float = 0.05,
) -> DecayReport:
    """Check ``V(t) <= V(0) exp(-C t) (1 + slack)`` and the companion bounds.

    Parameters
    ----------
    t, v_mech : array_like
        Sample times and mechanical functional values (at least 10).
    c_mech_value : float
        Decay constant to test against.
    kinetic_sq, psi_int : array_like, optional
        ``int |v|^2`` and ``int psi1``, checked against ``(2/rho) V(0) e^{-Ct}``
        and ``(1/rho) V(0) e^{-Ct}`` respectively.
    y : array_like, optional
        ``Y^{m,n}`` series; ``y[-1]/y[0]`` must stay below ``y_threshold``.

    Returns
    -------
    DecayReport
        Violations are reported, never raised.
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(v_mech, dtype=float)
    if t.size < 10 or v.size != t.size:
        raise ValueError("need at least 10 samples with matching times")
    env = v[0] * np.exp(-c_mech_value * (t - t[0]))
    bounds = [_bound("v_mech", t, v, env, slack)]
    if kinetic_sq is not None:
        bounds.append(_bound("kinetic", t, kinetic_sq, 2.0 / rho * env, slack))
    if psi_int is not None:
        bounds.append(_bound("psi1", t, psi_int, env / rho, slack))
    y_ratio = None
    if y is not None:
        y = np.asarray(y, dtype=float)
        y_ratio = float(y[-1] / y[0]) if y[0] != 0 else math.nan
    return DecayReport(
        c_p=c_p,
        c_mech=c_mech_value,
        fitted_rate=fit_rate(t, v, fit_skip),
        bounds=bounds,
        y_ratio=y_ratio,
        y_threshold=y_threshold,
    )


def verify_trajectory(traj, c_mech_value: float | None = None, slack: float = 0.05, y_threshold: float = 0.01) -> DecayReport:
    """:func:`verify_decay` on a :class:`viscostab.sim.Trajectory` (first (m, n) pair)."""
    g, model = traj.config.grid, traj.config.model
    cp = poincare_constant(g.lx, g.ly)
    cmv = c_mech(model, cp) if c_mech_value is None else c_mech_value
    y = [s.y_th_mn[0] for s in traj.samples] if traj.config.mn_pairs else None
    return verify_decay(
        traj.column("t"),
        traj.column("v_mech"),
        cmv,
        slack,
        kinetic_sq=traj.column("kinetic_sq"),
        psi_int=traj.column("psi_int"),
        rho=model.rho,
        y=y,
        y_threshold=y_threshold,
        c_p=cp,
    )
