"""Lyapunov-type functionals of a perturbed non-equilibrium steady state.

All functionals are midpoint-rule sums over the cells of a uniform grid
(cell area ``h^2``). With ``x = theta_tilde / theta_hat`` and
``L = log1p(x)`` the thermal integrands are

* ``V_th``:      ``rho c theta_hat [x - L]``
* ``V_th^m``:    ``rho c theta_hat [x - expm1(m L)/m]``
* ``Y^{m,n}``:   ``rho c theta_hat [expm1(n L)/n - expm1(m L)/m]``

which are the usual closed forms rewritten without cancellation near
``x = 0``. The mechanical part is ``sum rho psi1(B) h^2`` plus the kinetic
energy of the staggered velocity. Face velocities are used directly, with
trapezoid weights in the face-normal direction, so that the kinetic term
is the exact quadratic form conserved by the solver's discrete operators.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import constitutive as cm


@dataclass
class FunctionalSample:
    """Functional values and diagnostics at one instant."""

    t: float
    v_th: float
    v_mech: float
    v_neq: float
    v_th_m: tuple[float, ...] = ()
    y_th_mn: tuple[float, ...] = ()
    zeta_int: float = 0.0
    terms: tuple[float, float, float] = (0.0, 0.0, 0.0)
    diagnostics: dict[str, float] = field(default_factory=dict)


def _ratio(theta, theta_hat):
    theta = np.asarray(theta, dtype=float)
    theta_hat = np.asarray(theta_hat, dtype=float)
    if np.any(~(theta_hat > 0)):
        raise cm.DomainError("steady temperature must be positive")
    if np.any(~(theta > 0)):
        raise cm.DomainError("absolute temperature must be positive everywhere")
    return (theta - theta_hat) / theta_hat, theta_hat


def _check_m(m: float, name: str = "m"):
    if not 0.0 < m < 1.0:
        raise ValueError(f"{name} must lie in (0,1) (got {m})")


def v_th(theta, theta_hat, rho: float, c_v: float, area: float) -> float:
    """Thermal functional ``int rho c theta_hat [x - ln(1 + x)]``."""
    x, th = _ratio(theta, theta_hat)
    return float(np.sum(rho * c_v * th * (x - np.log1p(x))) * area)


def v_th_m(theta, theta_hat, rho: float, c_v: float, m: float, area: float) -> float:
    """Rescaled thermal functional ``int rho c theta_hat [x - ((1+x)^m - 1)/m]``."""
    _check_m(m)
    x, th = _ratio(theta, theta_hat)
    return float(np.sum(rho * c_v * th * (x - np.expm1(m * np.log1p(x)) / m)) * area)


def y_th_mn(theta, theta_hat, rho: float, c_v: float, m: float, n: float, area: float) -> float:
    """``V_th^m - V_th^n`` evaluated from its own integrand.

    Requires ``0 < n/2 < m < n < 1``.
    """
    _check_m(m)
    _check_m(n, "n")
    if not (m < n and m > n / 2.0):
        raise ValueError(f"(m, n) must satisfy n > m > n/2 (got m={m}, n={n})")
    x, th = _ratio(theta, theta_hat)
    L = np.log1p(x)
    return float(np.sum(rho * c_v * th * (np.expm1(n * L) / n - np.expm1(m * L) / m)) * area)


def kinetic_energy(u: np.ndarray, v: np.ndarray, rho: float, h: float) -> float:
    """``sum 1/2 rho |v|^2`` over staggered faces (trapezoid in the normal direction)."""
    wu = np.ones(u.shape[0])
    wu[[0, -1]] = 0.5
    wv = np.ones(v.shape[1])
    wv[[0, -1]] = 0.5
    s = np.sum(wu[:, None] * u * u) + np.sum(wv[None, :] * v * v)
    return float(0.5 * rho * s * h * h)


def psi1_integral(model: cm.ModelSpec, B: np.ndarray, area: float, lam: np.ndarray | None = None) -> float:
    """``sum psi1(B) h^2`` (no density factor)."""
    lam = cm.check_domain(model, B, lam)
    return float(np.sum(cm.psi1_from_eigs(model, lam)) * area)


def v_mech(
    u: np.ndarray,
    v: np.ndarray,
    B: np.ndarray,
    model: cm.ModelSpec,
    h: float,
    lam: np.ndarray | None = None,
) -> float:
    """Mechanical functional ``int rho psi1(B) + int 1/2 rho |v|^2``."""
    return model.rho * psi1_integral(model, B, h * h, lam) + kinetic_energy(u, v, model.rho, h)


def dvth_rhs_terms(
    theta: np.ndarray,
    theta_hat: np.ndarray,
    u: np.ndarray,
    v: np.ndarray,
    zeta: np.ndarray,
    h: float,
    rho: float,
    c_v: float,
    kappa: float,
    wall: dict[str, np.ndarray] | None = None,
) -> tuple[float, float, float]:
    """The three integrals whose sum is ``dV_th/dt``.

    Returns
    -------
    conduction : float
        ``-int kappa theta_hat |grad w|^2`` with ``w = ln(1 + x)`` (never positive).
    transport : float
        ``-int rho c w (v . grad theta_hat)`` (sign not known a priori).
    heating : float
        ``int (theta_tilde / theta) zeta_mech``.

    Gradients live on cell faces. On walls ``w = 0`` and the one-sided
    gradient ``-2 w / h`` is weighted by the half dual cell ``h^2 / 2``.
    ``wall`` supplies steady wall temperatures for those faces (defaults to
    the adjacent cell values).
    """
    x, th = _ratio(theta, theta_hat)
    w = np.log1p(x)
    area = h * h
    if wall is None:
        wall = {"left": th[0, :], "right": th[-1, :], "bottom": th[:, 0], "top": th[:, -1]}

    gx = (w[1:, :] - w[:-1, :]) / h
    gy = (w[:, 1:] - w[:, :-1]) / h
    thx = 0.5 * (th[1:, :] + th[:-1, :])
    thy = 0.5 * (th[:, 1:] + th[:, :-1])
    interior = np.sum(thx * gx * gx) + np.sum(thy * gy * gy)
    walls = (
        np.sum(wall["left"] * (2.0 * w[0, :] / h) ** 2)
        + np.sum(wall["right"] * (2.0 * w[-1, :] / h) ** 2)
        + np.sum(wall["bottom"] * (2.0 * w[:, 0] / h) ** 2)
        + np.sum(wall["top"] * (2.0 * w[:, -1] / h) ** 2)
    )
    conduction = -kappa * (interior * area + walls * 0.5 * area)

    # face-normal velocity times face-normal steady gradient, w averaged to faces
    dthx = (th[1:, :] - th[:-1, :]) / h
    dthy = (th[:, 1:] - th[:, :-1]) / h
    wx = 0.5 * (w[1:, :] + w[:-1, :])
    wy = 0.5 * (w[:, 1:] + w[:, :-1])
    transport = -rho * c_v * area * (np.sum(wx * u[1:-1, :] * dthx) + np.sum(wy * v[:, 1:-1] * dthy))

    heating = float(np.sum((theta - theta_hat) / theta * zeta) * area)
    return float(conduction), float(transport), heating
