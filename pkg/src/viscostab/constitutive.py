"""Constitutive models for viscoelastic rate-type fluids.

Six models share one interface: Oldroyd-B, Giesekus, FENE-P,
Johnson-Segalman and the exponential and linear Phan-Thien-Tanner models.
Each is described by

* the elastic free energy ``psi1(B)`` (per unit mass),
* its derivative ``dpsi1/dB``,
* the relaxation function ``f(B)`` that drives ``B`` back to ``I``,
* a constant ``C_f`` with ``psi1 <= C_f <dpsi1/dB, f>``.

Scalar quantities (``psi1`` and the dissipation pairing) are evaluated from
the eigenvalues of ``B``. This keeps logarithms guarded eigenvalue by
eigenvalue and makes nonnegativity hold up to roundoff in the *value*
rather than in a difference of large numbers. Tensor outputs that are
polynomial in ``B`` (``f``, ``B dpsi1/dB`` and the elastic stress) are
formed directly; ``dpsi1/dB`` itself needs ``B^{-1}`` and is evaluated
spectrally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from . import tensor_core as tc

FENEP_TRACE_MARGIN = 1e-9


class DomainError(ValueError):
    """A tensor argument lies outside the domain of a constitutive function."""


class ConfigError(ValueError):
    """Invalid model or run parameters; carries every violation found."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ModelKind(str, Enum):
    OLDROYD_B = "oldroyd-b"
    GIESEKUS = "giesekus"
    FENE_P = "fene-p"
    JOHNSON_SEGALMAN = "johnson-segalman"
    PTT_EXP = "ptt-exp"
    PTT_LINEAR = "ptt-linear"

    @classmethod
    def parse(cls, name: str) -> "ModelKind":
        key = name.strip().lower().replace("_", "-").replace(" ", "-")
        aliases = {
            "oldroydb": cls.OLDROYD_B,
            "ob": cls.OLDROYD_B,
            "fenep": cls.FENE_P,
            "js": cls.JOHNSON_SEGALMAN,
            "johnsonsegalman": cls.JOHNSON_SEGALMAN,
            "ptt": cls.PTT_EXP,
            "ptt-exponential": cls.PTT_EXP,
            "pttexp": cls.PTT_EXP,
            "pttlinear": cls.PTT_LINEAR,
        }
        if key in aliases:
            return aliases[key]
        for kind in cls:
            if kind.value == key:
                return kind
        valid = ", ".join(k.value for k in cls)
        raise ValueError(f"unknown model '{name}' (expected one of: {valid})")


# models whose Gordon-Schowalter slip is pinned to the upper convected derivative
FIXED_SLIP = (ModelKind.OLDROYD_B, ModelKind.GIESEKUS, ModelKind.FENE_P)


@dataclass(frozen=True)
class ViscosityLaw:
    """Temperature-dependent viscosity with declared bounds.

    ``kind == "constant"`` uses ``value``. ``kind == "bounded-exp"`` is
    ``base + amplitude * exp(-rate * theta / theta_ref)`` with infimum
    ``base`` and supremum ``base + amplitude`` over ``theta > 0``.
    """

    kind: str = "constant"
    value: float = 1.0
    base: float = 1.0
    amplitude: float = 0.0
    rate: float = 0.0
    theta_ref: float = 300.0

    def violations(self, name: str) -> list[str]:
        out = []
        if self.kind == "constant":
            if not self.value > 0:
                out.append(f"{name}.value must be positive (got {self.value})")
        elif self.kind == "bounded-exp":
            if not self.base > 0:
                out.append(f"{name}.base must be positive (got {self.base})")
            if not self.amplitude >= 0:
                out.append(f"{name}.amplitude must be nonnegative (got {self.amplitude})")
            if not self.rate >= 0:
                out.append(f"{name}.rate must be nonnegative (got {self.rate})")
            if not self.theta_ref > 0:
                out.append(f"{name}.theta_ref must be positive (got {self.theta_ref})")
        else:
            out.append(f"{name}.kind must be 'constant' or 'bounded-exp' (got '{self.kind}')")
        return out

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.kind == "constant":
            return np.full(theta.shape, self.value) if theta.shape else self.value
        return self.base + self.amplitude * np.exp(-self.rate * theta / self.theta_ref)

    @property
    def inf(self) -> float:
        return self.value if self.kind == "constant" else self.base

    @property
    def sup(self) -> float:
        return self.value if self.kind == "constant" else self.base + self.amplitude

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant" or self.amplitude == 0.0


@dataclass(frozen=True)
class ThermalSpec:
    """Reference heat capacity, conductivity and temperature (SI units)."""

    c_v: float = 1.0
    kappa: float = 1.0
    theta_ref: float = 300.0

    def __post_init__(self):
        bad = [
            f"thermal.{k} must be positive (got {getattr(self, k)})"
            for k in ("c_v", "kappa", "theta_ref")
            if not getattr(self, k) > 0
        ]
        if bad:
            raise ConfigError(bad)


@dataclass(frozen=True)
class ModelSpec:
    """One constitutive model with its parameters.

    Parameters
    ----------
    kind : ModelKind
        Model selector.
    mu : float
        Elastic modulus [Pa].
    rho : float
        Mass density [kg/m^3].
    a : float
        Gordon-Schowalter slip parameter in ``[-1, 1]``. Fixed to 1 for
        Oldroyd-B, Giesekus and FENE-P.
    alpha : float
        Giesekus mobility, ``0 < alpha < 1``.
    b : float
        FENE-P extensibility, ``b > 3``.
    p : float
        PTT parameter, ``p > 0`` (``p <= 1/3`` for the linear variant).
    nu, nu1 : ViscosityLaw
        Shear viscosity and relaxation viscosity laws.
    """

    kind: ModelKind = ModelKind.OLDROYD_B
    mu: float = 1.0
    rho: float = 1.0
    a: float = 1.0
    alpha: float = 0.5
    b: float = 10.0
    p: float = 0.1
    nu: ViscosityLaw = field(default_factory=ViscosityLaw)
    nu1: ViscosityLaw = field(default_factory=ViscosityLaw)

    def __post_init__(self):
        if isinstance(self.kind, str) and not isinstance(self.kind, ModelKind):
            object.__setattr__(self, "kind", ModelKind.parse(self.kind))
        bad = self.violations()
        if bad:
            raise ConfigError(bad)

    def violations(self) -> list[str]:
        out = []
        if not self.mu > 0:
            out.append(f"mu must be positive (got {self.mu})")
        if not self.rho > 0:
            out.append(f"rho must be positive (got {self.rho})")
        if self.kind in FIXED_SLIP:
            if self.a != 1.0:
                out.append(f"a is fixed to 1 for {self.kind.value} (got {self.a})")
        elif not -1.0 <= self.a <= 1.0:
            out.append(f"a must lie in [-1,1] (got {self.a})")
        if self.kind is ModelKind.GIESEKUS and not 0.0 < self.alpha < 1.0:
            out.append(f"alpha must lie in (0,1) (got {self.alpha})")
        if self.kind is ModelKind.FENE_P and not self.b > 3.0:
            out.append(f"b must exceed 3 (got {self.b})")
        if self.kind is ModelKind.PTT_EXP and not self.p > 0.0:
            out.append(f"p must be positive (got {self.p})")
        if self.kind is ModelKind.PTT_LINEAR and not 0.0 < self.p <= 1.0 / 3.0:
            out.append(f"p must lie in (0,1/3] for ptt-linear (got {self.p})")
        out += self.nu.violations("nu")
        out += self.nu1.violations("nu1")
        return out

    @property
    def scale(self) -> float:
        """The prefactor ``mu / (2 rho)`` shared by every free energy."""
        return self.mu / (2.0 * self.rho)

    @property
    def label(self) -> str:
        k = self.kind
        if k is ModelKind.GIESEKUS:
            return f"giesekus(alpha={self.alpha:g})"
        if k is ModelKind.FENE_P:
            return f"fene-p(b={self.b:g})"
        if k is ModelKind.JOHNSON_SEGALMAN:
            return f"johnson-segalman(a={self.a:g})"
        if k in (ModelKind.PTT_EXP, ModelKind.PTT_LINEAR):
            return f"{k.value}(p={self.p:g},a={self.a:g})"
        return k.value


# ---------------------------------------------------------------- domain checks


def _as_tensor(B) -> np.ndarray:
    B = np.asarray(B, dtype=float)
    if B.shape[-2:] != (3, 3):
        raise ValueError(f"expected (..., 3, 3) tensors, got shape {B.shape}")
    return tc.symmetrize(B)


def fenep_trace_limit(b: float) -> float:
    return b * (1.0 - FENEP_TRACE_MARGIN)


def check_domain(m: ModelSpec, B, lam: np.ndarray | None = None) -> np.ndarray:
    """Validate ``B`` against the model domain; return its eigenvalues."""
    if lam is None:
        lam = tc.eigvals(B)
    if not np.all(lam[..., 0] > tc.SPD_RTOL * np.maximum(1.0, lam[..., -1])):
        raise DomainError(f"B must be symmetric positive definite (min eigenvalue {np.min(lam[..., 0]):.3e})")
    if m.kind is ModelKind.FENE_P:
        tr = lam.sum(axis=-1)
        limit = fenep_trace_limit(m.b)
        if np.any(tr > limit):
            raise DomainError(
                f"FENE-P requires Tr B < b (Tr B <= {limit:.12g} for b = {m.b:g}); got Tr B = {np.max(tr):.12g}"
            )
    return lam


# ---------------------------------------------------- eigenvalue-level kernels


def _ob_energy(lam: np.ndarray) -> np.ndarray:
    d = lam - 1.0
    return (d - np.log1p(d)).sum(axis=-1)


def _neg_log1m_minus(x: np.ndarray) -> np.ndarray:
    """``-log(1 - x) - x``, nonnegative for ``x < 1``."""
    return -np.log1p(-x) - x


def psi1_from_eigs(m: ModelSpec, lam: np.ndarray) -> np.ndarray:
    """``psi1`` evaluated on eigenvalue triples ``(..., 3)`` (no domain check)."""
    if m.kind is ModelKind.FENE_P:
        c = 1.0 - 3.0 / m.b
        d = lam - 1.0
        s = d.sum(axis=-1)
        # -b ln(1 - TrB/b) + b ln c - (1/c) ln det B split into two nonnegative parts
        trace_part = m.b * _neg_log1m_minus(s / (m.b - 3.0))
        det_part = (d - np.log1p(d)).sum(axis=-1) / c
        return m.scale * (trace_part + det_part)
    return m.scale * _ob_energy(lam)


def dpsi1_eigs(m: ModelSpec, lam: np.ndarray) -> np.ndarray:
    """Eigenvalues of ``dpsi1/dB`` (same eigenvectors as ``B``)."""
    if m.kind is ModelKind.FENE_P:
        c = 1.0 - 3.0 / m.b
        z = 1.0 - lam.sum(axis=-1, keepdims=True) / m.b
        return m.scale * (1.0 / z - 1.0 / (c * lam))
    return m.scale * (1.0 - 1.0 / lam)


def relax_eigs(m: ModelSpec, lam: np.ndarray) -> np.ndarray:
    """Eigenvalues of ``f(B)``."""
    d = lam - 1.0
    k = m.kind
    if k in (ModelKind.OLDROYD_B, ModelKind.JOHNSON_SEGALMAN):
        return d
    if k is ModelKind.GIESEKUS:
        return d * (m.alpha * lam + 1.0 - m.alpha)
    if k is ModelKind.FENE_P:
        c = 1.0 - 3.0 / m.b
        z = 1.0 - lam.sum(axis=-1, keepdims=True) / m.b
        return lam / z - 1.0 / c
    tr = d.sum(axis=-1, keepdims=True)
    if k is ModelKind.PTT_EXP:
        return np.exp(m.p * tr) * d
    return (1.0 + m.p * tr) * d


def pairing_from_eigs(m: ModelSpec, lam: np.ndarray) -> np.ndarray:
    """``<dpsi1/dB, f(B)>`` from eigenvalues, written in manifestly nonnegative form."""
    d = lam - 1.0
    k = m.kind
    g = d * d / lam
    if k in (ModelKind.OLDROYD_B, ModelKind.JOHNSON_SEGALMAN):
        return m.scale * g.sum(axis=-1)
    if k is ModelKind.GIESEKUS:
        return m.scale * (g * (m.alpha * lam + 1.0 - m.alpha)).sum(axis=-1)
    if k is ModelKind.FENE_P:
        c = 1.0 - 3.0 / m.b
        z = 1.0 - lam.sum(axis=-1, keepdims=True) / m.b
        return m.scale * ((lam / z - 1.0 / c) ** 2 / lam).sum(axis=-1)
    tr = d.sum(axis=-1)
    if k is ModelKind.PTT_EXP:
        return m.scale * np.exp(m.p * tr) * g.sum(axis=-1)
    return m.scale * (1.0 + m.p * tr) * g.sum(axis=-1)


# ------------------------------------------------------------ public tensor API


def psi1(m: ModelSpec, B) -> np.ndarray:
    """Elastic specific free energy ``psi1(B)`` [J/kg].

    Nonnegative, zero exactly at ``B = I``. Broadcasts over leading axes.
    """
    B = _as_tensor(B)
    lam = check_domain(m, B)
    return psi1_from_eigs(m, lam)


def dpsi1_dB(m: ModelSpec, B) -> np.ndarray:
    """Derivative of ``psi1`` with respect to ``B`` (symmetric, commutes with ``B``)."""
    B = _as_tensor(B)
    lam = check_domain(m, B)
    # isotropic part added exactly; only B^{-1} goes through the eigenbasis
    binv = tc.spectral_apply(B, np.reciprocal)
    if m.kind is ModelKind.FENE_P:
        c = 1.0 - 3.0 / m.b
        z = 1.0 - lam.sum(axis=-1) / m.b
        return m.scale * (tc.IDENTITY / z[..., None, None] - binv / c)
    return m.scale * (tc.IDENTITY - binv)


def b_dpsi1(m: ModelSpec, B, check: bool = True) -> np.ndarray:
    """``B dpsi1/dB`` in closed polynomial form (no inverse needed)."""
    B = _as_tensor(B)
    if check:
        check_domain(m, B)
    if m.kind is ModelKind.FENE_P:
        c = 1.0 - 3.0 / m.b
        z = 1.0 - tc.trace(B) / m.b
        return m.scale * (B / z[..., None, None] - tc.IDENTITY / c)
    return m.scale * (B - tc.IDENTITY)


def relax_f(m: ModelSpec, B, check: bool = True) -> np.ndarray:
    """Relaxation function ``f(B)``; zero exactly at ``B = I``."""
    B = _as_tensor(B)
    if check:
        check_domain(m, B)
    d = B - tc.IDENTITY
    k = m.kind
    if k in (ModelKind.OLDROYD_B, ModelKind.JOHNSON_SEGALMAN):
        return d
    if k is ModelKind.GIESEKUS:
        return tc.symmetrize(tc.matmul(d, m.alpha * B + (1.0 - m.alpha) * tc.IDENTITY))
    if k is ModelKind.FENE_P:
        c = 1.0 - 3.0 / m.b
        z = 1.0 - tc.trace(B) / m.b
        return B / z[..., None, None] - tc.IDENTITY / c
    tr = tc.trace(d)[..., None, None]
    if k is ModelKind.PTT_EXP:
        return np.exp(m.p * tr) * d
    return (1.0 + m.p * tr) * d


def dissipation_pairing(m: ModelSpec, B) -> np.ndarray:
    """``<dpsi1/dB, f(B)>`` (nonnegative)."""
    B = _as_tensor(B)
    lam = check_domain(m, B)
    return pairing_from_eigs(m, lam)


def elastic_stress(m: ModelSpec, B, check: bool = True) -> np.ndarray:
    """Deviatoric elastic Cauchy stress ``2 rho a dev(B dpsi1/dB)`` [Pa]."""
    return 2.0 * m.rho * m.a * tc.dev(b_dpsi1(m, B, check=check))


def zeta_mech(m: ModelSpec, D, B, theta) -> np.ndarray:
    """Mechanical entropy production ``2 nu D:D + rho (mu/nu1) <dpsi1/dB, f>``.

    Despite the name this is the dissipated power density [W/m^3] that
    appears as the heating source of the temperature equation.
    """
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0):
        raise DomainError("temperature must be positive")
    D = np.asarray(D, dtype=float)
    viscous = 2.0 * m.nu(theta) * tc.frob_inner(D, D)
    elastic = m.rho * m.mu / m.nu1(theta) * dissipation_pairing(m, B)
    return viscous + elastic


class DerivedConstant(float):
    """A float flagged as derived by this package rather than quoted."""

    derived = True


def cf_model(m: ModelSpec) -> float:
    """Stability constant ``C_f`` with ``psi1 <= C_f <dpsi1/dB, f>``.

    For the linear PTT variant no published constant is available; the
    returned value is the analytic bound ``1 / (1 - 3 p)`` derived here
    (wrapped in :class:`DerivedConstant`). It is infinite at ``p = 1/3``
    where no finite constant exists.
    """
    k = m.kind
    if k in (ModelKind.OLDROYD_B, ModelKind.JOHNSON_SEGALMAN):
        return 1.0
    if k is ModelKind.GIESEKUS:
        return 1.0 / (1.0 - m.alpha)
    if k is ModelKind.FENE_P:
        return 1.0 - 3.0 / m.b
    if k is ModelKind.PTT_EXP:
        return math.exp(3.0 * m.p)
    return DerivedConstant(math.inf if m.p >= 1.0 / 3.0 else 1.0 / (1.0 - 3.0 * m.p))


# -------------------------------------------------------------- scalar catalog


def _check_positive(x, name="x"):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError(f"{name} must be positive")
    return x


def scalar_f(x, stable: bool = True):
    """``x - 1 - ln x``."""
    x = _check_positive(x)
    if stable:
        d = x - 1.0
        return d - np.log1p(d)
    return x - 1.0 - np.log(x)


def scalar_g(x, stable: bool = True):
    """``x - 2 + 1/x``."""
    x = _check_positive(x)
    if stable:
        return (x - 1.0) ** 2 / x
    return x - 2.0 + 1.0 / x


def scalar_h(x, stable: bool = True):
    """``1/x + ln x - 1``."""
    x = _check_positive(x)
    if stable:
        return scalar_f(1.0 / x)
    return 1.0 / x + np.log(x) - 1.0


def scalar_g_alpha(x, alpha: float, stable: bool = True):
    """``alpha x^2 + (1 - 3 alpha) x - (2 - 3 alpha) + (1 - alpha)/x``."""
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0,1)")
    x = _check_positive(x)
    if stable:
        return (x - 1.0) ** 2 * (alpha * x + 1.0 - alpha) / x
    return alpha * x**2 + (1.0 - 3.0 * alpha) * x - (2.0 - 3.0 * alpha) + (1.0 - alpha) / x


def scalar_f_rs(x, r: float, s: float, stable: bool = True):
    """``r (x^{1/r} - 1) - s (x^{1/s} - 1)`` for ``r > 0 > s``."""
    if not (r > 0.0 and s < 0.0):
        raise DomainError("f_(r,s) requires r > 0 and s < 0")
    x = _check_positive(x)
    if stable:
        L = np.log(x)
        return r * (np.expm1(L / r) - L / r) - s * (np.expm1(L / s) - L / s)
    return r * (x ** (1.0 / r) - 1.0) - s * (x ** (1.0 / s) - 1.0)


def scalar_f_b(eps, b: float, stable: bool = True):
    """The FENE-P trace function ``f_b(eps)`` on ``0 < eps < 1``; root at ``eps = 3/b``."""
    if not b > 3.0:
        raise DomainError("b must exceed 3")
    eps = np.asarray(eps, dtype=float)
    if np.any(~((eps > 0.0) & (eps < 1.0))):
        raise DomainError("eps must lie in (0,1)")
    c = 1.0 - 3.0 / b
    if stable:
        # f_b = b [ (t - 1)^2 / c + (t - 1 - ln t) ] with t = c / (1 - eps)
        t = c / (1.0 - eps)
        return b * ((t - 1.0) ** 2 / c + scalar_f(t))
    return (
        c * eps * b / (1.0 - eps) ** 2
        - 6.0 / (1.0 - eps)
        + b * np.log(1.0 - eps)
        - b * np.log(c)
        + 3.0 / c
    )


def scalar_f_b_prime(eps, b: float):
    """Derivative of :func:`scalar_f_b` with respect to ``eps``."""
    c = 1.0 - 3.0 / b
    eps = np.asarray(eps, dtype=float)
    u = 1.0 / (1.0 - eps)
    return c * b * (u**2 + 2.0 * eps * u**3) - 6.0 * u**2 - b * u


SCALAR_CATALOG: dict[str, Callable] = {
    "f": scalar_f,
    "g": scalar_g,
    "h": scalar_h,
    "g_alpha": scalar_g_alpha,
    "f_rs": scalar_f_rs,
    "f_b": scalar_f_b,
}


def scalar_root(name: str, **params) -> float:
    """Analytic root of a catalog function."""
    if name == "f_b":
        return 3.0 / params["b"]
    if name in SCALAR_CATALOG:
        return 1.0
    raise KeyError(name)


def scalar_catalog(name: str, x, stable: bool = True, **params):
    """Evaluate a named scalar inequality function.

    Parameters
    ----------
    name : {"f", "g", "h", "g_alpha", "f_rs", "f_b"}
    x : array_like
        Argument (``eps`` for ``f_b``).
    stable : bool
        Use the cancellation-free rearrangement (default) or the literal
        textbook expression.
    **params
        ``alpha`` for ``g_alpha``; ``r, s`` for ``f_rs``; ``b`` for ``f_b``.
    """
    try:
        fn = SCALAR_CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown scalar function '{name}' (known: {sorted(SCALAR_CATALOG)})") from None
    return fn(x, stable=stable, **params)
