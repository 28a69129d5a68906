"""Perturbed viscoelastic flow in a closed rectangular vessel.

The solver integrates incompressible momentum with viscous and elastic
stresses, the Gordon-Schowalter evolution of the conformation tensor ``B``
and the temperature equation with dissipative heating. It runs on a MAC
grid with explicit Euler steps and an exact pressure projection.

Layout
------
``u`` lives on x-faces ``(nx+1, ny)``, ``v`` on y-faces ``(nx, ny+1)``;
``p``, ``B`` (``(nx, ny, 3, 3)``) and ``theta`` live at cell centres. Wall
faces carry zero normal velocity. Tangential no-slip is imposed by odd
ghost values, which enter only through velocity gradients at wall nodes.

Energy structure
----------------
The discrete velocity gradient at cells is a linear map ``G``. The elastic
force is exactly ``-G^T tau``, so the work done on the fluid cancels the
stored-energy production ``2 rho a <B dpsi1/dB, D>`` term by term. The
viscous force is the gradient of the quadratic dissipation
``Phi = sum 2 nu (Dxx^2 + Dyy^2) h^2 + sum_nodes w 4 nu Dxy^2 h^2`` with
trapezoid node weights ``w``. The per-cell heating sums to ``Phi``
exactly, so the mechanical budget closes up to the ``O(dt)`` explicit
Euler defect and the numerical diffusion of upwind transport.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import constitutive as cm
from . import functionals as fn
from . import tensor_core as tc
from .steady_state import BoundarySpec, Grid2D, SteadyState, dirichlet_operator, solve_steady_heat

SPD_FLOOR = 1e-12
DIVERGENCE_ABORT = 1e-6
VELOCITY_MODES = ("sin", "sin2")


class SimulationAborted(RuntimeError):
    """A step left the admissible state space.

    Attributes
    ----------
    reason : str
        Short tag: ``spd``, ``fene-p-trace``, ``temperature``, ``divergence``
        or ``cfl``.
    t : float
        Time of the offending state.
    snapshot : SimState
        The offending state, for post-mortem output.
    """

    def __init__(self, reason: str, message: str, t: float, snapshot: "SimState"):
        super().__init__(f"{message} at t = {t:.6g} s")
        self.reason = reason
        self.t = t
        self.snapshot = snapshot


@dataclass(frozen=True)
class Perturbation:
    """Initial departure from the steady state.

    Parameters
    ----------
    velocity : float
        Peak face speed [m/s] of the stream-function mode.
    mode : str
        ``"sin2"`` uses ``sin^2(pi x) sin^2(pi y)`` (tangential velocity
        vanishes at walls); ``"sin"`` uses ``sin(pi x) sin(pi y)``.
    conformation : float
        ``eps`` in ``B = I + eps diag(1, -1/2, -1/2) sin(pi x) sin(pi y)``.
    temperature : float
        Amplitude [K] of ``theta - theta_hat = dT sin(pi x) sin(pi y)``.
    """

    velocity: float = 0.1
    mode: str = "sin2"
    conformation: float = 0.1
    temperature: float = 5.0

    def violations(self) -> list[str]:
        out = []
        if self.mode not in VELOCITY_MODES:
            out.append(f"perturbation.mode must be one of {VELOCITY_MODES} (got '{self.mode}')")
        if not self.velocity >= 0:
            out.append(f"perturbation.velocity must be nonnegative (got {self.velocity})")
        if not -1.0 < self.conformation < 2.0:
            out.append(f"perturbation.conformation must lie in (-1, 2) to keep B SPD (got {self.conformation})")
        return out


@dataclass(frozen=True)
class SimConfig:
    """Complete description of one run.

    ``dt = 0`` selects half of the stability bound (see
    :func:`stability_bound`). ``output_every`` is the sampling cadence in
    steps; the final step is always sampled.
    """

    grid: Grid2D = field(default_factory=Grid2D)
    model: cm.ModelSpec = field(default_factory=cm.ModelSpec)
    thermal: cm.ThermalSpec = field(default_factory=cm.ThermalSpec)
    boundary: BoundarySpec = field(default_factory=BoundarySpec)
    dt: float = 0.0
    t_end: float = 5.0
    output_every: int = 100
    perturbation: Perturbation = field(default_factory=Perturbation)
    m_values: tuple[float, ...] = (0.5,)
    mn_pairs: tuple[tuple[float, float], ...] = ((0.35, 0.6),)
    allow_clipping: bool = False

    def violations(self) -> list[str]:
        out = list(self.perturbation.violations())
        out += self.boundary.violations(self.grid)
        if not self.t_end > 0:
            out.append(f"run.t_end must be positive (got {self.t_end})")
        if not (isinstance(self.output_every, int) and self.output_every >= 1):
            out.append(f"run.output_every must be a positive integer (got {self.output_every})")
        if not self.dt >= 0:
            out.append(f"run.dt must be nonnegative (got {self.dt})")
        elif self.dt > 0:
            bound = stability_bound(self)
            if self.dt > bound:
                out.append(f"run.dt = {self.dt:.6g} exceeds the stability bound {bound:.6g}")
        for m in self.m_values:
            if not 0.0 < m < 1.0:
                out.append(f"functionals.m must lie in (0,1) (got {m})")
        for m, n in self.mn_pairs:
            if not (0.0 < m < n < 1.0 and m > n / 2.0):
                out.append(f"functionals.mn pair ({m}, {n}) must satisfy n > m > n/2")
        return out

    def validate(self) -> "SimConfig":
        bad = self.violations()
        if bad:
            raise cm.ConfigError(bad)
        return self

    @property
    def time_step(self) -> float:
        """The step actually taken: ``t_end / n_steps`` with ``n_steps`` from the nominal step."""
        nominal = self.dt if self.dt > 0 else 0.5 * stability_bound(self)
        return self.t_end / self.n_steps(nominal)

    def n_steps(self, nominal: float | None = None) -> int:
        if nominal is None:
            nominal = self.dt if self.dt > 0 else 0.5 * stability_bound(self)
        return max(1, math.ceil(self.t_end / nominal - 1e-9))


def stability_bound(config: SimConfig) -> float:
    """``0.25 min(h^2 rho/nu_max, h^2 rho c/kappa, 0.5 nu1_min/mu, 0.5 h/|v|_max)``.

    ``|v|_max`` is the configured peak perturbation speed.
    """
    g, m, th = config.grid, config.model, config.thermal
    h = g.h
    terms = [
        h * h * m.rho / m.nu.sup,
        h * h * m.rho * th.c_v / th.kappa,
        0.5 * m.nu1.inf / m.mu,
    ]
    if config.perturbation.velocity > 0:
        terms.append(0.5 * h / config.perturbation.velocity)
    return 0.25 * min(terms)


@dataclass
class SimState:
    """Fields at time ``t``."""

    u: np.ndarray
    v: np.ndarray
    p: np.ndarray
    B: np.ndarray
    theta: np.ndarray
    t: float = 0.0
    step: int = 0

    def copy(self) -> "SimState":
        return SimState(self.u.copy(), self.v.copy(), self.p.copy(), self.B.copy(), self.theta.copy(), self.t, self.step)


# ------------------------------------------------------------------ operators


def _diff(n: int) -> sp.csr_matrix:
    """``(n, n+1)`` forward difference."""
    return sp.diags([-np.ones(n), np.ones(n)], [0, 1], shape=(n, n + 1), format="csr")


def _ghost_diff(n: int) -> sp.csr_matrix:
    """``(n+1, n)`` difference from ``n`` values to ``n+1`` nodes with odd ghosts."""
    d = sp.lil_matrix((n + 1, n))
    d[0, 0] = 2.0
    for j in range(1, n):
        d[j, j] = 1.0
        d[j, j - 1] = -1.0
    d[n, n - 1] = -2.0
    return d.tocsr()


def _avg(n: int) -> sp.csr_matrix:
    """``(n, n+1)`` midpoint average."""
    return sp.diags([0.5 * np.ones(n), 0.5 * np.ones(n)], [0, 1], shape=(n, n + 1), format="csr")


def _cell_to_node(n: int) -> sp.csr_matrix:
    """``(n+1, n)`` average of adjacent cells (one cell at the ends)."""
    d = sp.lil_matrix((n + 1, n))
    d[0, 0] = 1.0
    d[n, n - 1] = 1.0
    for j in range(1, n):
        d[j, j - 1] = d[j, j] = 0.5
    return d.tocsr()


class Operators:
    """Sparse discrete operators of one grid, acting on interior faces.

    The velocity unknown ``U`` stacks the interior x-faces ``u[1:-1, :]``
    and interior y-faces ``v[:, 1:-1]`` in C order.
    """

    def __init__(self, grid: Grid2D):
        nx, ny, h = grid.nx, grid.ny, grid.h
        self.grid = grid
        self.h = h
        Inx, Iny = sp.identity(nx), sp.identity(ny)
        # selection of interior faces from full face arrays
        su = sp.kron(sp.identity(nx + 1, format="csr")[1:-1], Iny)
        sv = sp.kron(Inx, sp.identity(ny + 1, format="csr")[1:-1])
        self.nu_int = (nx - 1) * ny
        self.nv_int = nx * (ny - 1)
        Pu = su.T.tocsr()  # interior u -> full u
        Pv = sv.T.tocsr()
        Zu = sp.csr_matrix((Pu.shape[0], self.nv_int))
        Zv = sp.csr_matrix((Pv.shape[0], self.nu_int))
        self.to_u = sp.hstack([Pu, Zu]).tocsr()
        self.to_v = sp.hstack([Zv, Pv]).tocsr()

        dudx_full = sp.kron(_diff(nx), Iny) / h
        dvdy_full = sp.kron(Inx, _diff(ny)) / h
        dudy_node_full = sp.kron(sp.identity(nx + 1), _ghost_diff(ny)) / h
        dvdx_node_full = sp.kron(_ghost_diff(nx), sp.identity(ny + 1)) / h
        node_to_cell = sp.kron(_avg(nx), _avg(ny))

        self.dudx = (dudx_full @ self.to_u).tocsr()
        self.dvdy = (dvdy_full @ self.to_v).tocsr()
        self.dudy_n = (dudy_node_full @ self.to_u).tocsr()
        self.dvdx_n = (dvdx_node_full @ self.to_v).tocsr()
        self.node_to_cell = node_to_cell.tocsr()
        self.cell_to_node = sp.kron(_cell_to_node(nx), _cell_to_node(ny)).tocsr()
        self.dudy = (node_to_cell @ self.dudy_n).tocsr()
        self.dvdx = (node_to_cell @ self.dvdx_n).tocsr()
        self.dxy_n = (0.5 * (self.dudy_n + self.dvdx_n)).tocsr()
        # transposes cached for the force evaluations
        self.dudx_T = self.dudx.T.tocsr()
        self.dvdy_T = self.dvdy.T.tocsr()
        self.dudy_T = self.dudy.T.tocsr()
        self.dvdx_T = self.dvdx.T.tocsr()
        self.dxy_n_T = self.dxy_n.T.tocsr()

        wx = np.ones(nx + 1)
        wx[[0, -1]] = 0.5
        wy = np.ones(ny + 1)
        wy[[0, -1]] = 0.5
        self.node_weight = np.outer(wx, wy).ravel()

        self.div = (sp.hstack([sp.kron(_diff(nx), Iny) @ Pu, sp.kron(Inx, _diff(ny)) @ Pv]) / h).tocsr()
        self.div_T = self.div.T.tocsr()
        lap = (self.div @ self.div_T).tocsc()
        # pin the first cell: the operator is singular on constants
        lap = lap.tolil()
        lap[0, :] = 0.0
        lap[:, 0] = 0.0
        lap[0, 0] = 1.0
        self._lu = splu(lap.tocsc())
        self.heat = dirichlet_operator(grid)

    # packing -------------------------------------------------------------
    def pack(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.concatenate([u[1:-1, :].ravel(), v[:, 1:-1].ravel()])

    def unpack(self, U: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        g = self.grid
        u = np.zeros((g.nx + 1, g.ny))
        v = np.zeros((g.nx, g.ny + 1))
        u[1:-1, :] = U[: self.nu_int].reshape(g.nx - 1, g.ny)
        v[:, 1:-1] = U[self.nu_int :].reshape(g.nx, g.ny - 1)
        return u, v

    # projection ----------------------------------------------------------
    def project(self, U: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Orthogonal projection onto discretely divergence-free fields.

        Returns the projected field and the potential ``phi`` with
        ``U_out = U - div^T phi``.
        """
        rhs = self.div @ U
        rhs[0] = 0.0
        phi = self._lu.solve(rhs)
        return U - self.div_T @ phi, phi

    def gradient(self, U: np.ndarray) -> np.ndarray:
        """Cell velocity gradient ``L[..., i, j] = d v_i / d x_j`` as 3x3 tensors."""
        g = self.grid
        L = np.zeros((g.nx * g.ny, 3, 3))
        L[:, 0, 0] = self.dudx @ U
        L[:, 0, 1] = self.dudy @ U
        L[:, 1, 0] = self.dvdx @ U
        L[:, 1, 1] = self.dvdy @ U
        return L.reshape(g.nx, g.ny, 3, 3)

    def stress_force(self, tau: np.ndarray) -> np.ndarray:
        """``-G^T tau``: the adjoint of :meth:`gradient` applied to a cell stress."""
        t = tau.reshape(-1, 3, 3)
        return -(
            self.dudx_T @ t[:, 0, 0]
            + self.dudy_T @ t[:, 0, 1]
            + self.dvdx_T @ t[:, 1, 0]
            + self.dvdy_T @ t[:, 1, 1]
        )


# --------------------------------------------------------------- discrete pieces


def _upwind(phi: np.ndarray, u: np.ndarray, v: np.ndarray, h: float) -> np.ndarray:
    """First-order upwind ``(v . grad) phi`` in advective form on cell fields.

    Each cell differences against the neighbour across every face whose
    velocity points into the cell. Wall faces carry no velocity, so no ghost
    values are needed. Trailing axes of ``phi`` are carried along.
    """
    extra = (slice(None),) * 2 + (None,) * (phi.ndim - 2)
    out = np.zeros_like(phi)
    uf = u[1:-1, :][extra]
    dx = phi[1:] - phi[:-1]
    out[1:] += np.maximum(uf, 0.0) * dx
    out[:-1] += np.minimum(uf, 0.0) * dx
    vf = v[:, 1:-1][extra]
    dy = phi[:, 1:] - phi[:, :-1]
    out[:, 1:] += np.maximum(vf, 0.0) * dy
    out[:, :-1] += np.minimum(vf, 0.0) * dy
    return out / h


def _momentum_advection(u: np.ndarray, v: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Conservative centred ``div(v v)`` at interior faces."""
    uc = 0.5 * (u[:-1] + u[1:])
    vc = 0.5 * (v[:, :-1] + v[:, 1:])
    up = np.concatenate([-u[:, :1], u, -u[:, -1:]], axis=1)
    vp = np.concatenate([-v[:1], v, -v[-1:]], axis=0)
    uv = 0.5 * (up[:, 1:] + up[:, :-1]) * 0.5 * (vp[1:] + vp[:-1])  # nodes (nx+1, ny+1)
    au = (uc[1:] ** 2 - uc[:-1] ** 2) / h + (uv[1:-1, 1:] - uv[1:-1, :-1]) / h
    av = (vc[:, 1:] ** 2 - vc[:, :-1] ** 2) / h + (uv[1:, 1:-1] - uv[:-1, 1:-1]) / h
    return au, av


@dataclass
class Diagnostics:
    """Quantities evaluated on one state (before it is advanced)."""

    lam: np.ndarray
    U: np.ndarray
    L: np.ndarray
    zeta: np.ndarray
    v_mech: float
    v_th: float
    zeta_int: float
    kinetic_sq: float
    psi_int: float
    max_speed: float
    div_abs: float
    div_rel: float
    nu_c: np.ndarray
    nu_n: np.ndarray
    dxx: np.ndarray
    dyy: np.ndarray
    dxy_n: np.ndarray


class Solver:
    """Operators, steady state and bookkeeping for one configuration."""

    def __init__(self, config: SimConfig, steady: SteadyState | None = None):
        self.config = config.validate()
        self.grid = config.grid
        self.ops = Operators(config.grid)
        if steady is None:
            steady = solve_steady_heat(config.grid, config.boundary, config.thermal.kappa, tol=1e-12)
        self.steady = steady
        self.theta_hat = steady.theta
        self.wall = config.boundary.edge_values(config.grid)
        self.dt = config.time_step
        self.clipped = False

    # ---------------------------------------------------------------- state
    def initial_state(self) -> SimState:
        g, pert, model = self.grid, self.config.perturbation, self.config.model
        h = g.h
        xn = np.arange(g.nx + 1) * h / g.lx
        yn = np.arange(g.ny + 1) * h / g.ly
        sx, sy = np.sin(np.pi * xn), np.sin(np.pi * yn)
        sx[[0, -1]] = 0.0
        sy[[0, -1]] = 0.0
        if pert.mode == "sin2":
            sx, sy = sx * sx, sy * sy
        psi = np.outer(sx, sy)
        u = (psi[:, 1:] - psi[:, :-1]) / h
        v = -(psi[1:, :] - psi[:-1, :]) / h
        peak = max(np.abs(u).max(), np.abs(v).max())
        scale = pert.velocity / peak if peak > 0 else 0.0
        u, v = u * scale, v * scale

        X, Y = g.centers()
        bump = np.sin(np.pi * X / g.lx) * np.sin(np.pi * Y / g.ly)
        B = np.broadcast_to(tc.IDENTITY, g.shape + (3, 3)).copy()
        shape = np.array([1.0, -0.5, -0.5])
        for k in range(3):
            B[..., k, k] += pert.conformation * shape[k] * bump
        theta = self.theta_hat + pert.temperature * bump
        state = SimState(u, v, np.zeros(g.shape), B, theta, 0.0, 0)
        try:
            cm.check_domain(model, B)
        except cm.DomainError as exc:
            raise cm.ConfigError([f"perturbation.conformation: {exc}"]) from None
        if np.any(theta <= 0):
            raise cm.ConfigError(["perturbation.temperature makes the absolute temperature nonpositive"])
        return state

    # ---------------------------------------------------------- diagnostics
    def diagnose(self, s: SimState) -> Diagnostics:
        cfg, ops, g = self.config, self.ops, self.grid
        model, th = cfg.model, cfg.thermal
        h, area = g.h, g.cell_area

        if np.any(~(s.theta > 0)):
            raise SimulationAborted("temperature", f"temperature fell to {np.min(s.theta):.6g} K", s.t, s)
        lam = tc.eigvals(s.B)
        if np.min(lam[..., 0]) < SPD_FLOOR:
            if cfg.allow_clipping:
                s.B = tc.spectral_apply(s.B, lambda w: np.maximum(w, SPD_FLOOR))
                lam = tc.eigvals(s.B)
                self.clipped = True
            else:
                raise SimulationAborted("spd", f"B lost positive definiteness (min eigenvalue {np.min(lam[..., 0]):.3e})", s.t, s)
        if model.kind is cm.ModelKind.FENE_P:
            tr = lam.sum(axis=-1)
            if np.max(tr) >= cm.fenep_trace_limit(model.b):
                raise SimulationAborted("fene-p-trace", f"Tr B reached {np.max(tr):.12g} (b = {model.b:g})", s.t, s)

        U = ops.pack(s.u, s.v)
        div = ops.div @ U
        max_speed = float(np.max(np.abs(U))) if U.size else 0.0
        div_abs = float(np.max(np.abs(div)))
        div_rel = div_abs * h / max_speed if max_speed > 0 else 0.0
        if div_rel > DIVERGENCE_ABORT:
            raise SimulationAborted("divergence", f"divergence residual {div_rel:.3e} (relative)", s.t, s)
        if max_speed * self.dt > 0.5 * h:
            raise SimulationAborted("cfl", f"advective CFL exceeded (max speed {max_speed:.3e} m/s)", s.t, s)

        theta_flat = s.theta.ravel()
        nu_c = np.broadcast_to(model.nu(theta_flat), theta_flat.shape)
        nu_n = np.broadcast_to(model.nu(ops.cell_to_node @ theta_flat), ops.node_weight.shape)
        dxx = ops.dudx @ U
        dyy = ops.dvdy @ U
        dxy_n = ops.dxy_n @ U
        visc = 2.0 * nu_c * (dxx * dxx + dyy * dyy) + ops.node_to_cell @ (4.0 * nu_n * dxy_n * dxy_n)
        elastic = model.rho * model.mu / model.nu1(theta_flat) * cm.pairing_from_eigs(model, lam).ravel()
        zeta = (visc + elastic).reshape(g.shape)

        kinetic_sq = 2.0 * fn.kinetic_energy(s.u, s.v, 1.0, h)
        psi_int = float(np.sum(cm.psi1_from_eigs(model, lam)) * area)
        v_mech = model.rho * psi_int + 0.5 * model.rho * kinetic_sq
        v_th = fn.v_th(s.theta, self.theta_hat, model.rho, th.c_v, area)
        return Diagnostics(
            lam=lam,
            U=U,
            L=ops.gradient(U),
            zeta=zeta,
            v_mech=float(v_mech),
            v_th=v_th,
            zeta_int=float(np.sum(zeta) * area),
            kinetic_sq=kinetic_sq,
            psi_int=psi_int,
            max_speed=max_speed,
            div_abs=div_abs,
            div_rel=div_rel,
            nu_c=nu_c,
            nu_n=nu_n,
            dxx=dxx,
            dyy=dyy,
            dxy_n=dxy_n,
        )

    # -------------------------------------------------------------- stepping
    def viscous_force(self, d: Diagnostics) -> np.ndarray:
        """``-K^T M K U``: minus the gradient of half the dissipation form."""
        ops = self.ops
        return -(
            ops.dudx_T @ (2.0 * d.nu_c * d.dxx)
            + ops.dvdy_T @ (2.0 * d.nu_c * d.dyy)
            + ops.dxy_n_T @ (4.0 * ops.node_weight * d.nu_n * d.dxy_n)
        )

    def advance(self, s: SimState, d: Diagnostics) -> SimState:
        """One explicit Euler step from ``s`` using its diagnostics ``d``."""
        cfg, ops, g = self.config, self.ops, self.grid
        model, th = cfg.model, cfg.thermal
        h, dt, rho = g.h, self.dt, model.rho

        # momentum
        tau = cm.elastic_stress(model, s.B, check=False)
        f_el = ops.stress_force(tau)
        f_visc = self.viscous_force(d)
        au, av = _momentum_advection(s.u, s.v, h)
        adv = np.concatenate([au.ravel(), av.ravel()])
        U_star = d.U + dt * ((f_el + f_visc) / rho - adv)
        U_new, phi = ops.project(U_star)
        u_new, v_new = ops.unpack(U_new)
        p_new = (rho / dt) * phi.reshape(g.shape)

        # conformation
        L = d.L
        D = 0.5 * (L + np.swapaxes(L, -1, -2))
        W = 0.5 * (L - np.swapaxes(L, -1, -2))
        B = s.B
        DB = tc.matmul(D, B)
        WB = tc.matmul(W, B)
        gs = model.a * (DB + np.swapaxes(DB, -1, -2)) + WB + np.swapaxes(WB, -1, -2)
        relax = (model.mu / model.nu1(s.theta))[..., None, None] * cm.relax_f(model, B, check=False)
        B_new = B + dt * (gs - relax - _upwind(B, s.u, s.v, h))
        B_new = 0.5 * (B_new + np.swapaxes(B_new, -1, -2))

        # temperature
        rc = rho * th.c_v
        tilde = (s.theta - self.theta_hat).ravel()
        cond = -(th.kappa / (h * h)) * (ops.heat @ tilde).reshape(g.shape)
        theta_new = s.theta + dt * ((cond + d.zeta) / rc - _upwind(s.theta, s.u, s.v, h))

        return SimState(u_new, v_new, p_new, B_new, theta_new, s.t + dt, s.step + 1)


# ------------------------------------------------------------------ public API


def initial_state(config: SimConfig, steady: SteadyState | None = None) -> SimState:
    """Steady state plus the configured perturbation."""
    return Solver(config, steady).initial_state()


def step(state: SimState, config: SimConfig, steady: SteadyState | None = None, solver: Solver | None = None) -> SimState:
    """Advance ``state`` by one time step.

    Pass a prebuilt ``solver`` when stepping repeatedly; otherwise the
    operators are assembled on every call.

    Raises
    ------
    SimulationAborted
        On loss of positive definiteness, FENE-P trace overflow, nonpositive
        temperature, divergence blowup or CFL violation.
    """
    solver = solver or Solver(config, steady)
    return solver.advance(state, solver.diagnose(state))


@dataclass
class Trajectory:
    """Result of :func:`run`.

    ``series`` holds per-step scalars (one entry per state, including one
    state beyond ``t_end`` so that forward differences exist at the last
    sample). ``sample_steps`` indexes the output samples into ``series``.
    """

    config: SimConfig
    dt: float
    samples: list[fn.FunctionalSample]
    sample_steps: np.ndarray
    series: dict[str, np.ndarray]
    final: SimState
    steady: SteadyState
    certifying: bool = True

    def column(self, name: str) -> np.ndarray:
        """A per-sample column, e.g. ``"v_mech"`` or ``"budget_rel"``."""
        if name in self.series:
            return self.series[name][self.sample_steps]
        return np.array([getattr(s, name) if hasattr(s, name) else s.diagnostics[name] for s in self.samples])

    def budget(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-sample budget residual ``dV_mech/dt + int zeta`` and its relative size."""
        vm, z = self.series["v_mech"], self.series["zeta_int"]
        k = self.sample_steps
        res = (vm[k + 1] - vm[k]) / self.dt + z[k]
        floor = 1e-9 * float(np.max(z)) + np.finfo(float).tiny
        return res, np.abs(res) / np.maximum(z[k], floor)

    def dvth_fd(self) -> np.ndarray:
        """Centred difference of ``V_th`` at each sample (forward at ``t = 0``)."""
        vt = self.series["v_th"]
        k = self.sample_steps
        out = np.empty(k.size)
        for i, n in enumerate(k):
            out[i] = (vt[n + 1] - vt[n]) / self.dt if n == 0 else (vt[n + 1] - vt[n - 1]) / (2 * self.dt)
        return out


SERIES = (
    "t", "v_mech", "v_th", "zeta_int", "kinetic_sq", "psi_int", "min_eig_B", "max_speed",
    "min_theta", "max_theta", "div_abs", "div_rel", "min_zeta",
)


def run(config: SimConfig, steady: SteadyState | None = None, progress=None) -> Trajectory:
    """Integrate ``config`` from its perturbed initial state to ``t_end``.

    Parameters
    ----------
    config : SimConfig
    steady : SteadyState, optional
        Precomputed steady temperature (solved here otherwise).
    progress : callable, optional
        Called as ``progress(step, n_steps)`` at every output sample.

    Raises
    ------
    SimulationAborted
        Propagated from the failing step, carrying its time.
    """
    solver = Solver(config, steady)
    cfg, g = solver.config, solver.grid
    model, th = cfg.model, cfg.thermal
    n_steps = cfg.n_steps()
    dt = solver.dt
    area = g.cell_area
    series = {k: np.empty(n_steps + 2) for k in SERIES}
    samples: list[fn.FunctionalSample] = []
    sample_steps = []
    state = solver.initial_state()
    final = None
    for n in range(n_steps + 2):
        d = solver.diagnose(state)
        row = dict(
            t=state.t, v_mech=d.v_mech, v_th=d.v_th, zeta_int=d.zeta_int, kinetic_sq=d.kinetic_sq,
            psi_int=d.psi_int, min_eig_B=float(np.min(d.lam[..., 0])), max_speed=d.max_speed,
            min_theta=float(np.min(state.theta)), max_theta=float(np.max(state.theta)),
            div_abs=d.div_abs, div_rel=d.div_rel, min_zeta=float(np.min(d.zeta)),
        )
        for k, val in row.items():
            series[k][n] = val
        if n > n_steps:
            break
        if n % cfg.output_every == 0 or n == n_steps:
            rc = (model.rho, th.c_v)
            terms = fn.dvth_rhs_terms(
                state.theta, solver.theta_hat, state.u, state.v, d.zeta, g.h, model.rho, th.c_v, th.kappa, solver.wall
            )
            samples.append(
                fn.FunctionalSample(
                    t=state.t,
                    v_th=d.v_th,
                    v_mech=d.v_mech,
                    v_neq=d.v_th + d.v_mech,
                    v_th_m=tuple(fn.v_th_m(state.theta, solver.theta_hat, *rc, m, area) for m in cfg.m_values),
                    y_th_mn=tuple(fn.y_th_mn(state.theta, solver.theta_hat, *rc, m, nn, area) for m, nn in cfg.mn_pairs),
                    zeta_int=d.zeta_int,
                    terms=terms,
                    diagnostics={k: row[k] for k in ("min_eig_B", "max_speed", "min_theta", "max_theta", "div_rel", "min_zeta")},
                )
            )
            sample_steps.append(n)
            if progress is not None:
                progress(n, n_steps)
        if n == n_steps:
            final = state.copy()
        state = solver.advance(state, d)
    return Trajectory(
        config=cfg,
        dt=dt,
        samples=samples,
        sample_steps=np.asarray(sample_steps),
        series=series,
        final=final,
        steady=solver.steady,
        certifying=not solver.clipped,
    )


def acceptance_config(model: cm.ModelSpec | None = None, **overrides) -> SimConfig:
    """The reference run: 32x32 unit square, walls 300/310 K, ``eps = 0.1``, ``t_end = 5``."""
    cfg = SimConfig(model=model or cm.ModelSpec())
    return replace(cfg, **overrides) if overrides else cfg
