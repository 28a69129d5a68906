"""Non-equilibrium steady state of the closed vessel.

The vessel is the rectangle ``[0, Lx] x [0, Ly]`` covered by square cells.
At rest (``v = 0``, ``B = I``) only the temperature is non-trivial. It
solves the steady heat equation ``div(kappa grad theta) = 0`` with
Dirichlet wall data.

Discretization: cell-centred 5-point stencil. Wall values enter through
ghost cells ``theta_ghost = 2 theta_wall - theta_inside``, which is exact
for data linear across the wall. The resulting matrix is an SPD M-matrix,
so the discrete maximum principle holds and conjugate gradients apply.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg

EDGES = ("left", "right", "bottom", "top")
PROFILES = ("uniform", "linear_x", "harmonic_sine", "tables")


class SteadyStateError(RuntimeError):
    """Raised when the steady solve fails to reach its tolerance."""

    def __init__(self, message: str, residual_history: list[float]):
        super().__init__(message)
        self.residual_history = residual_history


@dataclass(frozen=True)
class Grid2D:
    """Uniform grid of ``nx x ny`` square cells on ``[0, lx] x [0, ly]``."""

    nx: int = 32
    ny: int = 32
    lx: float = 1.0
    ly: float = 1.0

    def violations(self) -> list[str]:
        out = []
        if self.nx < 4:
            out.append(f"grid.nx must be >= 4 (got {self.nx})")
        if self.ny < 4:
            out.append(f"grid.ny must be >= 4 (got {self.ny})")
        if not (self.lx > 0 and self.ly > 0):
            out.append(f"grid extents must be positive (got lx={self.lx}, ly={self.ly})")
        elif self.nx > 0 and self.ny > 0:
            hx, hy = self.lx / self.nx, self.ly / self.ny
            if abs(hx - hy) > 1e-12 * max(hx, hy):
                out.append(f"cells must be square: lx/nx = {hx!r} but ly/ny = {hy!r}")
        return out

    def __post_init__(self):
        bad = self.violations()
        if bad:
            raise ValueError("; ".join(bad))

    @property
    def h(self) -> float:
        return self.lx / self.nx

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    @property
    def xc(self) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) * self.h

    @property
    def yc(self) -> np.ndarray:
        return (np.arange(self.ny) + 0.5) * self.h

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell-centre coordinates, each shaped ``(nx, ny)``."""
        return np.meshgrid(self.xc, self.yc, indexing="ij")


@dataclass(frozen=True)
class BoundarySpec:
    """Wall temperature ``theta_bdr`` [K].

    Profiles
    --------
    uniform
        ``low`` on every wall.
    linear_x
        ``low`` at ``x = 0`` rising linearly to ``high`` at ``x = lx``
        (the horizontal walls carry the same linear law).
    harmonic_sine
        ``low + amplitude * sin(pi x/lx) sinh(pi y/lx) / sinh(pi ly/lx)``,
        whose harmonic extension is known in closed form.
    tables
        Piecewise-linear tables per edge. Each edge maps to ``(s, theta)``
        pairs with ``s`` the arclength from the edge's lower-left end
        (left/right: measured in ``y``; bottom/top: in ``x``).
    """

    profile: str = "linear_x"
    low: float = 300.0
    high: float = 310.0
    amplitude: float = 1.0
    tables: tuple[tuple[str, tuple[tuple[float, float], ...]], ...] = field(default_factory=tuple)

    def violations(self, grid: Grid2D | None = None) -> list[str]:
        out = []
        if self.profile not in PROFILES:
            out.append(f"boundary.profile must be one of {PROFILES} (got '{self.profile}')")
            return out
        if self.profile == "tables":
            names = {e for e, _ in self.tables}
            missing = [e for e in EDGES if e not in names]
            if missing:
                out.append(f"boundary tables missing edges: {', '.join(missing)}")
            for e, pts in self.tables:
                if e not in EDGES:
                    out.append(f"unknown boundary edge '{e}'")
                if len(pts) < 1:
                    out.append(f"boundary.{e} table is empty")
                s = [p[0] for p in pts]
                if any(b <= a for a, b in zip(s, s[1:])):
                    out.append(f"boundary.{e} abscissae must increase strictly")
        if grid is not None and not out:
            vals = np.concatenate(list(self.edge_values(grid).values()))
            if not np.all(vals > 0):
                out.append("boundary temperatures must be positive")
            if self.profile == "tables":
                out += self._corner_violations(grid)
        return out

    def table(self, edge: str) -> np.ndarray:
        for e, pts in self.tables:
            if e == edge:
                return np.asarray(pts, dtype=float).reshape(-1, 2)
        raise KeyError(edge)

    def value(self, edge: str, s: np.ndarray, grid: Grid2D) -> np.ndarray:
        """Wall temperature at arclength ``s`` along ``edge``."""
        s = np.asarray(s, dtype=float)
        if edge == "left":
            x, y = np.zeros_like(s), s
        elif edge == "right":
            x, y = np.full_like(s, grid.lx), s
        elif edge == "bottom":
            x, y = s, np.zeros_like(s)
        elif edge == "top":
            x, y = s, np.full_like(s, grid.ly)
        else:
            raise KeyError(edge)
        if self.profile == "uniform":
            return np.full_like(s, self.low)
        if self.profile == "linear_x":
            return self.low + (self.high - self.low) * x / grid.lx
        if self.profile == "harmonic_sine":
            return self.low + self.amplitude * np.sin(math.pi * x / grid.lx) * _sinh_ratio(y, grid)
        t = self.table(edge)
        return np.interp(s, t[:, 0], t[:, 1])

    def edge_values(self, grid: Grid2D) -> dict[str, np.ndarray]:
        """Wall temperature at the midpoints of the boundary faces."""
        return {
            "left": self.value("left", grid.yc, grid),
            "right": self.value("right", grid.yc, grid),
            "bottom": self.value("bottom", grid.xc, grid),
            "top": self.value("top", grid.xc, grid),
        }

    def extrema(self, grid: Grid2D) -> tuple[float, float]:
        """Min and max of the wall data (face midpoints and corners)."""
        vals = list(self.edge_values(grid).values())
        for e, s in (("left", [0.0, grid.ly]), ("right", [0.0, grid.ly]), ("bottom", [0.0, grid.lx]), ("top", [0.0, grid.lx])):
            vals.append(self.value(e, np.asarray(s), grid))
        allv = np.concatenate(vals)
        return float(allv.min()), float(allv.max())

    def exact(self, x, y, grid: Grid2D) -> np.ndarray | None:
        """Closed-form harmonic extension where one is known."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.profile == "uniform":
            return np.full(np.broadcast(x, y).shape, self.low)
        if self.profile == "linear_x":
            return self.low + (self.high - self.low) * x / grid.lx + 0.0 * y
        if self.profile == "harmonic_sine":
            return self.low + self.amplitude * np.sin(math.pi * x / grid.lx) * _sinh_ratio(y, grid)
        return None

    def _corner_violations(self, grid: Grid2D) -> list[str]:
        out = []
        corners = {
            "lower-left": (("left", 0.0), ("bottom", 0.0)),
            "upper-left": (("left", grid.ly), ("top", 0.0)),
            "lower-right": (("right", 0.0), ("bottom", grid.lx)),
            "upper-right": (("right", grid.ly), ("top", grid.lx)),
        }
        for name, ((e1, s1), (e2, s2)) in corners.items():
            a = float(self.value(e1, np.asarray([s1]), grid)[0])
            b = float(self.value(e2, np.asarray([s2]), grid)[0])
            if abs(a - b) > 1e-9 * max(abs(a), abs(b)):
                out.append(f"boundary tables discontinuous at {name} corner ({a} vs {b})")
        return out


def _sinh_ratio(y, grid: Grid2D):
    k = math.pi / grid.lx
    # sinh(k y) / sinh(k ly) written to avoid overflow for long domains
    return np.exp(k * (y - grid.ly)) * (-np.expm1(-2.0 * k * y)) / (-math.expm1(-2.0 * k * grid.ly))


@dataclass
class SteadyState:
    """Steady temperature ``theta`` on ``grid`` (with ``v = 0`` and ``B = I``)."""

    grid: Grid2D
    theta: np.ndarray
    residual_inf: float
    iterations: int
    residual_history: list[float] = field(default_factory=list)


def dirichlet_operator(grid: Grid2D) -> sp.csr_matrix:
    """``-h^2 Lap`` with homogeneous Dirichlet walls, cell-centred, SPD.

    Cells are flattened in C order of ``(nx, ny)`` arrays. Each wall face adds
    one to the diagonal (ghost value ``-theta_inside``).
    """
    def line(n):
        main = np.full(n, 2.0)
        main[0] += 1.0
        main[-1] += 1.0
        return sp.diags([-np.ones(n - 1), main, -np.ones(n - 1)], [-1, 0, 1])

    ax = line(grid.nx)
    ay = line(grid.ny)
    a = sp.kron(ax, sp.identity(grid.ny)) + sp.kron(sp.identity(grid.nx), ay)
    return a.tocsr()


def boundary_rhs(grid: Grid2D, bdr: BoundarySpec) -> np.ndarray:
    """Right-hand side ``2 theta_wall`` per wall face, shaped ``(nx, ny)``."""
    ev = bdr.edge_values(grid)
    rhs = np.zeros(grid.shape)
    rhs[0, :] += 2.0 * ev["left"]
    rhs[-1, :] += 2.0 * ev["right"]
    rhs[:, 0] += 2.0 * ev["bottom"]
    rhs[:, -1] += 2.0 * ev["top"]
    return rhs


def apply_dirichlet_laplacian(theta: np.ndarray, wall: dict[str, np.ndarray], h: float) -> np.ndarray:
    """Matrix-free 5-point Laplacian with Dirichlet ghosts ``2 wall - theta``."""
    p = np.empty((theta.shape[0] + 2, theta.shape[1] + 2))
    p[1:-1, 1:-1] = theta
    p[0, 1:-1] = 2.0 * wall["left"] - theta[0, :]
    p[-1, 1:-1] = 2.0 * wall["right"] - theta[-1, :]
    p[1:-1, 0] = 2.0 * wall["bottom"] - theta[:, 0]
    p[1:-1, -1] = 2.0 * wall["top"] - theta[:, -1]
    return (p[2:, 1:-1] + p[:-2, 1:-1] + p[1:-1, 2:] + p[1:-1, :-2] - 4.0 * theta) / (h * h)


def solve_steady_heat(
    grid: Grid2D,
    bdr: BoundarySpec,
    kappa: float = 1.0,
    tol: float = 1e-10,
    maxiter: int | None = None,
) -> SteadyState:
    """Solve ``div(kappa grad theta) = 0`` with wall data ``bdr``.

    Parameters
    ----------
    grid, bdr
        Geometry and Dirichlet data.
    kappa : float
        Constant conductivity (it cancels for the homogeneous equation but
        the operator is assembled in divergence form).
    tol : float
        Required bound ``||r||_inf < tol * max|theta_bdr|`` on the residual
        of the scaled system ``-h^2 Lap theta = 0``, in kelvin.
    maxiter : int, optional
        CG iteration cap (default ``10 * nx * ny``).

    Raises
    ------
    SteadyStateError
        If CG stops before the residual bound is met.
    """
    bad = bdr.violations(grid)
    if bad:
        raise ValueError("; ".join(bad))
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    a = kappa * dirichlet_operator(grid)
    rhs = kappa * boundary_rhs(grid, bdr).ravel()
    lo, hi = bdr.extrema(grid)
    scale = max(abs(lo), abs(hi))
    target = tol * scale
    maxiter = maxiter or 10 * grid.nx * grid.ny

    history: list[float] = []

    def record(xk):
        history.append(float(np.abs(rhs - a @ xk).max()) / kappa)

    x0 = np.full(rhs.shape, 0.5 * (lo + hi))
    # 2-norm target below the infinity-norm target guarantees the latter
    x, info = cg(a, rhs, x0=x0, rtol=0.0, atol=kappa * target, maxiter=maxiter, callback=record)
    res = float(np.abs(rhs - a @ x).max()) / kappa
    if info != 0 or not res < target:
        raise SteadyStateError(
            f"steady heat solve did not converge: residual {res:.3e} K, target {target:.3e} K after {len(history)} iterations",
            history,
        )
    return SteadyState(grid, x.reshape(grid.shape), res, len(history), history)
