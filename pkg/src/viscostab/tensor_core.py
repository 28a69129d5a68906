"""Symmetric and SPD 3x3 tensor arithmetic.

Tensors are plain ``numpy`` arrays of shape ``(..., 3, 3)``; every function
broadcasts over the leading axes so that per-cell fields of conformation
tensors can be processed in one call. Symmetry is enforced on construction
(:func:`sym_from_components`, :func:`symmetrize`) rather than stored in a
separate six-slot type.

Eigenvalues come from a closed-form trigonometric solver; matrix functions
(log, exp, inverse, powers) are evaluated spectrally with eigenvectors from
LAPACK and eigenvalue clustering so that (near-)repeated eigenvalues are
mapped to exactly repeated function values.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
from scipy.spatial.transform import Rotation

SymTensor3 = np.ndarray
SpdTensor3 = np.ndarray

IDENTITY = np.eye(3)
SPD_RTOL = 1e-13
CLUSTER_RTOL = 1e-8


class NotSPDError(ValueError):
    """Raised when a tensor argument is not symmetric positive definite."""


def sym_from_components(xx, yy, zz, xy=0.0, xz=0.0, yz=0.0) -> SymTensor3:
    """Assemble symmetric tensors from their six independent components."""
    xx, yy, zz, xy, xz, yz = np.broadcast_arrays(
        *(np.asarray(c, dtype=float) for c in (xx, yy, zz, xy, xz, yz))
    )
    out = np.empty(xx.shape + (3, 3))
    out[..., 0, 0] = xx
    out[..., 1, 1] = yy
    out[..., 2, 2] = zz
    out[..., 0, 1] = out[..., 1, 0] = xy
    out[..., 0, 2] = out[..., 2, 0] = xz
    out[..., 1, 2] = out[..., 2, 1] = yz
    return out


def components(t: SymTensor3) -> np.ndarray:
    """Return ``(..., 6)`` components ordered xx, yy, zz, xy, xz, yz."""
    t = np.asarray(t, dtype=float)
    return np.stack(
        [t[..., 0, 0], t[..., 1, 1], t[..., 2, 2], t[..., 0, 1], t[..., 0, 2], t[..., 1, 2]],
        axis=-1,
    )


def symmetrize(t) -> SymTensor3:
    t = np.asarray(t, dtype=float)
    return 0.5 * (t + np.swapaxes(t, -1, -2))


def trace(t) -> np.ndarray:
    return np.trace(t, axis1=-2, axis2=-1)


def det(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return (
        t[..., 0, 0] * (t[..., 1, 1] * t[..., 2, 2] - t[..., 1, 2] * t[..., 2, 1])
        - t[..., 0, 1] * (t[..., 1, 0] * t[..., 2, 2] - t[..., 1, 2] * t[..., 2, 0])
        + t[..., 0, 2] * (t[..., 1, 0] * t[..., 2, 1] - t[..., 1, 1] * t[..., 2, 0])
    )


def dev(t) -> SymTensor3:
    """Deviatoric (traceless) part."""
    t = np.asarray(t, dtype=float)
    return t - trace(t)[..., None, None] / 3.0 * IDENTITY


def frob_inner(a, b) -> np.ndarray:
    """Frobenius pairing ``A:B = sum_ij A_ij B_ij``."""
    return np.einsum("...ij,...ij->...", np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def frob_norm(a) -> np.ndarray:
    return np.sqrt(frob_inner(a, a))


def matmul(a, b) -> np.ndarray:
    return np.matmul(a, b)


def _charpoly_and_derivative(t: np.ndarray, lam: np.ndarray):
    """det(A - lam I) and its lam-derivative for scalar ``lam`` per tensor."""
    a = t - lam[..., None, None] * IDENTITY
    p = det(a)
    # d/dlam det(A - lam I) = -(sum of principal 2x2 minors of A - lam I)
    m = (
        a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
        + a[..., 0, 0] * a[..., 2, 2] - a[..., 0, 2] * a[..., 2, 0]
        + a[..., 1, 1] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 1]
    )
    return p, -m


def _normalize(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / np.where(n > 0.0, n, 1.0)


def eigvals(t) -> np.ndarray:
    """Eigenvalues of symmetric 3x3 tensors, ascending, shape ``(..., 3)``.

    The characteristic cubic of the shifted, scaled tensor is solved in
    closed form (trigonometric method). The root farthest from the other
    two is then polished by a Newton step on the characteristic polynomial,
    its eigenvector recovered from a cross product of rows of ``A - lam I``,
    and the remaining pair obtained from the exact 2x2 eigenproblem on the
    orthogonal complement. The deflation keeps near-repeated pairs accurate
    to roundoff relative to the tensor norm, where the bare trigonometric
    formula loses digits.
    """
    t = symmetrize(t)
    q = trace(t) / 3.0
    s = t - q[..., None, None] * IDENTITY
    p2 = (
        s[..., 0, 0] ** 2 + s[..., 1, 1] ** 2 + s[..., 2, 2] ** 2
        + 2.0 * (s[..., 0, 1] ** 2 + s[..., 0, 2] ** 2 + s[..., 1, 2] ** 2)
    )
    p = np.sqrt(p2 / 6.0)
    safe_p = np.where(p > 0.0, p, 1.0)
    r = np.clip(det(s / safe_p[..., None, None]) / 2.0, -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    hi = q + 2.0 * p * np.cos(phi)
    lo = q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
    mid = 3.0 * q - hi - lo

    top_isolated = (hi - mid) >= (mid - lo)
    iso = np.where(top_isolated, hi, lo)
    poly, dpoly = _charpoly_and_derivative(t, iso)
    ok = np.abs(dpoly) > 0.0
    step = np.where(ok, poly / np.where(ok, dpoly, 1.0), 0.0)
    # a trustworthy Newton correction is small against the gap to the pair
    ok &= np.abs(step) < 0.25 * np.abs(iso - mid)
    iso = np.where(ok, iso - step, iso)

    m = t - iso[..., None, None] * IDENTITY
    rows = (m[..., 0, :], m[..., 1, :], m[..., 2, :])
    cands = np.stack(
        [np.cross(rows[0], rows[1]), np.cross(rows[0], rows[2]), np.cross(rows[1], rows[2])],
        axis=-2,
    )
    cnorm = np.linalg.norm(cands, axis=-1)
    best = np.argmax(cnorm, axis=-1)
    scale = np.maximum(np.abs(q) + 2.0 * p, np.finfo(float).tiny)
    # near-scalar tensors: no usable eigenvector, trigonometric roots are exact enough
    deflate = np.take_along_axis(cnorm, best[..., None], axis=-1)[..., 0] > 1e-26 * scale**2
    v = _normalize(np.take_along_axis(cands, best[..., None, None], axis=-2)[..., 0, :])
    k = np.argmin(np.abs(v), axis=-1)
    e_k = np.eye(3)[k]
    u1 = _normalize(np.cross(v, e_k))
    u2 = np.cross(v, u1)
    tu2 = np.matmul(t, u2[..., None])[..., 0]
    a11 = np.sum(u1 * np.matmul(t, u1[..., None])[..., 0], axis=-1)
    a22 = np.sum(u2 * tu2, axis=-1)
    a12 = np.sum(u1 * tu2, axis=-1)
    centre = 0.5 * (a11 + a22)
    rad = np.hypot(0.5 * (a11 - a22), a12)
    lam = np.stack([iso, centre - rad, centre + rad], axis=-1)
    trig = np.stack([lo, mid, hi], axis=-1)
    lam = np.where(deflate[..., None], lam, trig)
    return np.sort(lam, axis=-1)


def eigh(t, cluster_rtol: float = CLUSTER_RTOL):
    """Eigen-decomposition ``(w, V)`` with clustered eigenvalues averaged.

    Adjacent eigenvalues whose gap is below ``cluster_rtol`` times the larger
    magnitude of the pair are replaced by their cluster mean, so spectral
    functions of (near-)degenerate tensors assign identical values to the
    whole invariant subspace.
    """
    w, v = np.linalg.eigh(symmetrize(t))
    a = np.abs(w)
    close01 = (w[..., 1] - w[..., 0]) <= cluster_rtol * np.maximum(a[..., 0], a[..., 1])
    close12 = (w[..., 2] - w[..., 1]) <= cluster_rtol * np.maximum(a[..., 1], a[..., 2])
    w = w.copy()
    all3 = close01 & close12
    m = w.mean(axis=-1)
    w[all3] = m[all3][..., None]
    only01 = close01 & ~close12
    w[only01, :2] = w[only01, :2].mean(axis=-1)[..., None]
    only12 = close12 & ~close01
    w[only12, 1:] = w[only12, 1:].mean(axis=-1)[..., None]
    return w, v


def spectral_apply(t, fn: Callable[[np.ndarray], np.ndarray]) -> SymTensor3:
    """``V diag(fn(w)) V^T`` for each tensor in ``t``."""
    w, v = eigh(t)
    fw = fn(w)
    return symmetrize(np.einsum("...ik,...k,...jk->...ij", v, fw, v))


def min_eigenvalue(t) -> np.ndarray:
    return np.linalg.eigvalsh(symmetrize(t))[..., 0]


def is_spd(t) -> np.ndarray:
    """SPD certificate: ``min eig > SPD_RTOL * max(1, max eig)``."""
    w = np.linalg.eigvalsh(symmetrize(t))
    return w[..., 0] > SPD_RTOL * np.maximum(1.0, w[..., -1])


def require_spd(t, name: str = "tensor") -> None:
    ok = is_spd(t)
    if not np.all(ok):
        bad = int(np.size(ok) - np.count_nonzero(ok))
        raise NotSPDError(f"{name} is not symmetric positive definite ({bad} offending entries)")


def mat_log(b) -> SymTensor3:
    require_spd(b, "mat_log argument")
    return spectral_apply(b, np.log)


def mat_exp(t) -> SymTensor3:
    return spectral_apply(t, np.exp)


def mat_inv(b) -> SpdTensor3:
    require_spd(b, "mat_inv argument")
    return spectral_apply(b, np.reciprocal)


def mat_pow(b, power: float) -> SpdTensor3:
    require_spd(b, "mat_pow argument")
    return spectral_apply(b, lambda w: w**power)


def random_rotation(rng: np.random.Generator, size=None) -> np.ndarray:
    """Haar-uniform rotation matrices."""
    n = 1 if size is None else int(np.prod(size))
    r = Rotation.random(n, random_state=rng).as_matrix()
    return r[0] if size is None else r.reshape(tuple(np.atleast_1d(size)) + (3, 3))


def random_spd(rng: np.random.Generator, lo: float, hi: float, size=None) -> SpdTensor3:
    """Random SPD tensors with log-uniform eigenvalues in ``[lo, hi]``.

    Eigenvalues are drawn independently and log-uniformly, then a uniform
    random rotation is applied. Deterministic for a given generator state.
    """
    if not lo > 0:
        raise ValueError(f"eigenvalue range lower bound must be positive, got {lo}")
    if hi < lo:
        raise ValueError(f"eigenvalue range is empty: [{lo}, {hi}]")
    shape = () if size is None else tuple(np.atleast_1d(size))
    lam = np.exp(rng.uniform(np.log(lo), np.log(hi), size=shape + (3,)))
    lam = np.clip(lam, lo, hi)
    q = random_rotation(rng, size=None if size is None else shape)
    return symmetrize(np.einsum("...ik,...k,...jk->...ij", q, lam, q))


def spd_from_log_params(params: np.ndarray) -> SpdTensor3:
    """Map ``(..., 6)`` parameters (3 log-eigenvalues, rotation vector) to SPD tensors."""
    params = np.asarray(params, dtype=float)
    lam = np.exp(params[..., :3])
    q = Rotation.from_rotvec(params[..., 3:].reshape(-1, 3)).as_matrix()
    q = q.reshape(params.shape[:-1] + (3, 3))
    return symmetrize(np.einsum("...ik,...k,...jk->...ij", q, lam, q))
