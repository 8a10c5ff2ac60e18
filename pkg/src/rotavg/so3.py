"""Rotation arithmetic on SO(3) and the closed-form LOSSO solver.

Rotations are plain ``(3, 3)`` float arrays and stacks of rotations are
``(n, 3, 3)`` arrays. LOSSO is the problem ``min tr(A X)`` over ``X`` in SO(3).
"""
from functools import lru_cache
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .constants import DET_TOL, ORTHO_TOL
from .errors import DegenerateInputError, NumericalError


class AxisAngle(NamedTuple):
    """Unit rotation axis ``u`` and angle ``theta`` in radians."""

    u: np.ndarray
    theta: float


def is_rotation(m: np.ndarray, ortho_tol: float = ORTHO_TOL, det_tol: float = DET_TOL) -> bool:
    """Return True if ``m`` is a 3x3 rotation within the given tolerances."""
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        return False
    if np.linalg.norm(m.T @ m - np.eye(3)) > ortho_tol:
        return False
    return abs(np.linalg.det(m) - 1.0) <= det_tol


def rotation_defects(stack: np.ndarray) -> Tuple[float, float]:
    """Worst orthogonality and determinant defects over a stack of rotations."""
    stack = np.asarray(stack, dtype=float).reshape(-1, 3, 3)
    if stack.shape[0] == 0:
        return 0.0, 0.0
    gram = np.einsum("kji,kjl->kil", stack, stack) - np.eye(3)
    ortho = float(np.max(np.linalg.norm(gram, axis=(1, 2))))
    det = float(np.max(np.abs(np.linalg.det(stack) - 1.0)))
    return ortho, det


def axis_angle_to_rotation(u, theta: float, tol: float = 1e-12) -> np.ndarray:
    """Rotation by ``theta`` radians about the unit axis ``u``.

    Entries are written out explicitly in terms of ``cos(theta)``,
    ``delta = 1 - cos(theta)`` and ``psi = sin(theta)``.

    Raises:
        ValueError: if ``u`` is not a unit vector and ``theta`` is nonzero.
    """
    u = np.asarray(u, dtype=float).reshape(3)
    if theta != 0.0 and abs(u @ u - 1.0) > tol:
        raise ValueError(f"rotation axis must be a unit vector, got norm {np.linalg.norm(u)!r}")
    c = np.cos(theta)
    delta = 1.0 - c
    psi = np.sin(theta)
    u1, u2, u3 = u
    return np.array([
        [c + delta * u1 * u1, delta * u1 * u2 - u3 * psi, delta * u1 * u3 + u2 * psi],
        [delta * u2 * u1 + u3 * psi, c + delta * u2 * u2, delta * u2 * u3 - u1 * psi],
        [delta * u3 * u1 - u2 * psi, delta * u3 * u2 + u1 * psi, c + delta * u3 * u3],
    ])


def _axis_angle_batch(u: np.ndarray, theta: np.ndarray) -> np.ndarray:
    # u: (k, 3) unit axes, theta: (k,) angles -> (k, 3, 3)
    c = np.cos(theta)[:, None, None]
    s = np.sin(theta)
    k = np.zeros((len(theta), 3, 3))
    k[:, 0, 1], k[:, 0, 2] = -u[:, 2], u[:, 1]
    k[:, 1, 0], k[:, 1, 2] = u[:, 2], -u[:, 0]
    k[:, 2, 0], k[:, 2, 1] = -u[:, 1], u[:, 0]
    outer = u[:, :, None] * u[:, None, :]
    return c * np.eye(3) + s[:, None, None] * k + (1.0 - c) * outer


def rotation_to_nearest_valid(m: np.ndarray) -> np.ndarray:
    """Project a nearly-orthogonal matrix onto the closest rotation (Frobenius).

    Raises:
        DegenerateInputError: if the orthogonal polar factor of ``m`` is a
            reflection, i.e. ``m`` is nowhere near a rotation.
        NumericalError: if ``m`` contains non-finite entries.
    """
    m = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(m)):
        raise NumericalError("cannot project a non-finite matrix onto SO(3)")
    u, _, vt = np.linalg.svd(m)
    q = u @ vt
    if np.linalg.det(q) < 0.0:
        raise DegenerateInputError("matrix is closer to a reflection than to a rotation")
    return q


def _unit_vectors(rng: np.random.Generator, size: int) -> np.ndarray:
    v = rng.standard_normal((size, 3))
    norms = np.linalg.norm(v, axis=1)
    # A zero draw has probability zero but would poison the division.
    while np.any(norms == 0.0):
        bad = norms == 0.0
        v[bad] = rng.standard_normal((int(bad.sum()), 3))
        norms = np.linalg.norm(v, axis=1)
    return v / norms[:, None]


def random_rotations(
    rng: np.random.Generator,
    size: int,
    angle_stddev: Optional[float] = None,
    uniform: bool = False,
) -> np.ndarray:
    """Draw ``size`` random rotations as a ``(size, 3, 3)`` array.

    With ``uniform=True`` the rotations are Haar distributed (normalized
    Gaussian quaternions). Otherwise each rotation has an axis uniform on the
    sphere and an angle drawn from ``N(0, angle_stddev**2)``.
    """
    if uniform:
        q = rng.standard_normal((size, 4))
        q /= np.linalg.norm(q, axis=1)[:, None]
        w, x, y, z = q.T
        out = np.empty((size, 3, 3))
        out[:, 0, 0] = 1 - 2 * (y * y + z * z)
        out[:, 0, 1] = 2 * (x * y - z * w)
        out[:, 0, 2] = 2 * (x * z + y * w)
        out[:, 1, 0] = 2 * (x * y + z * w)
        out[:, 1, 1] = 1 - 2 * (x * x + z * z)
        out[:, 1, 2] = 2 * (y * z - x * w)
        out[:, 2, 0] = 2 * (x * z - y * w)
        out[:, 2, 1] = 2 * (y * z + x * w)
        out[:, 2, 2] = 1 - 2 * (x * x + y * y)
        return out
    if angle_stddev is None or angle_stddev < 0:
        raise ValueError("angle_stddev must be >= 0 unless uniform=True")
    axes = _unit_vectors(rng, size)
    angles = rng.normal(0.0, angle_stddev, size) if angle_stddev > 0 else np.zeros(size)
    return _axis_angle_batch(axes, angles)


def random_rotation(
    rng: np.random.Generator, angle_stddev: Optional[float] = None, uniform: bool = False
) -> np.ndarray:
    """Single-draw version of :func:`random_rotations`."""
    return random_rotations(rng, 1, angle_stddev=angle_stddev, uniform=uniform)[0]


def rotation_angle(r: np.ndarray) -> np.ndarray:
    """Rotation angle(s) in ``[0, pi]`` of a rotation or a stack of rotations."""
    tr = np.trace(np.asarray(r), axis1=-2, axis2=-1)
    return np.arccos(np.clip(0.5 * (tr - 1.0), -1.0, 1.0))


def chordal_sq(a: np.ndarray, b: np.ndarray) -> float:
    """Squared chordal (Frobenius) distance ``||a - b||_F^2``."""
    d = np.asarray(a) - np.asarray(b)
    return float(np.sum(d * d))


def solve_losso_batch(a: np.ndarray) -> np.ndarray:
    """Minimize ``tr(A_k X_k)`` over SO(3) independently for each ``A_k``.

    Args:
        a: ``(k, 3, 3)`` cost matrices.

    Returns:
        ``(k, 3, 3)`` global minimizers.

    Raises:
        NumericalError: if any cost matrix has non-finite entries.
    """
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise NumericalError("LOSSO cost matrix has non-finite entries")
    try:
        u, d, vt = np.linalg.svd(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed: {exc}") from exc
    v = np.swapaxes(vt, -1, -2)
    same_sign = np.linalg.det(u) * np.linalg.det(v) > 0.0

    sigma = np.full(d.shape, -1.0)
    # argmin returns the first index among ties.
    sigma[np.arange(len(d)), np.argmin(d, axis=1)] = 1.0
    sigma[~same_sign] = 1.0
    v_hat = np.where(same_sign[:, None, None], v, -v)

    x = (v_hat * sigma[:, None, :]) @ np.swapaxes(u, -1, -2)
    zero = ~np.any(a.reshape(len(a), -1), axis=1)
    x[zero] = np.eye(3)
    return x


def solve_losso(a: np.ndarray) -> Tuple[np.ndarray, float]:
    """Globally minimize ``tr(A X)`` over ``X`` in SO(3).

    With ``A = U D V^T`` the minimizer is ``X = V' S U^T`` where ``V' = V`` and
    ``S`` flips every axis except the smallest singular direction when
    ``det(U) det(V) = 1``, and ``V' = -V``, ``S = I`` otherwise. ``A = 0``
    returns the identity.

    Returns:
        The minimizer and the attained value ``tr(A X)``.
    """
    a = np.asarray(a, dtype=float)
    if a.shape != (3, 3):
        raise ValueError(f"cost matrix must be 3x3, got {a.shape}")
    x = solve_losso_batch(a[None])[0]
    return x, float(np.trace(a @ x))


def fibonacci_sphere(count: int) -> np.ndarray:
    """``count`` nearly uniform unit vectors on the sphere (golden-angle spiral)."""
    k = np.arange(count) + 0.5
    z = 1.0 - 2.0 * k / count
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = np.pi * (3.0 - np.sqrt(5.0)) * k
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


@lru_cache(maxsize=4)
def _oracle_grid(resolution: int) -> np.ndarray:
    # Axes of every coarser level r, r // 2, ... (>= 16) are included so that
    # doubling the resolution yields a superset of grid points.
    levels = []
    r = resolution
    while r >= 16:
        levels.append(fibonacci_sphere(r * r))
        r //= 2
    axes = np.concatenate(levels)
    angles = -np.pi + 2.0 * np.pi * np.arange(resolution) / resolution
    uu = np.repeat(axes, len(angles), axis=0)
    tt = np.tile(angles, len(axes))
    grid = _axis_angle_batch(uu, tt)
    grid.flags.writeable = False
    return grid


def losso_oracle(a: np.ndarray, resolution: int = 64) -> Tuple[np.ndarray, float]:
    """Brute-force LOSSO: best ``tr(A X)`` over a fixed axis-angle grid.

    Only for testing the closed form. The grid holds ``resolution**2``
    Fibonacci-sphere axes (plus those of coarser levels) times
    ``resolution`` angles in ``[-pi, pi)``.
    """
    if resolution < 16:
        raise ValueError("resolution must be >= 16")
    a = np.asarray(a, dtype=float)
    grid = _oracle_grid(int(resolution))
    # tr(A X) = sum_ij A_ij X_ji
    values = grid.reshape(len(grid), 9) @ a.T.reshape(9)
    best = int(np.argmin(values))
    return grid[best].copy(), float(values[best])


def losso_oracle_values(a: np.ndarray, resolution: int = 64) -> np.ndarray:
    """Vectorized :func:`losso_oracle` returning only the grid minima for ``(k, 3, 3)`` costs."""
    grid = _oracle_grid(int(resolution))
    a = np.asarray(a, dtype=float).reshape(-1, 3, 3)
    flat = np.swapaxes(a, -1, -2).reshape(len(a), 9)
    out = np.empty(len(a))
    chunk = 64
    g = grid.reshape(len(grid), 9)
    for s in range(0, len(a), chunk):
        out[s:s + chunk] = np.min(g @ flat[s:s + chunk].T, axis=0)
    return out
