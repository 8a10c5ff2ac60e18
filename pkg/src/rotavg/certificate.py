"""A posteriori global-optimality certificate for rotation-averaging solutions.

A stationary point ``{R_i}`` is a global minimizer if ``Lambda - R_tilde`` is
positive semidefinite, where ``Lambda`` is block diagonal with blocks
``Lambda_i = sum_j R_tilde[i, j] R_j^T R_i`` over all neighbors ``j`` of ``i``.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .constants import DENSE_EIG_MAX_N, EIG_TOL
from .errors import NumericalError
from .graph import RAGraph, assemble_r_tilde, cost_blocks, r_tilde_sparse


@dataclass(frozen=True)
class Certificate:
    """Outcome of :func:`certify`.

    Attributes:
        min_eig: smallest eigenvalue of the symmetrized ``Lambda - R_tilde``.
        asymmetry: ``||M - M^T||_F`` of the raw matrix; zero at exact
            stationary points.
        optimal: ``min_eig >= -tol``.
        tol: tolerance used for the verdict.
        smallest: a few of the smallest eigenvalues in ascending order.
    """

    min_eig: float
    asymmetry: float
    optimal: bool
    tol: float
    smallest: Tuple[float, ...] = ()


def lambda_blocks(g: RAGraph, rotations: np.ndarray) -> np.ndarray:
    """The ``(n, 3, 3)`` diagonal blocks ``Lambda_i``."""
    rotations = np.asarray(rotations, dtype=float)
    # sum_j R_tilde[i, j] R_j^T equals -A_i
    return -cost_blocks(g, rotations) @ rotations


def build_lambda(g: RAGraph, rotations: np.ndarray) -> np.ndarray:
    """Dense ``3n x 3n`` block-diagonal ``Lambda``."""
    blocks = lambda_blocks(g, rotations)
    n = g.n
    out = np.zeros((n, 3, n, 3))
    idx = np.arange(n)
    out[idx, :, idx, :] = blocks
    return out.reshape(3 * n, 3 * n)


def certificate_matrix(g: RAGraph, rotations: np.ndarray) -> np.ndarray:
    """Raw (not symmetrized) ``Lambda - R_tilde``."""
    return build_lambda(g, rotations) - assemble_r_tilde(g)


def _smallest_sym_eigs(g: RAGraph, rotations: np.ndarray, k: int) -> Tuple[np.ndarray, float]:
    if g.n <= DENSE_EIG_MAX_N:
        m = certificate_matrix(g, rotations)
        asym = float(np.linalg.norm(m - m.T))
        vals = np.linalg.eigvalsh(0.5 * (m + m.T))
        return vals[:k], asym

    from scipy import sparse
    from scipy.sparse.linalg import eigsh

    blocks = lambda_blocks(g, rotations)
    lam = sparse.block_diag(list(blocks), format="csr")
    m = lam - r_tilde_sparse(g)
    asym = float(np.linalg.norm(blocks - np.swapaxes(blocks, -1, -2)))
    sym = 0.5 * (m + m.T)
    vals = eigsh(sym, k=k, which="SA", tol=EIG_TOL, return_eigenvectors=False)
    return np.sort(vals), asym


def certify(g: RAGraph, rotations: np.ndarray, tol: Optional[float] = None, k: int = 6) -> Certificate:
    """Check the sufficient global-optimality condition at ``rotations``.

    Args:
        tol: eigenvalue slack for the verdict; defaults to ``1e-6 * n``.
        k: how many of the smallest eigenvalues to keep in the result.

    Raises:
        NumericalError: if the eigensolver fails.
    """
    rotations = np.asarray(rotations, dtype=float)
    if rotations.shape != (g.n, 3, 3):
        raise ValueError(f"expected {g.n} rotations, got array of shape {rotations.shape}")
    if tol is None:
        tol = 1e-6 * g.n
    if not tol > 0:
        raise ValueError("tol must be positive")
    k = max(1, min(k, 3 * g.n - 1 if g.n > DENSE_EIG_MAX_N else 3 * g.n))
    try:
        vals, asym = _smallest_sym_eigs(g, rotations, k)
    except (np.linalg.LinAlgError, ArithmeticError) as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    min_eig = float(vals[0])
    return Certificate(
        min_eig=min_eig,
        asymmetry=asym,
        optimal=bool(min_eig >= -tol),
        tol=float(tol),
        smallest=tuple(float(v) for v in vals),
    )
