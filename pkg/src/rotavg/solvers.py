"""Block coordinate descent (BCD) and successive upper-bound minimization (SUM)
solvers for chordal rotation averaging.

Both solvers minimize ``sum ||R_i R_ij - R_j||_F^2`` over SO(3)^n by
repeatedly solving single-rotation LOSSO subproblems in closed form. BCD
updates one vertex at a time; SUM minimizes a linear majorizer of the whole
objective, which splits into ``n`` independent subproblems per iteration.
"""
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np

from .constants import DENSE_EIG_MAX_N, EIG_TOL, MU_MARGIN, ORTHO_TOL
from .errors import NumericalError
from .graph import RAGraph, assemble_r_tilde, cost_blocks, objective, r_tilde_sparse, spanning_tree_init
from .so3 import random_rotations, rotation_defects, solve_losso_batch

logger = logging.getLogger(__name__)

INIT_CHOICES = ("spanning-tree", "identity", "random")


@dataclass
class SolverConfig:
    """Solver settings.

    Attributes:
        epsilon: stop once the relative change between iterates drops below this.
        max_iter: iteration (sweep) cap; exhaustion returns the last iterate
            with ``converged=False``.
        init: ``"spanning-tree"``, ``"identity"``, ``"random"`` or an explicit
            ``(n, 3, 3)`` stack.
        seed: seed for ``init="random"``.
        parallel: solve the SUM subproblems on a thread pool.
        workers: thread count for ``parallel``; defaults to the CPU count.
        sweep: BCD update order, ``"gauss-seidel"`` (fresh iterates within a
            sweep) or ``"jacobi"`` (every block from the previous sweep).
        check_feasibility: assert SO(3) membership of every iterate.
    """

    epsilon: float = 1e-6
    max_iter: int = 10000
    init: Union[str, np.ndarray] = "spanning-tree"
    seed: int = 0
    parallel: bool = True
    workers: Optional[int] = None
    sweep: str = "gauss-seidel"
    check_feasibility: bool = False

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if isinstance(self.init, str) and self.init not in INIT_CHOICES:
            raise ValueError(f"init must be one of {INIT_CHOICES} or an explicit rotation stack")
        if self.sweep not in ("gauss-seidel", "jacobi"):
            raise ValueError("sweep must be 'gauss-seidel' or 'jacobi'")


@dataclass
class ConvergenceTrace:
    """Per-iteration history of a solve.

    ``objective[k]``, ``residual[k]`` and ``time_s[k]`` belong to iteration
    ``k + 1``; ``time_s`` is cumulative and includes setup.
    """

    initial_objective: float = float("nan")
    objective: List[float] = field(default_factory=list)
    residual: List[float] = field(default_factory=list)
    time_s: List[float] = field(default_factory=list)
    converged: bool = False
    mu: Optional[float] = None

    @property
    def iterations(self) -> int:
        return len(self.objective)

    def record(self, obj: float, resid: float, elapsed: float):
        self.objective.append(obj)
        self.residual.append(resid)
        self.time_s.append(elapsed)


def initial_rotations(g: RAGraph, cfg: SolverConfig) -> np.ndarray:
    if not isinstance(cfg.init, str):
        init = np.array(cfg.init, dtype=float)
        if init.shape != (g.n, 3, 3):
            raise ValueError(f"explicit init must have shape {(g.n, 3, 3)}, got {init.shape}")
        return init
    if cfg.init == "identity":
        return np.tile(np.eye(3), (g.n, 1, 1))
    if cfg.init == "random":
        return random_rotations(np.random.default_rng(cfg.seed), g.n, uniform=True)
    return spanning_tree_init(g)


def _check_graph(g: RAGraph):
    if not g.is_connected():
        raise ValueError("solvers need a connected graph")


def _checked_objective(g: RAGraph, rotations: np.ndarray) -> float:
    value = objective(g, rotations)
    if not np.isfinite(value):
        raise NumericalError("objective became non-finite")
    return value


def _assert_feasible(rotations: np.ndarray, iteration: int):
    ortho, det = rotation_defects(rotations)
    if ortho > ORTHO_TOL or det > ORTHO_TOL:
        raise NumericalError(f"iterate {iteration} left SO(3): ortho={ortho:.3g} det={det:.3g}")


def solve_bcd(g: RAGraph, cfg: Optional[SolverConfig] = None) -> Tuple[np.ndarray, ConvergenceTrace]:
    """Block coordinate descent over the vertices.

    Each sweep visits vertices ``0..n-1`` and replaces ``R_i`` with the exact
    minimizer of the objective in that block. The loop stops once
    ``sum_k ||R_k^t - R_k^{t-1}||_F / ||R_k^t||_F < epsilon``.

    Returns:
        The final ``(n, 3, 3)`` stack and its convergence trace.
    """
    cfg = cfg or SolverConfig()
    _check_graph(g)
    start = time.perf_counter()
    rot = initial_rotations(g, cfg)
    trace = ConvergenceTrace(initial_objective=_checked_objective(g, rot))
    block_norm = np.sqrt(3.0)
    jacobi = cfg.sweep == "jacobi"

    for t in range(1, cfg.max_iter + 1):
        prev = rot.copy()
        if jacobi:
            rot = solve_losso_batch(cost_blocks(g, prev))
        else:
            for i in range(g.n):
                rot[i] = solve_losso_batch(cost_blocks(g, rot, range(i, i + 1)))[0]
        step = np.linalg.norm(rot - prev, axis=(1, 2))
        resid = float(np.sum(step) / block_norm)
        obj = _checked_objective(g, rot)
        if cfg.check_feasibility:
            _assert_feasible(rot, t)
        trace.record(obj, resid, time.perf_counter() - start)
        logger.debug("bcd iter %d objective %.12g residual %.3g", t, obj, resid)
        if resid < cfg.epsilon:
            trace.converged = True
            break
    return rot, trace


def smallest_eigenvalue(g: RAGraph) -> float:
    """Smallest eigenvalue of the measurement matrix ``R_tilde``."""
    if g.num_edges == 0:
        return 0.0
    try:
        if g.n <= DENSE_EIG_MAX_N:
            return float(np.linalg.eigvalsh(assemble_r_tilde(g))[0])
        from scipy.sparse.linalg import eigsh

        vals = eigsh(r_tilde_sparse(g), k=1, which="SA", tol=EIG_TOL, return_eigenvectors=False)
        return float(vals[0])
    except (np.linalg.LinAlgError, ArithmeticError) as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc


def majorization_shift(g: RAGraph) -> float:
    """Shift ``mu`` making ``mu I + R_tilde`` positive semidefinite."""
    lam = smallest_eigenvalue(g)
    if lam >= MU_MARGIN:
        return 0.0
    return abs(min(lam, 0.0)) + MU_MARGIN


def majorizer_value(rotations: np.ndarray, anchor: np.ndarray, b: np.ndarray, mu: float) -> float:
    """Linear upper bound on ``-tr(R R_tilde R^T)`` expanded at ``anchor``.

    Evaluates ``3 mu n - 2 tr(B anchor^T R) + tr(anchor B anchor^T)`` where
    ``R`` and ``anchor`` are ``3 x 3n`` block rows and ``B = mu I + R_tilde``.
    """
    rotations = np.asarray(rotations)
    anchor = np.asarray(anchor)
    n = rotations.shape[0]
    r_row = np.concatenate(list(rotations), axis=1)
    a_row = np.concatenate(list(anchor), axis=1)
    return float(3.0 * mu * n - 2.0 * np.trace(b @ a_row.T @ r_row) + np.trace(a_row @ b @ a_row.T))


def _sum_update(g: RAGraph, prev: np.ndarray, mu: float, vertices: range) -> np.ndarray:
    # Column block i of -R B, transposed: -sum_j R_tilde[i, j] R_j^T - mu R_i^T.
    a = cost_blocks(g, prev, vertices) - mu * np.swapaxes(prev[vertices.start:vertices.stop], -1, -2)
    return solve_losso_batch(a)


def _chunks(n: int, parts: int) -> List[range]:
    bounds = np.linspace(0, n, parts + 1).round().astype(int)
    return [range(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]


def solve_sum(g: RAGraph, cfg: Optional[SolverConfig] = None) -> Tuple[np.ndarray, ConvergenceTrace]:
    """Successive upper-bound minimization.

    Computes ``mu = |min(lambda_min(R_tilde), 0)|`` once, then at every
    iteration minimizes the linear majorizer at the current iterate, which
    decouples into one LOSSO per vertex. The blocks are independent, so with
    ``cfg.parallel`` they are split across a thread pool; the result does not
    depend on the split. Stops once ``||R^t - R^{t-1}||_F / ||R^t||_F < epsilon``.

    Returns:
        The final ``(n, 3, 3)`` stack and its convergence trace (``trace.mu``
        holds the shift used).
    """
    cfg = cfg or SolverConfig()
    _check_graph(g)
    start = time.perf_counter()
    rot = initial_rotations(g, cfg)
    mu = majorization_shift(g)
    trace = ConvergenceTrace(initial_objective=_checked_objective(g, rot), mu=mu)
    stack_norm = np.sqrt(3.0 * g.n)

    workers = cfg.workers or os.cpu_count() or 1
    workers = max(1, min(workers, g.n))
    pool = ThreadPoolExecutor(max_workers=workers) if cfg.parallel and workers > 1 else None
    parts = _chunks(g.n, workers) if pool else [range(g.n)]
    try:
        for t in range(1, cfg.max_iter + 1):
            prev = rot
            if pool:
                blocks = list(pool.map(lambda r: _sum_update(g, prev, mu, r), parts))
                rot = np.concatenate(blocks)
            else:
                rot = _sum_update(g, prev, mu, parts[0])
            resid = float(np.linalg.norm(rot - prev) / stack_norm)
            obj = _checked_objective(g, rot)
            if cfg.check_feasibility:
                _assert_feasible(rot, t)
            trace.record(obj, resid, time.perf_counter() - start)
            logger.debug("sum iter %d objective %.12g residual %.3g", t, obj, resid)
            if resid < cfg.epsilon:
                trace.converged = True
                break
    finally:
        if pool:
            pool.shutdown()
    return rot, trace


SOLVERS = {"bcd": solve_bcd, "sum": solve_sum}


def solve(g: RAGraph, algorithm: str = "sum", cfg: Optional[SolverConfig] = None):
    """Dispatch to :func:`solve_bcd` or :func:`solve_sum` by name."""
    try:
        fn = SOLVERS[algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {sorted(SOLVERS)}") from None
    return fn(g, cfg)
