"""Rotation-averaging problem instances and the quantities built from them.

Convention: an edge ``(i, j)`` with measurement ``R_ij`` asks for
``R_i @ R_ij ~= R_j``. Each unordered pair carries at most one measurement;
the reverse direction is implied by the transpose.
"""
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Tuple

import numpy as np

from .constants import DET_TOL, ORTHO_TOL
from .errors import DegenerateInputError
from .so3 import rotation_defects


@dataclass(frozen=True, eq=False)
class RAGraph:
    """A rotation-averaging graph.

    Attributes:
        n: number of vertices (absolute rotations).
        heads: ``(m,)`` source vertex ``i`` of each edge.
        tails: ``(m,)`` target vertex ``j`` of each edge.
        rel: ``(m, 3, 3)`` measurements ``R_ij``.
        allow_disconnected: skip the connectivity check (for building
            deliberately invalid instances).
    """

    n: int
    heads: np.ndarray
    tails: np.ndarray
    rel: np.ndarray
    allow_disconnected: bool = field(default=False, repr=False)
    rotation_tol: float = field(default=ORTHO_TOL, repr=False)

    def __post_init__(self):
        heads = np.asarray(self.heads, dtype=np.int64).reshape(-1)
        tails = np.asarray(self.tails, dtype=np.int64).reshape(-1)
        rel = np.asarray(self.rel, dtype=float).reshape(-1, 3, 3)
        heads.flags.writeable = False
        tails.flags.writeable = False
        rel = rel.copy()
        rel.flags.writeable = False
        object.__setattr__(self, "heads", heads)
        object.__setattr__(self, "tails", tails)
        object.__setattr__(self, "rel", rel)
        self._validate()

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Tuple[int, int, np.ndarray]], **kwargs) -> "RAGraph":
        """Build a graph from ``(i, j, R_ij)`` triples."""
        edges = list(edges)
        heads = [e[0] for e in edges]
        tails = [e[1] for e in edges]
        rel = np.array([np.asarray(e[2], dtype=float) for e in edges]).reshape(-1, 3, 3)
        return cls(n, np.array(heads, dtype=np.int64), np.array(tails, dtype=np.int64), rel, **kwargs)

    def _validate(self):
        n, m = self.n, len(self.heads)
        if n < 1:
            raise ValueError("graph needs at least one vertex")
        if len(self.tails) != m or len(self.rel) != m:
            raise ValueError("heads, tails and rel must have the same length")
        if m:
            if min(self.heads.min(), self.tails.min()) < 0 or max(self.heads.max(), self.tails.max()) >= n:
                raise ValueError(f"edge index out of range [0, {n})")
            loops = np.flatnonzero(self.heads == self.tails)
            if loops.size:
                raise ValueError(f"edge {int(loops[0])} is a self-loop on vertex {int(self.heads[loops[0]])}")
            lo = np.minimum(self.heads, self.tails)
            hi = np.maximum(self.heads, self.tails)
            keys = lo * n + hi
            uniq, first, counts = np.unique(keys, return_index=True, return_counts=True)
            if np.any(counts > 1):
                k = uniq[np.argmax(counts > 1)]
                raise ValueError(f"duplicate measurement for vertex pair ({k // n}, {k % n})")
            ortho, det = rotation_defects(self.rel)
            if ortho > self.rotation_tol or det > self.rotation_tol:
                raise ValueError("edge measurement is not a rotation")
        if not self.allow_disconnected and not self.is_connected():
            raise ValueError("graph is not connected")

    @property
    def num_edges(self) -> int:
        return len(self.heads)

    def edges(self):
        """Iterate over ``(i, j, R_ij)`` triples in storage order."""
        for i, j, r in zip(self.heads, self.tails, self.rel):
            yield int(i), int(j), r

    @cached_property
    def _half_edges(self):
        # Both orientations of every edge, grouped by source vertex:
        # src -> dst with matrix R_tilde[src, dst].
        src = np.concatenate([self.heads, self.tails])
        dst = np.concatenate([self.tails, self.heads])
        mats = np.concatenate([self.rel, np.swapaxes(self.rel, -1, -2)])
        order = np.argsort(src, kind="stable")
        src, dst, mats = src[order], dst[order], mats[order]
        offsets = np.searchsorted(src, np.arange(self.n + 1))
        return src, dst, np.ascontiguousarray(mats), offsets

    def degree(self) -> np.ndarray:
        return np.diff(self._half_edges[3])

    def neighbors(self, l: int) -> Tuple[np.ndarray, np.ndarray]:
        """Neighbor indices of ``l`` and the matching blocks ``R_tilde[l, q]``."""
        _, dst, mats, off = self._half_edges
        return dst[off[l]:off[l + 1]], mats[off[l]:off[l + 1]]

    def is_connected(self) -> bool:
        return bool(np.all(bfs_parents(self)[0] >= 0))


def bfs_parents(g: RAGraph) -> Tuple[np.ndarray, np.ndarray]:
    """Breadth-first search from vertex 0, neighbors visited in ascending order.

    Returns:
        ``(parent, order)``: ``parent[v]`` is the predecessor of ``v`` on its
        shortest path (``-1`` if unreachable, ``0`` for the root itself) and
        ``order`` lists reached vertices in visiting order.
    """
    parent = np.full(g.n, -1, dtype=np.int64)
    parent[0] = 0
    adjacency = [np.sort(g.neighbors(v)[0]) for v in range(g.n)]
    order = [0]
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for w in adjacency[v]:
            if parent[w] < 0:
                parent[w] = v
                order.append(int(w))
                queue.append(int(w))
    return parent, np.array(order, dtype=np.int64)


def _check_stack(g: RAGraph, rotations: np.ndarray) -> np.ndarray:
    rotations = np.asarray(rotations, dtype=float)
    if rotations.shape != (g.n, 3, 3):
        raise ValueError(f"expected {g.n} rotations of shape (3, 3), got array of shape {rotations.shape}")
    return rotations


def objective(g: RAGraph, rotations: np.ndarray) -> float:
    """Chordal cost ``sum_{(i,j) in E} ||R_i R_ij - R_j||_F^2``."""
    rotations = _check_stack(g, rotations)
    resid = rotations[g.heads] @ g.rel - rotations[g.tails]
    return float(np.sum(resid * resid))


def trace_objective_sum(g: RAGraph, rotations: np.ndarray) -> float:
    """``sum_{(i,j) in E} tr(R_i R_ij R_j^T)``; the objective is ``6|E|`` minus twice this."""
    rotations = _check_stack(g, rotations)
    left = rotations[g.heads] @ g.rel
    # tr(L R_j^T) = sum of elementwise products
    return float(np.sum(left * rotations[g.tails]))


def cost_blocks(g: RAGraph, rotations: np.ndarray, vertices=None) -> np.ndarray:
    """LOSSO cost matrices ``A_l = -sum_q R_tilde[l, q] R_q^T`` for many vertices.

    Args:
        vertices: optional contiguous ``range`` of vertices; all by default.

    Returns:
        ``(len(vertices), 3, 3)`` array.
    """
    _, dst, mats, off = g._half_edges
    if vertices is None:
        vertices = range(g.n)
    lo, hi = vertices.start, vertices.stop
    s, e = off[lo], off[hi]
    out = np.zeros((hi - lo, 3, 3))
    if e > s:
        terms = mats[s:e] @ np.swapaxes(rotations[dst[s:e]], -1, -2)
        local = off[lo:hi] - s
        nonempty = off[lo + 1:hi + 1] > off[lo:hi]
        out[nonempty] = -np.add.reduceat(terms, local[nonempty], axis=0)
    return out


def assemble_cost_block(g: RAGraph, rotations: np.ndarray, l: int) -> np.ndarray:
    """Cost matrix ``A_l`` such that the objective, as a function of ``R_l``
    alone, equals ``2 tr(A_l R_l)`` plus a constant.

    Raises:
        DegenerateInputError: if vertex ``l`` has no incident edges.
    """
    rotations = _check_stack(g, rotations)
    if not 0 <= l < g.n:
        raise IndexError(f"vertex {l} out of range [0, {g.n})")
    nbrs, mats = g.neighbors(l)
    if len(nbrs) == 0:
        raise DegenerateInputError(f"vertex {l} has no incident edges")
    return -np.einsum("kab,kcb->ac", mats, rotations[nbrs])


def assemble_r_tilde(g: RAGraph) -> np.ndarray:
    """Dense symmetric ``3n x 3n`` measurement matrix with zero diagonal blocks."""
    n = g.n
    out = np.zeros((n, 3, n, 3))
    out[g.heads, :, g.tails, :] = g.rel
    out[g.tails, :, g.heads, :] = np.swapaxes(g.rel, -1, -2)
    return out.reshape(3 * n, 3 * n)


def r_tilde_sparse(g: RAGraph):
    """Sparse (CSR) version of :func:`assemble_r_tilde`."""
    from scipy import sparse

    src, dst, mats, _ = g._half_edges
    rows = (3 * src[:, None, None] + np.arange(3)[None, :, None]).repeat(3, axis=2)
    cols = (3 * dst[:, None, None] + np.arange(3)[None, None, :]).repeat(3, axis=1)
    return sparse.csr_matrix((mats.ravel(), (rows.ravel(), cols.ravel())), shape=(3 * g.n, 3 * g.n))


def stack_to_row(rotations: np.ndarray) -> np.ndarray:
    """``(n, 3, 3)`` stack to the ``3 x 3n`` row ``[R_1 R_2 ... R_n]``."""
    rotations = np.asarray(rotations)
    return np.concatenate(list(rotations), axis=1) if len(rotations) else np.zeros((3, 0))


def row_to_stack(row: np.ndarray) -> np.ndarray:
    """Inverse of :func:`stack_to_row`."""
    row = np.asarray(row)
    return row.reshape(3, -1, 3).transpose(1, 0, 2)


def spanning_tree_init(g: RAGraph) -> np.ndarray:
    """Chain measurements along BFS shortest paths from vertex 0.

    ``R_0 = I`` and each vertex receives its parent's rotation times the
    measurement on the connecting edge (transposed when the edge is stored in
    the opposite direction). Globally optimal for noiseless measurements.

    Raises:
        ValueError: if the graph is disconnected.
    """
    parent, order = bfs_parents(g)
    if np.any(parent < 0):
        raise ValueError("spanning-tree initialization needs a connected graph")
    out = np.empty((g.n, 3, 3))
    out[0] = np.eye(3)
    for v in order[1:]:
        p = parent[v]
        nbrs, mats = g.neighbors(p)
        k = int(np.flatnonzero(nbrs == v)[0])
        out[v] = out[p] @ mats[k]
    return out
