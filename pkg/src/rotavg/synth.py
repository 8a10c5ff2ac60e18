"""Seeded synthetic rotation-averaging instances.

Ground-truth rotations are Haar random. Every pair of vertices is a
candidate edge; each is dropped with probability ``p`` and the survivors get
the measurement ``R_i^T R_j N_ij``, where ``N_ij`` rotates about a uniform
random axis by an angle drawn from ``N(0, sigma^2)``.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .graph import RAGraph
from .so3 import random_rotations


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of a synthetic instance.

    Attributes:
        n: vertex count, at least 2.
        phi: noise scale in radians; the angle standard deviation, or its
            variance when ``phi_is_variance`` is set.
        p: fraction of the complete graph's edges to drop, in ``[0, 1)``.
        seed: seed for every random draw.
    """

    n: int
    phi: float
    p: float = 0.0
    seed: int = 0
    phi_is_variance: bool = False

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if not self.phi >= 0:
            raise ValueError("phi must be >= 0")
        if not 0 <= self.p < 1:
            raise ValueError("p must lie in [0, 1)")

    @property
    def angle_stddev(self) -> float:
        return float(np.sqrt(self.phi)) if self.phi_is_variance else float(self.phi)


def random_spanning_tree(rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniformly random labeled spanning tree of ``K_n`` as ``(n - 1, 2)`` edges.

    Decodes a uniformly random Pruefer sequence.
    """
    if n == 2:
        return np.array([[0, 1]])
    seq = rng.integers(0, n, n - 2)
    degree = np.ones(n, dtype=np.int64)
    np.add.at(degree, seq, 1)
    edges = []
    for v in seq:
        leaf = int(np.flatnonzero(degree == 1)[0])
        edges.append((leaf, int(v)))
        degree[leaf] -= 1
        degree[v] -= 1
    u, w = np.flatnonzero(degree == 1)
    edges.append((int(u), int(w)))
    return np.array(edges)


def _components(n: int, heads: np.ndarray, tails: np.ndarray) -> int:
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    adj = coo_matrix((np.ones(len(heads)), (heads, tails)), shape=(n, n))
    return connected_components(adj, directed=False)[0]


def generate(spec: SynthSpec) -> Tuple[RAGraph, np.ndarray]:
    """Draw a graph and its ground truth.

    If dropping edges disconnects the graph, the missing edges of a uniformly
    random spanning tree are added back. Edges are stored with ``i < j``.

    Returns:
        ``(graph, ground_truth)`` with ground truth of shape ``(n, 3, 3)``.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.n
    truth = random_rotations(rng, n, uniform=True)

    heads, tails = np.triu_indices(n, k=1)
    keep = rng.random(len(heads)) >= spec.p
    tree = random_spanning_tree(rng, n)
    if _components(n, heads[keep], tails[keep]) > 1:
        lo, hi = tree.min(axis=1), tree.max(axis=1)
        # triu_indices enumerates pairs row by row
        pos = lo * n - lo * (lo + 1) // 2 + (hi - lo - 1)
        keep[pos] = True
    heads, tails = heads[keep], tails[keep]

    noise = random_rotations(rng, len(heads), angle_stddev=spec.angle_stddev)
    rel = np.swapaxes(truth[heads], -1, -2) @ truth[tails] @ noise
    return RAGraph(n, heads, tails, rel), truth
