import numpy as np
import pytest

from rotavg.graph import RAGraph
from rotavg.so3 import random_rotations

ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance_log(request):
    """Append ``PASS``/``FAIL``/``SKIP`` summary lines shown at the end of the run."""
    lines = request.config.stash[ACCEPTANCE_KEY]

    def log(criterion, ok, detail):
        status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        line = f"[{status}] criterion {criterion}: {detail}"
        lines.append(line)
        print(line)
        return ok

    return log


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def rodrigues(u, theta):
    """Cross-product form cos(t) I + sin(t) [u]_x + (1 - cos(t)) u u^T."""
    u = np.asarray(u, dtype=float)
    k = np.array([[0.0, -u[2], u[1]], [u[2], 0.0, -u[0]], [-u[1], u[0], 0.0]])
    return np.cos(theta) * np.eye(3) + np.sin(theta) * k + (1.0 - np.cos(theta)) * np.outer(u, u)


def noise_energy_mc(sigma, samples=2_000_000, seed=2024):
    """Monte Carlo estimate of E[8 sin^2(e / 2)] for e ~ N(0, sigma^2)."""
    e = np.random.default_rng(seed).normal(0.0, sigma, samples)
    return float(np.mean(8.0 * np.sin(e / 2.0) ** 2))


def random_graph(rng, n, density=0.6, noise=0.3):
    """Random connected graph with a path backbone and noisy measurements."""
    truth = random_rotations(rng, n, uniform=True)
    pairs = {(i, i + 1) for i in range(n - 1)}
    for i in range(n):
        for j in range(i + 2, n):
            if rng.random() < density:
                pairs.add((i, j))
    edges = []
    for i, j in sorted(pairs):
        if rng.random() < 0.5:
            i, j = j, i
        rel = truth[i].T @ truth[j] @ random_rotations(rng, 1, angle_stddev=noise)[0]
        edges.append((i, j, rel))
    return RAGraph.from_edges(n, edges), truth


def cycle_graph(rng, n, noise=0.0):
    truth = random_rotations(rng, n, uniform=True)
    edges = []
    for i in range(n):
        j = (i + 1) % n
        rel = truth[i].T @ truth[j]
        if noise:
            rel = rel @ random_rotations(rng, 1, angle_stddev=noise)[0]
        edges.append((i, j, rel))
    return RAGraph.from_edges(n, edges), truth


def complete_graph(rng, n, noise=0.0):
    truth = random_rotations(rng, n, uniform=True)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            rel = truth[i].T @ truth[j]
            if noise:
                rel = rel @ random_rotations(rng, 1, angle_stddev=noise)[0]
            edges.append((i, j, rel))
    return RAGraph.from_edges(n, edges), truth
