"""Random instance generators for property tests and benchmarks.

Every generator takes a ``numpy.random.Generator``; ``default_rng()`` seeds
one from the ``DCGRID_SEED`` environment variable (default 20240917).
"""
import os

import numpy as np

from .coop import CooperativeConfig, laplacian
from .droop import PrimaryDroopConfig
from .network import NetworkSpec, ReducedNetwork

DEFAULT_SEED = 20240917

REF_Y = np.array([[3.5, -1.0, -2.0], [-1.0, 3.7, -2.5], [-2.0, -2.5, 4.75]])
REF_L = np.array([[2.0, -1.0, -1.0], [-1.0, 2.0, -1.0], [-1.0, -1.0, 2.0]])


def default_rng(offset=0):
    seed = int(os.environ.get("DCGRID_SEED", DEFAULT_SEED))
    return np.random.default_rng(seed + offset)


def random_tree_edges(rng, n):
    """Edges of a uniformly shuffled random spanning tree on ``n`` nodes."""
    order = rng.permutation(n)
    return [(int(order[k]), int(order[rng.integers(k)])) for k in range(1, n)]


def random_connected_edges(rng, n, extra_prob=0.3):
    edges = {tuple(sorted(e)) for e in random_tree_edges(rng, n)}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < extra_prob:
                edges.add((i, j))
    return sorted(edges)


def random_network_spec(rng, n_gen, n_load, gen_shunt_prob=0.5, load_injection=False):
    """Connected full network; load nodes always carry a positive shunt."""
    N = n_gen + n_load
    branches = tuple((i, j, float(rng.uniform(0.2, 5.0))) for i, j in random_connected_edges(rng, N))
    shunts = np.zeros(N)
    shunts[:n_gen] = np.where(rng.random(n_gen) < gen_shunt_prob, rng.uniform(0.05, 1.0, n_gen), 0.0)
    shunts[n_gen:] = rng.uniform(0.05, 1.0, n_load)
    inj = rng.uniform(-5.0, 5.0, n_load) if load_injection else None
    return NetworkSpec(n_gen, n_load, branches, shunts, inj)


def random_reduced(rng, n, shunt="some", connected=True):
    """Reduced network with ``shunt`` in {"some", "all", "uniform", "none"}."""
    edges = random_connected_edges(rng, n) if connected else _two_components(rng, n)
    Yc = np.zeros((n, n))
    for i, j in edges:
        g = rng.uniform(0.2, 5.0)
        Yc[i, j] = Yc[j, i] = -g
    Yc -= np.diag(Yc.sum(axis=1))
    if shunt == "none":
        g = np.zeros(n)
    elif shunt == "uniform":
        g = np.full(n, rng.uniform(0.05, 1.0))
    elif shunt == "all":
        g = rng.uniform(0.05, 1.0, n)
    else:
        g = np.where(rng.random(n) < 0.5, rng.uniform(0.05, 1.0, n), 0.0)
        g[rng.integers(n)] = rng.uniform(0.05, 1.0)
    return ReducedNetwork.from_matrix(Yc + np.diag(g))


def _two_components(rng, n):
    k = max(1, n // 2)
    left = random_connected_edges(rng, k)
    right = [(i + k, j + k) for i, j in random_connected_edges(rng, n - k)] if n - k > 1 else []
    return left + right


def random_primary(rng, n, uniform=False, Ud=48.0):
    if uniform:
        return PrimaryDroopConfig.uniform(n, rng.uniform(0.05, 1.0), rng.uniform(1e-3, 0.05), Ud)
    return PrimaryDroopConfig(rng.uniform(0.05, 1.0, n), rng.uniform(1e-3, 0.05, n), np.full(n, Ud))


def random_cooperative(rng, n, uniform=False, alpha=True, L=None):
    """Cooperative gains on a random connected information graph.

    ``uniform`` makes ``beta`` uniform and ``alpha / beta`` a common ratio.
    """
    if L is None:
        L = laplacian(n, random_connected_edges(rng, n))
    if uniform:
        beta = np.full(n, 10 ** rng.uniform(0, 3))
        a = beta * rng.uniform(0, 0.05) if alpha else np.zeros(n)
    else:
        beta = 10 ** rng.uniform(0, 3, n)
        a = rng.uniform(0, 0.05, n) * beta if alpha else np.zeros(n)
    Imax = rng.uniform(5.0, 50.0, n)
    return CooperativeConfig(L, a, beta, Imax)


def reference_instance():
    """The three-generator reference case: ``(net, primary, cooperative)``."""
    net = ReducedNetwork.from_matrix(REF_Y)
    pd = PrimaryDroopConfig.uniform(3, 0.1, 0.01, 48.0)
    cc = CooperativeConfig(REF_L, np.zeros(3), np.full(3, 100.0), np.full(3, 30.0))
    return net, pd, cc
