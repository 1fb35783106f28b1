"""Resistive DC network description and Kron reduction to generator nodes.

Node indices follow one convention throughout: generators are ``0..n_gen-1``
and loads ``n_gen..n_gen+n_load-1``.
"""
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, NumericFailureError
from .numerics import as_finite_matrix

ROW_SUM_ATOL = 1e-12


@dataclass(frozen=True)
class NetworkSpec:
    """Full grid: generator nodes, constant-impedance load nodes, lines, shunts.

    ``branches`` holds ``(k, j, conductance)`` triples in siemens; parallel
    lines between the same pair add up.  ``shunts`` has one entry per node.
    ``load_injections`` is the constant current injected at each load node
    (negative for a consuming constant-current load).
    """

    n_gen: int
    n_load: int
    branches: tuple
    shunts: np.ndarray
    load_injections: np.ndarray = field(default=None)

    def __post_init__(self):
        n_total = self.n_gen + self.n_load
        if self.n_gen < 1 or self.n_load < 0:
            raise InvalidInputError(f"need n_gen >= 1 and n_load >= 0, got {self.n_gen}, {self.n_load}")
        shunts = np.asarray(self.shunts, dtype=float).reshape(-1)
        if shunts.shape != (n_total,):
            raise InvalidInputError(f"shunts must have {n_total} entries, got {shunts.shape[0]}")
        if not np.all(np.isfinite(shunts)) or np.any(shunts < 0):
            raise InvalidInputError("shunt conductances must be finite and >= 0")
        if np.any(shunts[self.n_gen:] <= 0):
            bad = [int(k) for k in np.flatnonzero(shunts[self.n_gen:] <= 0) + self.n_gen]
            raise InvalidInputError(f"load nodes {bad} need a positive shunt conductance")
        branches = []
        for br in self.branches:
            k, j, g = br
            k, j, g = int(k), int(j), float(g)
            if not (0 <= k < n_total and 0 <= j < n_total):
                raise InvalidInputError(f"branch ({k}, {j}) references a node outside 0..{n_total - 1}")
            if k == j:
                raise InvalidInputError(f"self-branch at node {k}")
            if not np.isfinite(g) or g < 0:
                raise InvalidInputError(f"branch ({k}, {j}) has invalid conductance {g}")
            branches.append((k, j, g))
        if self.load_injections is None:
            inj = np.zeros(self.n_load)
        else:
            inj = np.asarray(self.load_injections, dtype=float).reshape(-1)
            if inj.shape != (self.n_load,) or not np.all(np.isfinite(inj)):
                raise InvalidInputError(f"load_injections must be {self.n_load} finite values")
        object.__setattr__(self, "shunts", shunts)
        object.__setattr__(self, "branches", tuple(branches))
        object.__setattr__(self, "load_injections", inj)

    @property
    def n_nodes(self):
        return self.n_gen + self.n_load


@dataclass(frozen=True)
class ReducedNetwork:
    """Generator-only conductance matrix ``Y = Ys + Yc``.

    ``Ys`` is diagonal (row sums of ``Y``, i.e. the equivalent shunts) and
    ``Yc`` carries the branch couplings with zero row sums.
    """

    Y: np.ndarray
    Ys: np.ndarray
    Yc: np.ndarray

    @property
    def n(self):
        return self.Y.shape[0]

    @property
    def shunt(self):
        return np.diag(self.Ys).copy()

    @property
    def has_shunt(self):
        return bool(np.any(self.shunt > ROW_SUM_ATOL * max(1.0, np.abs(self.Y).max())))

    @classmethod
    def from_matrix(cls, Y):
        """Split a symmetric conductance matrix into shunt and branch parts."""
        Y = as_finite_matrix(Y, "Y")
        scale = max(1.0, float(np.abs(Y).max())) if Y.size else 1.0
        if np.abs(Y - Y.T).max(initial=0.0) > 1e-12 * scale:
            raise InvalidInputError("conductance matrix Y must be symmetric")
        Y = 0.5 * (Y + Y.T)
        off = Y - np.diag(np.diag(Y))
        if np.any(off > 1e-12 * scale):
            raise InvalidInputError("off-diagonal entries of Y must be <= 0")
        g = Y.sum(axis=1)
        if np.any(g < -1e-10 * scale):
            raise InvalidInputError(f"row sums of Y must be >= 0 (equivalent shunts), got {g.min():.3g}")
        g = np.where(np.abs(g) <= ROW_SUM_ATOL * scale, 0.0, g)
        Ys = np.diag(g)
        return cls(Y, Ys, Y - Ys)


def build_full(spec: NetworkSpec):
    """Nodal conductance matrix of the full grid."""
    N = spec.n_nodes
    Yf = np.zeros((N, N))
    for k, j, g in spec.branches:
        Yf[k, j] -= g
        Yf[j, k] -= g
        Yf[k, k] += g
        Yf[j, j] += g
    Yf[np.diag_indices(N)] += spec.shunts
    return Yf


def kron_reduce(spec: NetworkSpec):
    """Eliminate load voltages.

    Returns ``(reduced, injection)`` where the generator currents of the full
    grid satisfy ``I = reduced.Y @ U + injection``.
    """
    Yf = build_full(spec)
    n = spec.n_gen
    if spec.n_load == 0:
        return ReducedNetwork.from_matrix(Yf), np.zeros(n)
    Ygg, Ygl, Yll = Yf[:n, :n], Yf[:n, n:], Yf[n:, n:]
    try:
        lu = np.linalg.cholesky(Yll)
    except np.linalg.LinAlgError as exc:
        raise InvalidInputError("load block Y'_ll is singular or not positive definite") from exc
    # Yll^{-1} [Ygl^T, I_L] through the Cholesky factor
    rhs = np.column_stack([Ygl.T, spec.load_injections])
    sol = np.linalg.solve(lu.T, np.linalg.solve(lu, rhs))
    Y = Ygg - Ygl @ sol[:, :n]
    injection = Ygl @ sol[:, n]
    if not np.all(np.isfinite(Y)):
        raise NumericFailureError("Kron reduction produced non-finite entries")
    return ReducedNetwork.from_matrix(0.5 * (Y + Y.T)), injection


def is_connected(Yc) -> bool:
    """Breadth-first search over the nonzero off-diagonal pattern of ``Yc``."""
    Yc = np.asarray(Yc, dtype=float)
    n = Yc.shape[0]
    if n <= 1:
        return True
    adj = (Yc != 0.0) | (Yc.T != 0.0)
    np.fill_diagonal(adj, False)
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        k = queue.popleft()
        for j in np.flatnonzero(adj[k] & ~seen):
            seen[j] = True
            queue.append(j)
    return bool(seen.all())
