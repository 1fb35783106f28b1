"""Primary decentralized droop control.

Each generator tracks ``u_k = u_k^d - R_k i_k^m`` where ``i_k^m`` is its output
current passed through a first-order filter with time constant ``tau_k``.
With ``I = Y U`` this closes to the affine system

    D dIm/dt = -(E + Y R) Im + Y Ud.
"""
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NumericFailureError
from .network import ReducedNetwork
from .numerics import AffineSystem, solve

UNIFORM_RTOL = 1e-12


def _vector(x, n, name):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = np.full(n, float(x))
    x = x.reshape(-1)
    if n is not None and x.shape != (n,):
        raise InvalidInputError(f"{name} must have {n} entries, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return x


@dataclass(frozen=True)
class PrimaryDroopConfig:
    """Per-node virtual resistance ``R`` (ohm), filter constant ``tau`` (s),
    rated voltage ``Ud`` (V)."""

    R: np.ndarray
    tau: np.ndarray
    Ud: np.ndarray

    def __post_init__(self):
        R = _vector(self.R, None, "R")
        n = R.shape[0]
        tau = _vector(self.tau, n, "tau")
        Ud = _vector(self.Ud, n, "Ud")
        if np.any(R <= 0):
            raise InvalidInputError("virtual resistances R_k must be > 0")
        if np.any(tau <= 0):
            raise InvalidInputError("filter time constants tau_k must be > 0")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "Ud", Ud)

    @classmethod
    def uniform(cls, n, R, tau, Ud):
        return cls(np.full(n, float(R)), np.full(n, float(tau)), np.full(n, float(Ud)))

    @property
    def n(self):
        return self.R.shape[0]

    def with_Ud(self, Ud):
        return PrimaryDroopConfig(self.R, self.tau, Ud)


def _check_dims(net, cfg):
    if net.n != cfg.n:
        raise InvalidInputError(f"network has {net.n} generators but droop config has {cfg.n}")


def build_primary(net: ReducedNetwork, cfg: PrimaryDroopConfig) -> AffineSystem:
    """Closed loop ``Im' = -D^{-1}(E + Y R) Im + D^{-1} Y Ud``."""
    _check_dims(net, cfg)
    E = np.eye(net.n)
    A = -(E + net.Y * cfg.R[None, :]) / cfg.tau[:, None]
    b = (net.Y @ cfg.Ud) / cfg.tau
    return AffineSystem(A, b)


def decay_bound(net: ReducedNetwork, cfg: PrimaryDroopConfig) -> float:
    """Gershgorin decay rate ``min_i (1 + R_i G_ii) / tau_i`` in 1/s."""
    _check_dims(net, cfg)
    return float(np.min((1.0 + cfg.R * net.shunt) / cfg.tau))


def steady_primary(net: ReducedNetwork, cfg: PrimaryDroopConfig):
    """Steady filtered currents and output voltages under droop control.

    Returns ``(Iss, Uss)`` with ``Iss = (E + Y R)^{-1} Y Ud`` and
    ``Uss = (E + R Y)^{-1} Ud``.
    """
    _check_dims(net, cfg)
    E = np.eye(net.n)
    Iss = solve(E + net.Y * cfg.R[None, :], net.Y @ cfg.Ud, "E + YR")
    Uss = solve(E + cfg.R[:, None] * net.Y, cfg.Ud, "E + RY")
    gap = np.abs(Uss - (cfg.Ud - cfg.R * Iss)).max()
    if gap > 1e-10 * max(1.0, np.abs(cfg.Ud).max()):
        raise NumericFailureError(f"droop steady state inconsistent: |Uss - (Ud - R Iss)| = {gap:.3g}")
    return Iss, Uss


def sharing_deviation(Iss) -> float:
    """Euclidean norm of the mean-removed current vector."""
    Iss = np.asarray(Iss, dtype=float).reshape(-1)
    if Iss.size == 0:
        raise InvalidInputError("need at least one current")
    return float(np.linalg.norm(Iss - Iss.mean()))


def sharing_bound(net: ReducedNetwork, cfg: PrimaryDroopConfig) -> float:
    """Upper bound on ``sigma^2 / u_d^2`` for a uniform rated voltage.

    Diagnostic only; it does not gate any stability verdict.
    """
    _check_dims(net, cfg)
    Ud = cfg.Ud
    if np.ptp(Ud) > UNIFORM_RTOL * max(1.0, np.abs(Ud).max()):
        raise InvalidInputError("sharing bound assumes a uniform rated voltage Ud = u_d * 1")
    n = net.n
    G = net.shunt
    g_max = G.max()
    r_min = cfg.R.min()
    return float(n * (g_max / (1.0 + g_max * r_min)) ** 2 - (np.sum(G / (1.0 + G * cfg.R))) ** 2 / n)
