"""Time-domain propagation of the droop and cooperative closed loops.

Both loops are linear, so the default integrator steps with the matrix
exponential; fixed-step RK4 is kept as an independent cross-check.
"""
import csv
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .coop import CooperativeConfig, build_coop
from .droop import PrimaryDroopConfig, _vector, build_primary
from .errors import InvalidInputError, NumericFailureError
from .network import ReducedNetwork
from .numerics import AffineSystem, expm

STIFFNESS_FRACTION = 20
DEFAULT_FRACTION = 50


class Mode(str, enum.Enum):
    PRIMARY = "PrimaryOnly"
    COOPERATIVE = "Cooperative"


@dataclass(frozen=True)
class Exact:
    """Matrix-exponential stepping."""


@dataclass(frozen=True)
class RK4:
    """Classical fixed-step Runge-Kutta; ``dt=None`` picks ``min(tau)/50``."""

    dt: float = None


@dataclass(frozen=True)
class Phase:
    mode: Mode
    duration: float

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if not (self.duration > 0 and math.isfinite(self.duration)):
            raise InvalidInputError(f"phase duration must be positive, got {self.duration}")


@dataclass(frozen=True)
class Scenario:
    """A grid, its controllers and a sequence of control phases.

    The rated voltages start at ``primary.Ud`` and stay frozen during
    primary-only phases; the filtered currents start at ``Im0`` (zeros by
    default).  Both are carried continuously across phase switches.
    """

    net: ReducedNetwork
    primary: PrimaryDroopConfig
    phases: tuple
    cooperative: CooperativeConfig = None
    Im0: np.ndarray = None
    record_dt: float = 1e-3
    method: object = field(default_factory=Exact)

    def __post_init__(self):
        n = self.net.n
        if self.primary.n != n:
            raise InvalidInputError(f"droop config has {self.primary.n} nodes, network has {n}")
        if self.cooperative is not None and self.cooperative.n != n:
            raise InvalidInputError(f"cooperative config has {self.cooperative.n} nodes, network has {n}")
        phases = tuple(p if isinstance(p, Phase) else Phase(*p) for p in self.phases)
        if not phases:
            raise InvalidInputError("scenario needs at least one phase")
        if self.cooperative is None and any(p.mode is Mode.COOPERATIVE for p in phases):
            raise InvalidInputError("cooperative phase requested without a cooperative config")
        if not (self.record_dt > 0 and math.isfinite(self.record_dt)):
            raise InvalidInputError(f"record_dt must be positive, got {self.record_dt}")
        Im0 = np.zeros(n) if self.Im0 is None else _vector(self.Im0, n, "Im0")
        if not isinstance(self.method, (Exact, RK4)):
            raise InvalidInputError(f"unknown integration method {self.method!r}")
        object.__setattr__(self, "phases", phases)
        object.__setattr__(self, "Im0", Im0)

    @property
    def duration(self):
        return sum(p.duration for p in self.phases)


@dataclass(frozen=True)
class Trajectory:
    """Sampled states with derived voltages ``U = Ud - R Im``, currents
    ``I = Y U`` and per-unit ratios ``Im / Imax`` (NaN without ``Imax``)."""

    times: np.ndarray
    Im: np.ndarray
    Ud: np.ndarray
    U: np.ndarray
    I: np.ndarray
    ratios: np.ndarray
    modes: tuple

    @property
    def states(self):
        return np.hstack([self.Im, self.Ud])

    def header(self):
        n = self.Im.shape[1]
        cols = ["t"]
        for name in ("Im", "Ud", "U", "I", "ratio"):
            cols += [f"{name}_{k}" for k in range(1, n + 1)]
        return cols

    def write_csv(self, fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(self.header())
        data = np.hstack([self.times[:, None], self.Im, self.Ud, self.U, self.I, self.ratios])
        for row in data:
            writer.writerow([format(v, ".9g") for v in row])


@dataclass(frozen=True)
class Drift:
    absolute: float
    normalized: float
    samples: int


def _augmented(system: AffineSystem):
    d = system.dim
    M = np.zeros((d + 1, d + 1))
    M[:d, :d] = system.A
    M[:d, d] = system.b
    return M


def _exact_step(system, h):
    d = system.dim
    F = expm(_augmented(system), h)
    return F[:d, :d], F[:d, d]


def _rk4(system, x0, h, n_intervals, substeps):
    out, failed = kernels.rk4_trajectory(system.A, system.b, x0, h, n_intervals, substeps)
    if failed >= 0:
        raise NumericFailureError(f"RK4 diverged (|x| > {kernels.BLOWUP:g}) at step {failed}")
    return out


def propagate(system: AffineSystem, x0, t, method=Exact()):
    """State of ``x' = A x + b`` at time ``t`` from ``x0``.

    The affine term is folded into an augmented constant coordinate, so a
    singular ``A`` needs no special handling.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape != (system.dim,):
        raise InvalidInputError(f"x0 must have {system.dim} entries")
    if not t >= 0:
        raise InvalidInputError(f"t must be >= 0, got {t}")
    if t == 0:
        return x0.copy()
    if isinstance(method, Exact):
        Phi, c = _exact_step(system, t)
        return Phi @ x0 + c
    if method.dt is None or not method.dt > 0:
        raise InvalidInputError("RK4 needs a positive step dt")
    steps = max(1, math.ceil(t / method.dt - 1e-9))
    return _rk4(system, x0, t / steps, 1, steps)[-1]


def _grid(duration, dt):
    """Intervals of length ``dt`` covering ``duration`` plus an optional tail."""
    full = int(math.floor(duration / dt + 1e-9))
    tail = duration - full * dt
    if tail <= 1e-12 * duration:
        tail = 0.0
    return full, tail


def _phase_samples(system, x0, duration, record_dt, method, min_tau):
    full, tail = _grid(duration, record_dt)
    if isinstance(method, Exact):
        parts = [kernels.affine_recurrence(*_exact_step(system, record_dt), x0, full)] if full else [x0[None, :]]
        if tail:
            Phi, c = _exact_step(system, tail)
            parts.append((Phi @ parts[-1][-1] + c)[None, :])
        bad = np.flatnonzero(~np.all(np.isfinite(np.vstack(parts)), axis=1))
        if bad.size:
            raise NumericFailureError(f"state overflowed at sample {int(bad[0])} (unstable loop)")
    else:
        dt = method.dt if method.dt is not None else min_tau / DEFAULT_FRACTION
        if dt > min_tau / STIFFNESS_FRACTION * (1 + 1e-12):
            raise InvalidInputError(f"RK4 step {dt:g} s exceeds min(tau)/{STIFFNESS_FRACTION} = "
                                    f"{min_tau / STIFFNESS_FRACTION:g} s")
        sub = max(1, math.ceil(record_dt / dt - 1e-9))
        parts = [_rk4(system, x0, record_dt / sub, full, sub)] if full else [x0[None, :]]
        if tail:
            sub = max(1, math.ceil(tail / dt - 1e-9))
            parts.append(_rk4(system, parts[-1][-1], tail / sub, 1, sub)[1:])
    times = [record_dt * np.arange(full + 1)]
    if tail:
        times.append(np.array([duration]))
    return np.concatenate(times), np.vstack(parts)


def run_scenario(s: Scenario) -> Trajectory:
    n = s.net.n
    pd, cc = s.primary, s.cooperative
    min_tau = float(pd.tau.min())
    coop_sys = None
    if cc is not None and any(p.mode is Mode.COOPERATIVE for p in s.phases):
        coop_sys = AffineSystem(build_coop(s.net, pd, cc).Ac, np.zeros(2 * n))
    x = np.concatenate([s.Im0, pd.Ud])
    t0 = 0.0
    times, states, modes = [], [], []
    for k, phase in enumerate(s.phases):
        try:
            if phase.mode is Mode.PRIMARY:
                system = build_primary(s.net, pd.with_Ud(x[n:]))
                t, im = _phase_samples(system, x[:n], phase.duration, s.record_dt, s.method, min_tau)
                xs = np.hstack([im, np.broadcast_to(x[n:], im.shape)])
            else:
                t, xs = _phase_samples(coop_sys, x, phase.duration, s.record_dt, s.method, min_tau)
        except NumericFailureError as exc:
            raise NumericFailureError(f"phase {k} ({phase.mode.value}, starting t = {t0:g} s): {exc}") from exc
        last = k == len(s.phases) - 1
        keep = slice(None) if last else slice(0, -1)
        times.append(t0 + t[keep])
        states.append(xs[keep])
        modes += [phase.mode] * len(t[keep])
        x = xs[-1].copy()
        t0 += phase.duration
    times = np.concatenate(times)
    X = np.vstack(states)
    Im, Ud = X[:, :n], X[:, n:]
    U = Ud - Im * pd.R[None, :]
    I = U @ s.net.Y.T
    ratios = Im / cc.Imax[None, :] if cc is not None else np.full_like(Im, np.nan)
    return Trajectory(times, Im, Ud, U, I, ratios, tuple(modes))


def conservation_monitor(traj: Trajectory, v_l) -> Drift:
    """Largest change of ``v_l . x(t)`` within each contiguous cooperative run.

    ``normalized`` divides by ``|v_l . x|`` at the start of the run (left
    equal to ``absolute`` when that start value is zero).
    """
    v_l = np.asarray(v_l, dtype=float)
    coop = np.array([m is Mode.COOPERATIVE for m in traj.modes])
    q = traj.states @ v_l
    worst_abs = worst_norm = 0.0
    start = None
    for i in range(len(coop) + 1):
        inside = i < len(coop) and coop[i]
        if inside and start is None:
            start = i
        elif not inside and start is not None:
            seg = q[start:i]
            d = float(np.abs(seg - seg[0]).max())
            worst_abs = max(worst_abs, d)
            worst_norm = max(worst_norm, d / abs(seg[0]) if seg[0] != 0 else d)
            start = None
    return Drift(worst_abs, worst_norm, int(coop.sum()))
