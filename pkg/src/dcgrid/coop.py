"""Secondary distributed current-sharing control.

Every node integrates the disagreement of per-unit currents with its
information-graph neighbours and shifts its rated voltage accordingly:

    u_k^d = -(alpha_k + beta_k / s) * sum_j l_kj i_j^m / I_j^max

Together with the droop loop this gives a 2n-state linear system with state
``x = (Im, Ud)``.  Its matrix always has a zero eigenvalue, so the relevant
notion is semistability rather than asymptotic stability.
"""
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .droop import PrimaryDroopConfig, _vector, steady_primary
from .errors import InvalidInputError, NumericFailureError
from .kernels import hurwitz_batch
from .network import ReducedNetwork, is_connected
from .numerics import eig, psd_check, skew, solve, sym, zero_semisimple

ZERO_TOL = 1e-9
UNIFORM_RTOL = 1e-9
THETA_CAP = 1e6
THETA_TOL = 1e-8
NU_CAP = 1e6
SKEW_RTOL = 1e-12


@dataclass(frozen=True)
class CooperativeConfig:
    """Information-graph Laplacian ``L`` and per-node gains.

    ``alpha`` (proportional) may be zero; ``beta`` (integral) and ``Imax``
    (maximum current, A) must be positive.  ``L`` is the Laplacian of an
    undirected graph: symmetric, zero row sums, nonpositive off-diagonals.
    """

    L: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    Imax: np.ndarray

    def __post_init__(self):
        L = np.asarray(self.L, dtype=float)
        if L.ndim != 2 or L.shape[0] != L.shape[1] or not np.all(np.isfinite(L)):
            raise InvalidInputError("L must be a finite square matrix")
        n = L.shape[0]
        scale = max(1.0, np.abs(L).max())
        off = L - np.diag(np.diag(L))
        if np.any(off > 0):
            raise InvalidInputError("Laplacian off-diagonals must be <= 0")
        if np.abs(L.sum(axis=1)).max(initial=0.0) > 1e-12 * scale:
            raise InvalidInputError("Laplacian rows must sum to zero")
        if np.abs(L - L.T).max(initial=0.0) > 1e-12 * scale:
            raise InvalidInputError("Laplacian must be symmetric (undirected information graph)")
        alpha = _vector(self.alpha, n, "alpha")
        beta = _vector(self.beta, n, "beta")
        Imax = _vector(self.Imax, n, "Imax")
        if np.any(alpha < 0):
            raise InvalidInputError("proportional gains alpha_k must be >= 0")
        if np.any(beta <= 0):
            raise InvalidInputError("integral gains beta_k must be > 0")
        if np.any(Imax <= 0):
            raise InvalidInputError("maximum currents I_k^max must be > 0")
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "Imax", Imax)

    @property
    def n(self):
        return self.L.shape[0]

    @classmethod
    def from_edges(cls, n, edges, alpha, beta, Imax):
        return cls(laplacian(n, edges), alpha, beta, Imax)


def laplacian(n, edges):
    """Unweighted Laplacian of an undirected graph given as index pairs."""
    L = np.zeros((n, n))
    for i, j in {tuple(sorted((int(i), int(j)))) for i, j in edges}:
        if i == j:
            raise InvalidInputError(f"self-loop at node {i}")
        L[i, j] = L[j, i] = -1.0
    L[np.diag_indices(n)] = -L.sum(axis=1)
    return L


def physical_laplacian(net: ReducedNetwork):
    """Information graph that mirrors the coupling pattern of ``Y``."""
    off = (net.Yc != 0.0)
    np.fill_diagonal(off, False)
    edges = [(int(i), int(j)) for i, j in zip(*np.nonzero(np.triu(off | off.T)))]
    return laplacian(net.n, edges)


@dataclass(frozen=True)
class ClosedLoopSystem:
    """State matrix of ``d/dt (Im, Ud) = Ac (Im, Ud)``."""

    Ac: np.ndarray

    @property
    def n(self):
        return self.Ac.shape[0] // 2

    @property
    def blocks(self):
        n = self.n
        A = self.Ac
        return A[:n, :n], A[:n, n:], A[n:, :n], A[n:, n:]


class Classification(str, enum.Enum):
    SEMISTABLE = "Semistable"
    ASYMPTOTICALLY_STABLE = "AsymptoticallyStable"
    NOT_SEMISTABLE = "NotSemistable"


@dataclass(frozen=True)
class StabilityVerdict:
    classification: Classification
    zero_eigenvalue_count: int
    max_nonzero_real_part: float
    zero_semisimple: bool
    eigenvalues: np.ndarray
    warnings: tuple = ()

    @property
    def semistable(self):
        return self.classification is not Classification.NOT_SEMISTABLE


class Branch(str, enum.Enum):
    SHUNT_PRESENT = "ShuntPresent"
    SHUNTLESS = "Shuntless"


@dataclass(frozen=True)
class SteadyStatePrediction:
    """Equilibrium reached from a given initial state.

    ``rc1`` is the common current ratio (zero without shunts), ``rc2`` the
    coefficient of the right null vector (equal to ``rc1`` with shunts, the
    common voltage without).  ``Udinf`` is the limit of the rated voltages.
    """

    rc1: float
    rc2: float
    Uinf: np.ndarray
    Iinf: np.ndarray
    Udinf: np.ndarray
    branch: Branch


@dataclass(frozen=True)
class ConditionResult:
    """Outcome of a sufficient-condition check.

    ``nu`` is the largest feasible multiplier found, ``theta`` the asymmetry
    measure used (``math.inf`` when the matrix is symmetric, ``None`` when it
    does not exist).  ``theta_evaluated`` tells a nonexistent theta apart
    from one that was never computed because a premise failed.
    """

    holds: bool
    reason: str
    nu: float = None
    theta: float = None
    theta_evaluated: bool = False


class Status(str, enum.Enum):
    PASS = "Pass"
    FAIL = "Fail"
    NOT_APPLICABLE = "NotApplicable"


@dataclass(frozen=True)
class PropertyResult:
    status: Status
    detail: str = ""
    values: dict = field(default_factory=dict)


def _check_dims(net, pd, cc):
    if not (net.n == pd.n == cc.n):
        raise InvalidInputError(f"dimension mismatch: network {net.n}, droop {pd.n}, cooperative {cc.n}")


def build_coop(net: ReducedNetwork, pd: PrimaryDroopConfig, cc: CooperativeConfig) -> ClosedLoopSystem:
    _check_dims(net, pd, cc)
    n = net.n
    E = np.eye(n)
    Y, L = net.Y, cc.L
    EYR = E + Y * pd.R[None, :]
    A11 = -EYR / pd.tau[:, None]
    A12 = Y / pd.tau[:, None]
    LU = L / cc.Imax[None, :]  # L Upsilon^{-1}
    M21 = -cc.beta[:, None] * LU - cc.alpha[:, None] * (LU @ A11)
    M22 = -cc.alpha[:, None] * (LU @ A12)
    return ClosedLoopSystem(np.block([[A11, A12], [M21, M22]]))


def second_order_coeffs(net, pd, cc):
    """Coefficients ``(M, C, K)`` of ``M x'' + C x' + K x = 0`` sharing the
    closed-loop spectrum: ``M = D Ups``, ``C = Ups + Y R Ups + Y Phi L``,
    ``K = Y Psi L``."""
    _check_dims(net, pd, cc)
    Y, L = net.Y, cc.L
    Ups = np.diag(cc.Imax)
    M = np.diag(pd.tau * cc.Imax)
    C = Ups + (Y * (pd.R * cc.Imax)[None, :]) + Y @ (cc.alpha[:, None] * L)
    K = Y @ (cc.beta[:, None] * L)
    return M, C, K


def quad_coeffs(M, C, K, x):
    """Scalar quadratic ``(a_m + j b_m) l^2 + (a_d + j b_d) l + (a_k + j b_k)``
    obtained by projecting the matrix pencil on ``x``.

    ``a = xR' S xR + xI' S xI`` with ``S`` the symmetric part and
    ``b = 2 xR' W xI`` with ``W`` the skew part.
    """
    x = np.asarray(x, dtype=complex).reshape(-1)
    if not np.any(x != 0):
        raise InvalidInputError("projection vector must be nonzero")
    xr, xi = x.real, x.imag
    out = []
    for A in (M, C, K):
        A = np.asarray(A, dtype=float)
        S, W = sym(A), skew(A)
        out.append(float(xr @ S @ xr + xi @ S @ xi))
        out.append(float(2.0 * xr @ W @ xi))
    return tuple(out)


def hurwitz_quadratic(a_m, b_m, a_d, b_d, a_k, b_k) -> bool:
    """True iff both roots of the complex quadratic have negative real part."""
    if a_m == 0 and b_m == 0:
        raise InvalidInputError("leading coefficient of the quadratic is zero")
    return bool(hurwitz_batch(np.array([[a_m, b_m, a_d, b_d, a_k, b_k]]))[0])


def _theta_feasible(Ms, Mk, theta):
    n = Ms.shape[0]
    Z = np.zeros((n, n))
    base = np.block([[Ms, Z], [Z, Ms]])
    cross = np.block([[Z, Mk], [Mk.T, Z]])
    return psd_check(sym(base + theta * cross)) and psd_check(sym(base - theta * cross))


def theta_measure(M, cap=THETA_CAP, tol=THETA_TOL):
    """Largest ``theta >= 0`` keeping ``[[Ms, 0], [0, Ms]] +/- theta [[0, Mk], [Mk', 0]]`` PSD.

    Returns ``None`` when the symmetric part is not PSD (no such theta),
    ``math.inf`` when ``M`` is symmetric or feasibility holds at ``cap``.
    """
    M = np.asarray(M, dtype=float)
    Ms, Mk = sym(M), skew(M)
    if not psd_check(Ms):
        return None
    if np.linalg.norm(Mk) <= SKEW_RTOL * np.linalg.norm(M):
        return math.inf
    if _theta_feasible(Ms, Mk, cap):
        return math.inf
    lo, hi = 0.0, float(cap)
    while hi - lo >= tol:
        mid = 0.5 * (lo + hi)
        if _theta_feasible(Ms, Mk, mid):
            lo = mid
        else:
            hi = mid
    # feasibility is an interval [0, theta*]; the bracket must straddle it
    if not _theta_feasible(Ms, Mk, lo) or _theta_feasible(Ms, Mk, hi):
        raise NumericFailureError("theta feasibility is not monotone; bisection bracket is inconsistent")
    return lo


def _largest_nu(P, Q, cap=NU_CAP, floor=1e-12):
    """Largest ``nu`` in ``[floor, cap]`` with ``sym(P - nu Q)`` PSD, else 0.0.

    Geometric bisection; the returned value is always feasible.
    """
    def feasible(nu):
        return psd_check(sym(P - nu * Q))

    if feasible(cap):
        return float(cap)
    if not feasible(floor):
        return 0.0
    lo, hi = floor, float(cap)
    while hi / lo > 1.0 + 1e-10:
        mid = math.sqrt(lo * hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _uniform(x):
    x = np.asarray(x, dtype=float)
    return np.ptp(x) <= UNIFORM_RTOL * max(np.abs(x).max(), 1e-300)


def check_c1(net, pd, cc) -> ConditionResult:
    """First sufficient semistability condition.

    Premises: ``R_i I_i^max = u`` and ``alpha_i = r beta_i`` uniform, a
    positive ``nu1`` with ``sym(Ups + u Y) - nu1 sym(Y Psi L)`` PSD, and
    ``(nu1 + r) theta(Y Psi L)^2 + r > tau_max``.
    """
    _check_dims(net, pd, cc)
    RI = pd.R * cc.Imax
    if not _uniform(RI):
        return ConditionResult(False, "premise fails: R_i * I_i^max is not uniform")
    ratio = cc.alpha / cc.beta
    if not _uniform(ratio):
        return ConditionResult(False, "premise fails: alpha_i / beta_i is not uniform")
    u_bar, r_bar = float(RI.mean()), float(ratio.mean())
    K = net.Y @ (cc.beta[:, None] * cc.L)
    theta = theta_measure(K)
    if theta is None:
        return ConditionResult(False, "Y Psi L has an indefinite symmetric part, therefore θ(YΨL) does not exist",
                               theta_evaluated=True)
    P = np.diag(cc.Imax) + u_bar * net.Y
    nu1 = _largest_nu(P, sym(K))
    if nu1 <= 0:
        return ConditionResult(False, "no positive nu1 satisfies Ups + u Y >= nu1 Y Psi L", nu1, theta, True)
    tau_max = float(pd.tau.max())
    if math.isinf(theta):
        ok = nu1 + r_bar > 0
    else:
        ok = (nu1 + r_bar) * theta**2 + r_bar > tau_max
    if not ok:
        return ConditionResult(False, f"(nu1 + r) theta^2 + r does not exceed tau_max = {tau_max:g}", nu1, theta, True)
    return ConditionResult(True, "condition c1 holds", nu1, theta, True)


def check_c2(net, pd, cc) -> ConditionResult:
    """Second sufficient semistability condition.

    Premises: uniform ``tau`` and ``beta``, ``alpha = r beta`` uniform,
    ``Ys >= 0`` and ``Y`` invertible, a positive ``nu2`` with
    ``sym(Y^{-1} Ups + R Ups) - nu2 beta L`` PSD, and
    ``(nu2 + r) theta(Y Ups)^2 + nu2 + r > tau``.
    """
    _check_dims(net, pd, cc)
    if not _uniform(pd.tau):
        return ConditionResult(False, "premise fails: filter time constants are not uniform (D != tau E)")
    if not _uniform(cc.beta):
        return ConditionResult(False, "premise fails: integral gains are not uniform (Psi != beta E)")
    ratio = cc.alpha / cc.beta
    if not _uniform(ratio):
        return ConditionResult(False, "premise fails: alpha_i / beta_i is not uniform (Phi != r Psi)")
    if np.any(net.shunt < 0):
        return ConditionResult(False, "premise fails: Ys has negative entries")
    if not net.has_shunt:
        return ConditionResult(False, "premise fails: Y is singular (no shunt conductance), Y^{-1} does not exist")
    tau, beta, r_bar = float(pd.tau.mean()), float(cc.beta.mean()), float(ratio.mean())
    Ups = np.diag(cc.Imax)
    theta = theta_measure(net.Y @ Ups)
    if theta is None:
        return ConditionResult(False, "Y Ups has an indefinite symmetric part, therefore θ(YΥ) does not exist",
                               theta_evaluated=True)
    try:
        YinvU = solve(net.Y, Ups, "Y")
    except NumericFailureError as exc:
        return ConditionResult(False, f"premise fails: {exc}", None, theta, True)
    P = sym(YinvU) + np.diag(pd.R * cc.Imax)
    nu2 = _largest_nu(P, beta * sym(cc.L))
    if nu2 <= 0:
        return ConditionResult(False, "no positive nu2 satisfies Y^{-1} Ups + R Ups >= nu2 beta L", nu2, theta, True)
    if math.isinf(theta):
        ok = nu2 + r_bar > 0
    else:
        ok = (nu2 + r_bar) * theta**2 + nu2 + r_bar > tau
    if not ok:
        return ConditionResult(False, f"(nu2 + r) theta^2 + nu2 + r does not exceed tau = {tau:g}", nu2, theta, True)
    return ConditionResult(True, "condition c2 holds", nu2, theta, True)


def semistability_check(sys: ClosedLoopSystem, net: ReducedNetwork = None, ztol=ZERO_TOL) -> StabilityVerdict:
    """Spectral semistability test.

    Zero eigenvalues are those with ``|l| <= ztol |Ac|``; the zero eigenvalue
    is semisimple iff ``rank(Ac) == rank(Ac^2)`` (see ``zero_semisimple``).  With a network given, a
    connected grid is expected to produce exactly one zero eigenvalue.
    """
    A = np.asarray(sys.Ac, dtype=float)
    norm = np.linalg.norm(A, 2)
    spec = eig(A)
    lam = spec.eigenvalues
    thr = ztol * max(norm, np.finfo(float).tiny)
    zero = np.abs(lam) <= thr
    n_zero = int(zero.sum())
    nonzero = lam[~zero]
    max_re = float(nonzero.real.max()) if nonzero.size else -math.inf
    imaginary = bool(np.any((np.abs(nonzero.real) <= thr) & (np.abs(nonzero.imag) > thr)))
    semisimple = True
    if n_zero:
        semisimple = zero_semisimple(A)[0]
    warnings = []
    if net is not None:
        if not is_connected(net.Yc):
            warnings.append("network is not connected: the single-zero-eigenvalue result does not apply")
        elif n_zero != 1:
            warnings.append(f"connected network should give exactly one zero eigenvalue, found {n_zero}")
    if imaginary or max_re >= -thr or not semisimple:
        cls = Classification.NOT_SEMISTABLE
    elif n_zero == 0:
        cls = Classification.ASYMPTOTICALLY_STABLE
    else:
        cls = Classification.SEMISTABLE
    return StabilityVerdict(cls, n_zero, max_re, semisimple, lam, tuple(warnings))


def _conserved_weights(pd, cc):
    """Left null vector ``v_l = [Ups^{-1} L' Phi Psi^{-1} 1; Psi^{-1} 1]``."""
    psi_inv = 1.0 / cc.beta
    top = (cc.L.T @ (cc.alpha * psi_inv)) / cc.Imax
    return np.concatenate([top, psi_inv])


def null_eigenvectors(net, pd, cc):
    """Left and right null vectors of the closed-loop matrix."""
    _check_dims(net, pd, cc)
    v_l = _conserved_weights(pd, cc)
    if net.has_shunt:
        Yinv_I = solve(net.Y, cc.Imax, "Y")
        v_r = np.concatenate([cc.Imax, Yinv_I + pd.R * cc.Imax])
    else:
        v_r = np.concatenate([np.zeros(net.n), np.ones(net.n)])
    return v_l, v_r


def predict_steady(net, pd, cc, Im0=None, Ud0=None) -> SteadyStatePrediction:
    """Equilibrium reached from ``(Im0, Ud0)`` by a semistable closed loop.

    ``Im0`` defaults to zeros and ``Ud0`` to the configured rated voltages.
    """
    _check_dims(net, pd, cc)
    n = net.n
    Im0 = np.zeros(n) if Im0 is None else _vector(Im0, n, "Im0")
    Ud0 = pd.Ud if Ud0 is None else _vector(Ud0, n, "Ud0")
    psi_inv = 1.0 / cc.beta
    numer = psi_inv @ (Ud0 + cc.alpha * (cc.L @ (Im0 / cc.Imax)))
    if net.has_shunt:
        Yinv_I = solve(net.Y, cc.Imax, "Y")
        rc1 = float(numer / (psi_inv @ (Yinv_I + pd.R * cc.Imax)))
        Iinf = rc1 * cc.Imax
        Uinf = rc1 * Yinv_I
        return SteadyStatePrediction(rc1, rc1, Uinf, Iinf, Uinf + pd.R * Iinf, Branch.SHUNT_PRESENT)
    rc2 = float(numer / psi_inv.sum())
    U = np.full(n, rc2)
    return SteadyStatePrediction(0.0, rc2, U, np.zeros(n), U.copy(), Branch.SHUNTLESS)


def _rel_close(a, b, rtol):
    return abs(a - b) <= rtol * max(abs(a), abs(b), 1e-300)


def corollary_checks(net, pd, cc, prediction: SteadyStatePrediction, primary_ss=None, Im0=None, rtol=1e-9):
    """Evaluate the steady-state properties P1..P5 of the cooperative loop.

    ``prediction`` must come from ``Ud0 = pd.Ud``; ``primary_ss`` is the
    droop steady state ``(Iss, Uss)`` for the same rated voltages (computed
    when omitted).  Returns ``{"P1": PropertyResult, ...}``.
    """
    _check_dims(net, pd, cc)
    n = net.n
    na = Status.NOT_APPLICABLE
    out = {}
    if Im0 is not None and np.any(np.asarray(Im0, dtype=float) != 0):
        return {f"P{k}": PropertyResult(na, "premise fails: Im(0) != 0") for k in range(1, 6)}
    if not net.has_shunt:
        return {f"P{k}": PropertyResult(na, "premise fails: Ys = 0") for k in range(1, 6)}
    if primary_ss is None:
        primary_ss = steady_primary(net, pd)
    Iss, Uss = primary_ss
    rc1 = prediction.rc1
    ratios = Iss / cc.Imax
    r_lo, r_hi = float(ratios.min()), float(ratios.max())
    within_limits = bool(np.all(Iss <= cc.Imax))
    vals = {"rc1": rc1, "R_dec_min": r_lo, "R_dec_max": r_hi}

    if not within_limits:
        out["P1"] = PropertyResult(na, "premise fails: droop currents exceed I^max", vals)
        out["P2"] = PropertyResult(na, "premise fails: droop currents exceed I^max", vals)
    else:
        ok = rc1 < 1.0 and r_lo - rtol <= rc1 <= r_hi + rtol
        out["P1"] = PropertyResult(Status.PASS if ok else Status.FAIL,
                                   f"rc1 = {rc1:.6g}, droop ratios in [{r_lo:.6g}, {r_hi:.6g}]", vals)
        if r_lo <= 0:
            out["P2"] = PropertyResult(na, "premise fails: nonpositive droop current ratio", vals)
        else:
            lower = rc1 / r_hi * Uss
            upper = rc1 / r_lo * Uss
            U = prediction.Uinf
            slack = rtol * max(1.0, np.abs(U).max())
            ok = bool(np.all(lower <= U + slack) and np.all(U <= upper + slack))
            out["P2"] = PropertyResult(Status.PASS if ok else Status.FAIL, "voltage sandwich",
                                       {**vals, "lower": lower.tolist(), "upper": upper.tolist()})

    uniform_gains = _uniform(cc.beta) and _uniform(pd.R)
    total_U, total_I = float(pd.Ud.sum()), float(cc.Imax.sum())
    if not uniform_gains:
        out["P3"] = PropertyResult(na, "premise fails: Psi = beta E and R = r E required")
    elif total_U <= 0:
        out["P3"] = PropertyResult(na, "premise fails: total rated voltage must be positive")
    else:
        lam_n = float(np.linalg.eigvalsh(net.Y).max())
        r = float(pd.R.mean())
        bound = total_U / total_I * lam_n / (1.0 + lam_n * r)
        ok = rc1 < bound
        out["P3"] = PropertyResult(Status.PASS if ok else Status.FAIL, f"rc1 = {rc1:.6g} vs bound {bound:.6g}",
                                   {"rc1": rc1, "bound": bound, "lambda_max": lam_n})

    if not (uniform_gains and _uniform(net.shunt)):
        out["P4"] = PropertyResult(na, "premise fails: Ys = g E, Psi = beta E and R = r E required")
    else:
        g, r = float(net.shunt.mean()), float(pd.R.mean())
        expected = total_U / total_I * g / (1.0 + g * r)
        ok = _rel_close(rc1, expected, rtol)
        out["P4"] = PropertyResult(Status.PASS if ok else Status.FAIL, f"rc1 = {rc1:.12g} vs {expected:.12g}",
                                   {"rc1": rc1, "expected": expected})

    if rc1 == 0.0:
        out["P5"] = PropertyResult(na, "premise fails: rc1 = 0, all voltages vanish")
    else:
        U = prediction.Uinf
        equal_voltage = bool(np.ptp(U) <= rtol * np.abs(U).max())
        G = net.shunt
        proportional = bool(np.all(G > 0)) and _uniform(cc.Imax / np.where(G > 0, G, 1.0))
        ok = equal_voltage == proportional
        out["P5"] = PropertyResult(Status.PASS if ok else Status.FAIL,
                                   f"equal voltages: {equal_voltage}, Imax proportional to shunts: {proportional}",
                                   {"voltage_spread": float(np.ptp(U)), "equal_voltage": equal_voltage,
                                    "proportional": proportional})
    return {k: out[k] for k in sorted(out)}
