"""Dense real-matrix kernels used by every analysis module."""
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidInputError, NumericFailureError

RANK_RTOL = 1e-9
PSD_TOL = 1e-10
EIG_RTOL = 1e-10
SYM_RTOL = 1e-12
SEMISIMPLE_TOL = 1e-8
COND_MAX = 1e13


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted by (real, imag) with matching right eigenvectors."""

    eigenvalues: np.ndarray
    right_eigenvectors: np.ndarray

    def __len__(self):
        return len(self.eigenvalues)


@dataclass(frozen=True)
class AffineSystem:
    """Autonomous affine LTI system ``x' = A x + b``."""

    A: np.ndarray
    b: np.ndarray

    @property
    def dim(self):
        return self.A.shape[0]


def as_finite_matrix(A, name="A", square=True):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or (square and A.shape[0] != A.shape[1]):
        raise InvalidInputError(f"{name} must be a {'square ' if square else ''}2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return A


def sym(M):
    return 0.5 * (M + M.T)


def skew(M):
    return 0.5 * (M - M.T)


def eig(A) -> Spectrum:
    A = as_finite_matrix(A)
    if A.shape[0] < 1:
        raise InvalidInputError("eig needs n >= 1")
    try:
        w, V = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise NumericFailureError(f"eigenvalue iteration did not converge: {exc}") from exc
    w = w.astype(complex)
    order = np.lexsort((w.imag, w.real))
    return Spectrum(w[order], V.astype(complex)[:, order])


def rank_tol(A, rtol=RANK_RTOL) -> int:
    """Number of singular values above ``rtol`` times the largest one."""
    if rtol <= 0:
        raise InvalidInputError("rtol must be positive")
    A = as_finite_matrix(A, square=False)
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rtol * s[0]))


def zero_semisimple(A, rtol=RANK_RTOL, overlap_tol=SEMISIMPLE_TOL):
    """Whether the zero eigenvalue of ``A`` is semisimple.

    Uses ``rank(A) == rank(A^2)`` in the equivalent form
    ``null(A) & range(A) == {0}``: the right null basis must have a
    nonsingular projection on the left null space.  Squaring ``A`` would
    square its condition number and hide small nonzero eigenvalues.

    Returns ``(semisimple, rank_A, rank_A2)``.
    """
    A = as_finite_matrix(A)
    n = A.shape[0]
    U, s, Vt = np.linalg.svd(A)
    r = int(np.count_nonzero(s > rtol * s[0])) if s[0] > 0 else 0
    if r == n:
        return True, n, n
    N = Vt[r:].T
    W = U[:, r:]
    overlap = np.linalg.svd(W.T @ N, compute_uv=False)
    lost = int(np.count_nonzero(overlap <= overlap_tol))
    return lost == 0, r, r - lost


def psd_check(S, tol=PSD_TOL) -> bool:
    """True iff the symmetric matrix ``S`` is positive semidefinite.

    The smallest eigenvalue may dip to ``-tol * max(1, |S|_2)``.
    """
    S = as_finite_matrix(S, "S")
    scale = np.linalg.norm(S)
    if np.linalg.norm(S - S.T) > SYM_RTOL * scale:
        raise InvalidInputError("psd_check needs a symmetric matrix; symmetrize first")
    w = np.linalg.eigvalsh(S)
    norm2 = max(abs(w[0]), abs(w[-1]))
    return bool(w[0] >= -tol * max(1.0, norm2))


def expm(A, h=1.0):
    """Matrix exponential ``exp(A h)`` by scaling and squaring (Pade)."""
    A = as_finite_matrix(A)
    if not h >= 0:
        raise InvalidInputError(f"time step must be >= 0, got {h}")
    with np.errstate(over="raise", invalid="raise"):
        try:
            out = scipy.linalg.expm(A * h)
        except (FloatingPointError, OverflowError) as exc:
            raise NumericFailureError(f"matrix exponential overflowed for |A|h = {np.linalg.norm(A) * h:.3g}") from exc
    if not np.all(np.isfinite(out)):
        raise NumericFailureError(f"matrix exponential overflowed for |A|h = {np.linalg.norm(A) * h:.3g}")
    return out


def solve(A, b, what="linear system"):
    """``A^{-1} b`` that refuses numerically singular ``A``."""
    A = as_finite_matrix(A)
    cond = np.linalg.cond(A)
    if not cond < COND_MAX:
        raise NumericFailureError(f"{what} is singular (condition number {cond:.3g})")
    return np.linalg.solve(A, b)
