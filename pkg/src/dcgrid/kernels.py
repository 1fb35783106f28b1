"""Inner-loop kernels with a numba and a pure-numpy implementation.

Each public kernel dispatches on the module-level backend, which defaults to
numba when it is importable and ``DCGRID_NUMBA`` is not set to ``0``.  Both
implementations are always importable as ``<name>_numba`` / ``<name>_numpy``
so they can be compared side by side (see ``benchmarks/bench_kernels.py``).
"""
import numpy as np

from ._jit import USE_NUMBA, njit

BLOWUP = 1e12

_backend = "numba" if USE_NUMBA else "numpy"


def get_backend():
    return _backend


def set_backend(name):
    """Select ``"numba"`` or ``"numpy"`` for subsequent kernel calls."""
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    _backend = name


# ---------------------------------------------------------------------------
# fixed-step RK4 for x' = A x + b
# ---------------------------------------------------------------------------

@njit(cache=True)
def _affine_rhs(A, b, x, out):
    n = x.shape[0]
    for i in range(n):
        acc = b[i]
        for j in range(n):
            acc += A[i, j] * x[j]
        out[i] = acc


@njit(cache=True)
def rk4_trajectory_numba(A, b, x0, h, n_intervals, substeps):
    n = x0.shape[0]
    out = np.empty((n_intervals + 1, n))
    x = x0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    out[0] = x
    step = 0
    for k in range(n_intervals):
        for _ in range(substeps):
            _affine_rhs(A, b, x, k1)
            for i in range(n):
                tmp[i] = x[i] + 0.5 * h * k1[i]
            _affine_rhs(A, b, tmp, k2)
            for i in range(n):
                tmp[i] = x[i] + 0.5 * h * k2[i]
            _affine_rhs(A, b, tmp, k3)
            for i in range(n):
                tmp[i] = x[i] + h * k3[i]
            _affine_rhs(A, b, tmp, k4)
            norm2 = 0.0
            for i in range(n):
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                norm2 += x[i] * x[i]
            step += 1
            if not norm2 <= BLOWUP * BLOWUP:
                return out, step
        out[k + 1] = x
    return out, -1


def rk4_trajectory_numpy(A, b, x0, h, n_intervals, substeps):
    out = np.empty((n_intervals + 1, x0.shape[0]))
    x = x0.copy()
    out[0] = x
    step = 0
    for k in range(n_intervals):
        for _ in range(substeps):
            k1 = A @ x + b
            k2 = A @ (x + 0.5 * h * k1) + b
            k3 = A @ (x + 0.5 * h * k2) + b
            k4 = A @ (x + h * k3) + b
            x = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            step += 1
            if not np.linalg.norm(x) <= BLOWUP:
                return out, step
        out[k + 1] = x
    return out, -1


def rk4_trajectory(A, b, x0, h, n_intervals, substeps):
    """Integrate ``x' = A x + b`` with classical RK4.

    Returns ``(samples, failed_step)``: ``samples[k]`` is the state after
    ``k * substeps`` steps of size ``h``; ``failed_step`` is the 1-based step
    at which ``|x|`` exceeded ``BLOWUP`` (rows after it are garbage), or -1.
    """
    args = (np.ascontiguousarray(A, dtype=float), np.ascontiguousarray(b, dtype=float),
            np.ascontiguousarray(x0, dtype=float), float(h), int(n_intervals), int(substeps))
    if _backend == "numba":
        return rk4_trajectory_numba(*args)
    return rk4_trajectory_numpy(*args)


# ---------------------------------------------------------------------------
# exact discrete recurrence x[k+1] = Phi x[k] + c
# ---------------------------------------------------------------------------

@njit(cache=True)
def affine_recurrence_numba(Phi, c, x0, n_steps):
    n = x0.shape[0]
    out = np.empty((n_steps + 1, n))
    out[0] = x0
    for k in range(n_steps):
        for i in range(n):
            acc = c[i]
            for j in range(n):
                acc += Phi[i, j] * out[k, j]
            out[k + 1, i] = acc
    return out


def affine_recurrence_numpy(Phi, c, x0, n_steps):
    out = np.empty((n_steps + 1, x0.shape[0]))
    out[0] = x0
    with np.errstate(over="ignore", invalid="ignore"):  # callers check finiteness
        for k in range(n_steps):
            out[k + 1] = Phi @ out[k] + c
    return out


def affine_recurrence(Phi, c, x0, n_steps):
    args = (np.ascontiguousarray(Phi, dtype=float), np.ascontiguousarray(c, dtype=float),
            np.ascontiguousarray(x0, dtype=float), int(n_steps))
    if _backend == "numba":
        return affine_recurrence_numba(*args)
    return affine_recurrence_numpy(*args)


# ---------------------------------------------------------------------------
# batched Hurwitz test for complex quadratics
# ---------------------------------------------------------------------------

@njit(cache=True)
def hurwitz_batch_numba(coeffs):
    m = coeffs.shape[0]
    out = np.empty(m, dtype=np.bool_)
    for i in range(m):
        am, bm, ad, bd, ak, bk = coeffs[i, 0], coeffs[i, 1], coeffs[i, 2], coeffs[i, 3], coeffs[i, 4], coeffs[i, 5]
        lead = am * ad + bm * bd
        cross = am * bk - bm * ak
        out[i] = lead > 0.0 and (ad * ak + bd * bk) * lead > cross * cross
    return out


def hurwitz_batch_numpy(coeffs):
    am, bm, ad, bd, ak, bk = coeffs.T
    lead = am * ad + bm * bd
    return (lead > 0.0) & ((ad * ak + bd * bk) * lead > (am * bk - bm * ak) ** 2)


def hurwitz_batch(coeffs):
    """Row-wise Hurwitz conditions for ``(a_m, b_m, a_d, b_d, a_k, b_k)`` rows."""
    coeffs = np.ascontiguousarray(coeffs, dtype=float)
    if coeffs.ndim != 2 or coeffs.shape[1] != 6:
        raise ValueError("coeffs must have shape (m, 6)")
    if _backend == "numba":
        return hurwitz_batch_numba(coeffs)
    return hurwitz_batch_numpy(coeffs)
