import os
import subprocess
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from dcgrid import kernels


@pytest.fixture
def backend():
    saved = kernels.get_backend()
    yield kernels.set_backend
    kernels.set_backend(saved)


def _stable(rng, n):
    A = rng.normal(size=(n, n))
    return A - (np.linalg.eigvals(A).real.max() + 0.5) * np.eye(n)


def test_rk4_backends_agree(rng):
    for _ in range(10):
        n = int(rng.integers(1, 9))
        A, b, x0 = _stable(rng, n), rng.normal(size=n), rng.normal(size=n)
        a, fa = kernels.rk4_trajectory_numba(A, b, x0, 1e-3, 50, 7)
        c, fc = kernels.rk4_trajectory_numpy(A, b, x0, 1e-3, 50, 7)
        assert fa == fc == -1
        assert_allclose(a, c, rtol=1e-12, atol=1e-12)


def test_rk4_blowup_same_step():
    A, b, x0 = np.array([[50.0]]), np.zeros(1), np.ones(1)
    fa = kernels.rk4_trajectory_numba(A, b, x0, 0.01, 100, 10)[1]
    fc = kernels.rk4_trajectory_numpy(A, b, x0, 0.01, 100, 10)[1]
    assert fa == fc > 0


def test_recurrence_backends_agree(rng):
    Phi, c, x0 = rng.normal(size=(6, 6)) * 0.3, rng.normal(size=6), rng.normal(size=6)
    assert_allclose(kernels.affine_recurrence_numba(Phi, c, x0, 200),
                    kernels.affine_recurrence_numpy(Phi, c, x0, 200), rtol=1e-12, atol=1e-12)


def test_hurwitz_backends_agree(rng):
    coeffs = rng.normal(size=(5000, 6))
    assert_array_equal(kernels.hurwitz_batch_numba(coeffs), kernels.hurwitz_batch_numpy(coeffs))


def test_hurwitz_shape_check():
    with pytest.raises(ValueError):
        kernels.hurwitz_batch(np.zeros((3, 5)))


def test_dispatch(backend, rng):
    A, b, x0 = _stable(rng, 3), rng.normal(size=3), rng.normal(size=3)
    out = {}
    for name in ("numba", "numpy"):
        backend(name)
        assert kernels.get_backend() == name
        out[name] = kernels.rk4_trajectory(A, b, x0, 1e-3, 10, 3)[0]
    assert_allclose(out["numba"], out["numpy"], rtol=1e-12)
    with pytest.raises(ValueError):
        backend("fortran")


def test_env_flag_selects_numpy():
    env = dict(os.environ, DCGRID_NUMBA="0")
    code = "from dcgrid import kernels; print(kernels.get_backend())"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_benchmark_script_runs(capsys):
    import runpy
    from pathlib import Path

    path = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    runpy.run_path(str(path))["main"](["--repeat", "1"])
    out = capsys.readouterr().out
    assert "speedup" in out and "run_scenario Exact" in out
