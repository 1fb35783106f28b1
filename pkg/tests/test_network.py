import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from dcgrid.errors import InvalidInputError
from dcgrid.network import NetworkSpec, ReducedNetwork, build_full, is_connected, kron_reduce
from dcgrid.testing import random_network_spec


def triangle_spec():
    return NetworkSpec(3, 0, ((0, 1, 1.0), (0, 2, 2.0), (1, 2, 2.5)), [0.5, 0.2, 0.25])


def star_spec():
    return NetworkSpec(2, 1, ((0, 2, 1.0), (1, 2, 1.0)), [0.0, 0.0, 1.0])


def port_currents_full(spec, Ug):
    """Generator currents from a direct solve of the full nodal equations."""
    Yf = build_full(spec)
    n = spec.n_gen
    UL = np.linalg.solve(Yf[n:, n:], spec.load_injections - Yf[n:, :n] @ Ug)
    return Yf[:n, :n] @ Ug + Yf[:n, n:] @ UL


class TestBuildFull:
    def test_single_branch(self):
        spec = NetworkSpec(2, 0, ((0, 1, 1.0),), [0.0, 0.0])
        assert_array_equal(build_full(spec), [[1, -1], [-1, 1]])

    def test_triangle(self, triangle_Y):
        assert_allclose(build_full(triangle_spec()), triangle_Y, rtol=0, atol=1e-15)

    def test_star(self):
        assert_array_equal(build_full(star_spec()), [[1, 0, -1], [0, 1, -1], [-1, -1, 3]])

    def test_parallel_lines_add(self):
        spec = NetworkSpec(2, 0, ((0, 1, 1.0), (1, 0, 2.0)), [0.0, 0.0])
        assert_array_equal(build_full(spec), [[3, -3], [-3, 3]])

    def test_load_block_positive_definite(self, rng):
        for _ in range(50):
            spec = random_network_spec(rng, 3, 4)
            Yll = build_full(spec)[3:, 3:]
            assert np.linalg.eigvalsh(Yll).min() > 0

    @pytest.mark.parametrize("kwargs,match", [
        (dict(n_gen=1, n_load=1, branches=((0, 1, 1.0),), shunts=[0.0, 0.0]), "positive shunt"),
        (dict(n_gen=2, n_load=0, branches=((0, 0, 1.0),), shunts=[0.0, 0.0]), "self-branch"),
        (dict(n_gen=2, n_load=0, branches=((0, 1, -1.0),), shunts=[0.0, 0.0]), "invalid conductance"),
        (dict(n_gen=2, n_load=0, branches=((0, 5, 1.0),), shunts=[0.0, 0.0]), "outside"),
        (dict(n_gen=2, n_load=0, branches=(), shunts=[0.0, -1.0]), ">= 0"),
        (dict(n_gen=2, n_load=0, branches=(), shunts=[0.0]), "entries"),
    ])
    def test_invalid_specs(self, kwargs, match):
        with pytest.raises(InvalidInputError, match=match):
            NetworkSpec(**kwargs)


class TestKronReduce:
    def test_no_loads_is_identity(self, triangle_Y):
        red, inj = kron_reduce(triangle_spec())
        assert_allclose(red.Y, triangle_Y, atol=1e-15)
        assert_array_equal(inj, 0.0)
        assert_allclose(red.Ys, np.diag([0.5, 0.2, 0.25]), atol=1e-14)
        assert_allclose(red.Yc.sum(axis=1), 0.0, atol=1e-14)

    def test_star(self):
        red, inj = kron_reduce(star_spec())
        assert_allclose(red.Y, [[2 / 3, -1 / 3], [-1 / 3, 2 / 3]], rtol=1e-14)
        assert_allclose(red.Ys, np.diag([1 / 3, 1 / 3]), rtol=1e-14)

    def test_four_generator_two_load_structure(self):
        # generator 3 (zero based) has no shunt of its own
        lines = ((0, 4, 1.0), (1, 4, 2.0), (2, 4, 1.5), (2, 5, 1.0), (3, 5, 2.0), (0, 3, 0.5))
        spec = NetworkSpec(4, 2, lines, [0.3, 0.2, 0.4, 0.0, 0.5, 0.6])
        red, _ = kron_reduce(spec)
        assert red.Y.shape == (4, 4)
        off = red.Y[np.triu_indices(4, 1)]
        assert np.count_nonzero(np.abs(off) > 1e-12) == 5
        assert np.all(red.shunt > 1e-12)

    def test_injection(self):
        spec = NetworkSpec(2, 1, ((0, 2, 1.0), (1, 2, 1.0)), [0.0, 0.0, 1.0], [3.0])
        red, inj = kron_reduce(spec)
        # I = Y Ug + Ygl Yll^-1 I_L with Ygl = -1, Yll = 3, I_L = 3
        assert_allclose(inj, [-1.0, -1.0])
        assert_allclose(red.Y @ [2.0, 2.0] + inj, port_currents_full(spec, np.array([2.0, 2.0])))

    def test_port_equivalence(self, rng):
        for _ in range(200):
            spec = random_network_spec(rng, int(rng.integers(1, 7)), int(rng.integers(0, 7)),
                                       load_injection=rng.random() < 0.5)
            red, inj = kron_reduce(spec)
            Ug = rng.uniform(40.0, 50.0, spec.n_gen)
            I_full = port_currents_full(spec, Ug)
            I_red = red.Y @ Ug + inj
            scale = max(np.linalg.norm(I_full), np.abs(red.Y).max() * np.linalg.norm(Ug))
            assert np.linalg.norm(I_red - I_full) <= 1e-10 * scale

    def test_m_matrix_pattern(self, rng):
        for _ in range(100):
            spec = random_network_spec(rng, int(rng.integers(2, 6)), int(rng.integers(1, 6)))
            Y = kron_reduce(spec)[0].Y
            assert_allclose(Y, Y.T, atol=1e-13)
            assert np.all(Y[~np.eye(len(Y), dtype=bool)] <= 1e-14)
            assert np.all(Y.sum(axis=1) >= -1e-12)
            assert np.all(np.linalg.inv(Y) >= -1e-12)

    def test_reduce_twice(self, rng):
        spec = random_network_spec(rng, 4, 3)
        red, _ = kron_reduce(spec)
        m = red.n
        branches = tuple((i, j, -red.Y[i, j]) for i in range(m) for j in range(i + 1, m) if red.Y[i, j] < 0)
        again, _ = kron_reduce(NetworkSpec(m, 0, branches, red.shunt))
        assert_allclose(again.Y, red.Y, atol=1e-13)


class TestReducedNetwork:
    def test_split(self, triangle_Y):
        net = ReducedNetwork.from_matrix(triangle_Y)
        assert_allclose(net.Ys + net.Yc, triangle_Y, rtol=0, atol=0)
        assert net.n == 3 and net.has_shunt

    def test_shuntless(self):
        net = ReducedNetwork.from_matrix([[1.0, -1.0], [-1.0, 1.0]])
        assert not net.has_shunt

    @pytest.mark.parametrize("Y", [
        [[1.0, -1.0], [-0.5, 1.0]],
        [[1.0, 0.5], [0.5, 1.0]],
        [[1.0, -2.0], [-2.0, 1.0]],
    ])
    def test_rejects_invalid(self, Y):
        with pytest.raises(InvalidInputError):
            ReducedNetwork.from_matrix(Y)


class TestConnected:
    def test_triangle(self, triangle_Y):
        assert is_connected(ReducedNetwork.from_matrix(triangle_Y).Yc)

    def test_two_components(self):
        B = np.array([[1.0, -1.0], [-1.0, 1.0]])
        assert not is_connected(np.block([[B, np.zeros((2, 2))], [np.zeros((2, 2)), B]]))

    def test_single_node(self):
        assert is_connected(np.zeros((1, 1)))
