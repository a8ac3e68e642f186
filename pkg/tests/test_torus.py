import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import linalg

from lifshitz.bernstein import drift, mixture, relativistic, stable
from lifshitz.errors import DomainError, NumericError
from lifshitz.lanczos import block_lanczos
from lifshitz.torus import (
    IMAGE_TAIL_CONSTANT, SchrodingerOperator, SpectralOperator, TorusGrid, apply_H,
    gaussian_heat_kernel, gaussian_image_tail_bound, ground_state, heat_trace,
    kinetic_eigenvalues, lowest_eigenvalues, read_field, torus_heat_kernel,
    trace_from_eigenvalues, write_field,
)


def dense_matrix(op):
    n = op.grid.size
    return op.apply_block(np.eye(n))


def brute_image_sum(M, t, x, y, d, reach=40):
    # direct sum over images, far beyond any relevant width
    m = np.arange(-reach, reach + 1) * M
    diff = np.atleast_1d(np.asarray(y, float) - np.asarray(x, float))
    total = 1.0
    for i in range(d):
        total *= math.fsum(np.exp(-((diff[i] + m) ** 2) / (4 * t)) / math.sqrt(4 * math.pi * t))
    return total


def random_potential(grid, seed):
    return np.random.default_rng(seed).uniform(0, 3, grid.shape)


class TestGrid:
    def test_basic(self):
        g = TorusGrid(4, 2, 8)
        assert g.N == 32 and g.shape == (32, 32) and g.size == 1024 and g.spacing == 0.125

    def test_wavenumbers(self):
        k = TorusGrid(2, 1, 2).wavenumbers()
        np.testing.assert_allclose(k, np.pi * np.array([0, 1, -2, -1]))

    def test_cap(self):
        with pytest.raises(DomainError):
            TorusGrid(64, 3, 8)

    @pytest.mark.parametrize("args", [(0, 1), (2, 0), (2, 4), (2.5, 1)])
    def test_rejects(self, args):
        with pytest.raises(DomainError):
            TorusGrid(*args)


class TestKineticEigenvalues:
    def test_drift_unit_torus(self):
        np.testing.assert_allclose(kinetic_eigenvalues(2, drift(), 3), [0, math.pi**2, math.pi**2])

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_scaling(self, d):
        base = kinetic_eigenvalues(1, drift(), 60, d)
        for M in (2, 4, 8):
            np.testing.assert_allclose(kinetic_eigenvalues(M, drift(), 60, d) * M**2, base, rtol=1e-12)

    def test_multiplicities_2d(self):
        e = kinetic_eigenvalues(1, drift(), 9, 2)
        c = 4 * math.pi**2
        np.testing.assert_allclose(e, [0, c, c, c, c, 2 * c, 2 * c, 2 * c, 2 * c])

    @pytest.mark.parametrize("phi", [stable(1.0), relativistic(1.0, 1.0), mixture([1.0, 0.5])])
    @pytest.mark.parametrize("d", [1, 2])
    def test_matches_free_operator(self, phi, d):
        grid = TorusGrid(2, d, 4)
        ev = linalg.eigvalsh(dense_matrix(SchrodingerOperator.free(grid, phi)))
        expected = kinetic_eigenvalues(2, phi, 6, d)
        np.testing.assert_allclose(ev[:6], expected, atol=1e-10)


class TestOperator:
    def test_plane_wave(self):
        grid = TorusGrid(4, 1, 8)
        x = grid.coordinates()
        psi = np.cos(2 * math.pi * 3 * x / 4)
        op = SchrodingerOperator.free(grid, stable(1.0), 0.5)
        np.testing.assert_allclose(apply_H(op, psi), (2 * math.pi * 3 / 4 + 0.5) * psi, atol=1e-12)

    def test_constant_annihilated(self):
        grid = TorusGrid(3, 2, 4)
        op = SchrodingerOperator.free(grid, drift())
        np.testing.assert_allclose(apply_H(op, np.ones(grid.shape)), 0, atol=1e-12)

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_symmetric_psd(self, d):
        grid = TorusGrid(2, d, 2 if d == 3 else 4)
        op = SchrodingerOperator(SpectralOperator(grid, relativistic(1.0, 1.0)), random_potential(grid, d))
        H = dense_matrix(op)
        np.testing.assert_allclose(H, H.T, atol=1e-12)
        assert linalg.eigvalsh(H)[0] > -1e-12

    def test_flat_and_field_agree(self):
        grid = TorusGrid(2, 2, 4)
        op = SchrodingerOperator(SpectralOperator(grid, stable(1.5)), random_potential(grid, 0))
        psi = np.random.default_rng(1).standard_normal(grid.shape)
        np.testing.assert_allclose(apply_H(op, psi.ravel()), apply_H(op, psi).ravel())
        np.testing.assert_allclose(op.apply_block(psi.reshape(-1, 1))[:, 0], apply_H(op, psi).ravel())

    def test_bad_shape(self):
        grid = TorusGrid(2, 1, 4)
        op = SchrodingerOperator.free(grid, drift())
        with pytest.raises(ValueError):
            apply_H(op, np.zeros(5))

    def test_negative_potential(self):
        grid = TorusGrid(2, 1, 4)
        with pytest.raises(DomainError):
            SchrodingerOperator(SpectralOperator(grid, drift()), -np.ones(grid.shape))

    def test_potential_frozen(self):
        grid = TorusGrid(2, 1, 4)
        V = np.zeros(grid.shape)
        op = SchrodingerOperator(SpectralOperator(grid, drift()), V)
        V[0] = 5.0
        assert op.potential[0] == 0.0
        with pytest.raises(ValueError):
            op.potential[0] = 1.0


class TestHeatKernel:
    @pytest.mark.parametrize("M,t,x,y", [(2, 1.0, 0.1, 0.7), (1, 0.01, 0.0, 0.5), (4, 10.0, 0.3, 3.9),
                                         (3, 0.5, 2.5, 0.0)])
    def test_gaussian_1d(self, M, t, x, y):
        grid = TorusGrid(M, 1)
        val = torus_heat_kernel(grid, drift(), t, [x], [y])
        assert val == pytest.approx(brute_image_sum(M, t, [x], [y], 1), rel=1e-12)

    def test_gaussian_2d(self):
        grid = TorusGrid(2, 2)
        val = torus_heat_kernel(grid, drift(), 0.3, [0.1, 0.2], [1.5, 1.9])
        assert val == pytest.approx(brute_image_sum(2, 0.3, [0.1, 0.2], [1.5, 1.9], 2), rel=1e-12)

    @pytest.mark.parametrize("M,t,d", [(2, 1.0, 1), (1, 0.05, 2), (5, 3.0, 3), (2, 1e-3, 1)])
    def test_image_sum_function(self, M, t, d):
        x = np.full(d, 0.2)
        y = np.linspace(0.4, M - 0.1, d)
        assert gaussian_heat_kernel(M, t, x, y, d) == pytest.approx(brute_image_sum(M, t, x, y, d), rel=1e-12)

    def test_semigroup(self):
        # int p_s(x,z) p_t(z,y) dz = p_{s+t}(x,y), checked by the trapezoid rule on a periodic grid
        M, s, t = 2, 0.3, 0.5
        phi = stable(1.0)
        g = TorusGrid(M, 1)
        z = np.linspace(0, M, 257)[:-1]
        f = [torus_heat_kernel(g, phi, s, [0.1], [zz]) * torus_heat_kernel(g, phi, t, [zz], [1.3]) for zz in z]
        integral = math.fsum(f) * M / z.size
        assert integral == pytest.approx(torus_heat_kernel(g, phi, s + t, [0.1], [1.3]), rel=1e-6)

    def test_mass_one(self):
        M = 2
        g = TorusGrid(M, 1)
        z = np.linspace(0, M, 129)[:-1]
        f = [torus_heat_kernel(g, relativistic(1.0, 1.0), 0.7, [0.0], [zz]) for zz in z]
        assert math.fsum(f) * M / z.size == pytest.approx(1.0, rel=1e-9)

    def test_symmetry_and_translation(self):
        g = TorusGrid(3, 2)
        phi = stable(0.8)
        a = torus_heat_kernel(g, phi, 0.5, [0.1, 0.4], [2.0, 1.1])
        b = torus_heat_kernel(g, phi, 0.5, [2.0, 1.1], [0.1, 0.4])
        c = torus_heat_kernel(g, phi, 0.5, [1.1, 1.4], [3.0, 2.1])
        assert a == pytest.approx(b, rel=1e-12) and a == pytest.approx(c, rel=1e-12)

    def test_mode_cap(self):
        with pytest.raises(NumericError):
            torus_heat_kernel(TorusGrid(2, 1), stable(0.2), 1e-6, [0.0], [0.0], mode_cap=16)

    def test_bad_points(self):
        with pytest.raises(ValueError):
            torus_heat_kernel(TorusGrid(2, 2), drift(), 1.0, [0.0], [0.0])


@settings(max_examples=60, deadline=None)
@given(M=st.integers(1, 16), n=st.integers(1, 6), t=st.floats(1e-3, 1e4),
       d=st.integers(1, 3), frac=st.floats(0, 1))
def test_image_tail_bound_dominates(M, n, t, d, frac):
    # exact tail = full image sum minus the truncated one, with offsets in the cell
    diff = np.full(d, frac * M)
    m_far = np.arange(-(n + 60), n + 61) * M
    inner = np.abs(m_far) <= n * M

    def axis_sum(mask, i):
        return math.fsum(np.exp(-((diff[i] + m_far[mask]) ** 2) / (4 * t)) / math.sqrt(4 * math.pi * t))

    full = np.prod([axis_sum(np.ones_like(inner), i) for i in range(d)])
    core = np.prod([axis_sum(inner, i) for i in range(d)])
    tail = full - core
    assert tail <= gaussian_image_tail_bound(M, n, t, d) * (1 + 1e-9) + 1e-300


def test_image_tail_constant_not_loose_by_design():
    # large-t limit of tail/bound is exp(1/16); the chosen constant keeps a margin above it
    assert math.exp(1 / 16) < IMAGE_TAIL_CONSTANT < 4


class TestLanczos:
    def test_diagonal(self):
        diag = np.arange(1.0, 501.0)
        res = block_lanczos(lambda X: diag[:, None] * X, 500, 5, tol=1e-10)
        np.testing.assert_allclose(res.values, diag[:5], rtol=1e-10)
        assert np.all(res.residuals <= 1e-10 * np.maximum(np.abs(res.values), 1))

    def test_repeated_eigenvalue(self):
        diag = np.concatenate([[0.5] * 4, np.linspace(1, 10, 596)])
        res = block_lanczos(lambda X: diag[:, None] * X, 600, 6, tol=1e-9, seed=3)
        np.testing.assert_allclose(res.values, np.sort(diag)[:6], atol=1e-8)

    @pytest.mark.parametrize("d,M,n,K", [(1, 8, 8, 10), (2, 4, 4, 14), (2, 3, 8, 8)])
    def test_against_dense(self, d, M, n, K):
        grid = TorusGrid(M, d, n)
        op = SchrodingerOperator(SpectralOperator(grid, stable(1.0)), random_potential(grid, M))
        exact = linalg.eigvalsh(dense_matrix(op))[:K]
        got = lowest_eigenvalues(op, K, tol=1e-9, seed=1)
        np.testing.assert_allclose(got, exact, atol=1e-8)

    def test_free_2d_multiplicity(self):
        grid = TorusGrid(2, 2, 12)
        op = SchrodingerOperator.free(grid, drift())
        got = lowest_eigenvalues(op, 9, tol=1e-9)
        np.testing.assert_allclose(got, kinetic_eigenvalues(2, drift(), 9, 2), atol=1e-7)

    def test_deterministic(self):
        grid = TorusGrid(4, 1, 32)
        op = SchrodingerOperator(SpectralOperator(grid, drift()), random_potential(grid, 2))
        a = lowest_eigenvalues(op, 4, seed=7)
        b = lowest_eigenvalues(op, 4, seed=7)
        assert np.array_equal(a, b)

    def test_budget(self):
        diag = np.linspace(1, 1.0001, 2000)
        with pytest.raises(NumericError):
            block_lanczos(lambda X: diag[:, None] * X, 2000, 10, tol=1e-14, max_applications=30)


class TestGroundState:
    def test_residual(self):
        grid = TorusGrid(4, 1, 16)
        op = SchrodingerOperator(SpectralOperator(grid, relativistic(1.0, 1.0)), random_potential(grid, 5))
        lam, v = ground_state(op, tol=1e-9)
        assert v.shape == grid.shape
        assert np.linalg.norm(v) == pytest.approx(1.0)
        r = np.linalg.norm(apply_H(op, v) - lam * v)
        assert r <= 1e-9 * max(lam, 1)
        assert lam == pytest.approx(linalg.eigvalsh(dense_matrix(op))[0], abs=1e-9)

    def test_positive_ground_state(self):
        grid = TorusGrid(2, 1, 16)
        op = SchrodingerOperator(SpectralOperator(grid, drift()), random_potential(grid, 6))
        _, v = ground_state(op)
        # Perron-Frobenius: the ground state of a positivity-preserving semigroup has one sign
        assert np.all(v > 0)

    def test_constant_potential(self):
        grid = TorusGrid(2, 2, 6)
        lam, _ = ground_state(SchrodingerOperator.free(grid, stable(1.0), 0.75))
        assert lam == pytest.approx(0.75, abs=1e-9)


class TestTrace:
    def test_trace_remainder_formula(self):
        lead, rem = trace_from_eigenvalues([0.0, 1.0], 2.0, 10)
        assert lead == pytest.approx(1 + math.exp(-2))
        assert rem == pytest.approx(8 * math.exp(-2))

    def test_heat_trace_exact(self):
        grid = TorusGrid(1, 1, 16)
        lead, rem = heat_trace(SchrodingerOperator.free(grid, drift()), 1.0, 3)
        assert lead == pytest.approx(1 + 2 * math.exp(-4 * math.pi**2), rel=1e-12)
        assert rem == pytest.approx(13 * math.exp(-16 * math.pi**2), rel=1e-6)

    def test_heat_trace_bounds_full(self):
        grid = TorusGrid(2, 1, 8)
        op = SchrodingerOperator(SpectralOperator(grid, stable(1.0)), random_potential(grid, 9))
        full = math.fsum(np.exp(-0.5 * linalg.eigvalsh(dense_matrix(op))))
        lead, rem = heat_trace(op, 0.5, 6)
        assert lead <= full * (1 + 1e-12) and full <= (lead + rem) * (1 + 1e-12)


class TestFieldIO:
    def test_round_trip_path(self, tmp_path):
        grid = TorusGrid(2, 2, 4)
        f = random_potential(grid, 11)
        write_field(tmp_path / "f.bin", f, grid)
        back, g2 = read_field(tmp_path / "f.bin")
        assert g2 == grid and np.array_equal(back, f)

    def test_round_trip_bytes(self):
        grid = TorusGrid(3, 1, 2)
        f = np.arange(6.0)
        buf = io.BytesIO()
        write_field(buf, f, grid)
        raw = buf.getvalue()
        assert len(raw) == 32 + 48
        assert raw[:32] == np.array([1, 3, 2, 6], dtype="<i8").tobytes()
        back, _ = read_field(raw)
        assert np.array_equal(back, f)

    def test_truncated(self):
        grid = TorusGrid(2, 1, 2)
        buf = io.BytesIO()
        write_field(buf, np.zeros(4), grid)
        with pytest.raises(ValueError):
            read_field(buf.getvalue()[:-8])

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            write_field(io.BytesIO(), np.zeros(3), TorusGrid(2, 1, 2))
