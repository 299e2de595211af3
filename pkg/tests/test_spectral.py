"""Eigensolvers, contour projectors, tracking, resolvent norms."""

import numpy as np
import pytest

from spinboson import (
    ContourCollisionError,
    DegeneracyError,
    TrackingError,
    assemble_hamiltonian,
    eig_all,
    resolvent_norm,
    resolvent_scan,
    riesz_projection,
    riesz_rank_one,
    track_eigenvalue,
)
from spinboson.fock import OperatorMatrix
from spinboson.spectral import (
    projected_resolvent_norm,
    rank_two_difference_norm,
    shifted_inverse_eigenvalue,
)


def random_matrix(rng, n, scale=1.0):
    return scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))


class TestEigAll:
    def test_diagonal(self):
        w = eig_all(np.diag([1.0, 2.0 + 1.0j]))
        assert np.allclose(w, [1.0, 2.0 + 1.0j])

    def test_sorted_lexicographically(self, rng):
        w = eig_all(random_matrix(rng, 12))
        keys = [(z.real, z.imag) for z in w]
        assert keys == sorted(keys)

    def test_hermitian_flag_checked(self, rng):
        A = random_matrix(rng, 6)
        bad = OperatorMatrix.dense(A, hermitian=True)
        with pytest.raises(ValueError):
            eig_all(bad)

    def test_blocked_equals_dense(self, cfg, small_field):
        Hd = assemble_hamiltonian(cfg, small_field, blocked=False)
        Hb = assemble_hamiltonian(cfg, small_field, blocked=True)
        assert np.allclose(eig_all(Hd), eig_all(Hb), atol=1e-10)


class TestRieszProjection:
    def test_isolated_eigenvalue(self):
        P = riesz_projection(np.diag([0.0, 5.0]), center=0.0, radius=1.0)
        assert np.allclose(P.matrix, np.diag([1.0, 0.0]), atol=1e-13)
        assert P.idempotency_residual < 1e-13
        assert P.rank == 1

    def test_empty_circle(self):
        P = riesz_projection(np.diag([0.0, 5.0]), center=2.5, radius=1.0)
        assert np.max(np.abs(P.matrix)) < 1e-12
        assert P.rank == 0

    def test_contour_collision_detected(self):
        with pytest.raises(ContourCollisionError):
            riesz_projection(np.diag([0.0, 1.0]), center=0.0, radius=1.05)

    def test_quadrature_converges_geometrically(self):
        # eigenvalue at 1.3 x radius: residual(2K) ~ residual(K)^2 trendwise
        A = np.diag([0.0, 1.3])
        resids = []
        for quad in (4, 8, 16):
            P = riesz_projection(
                A, center=0.0, radius=1.0, quad_points=quad,
                assume_clear=True, adaptive=False,
            )
            resids.append(max(P.idempotency_residual, 1e-300))
        assert resids[1] < resids[0] ** 2 * 10
        assert resids[2] < resids[1] ** 2 * 10

    def test_free_model_projector_is_atomic(self, cfg, small_field):
        H = assemble_hamiltonian(cfg, small_field, g=0.0, blocked=False)
        radius = 0.25 * 0.03125 * np.sin(cfg.nu)
        P = riesz_projection(H, center=cfg.e1, radius=radius)
        dim_f = small_field.basis_for_scale(None).dim
        expected = np.zeros((2 * dim_f, 2 * dim_f))
        expected[0, 0] = 1.0  # excited atom (x) vacuum leads the ordering
        assert np.max(np.abs(P.matrix - expected)) < 1e-12

    def test_commutes_with_operator(self, rng):
        A = random_matrix(rng, 10)
        w = np.linalg.eigvals(A)
        target = w[0]
        gap = np.min(np.abs(np.delete(w, 0) - target))
        P = riesz_projection(A, center=target, radius=0.4 * gap, eigs=w)
        assert np.linalg.norm(A @ P.matrix - P.matrix @ A, 2) < 1e-9


class TestRieszRankOne:
    def test_matches_dense_projector(self, rng):
        A = random_matrix(rng, 24)
        w = np.linalg.eigvals(A)
        k = int(np.argmax(np.abs(w - np.mean(w))))
        target = w[k]
        gap = np.min(np.abs(np.delete(w, k) - target))
        dense = riesz_projection(A, center=target, radius=0.4 * gap, eigs=w)
        fact = riesz_rank_one(A, center=target, radius=0.4 * gap)
        assert fact.rank == 1
        assert np.linalg.norm(fact.to_dense() - dense.matrix, 2) < 1e-8
        assert abs(fact.trace_value - 1.0) < 1e-8

    def test_projects_probe_onto_eigendirection(self, rng):
        A = np.diag([0.0, 2.0, 5.0]).astype(complex)
        fact = riesz_rank_one(A, center=2.0, radius=0.5, probe=np.ones(3))
        v = fact.right[:, 0]
        assert abs(abs(v[1]) - 1.0) < 1e-12

    def test_empty_contour_raises(self, rng):
        A = np.diag([0.0, 5.0]).astype(complex)
        with pytest.raises(TrackingError):
            riesz_rank_one(A, center=2.5, radius=0.5)


class TestTrackEigenvalue:
    def test_free_seed_exact(self, cfg, small_field):
        H = assemble_hamiltonian(cfg, small_field, g=0.0)
        rec = track_eigenvalue(H, seed=cfg.e1, radius=0.01)
        assert rec.lam == pytest.approx(cfg.e1, abs=1e-13)
        assert rec.projector_rank == 1
        assert rec.residual < 1e-10

    def test_small_coupling_shift_bounded(self, cfg, small_field):
        H = assemble_hamiltonian(cfg, small_field)
        rec = track_eigenvalue(H, seed=cfg.e1, radius=0.05)
        # first-scale proximity: |lambda - e1| <= |g| C with C order one
        assert abs(rec.lam - cfg.e1) < 10 * abs(cfg.g)
        assert rec.method_disagreement < 1e-8

    def test_constructed_instance_recovery(self, rng):
        w = np.array([0.3, 1.7 - 0.2j, -2.0 + 0.1j])
        V = random_matrix(rng, 3) + 3 * np.eye(3)
        A = V @ np.diag(w) @ np.linalg.inv(V)
        rec = track_eigenvalue(A, seed=1.65 - 0.18j, radius=0.2)
        assert rec.lam == pytest.approx(w[1], abs=1e-10)

    def test_no_candidate(self, rng):
        with pytest.raises(TrackingError):
            track_eigenvalue(np.diag([0.0, 5.0]), seed=2.0, radius=0.5)

    def test_ambiguous_candidates(self):
        with pytest.raises(DegeneracyError):
            track_eigenvalue(np.diag([1.0, 1.1]), seed=1.05, radius=0.2)


class TestResolventNorm:
    def test_diagonal_distance(self):
        assert resolvent_norm(np.diag([0.0, 1.0]), 2.0) == pytest.approx(1.0)

    def test_normal_matrix_identity(self, rng):
        w = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        Q, _ = np.linalg.qr(random_matrix(rng, 6))
        A = Q @ np.diag(w) @ Q.conj().T
        z = 3.0 + 0.5j
        assert resolvent_norm(A, z) == pytest.approx(
            1.0 / np.min(np.abs(w - z)), rel=1e-9
        )

    def test_jordan_block_oracle(self):
        # [[0,1],[0,0]] at z = i: direct 2x2 inverse has norm (1+sqrt5)/2
        A = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
        inv = np.linalg.inv(A - 1j * np.eye(2))
        direct = np.linalg.svd(inv, compute_uv=False)[0]
        assert direct == pytest.approx((1 + np.sqrt(5)) / 2, rel=1e-12)
        assert resolvent_norm(A, 1.0j) == pytest.approx(direct, rel=1e-12)

    def test_at_eigenvalue_infinite(self):
        assert resolvent_norm(np.diag([0.0, 1.0]), 1.0) == np.inf

    def test_never_below_distance_bound(self, rng):
        A = random_matrix(rng, 8)
        w = np.linalg.eigvals(A)
        for z in (0.5 + 0.5j, -1.0, 2.0j):
            assert resolvent_norm(A, z) >= 1.0 / np.min(np.abs(w - z)) - 1e-12

    def test_large_block_iterative_path(self, rng):
        # above the dense-SVD limit the LU + svds route takes over
        n = 520
        A = np.diag(np.linspace(1.0, 5.0, n)).astype(complex)
        A += 0.01 * random_matrix(rng, n) / np.sqrt(n)
        z = 0.5
        got = resolvent_norm(A, z)
        want = 1.0 / np.linalg.svd(A - z * np.eye(n), compute_uv=False)[-1]
        assert got == pytest.approx(want, rel=1e-6)


class TestResolventScan:
    def test_matches_sequential(self, rng):
        A = random_matrix(rng, 6)
        grid = [0.5 + 0.1j * k for k in range(10)]
        scan = resolvent_scan(A, grid)
        assert [z for z, _ in scan] == grid
        for z, val in scan:
            assert val == pytest.approx(resolvent_norm(A, z), rel=1e-12)

    def test_single_point_reduces(self, rng):
        A = random_matrix(rng, 5)
        ((z, val),) = resolvent_scan(A, [1.0j])
        assert val == pytest.approx(resolvent_norm(A, 1.0j))

    def test_threaded_matches(self, rng):
        A = random_matrix(rng, 6)
        grid = [0.3 * k - 0.2j for k in range(8)]
        assert resolvent_scan(A, grid, jobs=2) == pytest.approx(
            resolvent_scan(A, grid), rel=1e-12
        )


class TestHelpers:
    def test_rank_two_difference_norm(self, rng):
        n = 30
        u1, l1, u2, l2 = (rng.standard_normal(n) + 1j * rng.standard_normal(n)
                          for _ in range(4))
        dense = np.outer(u1, l1.conj()) - np.outer(u2, l2.conj())
        want = np.linalg.norm(dense, 2)
        assert rank_two_difference_norm(u1, l1, u2, l2) == pytest.approx(want)

    def test_shifted_inverse_iteration(self, rng):
        w = np.array([0.2, 1.5 - 0.3j, 4.0])
        V = random_matrix(rng, 3) + 3 * np.eye(3)
        A = V @ np.diag(w) @ np.linalg.inv(V)
        lam, vec = shifted_inverse_eigenvalue(A, 1.4 - 0.25j)
        assert lam == pytest.approx(w[1], abs=1e-10)
        assert np.linalg.norm(A @ vec - lam * vec) < 1e-9

    def test_projected_resolvent_norm_small(self, rng):
        A = random_matrix(rng, 12)
        w, V = np.linalg.eig(A)
        k = 0
        gap = np.min(np.abs(np.delete(w, k) - w[k]))
        proj = riesz_rank_one(A, center=w[k], radius=0.4 * gap)
        z = w[k] + 0.01 * gap  # close to the removed pole
        got = projected_resolvent_norm(A, z, proj)
        dense = np.linalg.solve(
            A - z * np.eye(12), np.eye(12) - proj.to_dense()
        )
        assert got == pytest.approx(np.linalg.norm(dense, 2), rel=1e-8)
        # the projector removes the pole: the norm stays bounded by the gap
        assert got < 100.0 / gap
