import numpy as np
import pytest

from pullgeo.diffeo import CompositeDiffeo, HyperboloidChart, StereographicChart, translation_diffeo
from pullgeo.errors import DependentInput, RankDeficient
from pullgeo.pullback import PullbackSpace
from pullgeo.rae import (
    RiemannianAutoencoder,
    build_coefficient_matrix,
    cc_objective,
    curvature_corrected_directions,
    gram_schmidt_pb,
    orthonormal_frame,
    tangent_svd,
)


def identity_space():
    return PullbackSpace.of(translation_diffeo(np.zeros(2)))


def spherical_space():
    return PullbackSpace.of(CompositeDiffeo(np.array([1.0, 0.0]), np.eye(2), StereographicChart(2)))


def hyperbolic_space():
    return PullbackSpace.of(CompositeDiffeo(np.array([0.0, 1.0]), np.eye(2), HyperboloidChart(2)))


def geodesic_cloud(space, z, direction, ts):
    """Points exactly on the pullback geodesic through z."""
    w = np.asarray(direction, dtype=float)
    w = w / space.norm(z, w)
    return np.stack([space.exp(z, t * w) for t in ts])


class TestGramSchmidt:
    def test_orthonormal_input_unchanged(self):
        sp = identity_space()
        vecs = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
        out = gram_schmidt_pb(sp, np.zeros(2), vecs)
        assert np.allclose(out, vecs)

    def test_simple_example(self):
        sp = identity_space()
        out = gram_schmidt_pb(sp, np.zeros(2), [np.array([1.0, 0.0]), np.array([1.0, 1.0])])
        assert np.allclose(out, [[1.0, 0.0], [0.0, 1.0]], atol=1e-12)

    def test_random_gram_is_identity(self, rng):
        sp = PullbackSpace.of(translation_diffeo(np.zeros(3)))
        vecs = [rng.standard_normal(3) for _ in range(3)]
        out = gram_schmidt_pb(sp, np.zeros(3), vecs)
        G = np.array([[sp.inner(np.zeros(3), a, b) for b in out] for a in out])
        assert np.allclose(G, np.eye(3), atol=1e-10)

    def test_dependent_input(self):
        sp = identity_space()
        with pytest.raises(DependentInput):
            gram_schmidt_pb(sp, np.zeros(2), [np.array([1.0, 0.0]), np.array([2.0, 0.0])])

    def test_curved_space_frames(self, rng):
        for sp in [spherical_space(), hyperbolic_space()]:
            z = rng.uniform(-0.5, 0.5, size=2)
            frame = orthonormal_frame(sp, z)
            G = np.array([[sp.inner(z, a, b) for b in frame] for a in frame])
            assert np.allclose(G, np.eye(2), atol=1e-10)


class TestCoefficientMatrix:
    def test_base_point_gives_zero_row(self):
        sp = spherical_space()
        z = np.array([0.3, 0.1])
        frame = orthonormal_frame(sp, z)
        A = build_coefficient_matrix(sp, z, frame, [z])
        assert np.allclose(A, 0.0, atol=1e-9)

    def test_identity_euclidean_rows_are_differences(self, rng):
        sp = identity_space()
        z = np.array([0.5, -0.5])
        frame = orthonormal_frame(sp, z)  # standard basis under identity pullback
        data = rng.standard_normal((5, 2))
        A = build_coefficient_matrix(sp, z, frame, data)
        assert np.allclose(A, data - z, atol=1e-12)

    def test_full_frame_expansion_recovers_log(self, rng):
        for sp in [spherical_space(), hyperbolic_space()]:
            z = np.array([0.2, 0.4])
            frame = orthonormal_frame(sp, z)
            data = rng.uniform(-1, 1, (4, 2))
            A = build_coefficient_matrix(sp, z, frame, data)
            for i, x in enumerate(data):
                recon = sum(A[i, k] * frame[k] for k in range(len(frame)))
                assert np.allclose(recon, sp.log(z, x), atol=1e-8)


class TestTangentSvd:
    def test_rank_one_recovery(self, rng):
        u = rng.standard_normal(6)
        u /= np.linalg.norm(u)
        w = rng.standard_normal(3)
        w /= np.linalg.norm(w)
        A = 2.5 * np.outer(u, w)
        U, s, W = tangent_svd(A, 1)
        assert s[0] == pytest.approx(2.5, abs=1e-12)
        assert np.allclose(np.abs(U[:, 0] @ u), 1.0, atol=1e-12)
        assert np.allclose(np.abs(W[:, 0] @ w), 1.0, atol=1e-12)

    def test_orthogonal_rows_give_their_norms(self):
        A = np.array([[3.0, 0.0, 0.0], [0.0, 2.0, 0.0]])
        _, s, _ = tangent_svd(A, 2)
        assert np.allclose(s, [3.0, 2.0])

    def test_orthonormal_factors(self, rng):
        A = rng.standard_normal((6, 4))
        U, s, W = tangent_svd(A, 3)
        assert np.allclose(U.T @ U, np.eye(3), atol=1e-10)
        assert np.allclose(W.T @ W, np.eye(3), atol=1e-10)
        assert np.all(np.diff(s) <= 1e-12)

    def test_frobenius_optimality_against_random_candidates(self, rng):
        # brute-force oracle: no random rank-r factorization beats the SVD
        A = rng.standard_normal((4, 3))
        r = 2
        U, s, W = tangent_svd(A, r)
        best_possible = np.linalg.norm(A - (U * s) @ W.T, "fro")
        for _ in range(2000):
            B = rng.standard_normal((4, r))
            C = rng.standard_normal((r, 3))
            coeff, *_ = np.linalg.lstsq(B, A, rcond=None)
            assert np.linalg.norm(A - B @ coeff, "fro") >= best_possible - 1e-9
            assert np.linalg.norm(A - B @ C, "fro") >= best_possible - 1e-9

    def test_rank_deficient(self):
        A = np.array([[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
        with pytest.raises(RankDeficient):
            tangent_svd(A, 2)

    def test_deterministic_signs(self, rng):
        A = rng.standard_normal((5, 3))
        _, _, W1 = tangent_svd(A, 2)
        _, _, W2 = tangent_svd(A.copy(), 2)
        assert np.array_equal(W1, W2)
        assert all(W1[np.argmax(np.abs(W1[:, j])), j] >= 0 for j in range(2))


class TestCurvatureCorrectedDirections:
    def test_euclidean_model_matches_svd(self, rng):
        # flat geometry: beta_E == 1, so the corrected solve returns sigma * W
        sp = identity_space()
        z = np.zeros(2)
        frame = orthonormal_frame(sp, z)
        data = rng.standard_normal((5, 2))
        A = build_coefficient_matrix(sp, z, frame, data)
        U, s, W = tangent_svd(A, 1)
        got = curvature_corrected_directions(sp, z, U, frame, data)
        expected = (s[0] * W[:, 0]) @ np.stack(frame)
        assert np.allclose(got[0], expected, atol=1e-10)

    def test_single_point_normal_equation(self, rng):
        # N = 1, r = 1: optimum zeroes the weighted normal-equation residual
        sp = spherical_space()
        z = np.array([0.9, 0.1])
        frame = orthonormal_frame(sp, z)
        x = np.array([0.4, 0.9])
        A = build_coefficient_matrix(sp, z, frame, [x])
        U, s, W = tangent_svd(A, 1)
        what = curvature_corrected_directions(sp, z, U, frame, [x])
        V = np.array([[sp.inner(z, what[0], f) for f in frame]])
        base_val = cc_objective(sp, z, U, frame, [x], V)
        for _ in range(200):
            V_pert = V + 1e-4 * rng.standard_normal(V.shape)
            assert cc_objective(sp, z, U, frame, [x], V_pert) >= base_val - 1e-12

    def test_beats_random_candidates_small_instance(self, rng):
        sp = spherical_space()
        z = np.array([0.8, -0.2])
        data = np.array([[0.3, 0.5], [1.2, 0.4], [0.9, -0.9]])
        frame = orthonormal_frame(sp, z)
        A = build_coefficient_matrix(sp, z, frame, data)
        U, _, _ = tangent_svd(A, 1)
        what = curvature_corrected_directions(sp, z, U, frame, data)
        V_hat = np.array([[sp.inner(z, what[0], f) for f in frame]])
        best = cc_objective(sp, z, U, frame, data, V_hat)
        for _ in range(500):
            V = 3.0 * rng.standard_normal((1, 2))
            assert cc_objective(sp, z, U, frame, data, V) >= best - 1e-9


class TestAutoencoder:
    def test_encode_base_point_is_zero(self):
        sp = hyperbolic_space()
        z = np.array([0.0, 1.0])
        data = geodesic_cloud(sp, z, np.array([1.0, 0.3]), np.linspace(-1, 1, 7))
        model = RiemannianAutoencoder(sp, base_point=z, rank=1).fit(data)
        assert np.allclose(model.encode(z), 0.0, atol=1e-9)

    def test_decode_zero_is_base(self):
        sp = spherical_space()
        z = np.array([1.0, 0.0])
        data = geodesic_cloud(sp, z, np.array([0.5, 1.0]), np.linspace(-0.8, 0.8, 6))
        model = RiemannianAutoencoder(sp, base_point=z, rank=1).fit(data)
        assert np.allclose(model.decode(np.zeros(1)), z, atol=1e-9)

    def test_exact_recovery_on_geodesic_data(self):
        # rank-1 data on a pullback geodesic reconstructs to rounding
        for sp, z in [
            (hyperbolic_space(), np.array([0.0, 1.0])),
            (spherical_space(), np.array([1.0, 0.0])),
        ]:
            data = geodesic_cloud(sp, z, np.array([0.7, -0.4]), np.linspace(-1.2, 1.2, 9))
            model = RiemannianAutoencoder(sp, base_point=z, rank=1).fit(data)
            recon = model.reconstruct(data)
            assert np.max(np.linalg.norm(recon - data, axis=1)) < 1e-5

    def test_encoder_left_inverts_decoder(self, rng):
        sp = hyperbolic_space()
        z = np.array([0.0, 1.0])
        data = geodesic_cloud(sp, z, np.array([1.0, 0.0]), np.linspace(-1, 1, 8))
        model = RiemannianAutoencoder(sp, base_point=z, rank=1).fit(data)
        for _ in range(5):
            code = rng.uniform(-1, 1, size=1)
            assert np.allclose(model.encode(model.decode(code)), code, atol=1e-6)

    def test_full_rank_identity(self, rng):
        sp = identity_space()
        data = rng.standard_normal((6, 2))
        model = RiemannianAutoencoder(sp, base_point=np.zeros(2), rank=2).fit(data)
        recon = model.reconstruct(data)
        assert np.allclose(recon, data, atol=1e-5)

    def test_codes_match_transform_on_training_data(self):
        sp = spherical_space()
        z = np.array([1.0, 0.0])
        data = geodesic_cloud(sp, z, np.array([0.0, 1.0]), np.linspace(-1, 1, 6))
        for corrected in [False, True]:
            model = RiemannianAutoencoder(sp, base_point=z, rank=1, curvature_corrected=corrected).fit(data)
            assert np.allclose(model.codes_, model.transform(data), atol=1e-8)

    def test_ccrae_span_matches_and_objective_not_worse(self, rng):
        sp = spherical_space()
        z = np.array([0.8, -0.2])
        data = np.array([[0.3, 0.5], [1.2, 0.4], [0.9, -0.9], [0.5, 0.1]])
        frame = orthonormal_frame(sp, z)
        A = build_coefficient_matrix(sp, z, frame, data)
        U, s, W = tangent_svd(A, 1)
        corrected = curvature_corrected_directions(sp, z, U, frame, data)
        V_cc = np.array([[sp.inner(z, corrected[0], f) for f in frame]])
        V_rae = (np.diag(s) @ W.T)
        assert cc_objective(sp, z, U, frame, data, V_cc) <= cc_objective(sp, z, U, frame, data, V_rae) + 1e-10
        # orthonormalised direction spans the corrected direction
        model = RiemannianAutoencoder(sp, base_point=z, rank=1, curvature_corrected=True).fit(data)
        w = model.directions_[0]
        resid = corrected[0] - sp.inner(z, corrected[0], w) * w
        assert sp.norm(z, resid) < 1e-6

    def test_latent_isometry_flat_pullback(self, rng):
        # Euclidean model + isometric phi: latent distances equal pullback distances
        sp = PullbackSpace.of(translation_diffeo(np.array([1.0, -2.0])))
        direction = np.array([1.0, 1.0]) / np.sqrt(2)
        data = np.stack([np.array([1.0, -2.0]) + t * direction for t in np.linspace(-2, 2, 9)])
        model = RiemannianAutoencoder(sp, base_point=data[0], rank=1).fit(data)
        codes = model.transform(data)
        for i in range(len(data)):
            for j in range(len(data)):
                lat = abs(codes[i, 0] - codes[j, 0])
                assert lat == pytest.approx(sp.distance(data[i], data[j]), abs=1e-8)

    def test_json_round_trip(self):
        sp = hyperbolic_space()
        z = np.array([0.0, 1.0])
        data = geodesic_cloud(sp, z, np.array([1.0, 0.2]), np.linspace(-1, 1, 5))
        model = RiemannianAutoencoder(sp, base_point=z, rank=1).fit(data)
        clone = RiemannianAutoencoder.from_json(model.to_json(), sp)
        assert np.array_equal(np.stack(clone.directions_), np.stack(model.directions_))
        assert np.array_equal(clone.base_, model.base_)
        x = data[2]
        assert np.allclose(clone.encode(x), model.encode(x))
