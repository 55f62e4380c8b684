import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pullgeo.errors import AntipodalPoints, ZeroDirection
from pullgeo.manifolds import (
    CurvatureSpectrum,
    Euclidean,
    Hyperboloid,
    ManifoldPoint,
    Product,
    Sphere,
    TangentVector,
    curvature_spectrum,
    distance,
    exp_map,
    log_map,
    metric_inner,
    parallel_transport,
)

from conftest import (
    random_hyperboloid_point,
    random_hyperboloid_tangent,
    random_sphere_point,
    random_sphere_tangent,
)


def sphere_point(*coords):
    return ManifoldPoint(np.array(coords), Sphere(len(coords) - 1))


class TestMetricInner:
    def test_euclidean_orthogonal_basis(self):
        E = Euclidean(2)
        p = ManifoldPoint(np.array([0.0, 0.0]), E)
        u = TangentVector(p, np.array([1.0, 0.0]))
        v = TangentVector(p, np.array([0.0, 1.0]))
        assert metric_inner(p, u, v) == 0.0

    def test_sphere_unit_vector(self):
        p = sphere_point(0.0, 0.0, 1.0)
        u = TangentVector(p, np.array([1.0, 0.0, 0.0]))
        assert metric_inner(p, u, u) == 1.0

    def test_hyperboloid_minkowski(self):
        # <u,u>_M = 1^2 - 0^2 evaluated by hand
        p = ManifoldPoint(np.array([0.0, 1.0]), Hyperboloid(1))
        u = TangentVector(p, np.array([1.0, 0.0]))
        assert metric_inner(p, u, u) == pytest.approx(1.0, abs=1e-15)

    def test_mismatched_base_points(self):
        S = Sphere(2)
        p = sphere_point(1.0, 0.0, 0.0)
        q = sphere_point(0.0, 1.0, 0.0)
        u = TangentVector(p, np.array([0.0, 1.0, 0.0]))
        w = TangentVector(q, np.array([1.0, 0.0, 0.0]))
        with pytest.raises(ValueError):
            metric_inner(p, u, w)


class TestExpLog:
    def test_zero_velocity(self):
        p = sphere_point(1.0, 0.0, 0.0)
        v = TangentVector(p, np.zeros(3))
        assert np.allclose(exp_map(p, v).coords, p.coords)

    def test_sphere_quarter_turn(self):
        p = sphere_point(1.0, 0.0, 0.0)
        v = TangentVector(p, np.array([0.0, np.pi / 2, 0.0]))
        assert np.allclose(exp_map(p, v).coords, [0.0, 1.0, 0.0], atol=1e-15)

    def test_hyperboloid_geodesic(self):
        H = Hyperboloid(1)
        p = ManifoldPoint(np.array([0.0, 1.0]), H)
        for s in [0.3, 1.0, 2.5]:
            v = TangentVector(p, np.array([s, 0.0]))
            assert np.allclose(exp_map(p, v).coords, [np.sinh(s), np.cosh(s)], atol=1e-12)

    def test_log_of_same_point(self):
        p = sphere_point(0.0, 1.0, 0.0)
        assert np.allclose(log_map(p, p).coords, 0.0)

    def test_log_inverts_exp_example(self):
        p = sphere_point(1.0, 0.0, 0.0)
        q = sphere_point(0.0, 1.0, 0.0)
        assert np.allclose(log_map(p, q).coords, [0.0, np.pi / 2, 0.0], atol=1e-15)

    def test_euclidean_log_is_subtraction(self):
        E = Euclidean(2)
        p = ManifoldPoint(np.array([1.0, 1.0]), E)
        q = ManifoldPoint(np.array([3.0, 0.0]), E)
        assert np.allclose(log_map(p, q).coords, [2.0, -1.0])

    def test_antipodal_raises(self):
        p = sphere_point(1.0, 0.0, 0.0)
        q = sphere_point(-1.0, 0.0, 0.0)
        with pytest.raises(AntipodalPoints):
            log_map(p, q)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_round_trip_sphere(self, seed):
        rng = np.random.default_rng(seed)
        S = Sphere(2)
        p = random_sphere_point(rng, 2)
        v = random_sphere_tangent(rng, p)
        n = np.linalg.norm(v)
        if n > 1e-9:
            v = v / n * min(n, 3.0)  # stay inside the injectivity radius
        assert np.allclose(S.log(p, S.exp(p, v)), v, atol=1e-7)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_round_trip_hyperboloid(self, seed):
        rng = np.random.default_rng(seed)
        H = Hyperboloid(3)
        p = random_hyperboloid_point(rng, 3)
        v = random_hyperboloid_tangent(rng, p)
        n = H.norm(p, v)
        if n > 1.0:
            v = v / n
        assert np.allclose(H.log(p, H.exp(p, v)), v, atol=1e-7)


class TestDistance:
    def test_zero_on_diagonal(self):
        p = sphere_point(0.0, 0.0, 1.0)
        assert distance(p, p) == 0.0

    def test_sphere_orthogonal(self):
        assert distance(sphere_point(1.0, 0.0, 0.0), sphere_point(0.0, 1.0, 0.0)) == pytest.approx(np.pi / 2)

    def test_hyperboloid_unit(self):
        H = Hyperboloid(1)
        p = ManifoldPoint(np.array([0.0, 1.0]), H)
        q = ManifoldPoint(np.array([np.sinh(1.0), np.cosh(1.0)]), H)
        assert distance(p, q) == pytest.approx(1.0, abs=1e-12)

    def test_geodesic_has_unit_speed(self, rng):
        for M, mk_p, mk_v in [
            (Sphere(2), random_sphere_point, random_sphere_tangent),
            (Hyperboloid(2), random_hyperboloid_point, random_hyperboloid_tangent),
        ]:
            p = mk_p(rng, 2)
            v = mk_v(rng, p, scale=0.5)
            nv = M.norm(p, v)
            for t in np.linspace(0.0, 1.0, 7):
                assert M.dist(p, M.exp(p, t * v)) == pytest.approx(t * nv, abs=1e-8)

    def test_product_pythagoras(self, rng):
        M = Product(Sphere(2), 2)
        for _ in range(5):
            pa, qa = random_sphere_point(rng, 2), random_sphere_point(rng, 2)
            pb, qb = rng.standard_normal(2), rng.standard_normal(2)
            p = np.concatenate([pa, pb])
            q = np.concatenate([qa, qb])
            expected = np.hypot(Sphere(2).dist(pa, qa), np.linalg.norm(qb - pb))
            assert M.dist(p, q) == pytest.approx(expected, abs=1e-14)


class TestParallelTransport:
    def test_same_point_identity(self):
        p = sphere_point(1.0, 0.0, 0.0)
        u = TangentVector(p, np.array([0.0, 0.5, 0.2]))
        assert np.allclose(parallel_transport(p, p, u).coords, u.coords)

    def test_euclidean_identity(self):
        E = Euclidean(3)
        p = ManifoldPoint(np.array([1.0, 0.0, 2.0]), E)
        q = ManifoldPoint(np.array([0.0, 5.0, 1.0]), E)
        u = TangentVector(p, np.array([1.0, 2.0, 3.0]))
        assert np.allclose(parallel_transport(p, q, u).coords, u.coords)

    def test_normal_vector_fixed_along_equator(self):
        # (0,0,1) is orthogonal to the geodesic plane, so transport leaves it alone
        p = sphere_point(1.0, 0.0, 0.0)
        q = sphere_point(0.0, 1.0, 0.0)
        u = TangentVector(p, np.array([0.0, 0.0, 1.0]))
        assert np.allclose(parallel_transport(p, q, u).coords, [0.0, 0.0, 1.0], atol=1e-15)

    def test_isometry_and_round_trip(self, rng):
        for M, mk_p, mk_v in [
            (Sphere(3), random_sphere_point, random_sphere_tangent),
            (Hyperboloid(3), random_hyperboloid_point, random_hyperboloid_tangent),
        ]:
            for _ in range(10):
                p = mk_p(rng, 3)
                q = mk_p(rng, 3)
                u = mk_v(rng, p)
                v = mk_v(rng, p)
                Pu = M.transport(p, q, u)
                Pv = M.transport(p, q, v)
                assert M.inner(q, Pu, Pv) == pytest.approx(M.inner(p, u, v), abs=1e-8)
                back = M.transport(q, p, Pu)
                assert np.allclose(back, u, atol=1e-8)


class TestCurvatureSpectrum:
    def test_flat_space_all_zero(self):
        E = Euclidean(2)
        p = ManifoldPoint(np.zeros(2), E)
        w = TangentVector(p, np.array([0.3, -0.4]))
        spec = curvature_spectrum(p, w)
        assert np.allclose(spec.eigenvalues, 0.0)

    def test_sphere_eigenvalues(self):
        p = sphere_point(0.0, 0.0, 1.0)
        w = TangentVector(p, np.array([np.pi / 2, 0.0, 0.0]))
        spec = curvature_spectrum(p, w)
        assert np.allclose(sorted(spec.eigenvalues), [0.0, (np.pi / 2) ** 2])

    def test_hyperboloid_eigenvalues(self):
        H = Hyperboloid(2)
        p = ManifoldPoint(np.array([0.0, 0.0, 1.0]), H)
        w = TangentVector(p, np.array([1.0, 0.0, 0.0]))
        spec = curvature_spectrum(p, w)
        assert np.allclose(sorted(spec.eigenvalues), [-1.0, 0.0])

    def test_zero_direction_raises(self):
        p = sphere_point(1.0, 0.0, 0.0)
        w = TangentVector(p, np.zeros(3))
        with pytest.raises(ZeroDirection):
            curvature_spectrum(p, w)

    def test_eigen_equation_against_tensor(self, rng):
        # Oracle: the constant-curvature tensor R(u,v)w = K(<v,w>u - <u,w>v)
        # must reproduce each eigenpair.
        cases = [
            (Sphere(2), random_sphere_point(rng, 2)),
            (Hyperboloid(2), random_hyperboloid_point(rng, 2)),
            (Product(Sphere(2), 2), None),
        ]
        for M, pc in cases:
            if pc is None:
                pc = np.concatenate([random_sphere_point(rng, 2), rng.standard_normal(2)])
            p = ManifoldPoint(pc, M)
            w_c = M.project_tangent(pc, rng.standard_normal(M.ambient_dim))
            w = TangentVector(p, w_c)
            spec = curvature_spectrum(p, w)
            assert isinstance(spec, CurvatureSpectrum)
            n = len(spec.frame)
            assert n == M.intrinsic_dim
            # frame orthonormality in the manifold metric
            for i in range(n):
                for j in range(n):
                    g = metric_inner(p, spec.frame[i], spec.frame[j])
                    assert g == pytest.approx(1.0 if i == j else 0.0, abs=1e-8)
            for lam, theta in zip(spec.eigenvalues, spec.frame):
                lhs = M.curvature_operator(pc, theta.coords, w_c, w_c)
                assert np.allclose(lhs, lam * theta.coords, atol=1e-6)


class TestConstraints:
    def test_point_validation(self):
        with pytest.raises(ValueError):
            ManifoldPoint(np.array([1.0, 1.0, 0.0]), Sphere(2))
        with pytest.raises(ValueError):
            ManifoldPoint(np.array([0.0, -1.0]), Hyperboloid(1))  # lower sheet

    def test_tangent_validation(self):
        p = sphere_point(1.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            TangentVector(p, np.array([1.0, 0.0, 0.0]))

    def test_exp_reprojects_on_drift(self):
        S = Sphere(2)
        p = np.array([1.0, 0.0, 0.0])
        v = np.array([0.0, 40.0, 13.5])
        out = S.exp(p, v)
        assert S.point_defect(out) <= 1e-12
