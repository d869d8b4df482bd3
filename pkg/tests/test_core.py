import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from esn_rmt.core import (
    CovarianceSpec,
    LinearESN,
    ProblemDims,
    SecondOrderStats,
    TeacherSpec,
    make_memory_teacher,
    materialize_covariance,
    memory_teacher,
)


class TestMaterializeCovariance:
    def test_isotropic_is_identity(self):
        out = materialize_covariance(CovarianceSpec.isotropic(3))
        assert np.array_equal(out, np.eye(3))

    def test_ar1_direct_formula(self):
        out = materialize_covariance(CovarianceSpec.ar1(3, 0.5))
        expected = np.array([[1, 0.5, 0.25], [0.5, 1, 0.5], [0.25, 0.5, 1.0]])
        assert np.array_equal(out, expected)

    def test_power_law_diagonal(self):
        out = materialize_covariance(CovarianceSpec.power_law(4, 1.0))
        assert np.allclose(np.diag(out), [1.0, 0.5, 1 / 3, 0.25])
        assert np.array_equal(out, np.diag(np.diag(out)))

    def test_explicit_indefinite_rejected(self):
        # eigenvalues of [[1,2],[2,1]] are 3 and -1 (characteristic polynomial)
        with pytest.raises(ValueError, match="not PSD"):
            materialize_covariance(CovarianceSpec.explicit([[1.0, 2.0], [2.0, 1.0]]))

    def test_explicit_asymmetric_rejected(self):
        with pytest.raises(ValueError, match="symmetric"):
            materialize_covariance(CovarianceSpec.explicit([[1.0, 0.5], [0.0, 1.0]]))

    def test_output_exactly_symmetric_and_psd(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal((6, 6))
        spec = CovarianceSpec.explicit(a @ a.T)
        out = materialize_covariance(spec)
        assert np.array_equal(out, out.T)  # 0 ulps after symmetrization
        assert np.linalg.eigvalsh(out).min() >= -1e-10

    @settings(max_examples=50, deadline=None)
    @given(c=st.floats(min_value=0.0, max_value=0.95), T=st.integers(min_value=1, max_value=12))
    def test_ar1_always_psd(self, c, T):
        out = materialize_covariance(CovarianceSpec.ar1(T, c))
        assert np.array_equal(out, out.T)
        assert np.linalg.eigvalsh(out).min() >= -1e-10

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            CovarianceSpec.ar1(3, 1.0)
        with pytest.raises(ValueError):
            CovarianceSpec(kind="ar1", T=3)
        with pytest.raises(ValueError):
            CovarianceSpec(kind="mystery", T=3)
        with pytest.raises(ValueError):
            CovarianceSpec(kind="isotropic", T=0)


class TestMemoryTeacher:
    def test_flat_memory(self):
        assert np.array_equal(make_memory_teacher(3, 1.0, normalize=False), [1.0, 1.0, 1.0])

    def test_geometric_by_lag(self):
        # oldest-to-newest input order: weight 1 on u_3, 0.5 on u_2, 0.25 on u_1
        out = make_memory_teacher(3, 0.5, normalize=False)
        assert np.array_equal(out, [0.25, 0.5, 1.0])

    def test_normalized_unit_norm(self):
        out = make_memory_teacher(2, 0.5, normalize=True)
        assert abs(np.linalg.norm(out) - 1.0) < 1e-12

    def test_rho_out_of_range(self):
        for rho in (0.0, -0.3, 1.0001):
            with pytest.raises(ValueError):
                make_memory_teacher(3, rho)
        with pytest.raises(ValueError):
            make_memory_teacher(0, 0.5)

    @settings(max_examples=50, deadline=None)
    @given(
        T=st.integers(min_value=2, max_value=30),
        r1=st.floats(min_value=0.05, max_value=0.99),
        r2=st.floats(min_value=0.05, max_value=0.99),
    )
    def test_smaller_rho_emphasizes_recent_inputs(self, T, r1, r2):
        lo, hi = sorted((r1, r2))
        if hi - lo < 1e-6:
            return
        def recency_ratio(rho):
            theta = make_memory_teacher(T, rho, normalize=False)
            return abs(theta[-1]) / abs(theta[0])
        assert recency_ratio(lo) > recency_ratio(hi)

    def test_memory_teacher_spec(self):
        spec = memory_teacher(5, 0.7, sigma2=2.0, norm=3.0)
        assert spec.rho == 0.7
        assert spec.sigma2 == 2.0
        assert abs(np.linalg.norm(spec.theta_star) - 3.0) < 1e-12
        null = memory_teacher(5, 0.7, sigma2=1.0, norm=0.0)
        assert np.array_equal(null.theta_star, np.zeros(5))


class TestProblemDims:
    def test_gamma_recomputed(self):
        dims = ProblemDims(T=100, n=200, N=200)
        assert dims.gamma == dims.n / dims.N

    def test_gamma_times_N_is_n(self):
        for T, N in [(25, 100), (50, 200), (100, 200), (200, 200), (400, 100), (800, 200)]:
            dims = ProblemDims(T=T, n=T, N=N)
            assert dims.gamma * dims.N == dims.n

    def test_ridge_forces_n_equals_T(self):
        dims = ProblemDims.ridge(7, 13)
        assert dims.n == dims.T == 7

    def test_validation(self):
        for bad in [(0, 1, 1), (1, 0, 1), (1, 1, 0), (1, 1, -2)]:
            with pytest.raises(ValueError):
                ProblemDims(*bad)


class TestTeacherSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            TeacherSpec(theta_star=np.ones(3), sigma2=-0.1)
        with pytest.raises(ValueError):
            TeacherSpec(theta_star=np.ones(3), sigma2=1.0, rho=1.5)
        with pytest.raises(ValueError):
            TeacherSpec(theta_star=np.ones((2, 2)), sigma2=1.0)

    def test_immutable(self):
        spec = TeacherSpec(theta_star=np.ones(3), sigma2=1.0)
        with pytest.raises(ValueError):
            spec.theta_star[0] = 2.0


class TestSecondOrderStats:
    def test_ridge_collapse(self):
        sigma = materialize_covariance(CovarianceSpec.ar1(4, 0.3))
        stats = SecondOrderStats.ridge(sigma)
        assert np.array_equal(stats.sigma_u, stats.sigma_z)
        assert np.array_equal(stats.sigma_u, stats.sigma_uz)

    def test_symmetrized_on_construction(self):
        rng = np.random.default_rng(1)
        a = rng.standard_normal((4, 4))
        sz = a @ a.T + 1e-13 * rng.standard_normal((4, 4))
        stats = SecondOrderStats(sigma_u=np.eye(4), sigma_z=sz, sigma_uz=np.eye(4))
        assert np.array_equal(stats.sigma_z, stats.sigma_z.T)

    def test_not_psd_rejected(self):
        with pytest.raises(ValueError):
            SecondOrderStats(
                sigma_u=np.eye(2),
                sigma_z=np.array([[1.0, 2.0], [2.0, 1.0]]),
                sigma_uz=np.eye(2),
            )

    def test_shape_checks(self):
        with pytest.raises(ValueError):
            SecondOrderStats(sigma_u=np.eye(3), sigma_z=np.eye(2), sigma_uz=np.eye(3))


class TestFeatureMapKinds:
    def test_linear_esn_validation(self):
        with pytest.raises(ValueError):
            LinearESN(n=0, phi=0.9)
        with pytest.raises(ValueError):
            LinearESN(n=4, phi=1.2)
        with pytest.raises(ValueError):
            LinearESN(n=4, phi=0.9, weights="dense")
