import math

import numpy as np
import pytest
from scipy.linalg import expm
from scipy.stats import poisson

from speckleqi import (
    DensityMatrix,
    FadingModel,
    ResourceGuard,
    SystemParams,
    TruncationTooSmall,
    apply_return_channel,
    check_helstrom_concavity,
    coherent_thermal_state,
    default_dim,
    dim_for_tail,
    fading_average,
    fading_exponent_trend,
    helstrom,
    hypothesis_state,
    partial_trace,
    qcb,
    qcb_exponent_at_zero_return,
    return_idler_covariance,
    sfg_mean_counts,
    tensor_power,
    thermal_state,
    threshold_test_error,
    tmsv_state,
    wigner_covariance,
)
from speckleqi.oracle import (
    _destroy,
    _PairwiseAccumulator,
    _thermal_weights,
    random_density_matrix,
    rotate_return_phase,
)


def reference_beam_splitter_channel(state, kappa, phi, nbar, d_out, env_tail=1e-13):
    """Independent construction: evolve pure (signal, env, idler) kets with a
    matrix-exponential beam-splitter unitary, then trace out the environment.

    The unitary is exp(i*phi*n_1) exp(theta*(a1^dag a2 - a1 a2^dag))
    exp(-i*phi*n_2) with cos(theta) = sqrt(kappa), which realizes
    a_R = sqrt(kappa) e^{i phi} a_S + sqrt(1-kappa) a_B. Requires a rank-1
    input state.
    """
    d_sig, d_idl = state.dims
    w, v = np.linalg.eigh(state.data)
    assert w[:-1].max() < 1e-12, "reference path needs a pure input"
    psi = (v[:, -1] * math.sqrt(w[-1])).reshape(d_sig, d_idl)
    d_env = dim_for_tail(nbar, env_tail)
    d_big = d_sig + d_env - 1  # leak-free: holds every populated sector
    a = _destroy(d_big)
    n_op = np.diag(np.arange(d_big, dtype=float))
    eye = np.eye(d_big)
    theta = math.atan2(math.sqrt(1 - kappa), math.sqrt(kappa))
    gen = theta * (np.kron(a.conj().T, eye) @ np.kron(eye, a)
                   - np.kron(a, eye) @ np.kron(eye, a.conj().T))
    u = expm(1j * phi * np.kron(n_op, eye)) @ expm(gen) @ expm(-1j * phi * np.kron(eye, n_op))
    env_w = _thermal_weights(nbar, d_env)
    out = np.zeros((d_out * d_idl, d_out * d_idl), dtype=complex)
    for k in range(d_env):
        vec = np.zeros((d_big, d_big, d_idl), dtype=complex)
        vec[:d_sig, k, :] = psi
        vec = (u @ vec.reshape(d_big * d_big, d_idl)).reshape(d_big, d_big, d_idl)
        for e in range(d_big):
            slab = vec[:d_out, e, :].reshape(-1)
            out += env_w[k] * np.outer(slab, slab.conj())
    return out


class TestThermalState:
    def test_vacuum(self):
        dm = thermal_state(0.0, 5)
        expected = np.zeros((5, 5))
        expected[0, 0] = 1.0
        np.testing.assert_allclose(dm.data, expected)
        assert dm.trace_deficit == 0.0

    def test_unit_mean_weights_and_deficit(self):
        dm = thermal_state(1.0, 30)
        n = np.arange(30)
        np.testing.assert_allclose(np.diag(dm.data).real, 0.5 ** (n + 1), rtol=1e-13)
        # geometric tail: (1/2)^30
        assert dm.trace_deficit == pytest.approx(9.313225746154785e-10, rel=1e-12)
        dm.validate()

    def test_truncation_error_with_suggestion(self):
        with pytest.raises(TruncationTooSmall) as exc:
            thermal_state(15.65327441783348, 30)
        assert exc.value.suggested_dim == dim_for_tail(15.65327441783348, 1e-6)
        thermal_state(15.65327441783348, exc.value.suggested_dim)  # now fits

    def test_dim_helpers(self):
        assert dim_for_tail(0.0, 1e-12) == 2
        nbar = 5.0
        d = dim_for_tail(nbar, 1e-12)
        assert (nbar / (nbar + 1)) ** d <= 1e-12 < (nbar / (nbar + 1)) ** (d - 1)
        assert default_dim(1.0) == math.ceil(1 + 8 * math.sqrt(2) + 6)


class TestCoherentThermalState:
    def test_vacuum_edge(self):
        dm = coherent_thermal_state(0.0, 0.0, 6)
        assert dm.data[0, 0].real == pytest.approx(1.0)

    def test_pure_coherent_is_poisson(self):
        dm = coherent_thermal_state(1.0, 0.0, 25)
        np.testing.assert_allclose(np.diag(dm.data).real, poisson.pmf(np.arange(25), 1.0),
                                   atol=1e-12)
        dm.validate()

    def test_headroom_enforced(self):
        with pytest.raises(TruncationTooSmall):
            coherent_thermal_state(3.0, 1.0, 10)


class TestTmsvState:
    def test_zero_brightness(self):
        dm = tmsv_state(0.0, 4)
        expected = np.zeros((16, 16))
        expected[0, 0] = 1.0
        np.testing.assert_allclose(dm.data, expected)

    def test_purity(self):
        dm = tmsv_state(0.5, 20)
        assert abs(np.trace(dm.data @ dm.data).real - 1.0) < 1e-10

    def test_marginals_are_thermal(self):
        dm = tmsv_state(0.5, 20)
        reference = np.diag(_thermal_weights(0.5, 20))
        for mode in (0, 1):
            np.testing.assert_allclose(partial_trace(dm, mode).data, reference,
                                       atol=1e-9)

    def test_truncation_guard(self):
        with pytest.raises(TruncationTooSmall):
            tmsv_state(0.5, 4)


class TestReturnChannel:
    @pytest.mark.parametrize("kappa,phi,nbar", [
        (0.3, math.pi / 4, 0.5),
        (0.7, 1.1, 0.2),
        (0.45, 2.2, 0.9),
        (0.999, 0.3, 0.1),
    ])
    def test_matches_matrix_exponential_reference(self, kappa, phi, nbar):
        tmsv = tmsv_state(0.1, 5, trace_deficit_tol=1e-4)
        mine = apply_return_channel(tmsv, kappa, phi, nbar, out_dim=8,
                                    trace_deficit_tol=0.5)
        ref = reference_beam_splitter_channel(tmsv, kappa, phi, nbar, 8)
        assert np.abs(mine.data - ref).max() < 1e-11

    def test_zero_transmissivity_factorizes(self):
        tmsv = tmsv_state(0.2, 8)
        out = apply_return_channel(tmsv, 0.0, 0.0, 0.4, out_dim=8,
                                   trace_deficit_tol=0.1)
        idler = partial_trace(tmsv, 1)
        expected = np.kron(np.diag(_thermal_weights(0.4, 8)), idler.data)
        assert np.abs(out.data - expected).max() < 1e-12

    def test_unit_transmissivity_is_phase_rotation(self):
        tmsv = tmsv_state(0.2, 8)
        out = apply_return_channel(tmsv, 1.0, 0.9, math.inf, out_dim=8)
        np.testing.assert_allclose(out.data, rotate_return_phase(tmsv, 0.9).data,
                                   atol=1e-14)

    def test_output_truncation_guard(self):
        tmsv = tmsv_state(0.2, 8)
        with pytest.raises(TruncationTooSmall):
            apply_return_channel(tmsv, 0.5, 0.0, 2.0, out_dim=3)

    def test_environment_guard(self):
        tmsv = tmsv_state(0.2, 8, trace_deficit_tol=1e-4)
        with pytest.raises(TruncationTooSmall):
            apply_return_channel(tmsv, 0.5, 0.0, 1e6, out_dim=8, trace_deficit_tol=0.9)


class TestCovarianceWeld:
    def test_moments_match_covariance_h1(self):
        params = SystemParams(M=1e6, N_S=0.1, N_B=0.5, kappa_bar=0.01)
        state = hypothesis_state(params, 0.3, math.pi / 4, 12, present=True)
        means, cov = wigner_covariance(state)
        ref = return_idler_covariance(0.1, 0.5, 0.3, math.pi / 4, present=True)
        assert np.abs(means).max() < 1e-6
        assert np.abs(cov - ref.matrix).max() < 1e-6

    def test_moments_match_covariance_h0(self):
        params = SystemParams(M=1e6, N_S=0.1, N_B=0.5, kappa_bar=0.01)
        state = hypothesis_state(params, 0.0, 0.0, 12, present=False)
        _, cov = wigner_covariance(state)
        ref = return_idler_covariance(0.1, 0.5, 0.0, 0.0, present=False)
        assert np.abs(cov - ref.matrix).max() < 1e-6

    def test_covariance_structure(self):
        ref = return_idler_covariance(0.1, 0.5, 0.3, 0.7, present=True)
        cov = ref.matrix
        np.testing.assert_allclose(cov, cov.T)
        assert ref.c_p == pytest.approx(math.sqrt(0.3 * 0.1 * 1.1))
        # diagonal blocks proportional to the identity
        for block in (cov[:2, :2], cov[2:, 2:]):
            np.testing.assert_allclose(block, block[0, 0] * np.eye(2), atol=1e-15)
        # off-diagonal block has the reflection structure
        off = cov[:2, 2:]
        assert off[0, 0] == pytest.approx(-off[1, 1])
        assert off[0, 1] == pytest.approx(off[1, 0])

    def test_absent_hypothesis_has_no_cross_block(self):
        ref = return_idler_covariance(0.1, 0.5, 0.9, 0.2, present=False)
        np.testing.assert_allclose(ref.matrix[:2, 2:], 0.0)
        assert ref.c_p == 0.0

    def test_printed_limit_form_drops_leakthrough(self):
        exact = return_idler_covariance(0.1, 0.5, 0.3, 0.0, present=True)
        limit = return_idler_covariance(0.1, 0.5, 0.3, 0.0, present=True,
                                        exact_return_noise=False)
        assert limit.matrix[0, 0] == pytest.approx((2 * 0.5 + 1) / 4)
        assert exact.matrix[0, 0] - limit.matrix[0, 0] == pytest.approx(0.3 * 0.1 / 2)


class TestFadingAverage:
    def test_constant_builder_is_identity(self):
        fixed = thermal_state(0.3, 10)
        out = fading_average(lambda a, p: fixed, FadingModel.rayleigh(0.05), (16, 16))
        np.testing.assert_allclose(out.data, fixed.renormalized().data, atol=1e-10)

    def test_deterministic_model_rejected(self):
        with pytest.raises(ValueError):
            fading_average(lambda a, p: thermal_state(0.1, 5),
                           FadingModel.deterministic(0.3, 0.0), 16)

    def test_minimum_nodes_enforced(self):
        with pytest.raises(ValueError):
            fading_average(lambda a, p: thermal_state(0.1, 5),
                           FadingModel.rayleigh(0.05), (4, 16))

    def test_sfg_conditional_average_is_thermal(self):
        # Rayleigh mixture of conditional coherent states = thermal(N1 + floor)
        params = SystemParams(M=100.0, N_S=0.01, N_B=0.5, kappa_bar=0.05, epsilon=0.01)
        n0, n1 = sfg_mean_counts(params)
        scale = (1 - params.epsilon) * params.M * params.N_S / params.N_B

        def builder(amplitude, phase):
            alpha = math.sqrt(scale) * amplitude * np.exp(1j * phase)
            return coherent_thermal_state(alpha, n0, 30)

        averaged = fading_average(builder, FadingModel.rayleigh(0.05), (64, 64))
        target = thermal_state(n1 + n0, 30).renormalized()
        distance = 0.5 * np.abs(np.linalg.eigvalsh(averaged.data - target.data)).sum()
        assert distance < 1e-4

    def test_pairwise_accumulator(self, rng):
        acc = _PairwiseAccumulator()
        terms = [rng.standard_normal((6, 6)) for _ in range(37)]
        for t in terms:
            acc.add(t)
        np.testing.assert_allclose(acc.total(), np.sum(terms, axis=0), atol=1e-12)


class TestHelstrom:
    def test_identical_states(self, rng):
        dm = random_density_matrix(5, rng)
        for pi0 in (0.5, 0.2, 0.9):
            assert helstrom(dm, dm, pi0) == pytest.approx(min(pi0, 1 - pi0), abs=1e-12)

    def test_two_thermal_states_brute_force(self):
        # brute force over all threshold decision rules on the counts
        t0 = thermal_state(0.0, 40)
        t1 = thermal_state(1.0, 40, trace_deficit_tol=1e-5)
        p0 = np.diag(t0.data).real
        p1 = np.diag(t1.data).real
        best = min(0.5 * p0[t + 1:].sum() + 0.5 * (1 - p1[t + 1:].sum())
                   for t in range(-1, 39))
        assert best == pytest.approx(0.25, abs=1e-9)
        assert helstrom(t0, t1, 0.5) == pytest.approx(0.25, abs=1e-9)

    def test_orthogonal_pure_states(self):
        r0 = DensityMatrix(np.diag([1.0, 0.0]), (2,))
        r1 = DensityMatrix(np.diag([0.0, 1.0]), (2,))
        assert helstrom(r0, r1, 0.5) == pytest.approx(0.0, abs=1e-14)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError):
            helstrom(random_density_matrix(3, rng), random_density_matrix(4, rng), 0.5)

    def test_weld_to_analytic_threshold_error(self, rng):
        for _ in range(5):
            n1 = rng.uniform(0.5, 5.0)
            n0 = rng.uniform(0.0, 0.8 * n1)
            dim = dim_for_tail(n1, 1e-12)
            got = helstrom(thermal_state(n0, dim, 1e-11), thermal_state(n1, dim, 1e-11), 0.5)
            assert got == pytest.approx(threshold_test_error(n0, n1, 0.5), abs=1e-8)


class TestQcb:
    def test_identical_states(self, rng):
        dm = random_density_matrix(4, rng)
        assert qcb(dm, dm).qcb_exponent == pytest.approx(0.0, abs=1e-12)

    def test_pure_states_flat_overlap(self, rng):
        v0 = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        v1 = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        v0 /= np.linalg.norm(v0)
        v1 /= np.linalg.norm(v1)
        r0 = DensityMatrix(np.outer(v0, v0.conj()), (6,))
        r1 = DensityMatrix(np.outer(v1, v1.conj()), (6,))
        overlap = abs(v0.conj() @ v1) ** 2
        report = qcb(r0, r1)
        assert math.exp(-report.qcb_exponent) == pytest.approx(overlap, rel=1e-9)
        # s-independence of tr(rho0^s rho1^(1-s)) for pure states
        from speckleqi.oracle import _chernoff_objective
        q_s = _chernoff_objective(r0, r1)
        grid = [q_s(s) for s in np.linspace(0.05, 0.95, 19)]
        assert max(grid) - min(grid) < 1e-12

    def test_thermal_pair_matches_dense_grid(self):
        r0 = thermal_state(0.1, 60).renormalized()
        r1 = thermal_state(1.0, 60, 1e-5).renormalized()
        report = qcb(r0, r1)
        p0 = np.diag(r0.data).real
        p1 = np.diag(r1.data).real
        grid = np.linspace(0.0, 1.0, 1001)
        q_grid = min(np.sum(p0 ** s * p1 ** (1 - s)) for s in grid[1:-1])
        assert report.qcb_exponent == pytest.approx(-math.log(q_grid), abs=1e-6)

    def test_single_copy_bound(self, rng):
        for _ in range(100):
            dim = int(rng.integers(2, 7))
            report = qcb(random_density_matrix(dim, rng), random_density_matrix(dim, rng))
            assert report.helstrom_error <= 0.5 * math.exp(-report.qcb_exponent) + 1e-10

    def test_rejects_non_psd(self):
        bad = DensityMatrix(np.diag([1.2, -0.2]), (2,))
        good = DensityMatrix(np.diag([0.5, 0.5]), (2,))
        with pytest.raises(ValueError):
            qcb(bad, good)


class TestConcavity:
    def test_single_component_equality(self):
        report = check_helstrom_concavity(trials=50, dim=3, mixture_size=1, seed=1)
        assert abs(report.min_slack) < 1e-12
        assert report.violations == 0

    def test_random_qubit_trials(self):
        report = check_helstrom_concavity(trials=300, dim=2, mixture_size=4, seed=2)
        assert report.violations == 0
        assert report.min_slack >= -1e-9


class TestExponentTrend:
    SURROGATE = dict(M=100.0, N_S=0.1, N_B=0.3, kappa_bar=0.5)

    def test_fading_exponent_decreases_one_to_two(self):
        params = SystemParams(**self.SURROGATE)
        points = fading_exponent_trend(params, [1, 2], dim=4, nodes=(16, 33))
        assert points[0].copies == 1 and points[1].copies == 2
        assert points[1].helstrom_exponent < points[0].helstrom_exponent

    def test_deterministic_contrast_constant_rate(self):
        params = SystemParams(**self.SURROGATE)
        points = fading_exponent_trend(params, [1, 2], dim=4, nodes=(16, 33),
                                       model=FadingModel.deterministic(0.5, 0.0))
        rates = [p.chernoff_exponent for p in points]
        assert abs(rates[1] - rates[0]) < 1e-9 * max(rates)

    def test_zero_return_deterministic_gives_prior_error(self):
        # kappa = 0: the hypotheses coincide; no decay at any copy count
        params = SystemParams(**self.SURROGATE)
        points = fading_exponent_trend(params, [1, 2], dim=4, nodes=(16, 33),
                                       model=FadingModel.deterministic(0.0, 0.0))
        for p in points:
            assert math.exp(-p.helstrom_exponent * p.copies) == pytest.approx(0.5, abs=1e-9)
            assert p.chernoff_exponent == pytest.approx(0.0, abs=1e-9)

    def test_memory_guard(self):
        params = SystemParams(**self.SURROGATE)
        with pytest.raises(ResourceGuard):
            fading_exponent_trend(params, [1, 3], dim=8, nodes=(16, 33))

    def test_qcb_vanishes_at_zero_return(self):
        params = SystemParams(**self.SURROGATE)
        assert qcb_exponent_at_zero_return(params, 4) < 1e-8

    def test_conditional_qcb_nondecreasing_in_amplitude(self):
        params = SystemParams(**self.SURROGATE)
        rho0 = hypothesis_state(params, 0.0, 0.0, 4, present=False, out_dim=4,
                                trace_deficit_tol=0.2).renormalized()
        exponents = []
        for amp in np.linspace(0.0, 1.0, 10):
            rho1 = hypothesis_state(params, float(amp) ** 2, 0.4, 4, present=True,
                                    out_dim=4, trace_deficit_tol=0.2).renormalized()
            exponents.append(qcb(rho0, rho1).qcb_exponent)
        assert all(b >= a - 1e-10 for a, b in zip(exponents, exponents[1:]))
        assert exponents[0] == pytest.approx(0.0, abs=1e-10)
        assert exponents[-1] > 0.0


class TestDensityMatrixType:
    def test_shape_validation(self):
        with pytest.raises(ValueError):
            DensityMatrix(np.eye(4), (3,))

    def test_validate_catches_non_hermitian(self):
        data = np.array([[0.5, 0.1], [0.3, 0.5]], dtype=complex)
        with pytest.raises(ValueError, match="Hermitian"):
            DensityMatrix(data, (2,)).validate()

    def test_validate_catches_negative_eigenvalue(self):
        with pytest.raises(ValueError, match="eigenvalue"):
            DensityMatrix(np.diag([1.5, -0.5]), (2,)).validate()

    def test_psd_clamp_tolerates_roundoff(self):
        dm = DensityMatrix(np.diag([1.0, -5e-11]), (2,))
        clamped = dm.psd_clamped()
        assert np.linalg.eigvalsh(clamped.data).min() >= 0.0

    def test_tensor_power_accumulates_deficit(self):
        dm = thermal_state(1.0, 8, trace_deficit_tol=0.01)
        cubed = tensor_power(dm, 3)
        assert cubed.dims == (8, 8, 8)
        expected = 1 - (1 - dm.trace_deficit) ** 3
        assert cubed.trace_deficit == pytest.approx(expected, rel=1e-9)
        assert cubed.trace() == pytest.approx(dm.trace() ** 3, rel=1e-12)

    def test_builders_pass_invariants(self):
        thermal_state(0.4, 20).validate()
        tmsv_state(0.2, 12).validate()
        coherent_thermal_state(0.5 + 0.2j, 0.1, 20).validate()
        params = SystemParams(M=1e4, N_S=0.1, N_B=0.4, kappa_bar=0.1)
        hypothesis_state(params, 0.4, 1.0, 8, present=True).validate(1e-6)
