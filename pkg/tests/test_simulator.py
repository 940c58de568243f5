import numpy as np
import pytest

from qaoabench.problem import (
    QuboProblem,
    WeightedGraph,
    brute_force_optimum,
    cost_over_all_bitstrings,
    generate_w3r,
    five_variable_qubo,
)
from qaoabench.simulator import (
    STATEVECTOR_MAX_N,
    QaoaParams,
    ShotSample,
    Statevector,
    build_state,
    counts_to_vector,
    exact_expectation,
    expectation_of_distribution,
    sample_bitstrings,
    shot_estimate,
    success_ratio,
)

from helpers import dense_expectation, dense_qaoa_state

SINGLE_EDGE = QuboProblem.from_graph(WeightedGraph(n=2, edges=((0, 1, 1.0),)))


class TestBuildState:
    def test_zero_angles_give_uniform_superposition(self):
        prob = QuboProblem.from_graph(generate_w3r(n=6, seed=0))
        state = build_state(prob, QaoaParams(gamma=(0.0,), beta=(0.0,)))
        np.testing.assert_allclose(state.amplitudes, np.full(64, 2.0**-3), atol=1e-12)

    def test_single_edge_matches_dense_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(5):
            params = QaoaParams.from_vector(rng.uniform(-np.pi, np.pi, 2))
            psi = build_state(SINGLE_EDGE, params).amplitudes
            want = dense_qaoa_state(SINGLE_EDGE, params)
            np.testing.assert_allclose(psi, want, atol=1e-12)

    def test_norm_preserved_on_random_draws(self):
        prob = QuboProblem.from_graph(generate_w3r(n=8, seed=2))
        rng = np.random.default_rng(3)
        for _ in range(100):
            p = int(rng.integers(1, 4))
            params = QaoaParams.from_vector(rng.uniform(-np.pi, np.pi, 2 * p))
            psi = build_state(prob, params).amplitudes
            assert abs(np.linalg.norm(psi) - 1.0) < 1e-10

    def test_size_cap(self):
        g = WeightedGraph(n=STATEVECTOR_MAX_N + 1, edges=((0, 1, 1.0),))
        with pytest.raises(ValueError):
            build_state(QuboProblem.from_graph(g), QaoaParams(gamma=(0.1,), beta=(0.1,)))


class TestExactExpectation:
    def test_zero_angles_give_zero(self):
        for seed in range(3):
            prob = QuboProblem.from_graph(generate_w3r(n=8, seed=seed))
            assert abs(exact_expectation(prob, QaoaParams(gamma=(0.0,), beta=(0.0,)))) < 1e-12

    def test_single_edge_closed_form(self):
        # sign fixed against the dense oracle: E(gamma, beta) = +sin(2 gamma) sin(4 beta)
        rng = np.random.default_rng(4)
        for _ in range(50):
            gamma, beta = rng.uniform(-np.pi, np.pi, 2)
            got = exact_expectation(SINGLE_EDGE, QaoaParams(gamma=(gamma,), beta=(beta,)))
            assert abs(got - np.sin(2 * gamma) * np.sin(4 * beta)) < 1e-10

    def test_matches_dense_oracle_on_random_instances(self):
        rng = np.random.default_rng(5)
        for seed in range(6):
            prob = QuboProblem.from_graph(generate_w3r(n=6, seed=seed))
            p = int(rng.integers(1, 4))
            params = QaoaParams.from_vector(rng.uniform(-np.pi, np.pi, 2 * p))
            got = exact_expectation(prob, params)
            assert abs(got - dense_expectation(prob, params)) < 1e-11

    def test_bounded_by_brute_force_extremes(self):
        rng = np.random.default_rng(6)
        prob = QuboProblem.from_graph(generate_w3r(n=10, seed=9))
        oracle = brute_force_optimum(prob)
        for _ in range(20):
            params = QaoaParams.from_vector(rng.uniform(-np.pi, np.pi, 4))
            e = exact_expectation(prob, params)
            assert oracle.min_value - 1e-9 <= e <= oracle.max_value + 1e-9


class TestSampling:
    def test_basis_state_is_deterministic(self):
        amps = np.zeros(4)
        amps[1] = 1.0  # |01>
        sample = sample_bitstrings(Statevector(n=2, amplitudes=amps.astype(complex)), m=100, seed=0)
        assert sample.counts == {"01": 100}
        assert sample.m == 100

    def test_uniform_state_binomial_statistics(self):
        state = build_state(SINGLE_EDGE, QaoaParams(gamma=(0.0,), beta=(0.0,)))
        m = 10**6
        sample = sample_bitstrings(state, m=m, seed=1)
        sigma = np.sqrt(m * 0.25 * 0.75)
        for bits in ("00", "01", "10", "11"):
            assert abs(sample.counts[bits] - m / 4) < 3 * sigma

    def test_same_seed_same_counts(self):
        state = build_state(SINGLE_EDGE, QaoaParams(gamma=(0.3,), beta=(0.4,)))
        a = sample_bitstrings(state, m=500, seed=11)
        b = sample_bitstrings(state, m=500, seed=11)
        assert a.counts == b.counts

    def test_shot_sample_json_round_trip(self):
        sample = ShotSample(m=7, counts={"010": 3, "111": 4})
        assert ShotSample.from_json_dict(sample.to_json_dict()) == sample


class TestShotEstimate:
    def test_pure_cut_sample(self):
        assert shot_estimate(SINGLE_EDGE, ShotSample(m=100, counts={"01": 100})) == -1.0

    def test_converges_to_exact_expectation(self):
        params = QaoaParams(gamma=(0.5,), beta=(0.2,))
        exact = exact_expectation(SINGLE_EDGE, params)
        m = 10**6
        state = build_state(SINGLE_EDGE, params)
        est = shot_estimate(SINGLE_EDGE, sample_bitstrings(state, m=m, seed=2))
        # var of a single +-1 outcome is 1 - E^2
        stderr = np.sqrt((1 - exact**2) / m)
        assert abs(est - exact) < 4 * stderr

    def test_std_scales_as_inverse_sqrt_m(self):
        prob = QuboProblem.from_graph(generate_w3r(n=6, seed=3))
        params = QaoaParams(gamma=(0.4,), beta=(0.3,))
        state = build_state(prob, params)

        def spread(m, base):
            vals = [
                shot_estimate(prob, sample_bitstrings(state, m=m, seed=base + k))
                for k in range(200)
            ]
            return np.std(vals)

        ratio = spread(200, 10_000) / spread(800, 20_000)
        assert 2 * 0.8 < ratio < 2 * 1.2


class TestSuccessRatio:
    def test_uniform_state_on_five_variable_qubo(self):
        prob = five_variable_qubo()
        oracle = brute_force_optimum(prob)
        state = build_state(prob, QaoaParams(gamma=(0.0,), beta=(0.0,)))
        assert success_ratio(state, oracle) == pytest.approx(1 / 16, abs=1e-12)

    def test_optimal_basis_state(self):
        prob = five_variable_qubo()
        oracle = brute_force_optimum(prob)
        bits = sorted(oracle.optimal_bitstrings)[0]
        amps = np.zeros(32, dtype=complex)
        amps[int(bits, 2)] = 1.0
        assert success_ratio(Statevector(n=5, amplitudes=amps), oracle) == 1.0

    def test_state_orthogonal_to_optima(self):
        prob = five_variable_qubo()
        oracle = brute_force_optimum(prob)
        amps = np.zeros(32, dtype=complex)
        amps[0] = 1.0
        assert "00000" not in oracle.optimal_bitstrings
        assert success_ratio(Statevector(n=5, amplitudes=amps), oracle) == 0.0

    def test_accepts_shot_samples(self):
        prob = five_variable_qubo()
        oracle = brute_force_optimum(prob)
        bits = sorted(oracle.optimal_bitstrings)[0]
        sample = ShotSample(m=10, counts={bits: 5, "00000": 5})
        assert success_ratio(sample, oracle) == pytest.approx(0.5, abs=1e-12)


class TestDistributions:
    def test_counts_to_vector_normalizes(self):
        vec = counts_to_vector({"00": 3, "11": 1}, n=2)
        np.testing.assert_allclose(vec, [0.75, 0.0, 0.0, 0.25], atol=1e-15)

    def test_expectation_of_distribution_matches_table(self):
        prob = five_variable_qubo()
        table = cost_over_all_bitstrings(prob)
        rng = np.random.default_rng(8)
        dist = rng.random(32)
        dist /= dist.sum()
        assert expectation_of_distribution(prob, dist) == pytest.approx(float(dist @ table), abs=1e-12)

    def test_quasi_distributions_are_not_clipped(self):
        # mitigation produces signed quasi-probabilities; the expectation must
        # stay linear in them, so negative entries contribute with full weight
        prob = SINGLE_EDGE
        quasi = np.array([0.6, 0.5, 0.2, -0.3])
        table = cost_over_all_bitstrings(prob)
        assert expectation_of_distribution(prob, quasi) == pytest.approx(float(quasi @ table), abs=1e-14)
