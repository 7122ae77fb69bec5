import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dqc1sim.bch import BchConfig, EffectiveHamiltonian, build_h1, build_h2
from dqc1sim.circuits import Gate, LayeredCircuit, diagonal_signs, generate_hermitian_circuit
from dqc1sim.estimator import (
    HaarMoments,
    apply_global_phase,
    estimate_from_hamiltonian,
    estimate_trace,
    expected_Oqq,
    expected_Pq,
    sample_diagonals,
    sample_indices,
)
from dqc1sim.oracle import exact_normalized_trace, haar_zero_discord, materialize
from dqc1sim.pauli import PauliSum

EXACT = BchConfig(conjugation_mode="exact_single_pauli")


class TestExpectations:
    def test_oqq(self):
        assert expected_Oqq(256, 0) == 1
        assert expected_Oqq(256, 128) == 0
        assert expected_Oqq(8, 1) == 0.75

    def test_pq_endpoints(self):
        for N in (2, 16, 256, 4096):
            assert expected_Pq(N, 0) == pytest.approx(1, abs=1e-15)
            assert expected_Pq(N, N // 2) == pytest.approx(1 / (N + 1), abs=1e-15)

    def test_pq_n256(self):
        assert expected_Pq(256, 64) == pytest.approx(65 / 257, abs=1e-15)
        assert round(expected_Pq(256, 64), 5) == 0.25292

    def test_range(self):
        for bad in (-1, 257):
            with pytest.raises(ValueError):
                expected_Pq(256, bad)
            with pytest.raises(ValueError):
                expected_Oqq(256, bad)

    @given(st.integers(1, 12), st.data())
    def test_parabola_symmetry(self, n, data):
        N = 1 << n
        k = data.draw(st.integers(0, N))
        assert expected_Pq(N, k) == pytest.approx(expected_Pq(N, N - k), abs=1e-15)

    @given(st.integers(1, 10))
    def test_parabola_monotone(self, n):
        N = 1 << n
        vals = [expected_Pq(N, k) for k in range(N + 1)]
        half = N // 2
        assert all(a > b for a, b in zip(vals[:half], vals[1:half + 1]))
        assert all(a < b for a, b in zip(vals[half:], vals[half + 1:]))

    def test_moments(self):
        m = HaarMoments(16)
        assert (m.abs2, m.abs4, m.cross) == (1 / 16, 2 / 272, 1 / 272)
        with pytest.raises(ValueError):
            HaarMoments(12)


class TestEstimateTrace:
    def test_all_ones(self):
        for N in (2, 64, 1024):
            est = estimate_trace([1.0] * 10, N)
            assert est.tau_hat == 1 and est.chosen_root == 0 and est.stderr == 0

    def test_all_minus_ones(self):
        est = estimate_trace([-1.0] * 10, 64)
        assert est.tau_hat == -1 and est.chosen_root == 64

    def test_clamped_undershoot(self):
        N = 256
        est = estimate_trace([0.0, 0.01, -0.01], N)
        assert est.mean_Pq < 1 / (N + 1)
        assert est.tau_hat == 0 and est.N_minus_roots == (N / 2, N / 2)

    def test_empty(self):
        with pytest.raises(ValueError):
            estimate_trace([], 16)

    def test_corrupt_input(self):
        with pytest.raises(ValueError):
            estimate_trace([1.5, 1.0], 16)

    @given(st.lists(st.floats(-1, 1), min_size=1, max_size=60), st.integers(1, 14))
    def test_root_symmetry_and_sign(self, samples, n):
        N = 1 << n
        est = estimate_trace(samples, N)
        assert sum(est.N_minus_roots) == N
        assert est.N_minus_roots[0] <= est.N_minus_roots[1]
        assert est.chosen_root == (est.N_minus_roots[0] if est.mean_Oqq >= 0 else est.N_minus_roots[1])
        assert abs(est.tau_hat) <= 1 + 1e-12

    @given(st.floats(-1, 1), st.integers(1, 12), st.integers(2, 20))
    def test_zero_variance_limit(self, v, n, count):
        N = 1 << n
        est = estimate_trace([v] * count, N)
        # |tau_hat| = sqrt(max(0, v^2 (N+1) - 1) / N): the parabola through v^2
        expected = math.sqrt(max(0.0, v * v * (N + 1) - 1) / N)
        assert abs(est.tau_hat) == pytest.approx(expected, abs=1e-9)
        assert est.tau_hat == 0 or math.copysign(1, est.tau_hat) == math.copysign(1, v)

    def test_haar_n256_quarter_minus(self):
        rng = np.random.default_rng(2024)
        o = haar_zero_discord(8, 64, rng=rng)
        q = rng.choice(256, 500, replace=True)
        est = estimate_trace(np.diag(o).real[q], 256)
        assert abs(est.tau_hat - 0.5) <= 3 * est.stderr

    def test_json(self):
        est = estimate_trace([1.0, 0.5, 0.75], 4)
        d = est.to_json(phi=math.pi, seed=3)
        assert set(d) == {"schema", "tau_hat", "tau_r", "tau_i", "mean_Oqq", "mean_Pq", "roots",
                          "chosen_root", "samples", "stderr", "seed"}
        assert d["tau_r"] == pytest.approx(-est.tau_hat) and d["samples"] == 3


class TestGlobalPhase:
    def _est(self, tau):
        return estimate_trace([tau] * 4, 1 << 20)

    def test_zero(self):
        est = self._est(0.5)
        assert apply_global_phase(est, 0.0) == (est.tau_hat, 0.0)

    def test_quarter_turn(self):
        r, i = apply_global_phase(self._est(1.0), math.pi / 2)
        assert r == pytest.approx(0, abs=1e-15) and i == pytest.approx(1)

    def test_half_turn_matches_dense(self):
        c = LayeredCircuit(3, (), (Gate("CCZ", (0, 1, 2)),), global_phase=math.pi)
        tau = exact_normalized_trace(materialize(c))
        est = replace(self._est(1.0), tau_hat=0.75)
        r, i = apply_global_phase(est, c.global_phase)
        assert (r, i) == (pytest.approx(tau.real, abs=1e-12), pytest.approx(tau.imag, abs=1e-12))
        assert r == pytest.approx(-0.75)

    def test_bare_diagonal_block_saturates_the_parabola(self):
        # O_qq = +-1 gives mean P_q = 1, so the inversion reports |tau_hat| = 1
        # even though the true trace is 0.75; the raw mean is exact
        c = LayeredCircuit(3, (), (Gate("CCZ", (0, 1, 2)),))
        est = estimate_from_hamiltonian(build_h2(c), samples=8, rng=np.random.default_rng(0))
        assert est.mean_Oqq == pytest.approx(0.75, abs=1e-12)
        assert est.tau_hat == pytest.approx(1.0, abs=1e-12)


class TestSampling:
    def test_single_z(self):
        h2 = EffectiveHamiltonian(PauliSum.from_terms(1, [("I", math.pi / 2), ("Z", -math.pi / 2)]), "H2")
        np.testing.assert_allclose(sample_diagonals(h2, [0, 1]), [1, -1], atol=1e-15)

    def test_h1_rejected(self):
        c = generate_hermitian_circuit(3, 1, (1, 1, 1), seed=0)
        with pytest.raises(ValueError):
            sample_diagonals(build_h1(c), [0])

    def test_matches_dense_diagonal_n8(self):
        c = generate_hermitian_circuit(8, 4, seed=17)
        h2 = build_h2(c, EXACT)
        idx = sample_indices(8, 100, np.random.default_rng(1))
        dense = np.diag(materialize(c)).real[idx.astype(int)]
        np.testing.assert_allclose(sample_diagonals(h2, idx), dense, atol=1e-8)

    def test_indices(self):
        rng = np.random.default_rng(0)
        idx = sample_indices(10, 500, rng)
        assert len(set(idx.tolist())) == 500 and idx.max() < 1024
        assert sample_indices(3, 500, rng).tolist() == list(range(8))
        assert sample_indices(10, 50, np.random.default_rng(4)).tolist() == \
            sample_indices(10, 50, np.random.default_rng(4)).tolist()

    def test_m0_sampled_diagonals_are_exact(self):
        c = generate_hermitian_circuit(10, 0, seed=3)
        h2 = build_h2(c)
        idx = sample_indices(10, 500, np.random.default_rng(0))
        exact = c.diagonal_spec()
        np.testing.assert_array_equal(sample_diagonals(h2, idx).round(12),
                                      diagonal_signs(c.diagonal_block, 10)[idx.astype(int)])
        est = estimate_trace(sample_diagonals(h2, idx), 1024)
        assert abs(est.mean_Oqq - exact.tau) <= 4 * est.stderr


class TestStatisticalConsistency:
    def test_haar_200_draws_n8(self):
        rng = np.random.default_rng(99)
        hits = 0
        for _ in range(200):
            n_minus = int(rng.integers(0, 257))
            o = haar_zero_discord(8, n_minus, rng=rng)
            q = rng.choice(256, 500, replace=True)
            est = estimate_trace(np.diag(o).real[q], 256)
            hits += abs(est.tau_hat - expected_Oqq(256, n_minus)) <= 3 * est.stderr
        assert hits / 200 >= 0.95
