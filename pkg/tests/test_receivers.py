import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from xlmimo_sim.montecarlo import sample_complex_gaussian
from xlmimo_sim.receivers import cf_local_estimate, cpu_fuse, draw_symbols, mr_combiner, received_signal


def cn(rng, *shape):
    return sample_complex_gaussian(rng, *shape)


class TestMR:
    def test_zero(self):
        assert not mr_combiner(np.zeros((4, 2), complex)).any()

    @given(st.integers(0, 2**32 - 1))
    def test_identity_and_gram(self, seed):
        h = cn(np.random.default_rng(seed), 6, 3)
        v = mr_combiner(h)
        assert np.array_equal(v, h) and v is not h
        g = v.conj().T @ h
        np.testing.assert_allclose(g, g.conj().T, atol=1e-12)
        assert np.linalg.eigvalsh(g).min() > -1e-10

    def test_stack(self):
        h = cn(np.random.default_rng(0), 2, 3, 5, 2)
        assert np.array_equal(mr_combiner(h), h)


class TestLocalEstimate:
    def test_zero_signal(self):
        v = cn(np.random.default_rng(1), 5, 2)
        assert not cf_local_estimate(v, np.zeros(5)).any()

    def test_noiseless_single_ue(self):
        rng = np.random.default_rng(2)
        h, x = cn(rng, 6, 3), cn(rng, 3)
        y = received_signal(h[None], x[None])
        np.testing.assert_allclose(cf_local_estimate(mr_combiner(h), y), h.conj().T @ h @ x, atol=1e-12)

    def test_linear(self):
        rng = np.random.default_rng(3)
        v, y1, y2 = cn(rng, 4, 2), cn(rng, 4), cn(rng, 4)
        np.testing.assert_allclose(cf_local_estimate(v, y1 + y2),
                                   cf_local_estimate(v, y1) + cf_local_estimate(v, y2), atol=1e-12)

    def test_mismatch(self):
        with pytest.raises(ValueError):
            cf_local_estimate(np.ones((4, 2)), np.ones(3))


class TestFusion:
    def test_single(self):
        x = np.array([1 + 2j, 3])
        np.testing.assert_array_equal(cpu_fuse([x]), x)

    def test_identical(self):
        x = np.array([0.3 - 1j, 2.0])
        np.testing.assert_allclose(cpu_fuse([x] * 7), x, rtol=1e-15)

    def test_permutation_invariant_mean(self):
        rng = np.random.default_rng(4)
        xs = [cn(rng, 3) for _ in range(6)]
        ref = np.mean(xs, axis=0)
        for perm in itertools.islice(itertools.permutations(xs), 20):
            np.testing.assert_allclose(cpu_fuse(list(perm)), ref, atol=1e-14)

    def test_empty(self):
        with pytest.raises(ValueError):
            cpu_fuse([])


class TestSignalModel:
    def test_symbol_power(self):
        x = draw_symbols(np.random.default_rng(5), 20_000, 4, 2.0)
        # total power per UE is p, split evenly over the transmit antennas
        assert np.mean(np.sum(np.abs(x) ** 2, axis=1)) == pytest.approx(2.0, rel=0.02)
        np.testing.assert_allclose(np.mean(np.abs(x) ** 2, axis=0), 0.5, rtol=0.03)

    def test_superposition(self):
        rng = np.random.default_rng(6)
        h, x, n = cn(rng, 3, 5, 2), cn(rng, 3, 2), cn(rng, 5)
        y = received_signal(h, x, n)
        np.testing.assert_allclose(y, sum(h[k] @ x[k] for k in range(3)) + n, atol=1e-12)

    def test_chain_matches_effective_model(self):
        # fused MR estimate of UE k = (1/M) sum_m H_mk^H (sum_l H_ml x_l + n_m)
        rng = np.random.default_rng(7)
        M, K, Nr, Ns = 3, 2, 5, 2
        h = cn(rng, M, K, Nr, Ns)
        x = draw_symbols(rng, K, Ns, 1.0)
        noise = cn(rng, M, Nr) * np.sqrt(0.1)
        k = 1
        local = [cf_local_estimate(mr_combiner(h[m, k]), received_signal(h[m], x, noise[m])) for m in range(M)]
        fused = cpu_fuse(local)
        ref = sum(h[m, k].conj().T @ (sum(h[m, l] @ x[l] for l in range(K)) + noise[m]) for m in range(M)) / M
        np.testing.assert_allclose(fused, ref, atol=1e-12)
