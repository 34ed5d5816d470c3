"""Simulator backend and NTT kernel tests."""

import numpy as np
import pytest

from pdte.backend import (
    DepthBudgetExceeded,
    ModeMismatch,
    SimBackend,
    toy_params,
)
from pdte.backend.ntt import automorphism_maps, apply_automorphism, get_plan, is_prime, ntt_primes


class TestNtt:
    @pytest.mark.parametrize("N", [8, 64, 1024])
    def test_roundtrip(self, N):
        q = ntt_primes(N, 30, 1)[0]
        plan = get_plan(q, N)
        rng = np.random.default_rng(7)
        a = rng.integers(0, q, size=N)
        assert np.array_equal(plan.inverse(plan.forward(a)), a)

    def test_negacyclic_mul_matches_schoolbook(self):
        N = 16
        q = ntt_primes(N, 30, 1)[0]
        plan = get_plan(q, N)
        rng = np.random.default_rng(3)
        a = rng.integers(0, q, size=N)
        b = rng.integers(0, q, size=N)
        want = np.zeros(N, dtype=object)
        for i in range(N):
            for j in range(N):
                k = i + j
                if k < N:
                    want[k] += int(a[i]) * int(b[j])
                else:
                    want[k - N] -= int(a[i]) * int(b[j])
        want = np.array([int(x) % q for x in want], dtype=np.int64)
        assert np.array_equal(plan.negacyclic_mul(a, b), want)

    def test_batched_axes(self):
        N = 32
        q = ntt_primes(N, 30, 1)[0]
        plan = get_plan(q, N)
        rng = np.random.default_rng(5)
        a = rng.integers(0, q, size=(4, N))
        fwd = plan.forward(a)
        for i in range(4):
            assert np.array_equal(fwd[i], plan.forward(a[i]))

    def test_prime_generation(self):
        primes = ntt_primes(4096, 30, 3)
        assert len(set(primes)) == 3
        for q in primes:
            assert is_prime(q) and q % (2 * 4096) == 1 and q < 1 << 30

    def test_automorphism_square_law(self):
        # X -> X^g twice must equal X -> X^(g^2 mod 2N).
        N, q = 16, ntt_primes(16, 30, 1)[0]
        rng = np.random.default_rng(11)
        a = rng.integers(0, q, size=N)
        g = 3
        src, sign = automorphism_maps(N, g)
        twice = apply_automorphism(apply_automorphism(a, src, sign, q), src, sign, q)
        src2, sign2 = automorphism_maps(N, g * g % (2 * N))
        assert np.array_equal(twice, apply_automorphism(a, src2, sign2, q))


@pytest.fixture
def sim():
    return SimBackend(toy_params(N=16, depth_budget=2))


class TestSimBatched:
    def test_roundtrip_identity(self, sim):
        vec = list(range(8))
        ct = sim.encrypt_slots(vec)
        assert ct.depth == 0
        assert np.array_equal(sim.decrypt(ct), vec)

    def test_vector_add(self, sim):
        a = sim.encrypt_slots([1, 2, 3, 4, 5, 6, 7, 8])
        b = sim.encrypt_slots([1] * 8)
        assert np.array_equal(sim.decrypt(sim.add(a, b)), [2, 3, 4, 5, 6, 7, 8, 9])

    def test_mul_depth_ledger(self, sim):
        a = sim.encrypt_slots([2] * 8)
        b = sim.encrypt_slots([3] * 8)
        prod = sim.mul_ct(a, b)
        assert prod.depth == 1
        assert sim.mul_ct(prod, b).depth == 2
        assert sim.mul_plain(prod, [5] * 8).depth == 1
        assert sim.add(prod, b).depth == 1

    def test_depth_budget_enforced(self, sim):
        ct = sim.encrypt_slots([1] * 8)
        d1 = sim.mul_ct(ct, ct)
        d2 = sim.mul_ct(d1, d1)
        with pytest.raises(DepthBudgetExceeded):
            sim.mul_ct(d2, d2)

    def test_rotate_identity_and_group(self, sim):
        vec = np.arange(8)
        ct = sim.encrypt_slots(vec)
        assert np.array_equal(sim.decrypt(sim.rotate(ct, 0)), vec)
        roundtrip = sim.rotate(sim.rotate(ct, 3), 8 - 3)
        assert np.array_equal(sim.decrypt(roundtrip), vec)

    def test_rotate_direction(self, sim):
        ct = sim.encrypt_slots([1, 0, 0, 0, 0, 0, 0, 0])
        assert np.array_equal(sim.decrypt(sim.rotate(ct, 1)), [0, 1, 0, 0, 0, 0, 0, 0])

    def test_rotate_rejects_poly(self, sim):
        ct = sim.encrypt_monomial(3)
        with pytest.raises(ModeMismatch):
            sim.rotate(ct, 1)

    def test_mode_mixing_rejected(self, sim):
        a = sim.encrypt_slots([0] * 8)
        b = sim.encrypt_monomial(1)
        with pytest.raises(ModeMismatch):
            sim.add(a, b)


class TestSimPoly:
    def test_monomial_roundtrip(self, sim):
        ct = sim.encrypt_monomial(5)
        out = sim.decrypt(ct)
        assert out[5] == 1 and out.sum() == 1

    def test_negacyclic_wrap(self):
        # X^2 * X^7 = X^9 = -X in Z[X]/(X^8+1).
        sim8 = SimBackend(toy_params(N=8, depth_budget=1))
        prod = sim8.mul_ct(sim8.encrypt_monomial(2), sim8.encrypt_monomial(7))
        out = sim8.decrypt(prod)
        want = np.zeros(8, dtype=np.int64)
        want[1] = sim8.params.p - 1
        assert np.array_equal(out, want)

    @pytest.mark.parametrize("N", [8])
    def test_negacyclic_law_exhaustive(self, N):
        simn = SimBackend(toy_params(N=N, depth_budget=1))
        p = simn.params.p
        for i in range(N):
            for j in range(N):
                out = simn.decrypt(simn.mul_ct(simn.encrypt_monomial(i), simn.encrypt_monomial(j)))
                want = np.zeros(N, dtype=np.int64)
                if i + j < N:
                    want[i + j] = 1
                else:
                    want[i + j - N] = p - 1
                assert np.array_equal(out, want), (i, j)

    def test_expand_examples(self, sim):
        ct = sim.encrypt_monomial(5)
        assert sim.decrypt(sim.oblivious_expand_at(ct, 5))[0] == 1
        assert sim.decrypt(sim.oblivious_expand_at(ct, 3))[0] == 0
        coeffs = np.zeros(16, dtype=np.int64)
        coeffs[0], coeffs[1] = 3, 2
        ct2 = sim.encrypt_poly(coeffs)
        assert sim.decrypt(sim.oblivious_expand_at(ct2, 1))[0] == 2

    def test_expand_consumes_no_depth(self, sim):
        ct = sim.encrypt_monomial(2)
        assert sim.oblivious_expand_at(ct, 2).depth == 0

    def test_expand_range_check(self, sim):
        from pdte.backend import BackendError

        with pytest.raises(BackendError):
            sim.oblivious_expand_at(sim.encrypt_monomial(0), 16)

    def test_poly_plain_mul_against_direct(self):
        # N=8 stays on the schoolbook path; N=64 uses the NTT path.
        rng = np.random.default_rng(9)
        for N in (8, 64):
            simn = SimBackend(toy_params(N=N, depth_budget=1))
            p = simn.params.p
            a = rng.integers(0, p, size=N)
            b = rng.integers(0, p, size=N)
            got = simn.decrypt(simn.mul_plain(simn.encrypt_poly(a), simn.encode_poly(b)))
            want = np.zeros(N, dtype=object)
            for i in range(N):
                for j in range(N):
                    if i + j < N:
                        want[i + j] += int(a[i]) * int(b[j])
                    else:
                        want[i + j - N] -= int(a[i]) * int(b[j])
            want = np.array([int(x) % p for x in want])
            assert np.array_equal(got, want), N
