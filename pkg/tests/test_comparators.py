"""Comparator correctness on the simulator against integer oracles.

The oracle for every operator is plain integer comparison; exhaustive
unit sweeps here stay small, the full spec-sized sweeps live in
test_acceptance.py.
"""

import numpy as np
import pytest

from pdte.backend import BackendError, SimBackend, toy_params
from pdte.comparators import (
    arith_cw_eq,
    bits_encode_packed,
    default_hamming_weight,
    encode_limb_query,
    folklore_gt,
    folklore_lt,
    limb_decompose,
    ourc_encode_packed,
    pe_encode_packed,
    rcc_capacity,
    rcc_compare,
    xcmp0_gt,
    xcmp_leq,
    xxcmp_gt,
)
from pdte.comparators.rcc import block_size
from pdte.encodings import cw_encode, cw_min_length


def rng():
    return np.random.default_rng(0xC0FFEE)


def batched_sim(N=256, depth=6):
    return SimBackend(toy_params(N=N, depth_budget=depth))


def first_slots(sim, ct, block, count):
    out = sim.decrypt(ct)
    return [int(out[j * block]) for j in range(count)]


class TestXcmp:
    @pytest.mark.parametrize("a,b,want", [(2, 3, 1), (5, 3, 0), (4, 4, 1)])
    def test_leq_examples(self, a, b, want):
        sim = SimBackend(toy_params(N=8, depth_budget=1))
        ct = xcmp_leq(sim, sim.encrypt_monomial(a), b, rng())
        assert int(sim.decrypt(ct)[0]) == want
        assert ct.depth == 0

    @pytest.mark.parametrize("a,b,want", [(5, 3, 1), (2, 3, 0), (0, 0, 0), (7, 0, 1)])
    def test_gt0_examples(self, a, b, want):
        sim = SimBackend(toy_params(N=8, depth_budget=1))
        ct = xcmp0_gt(sim, sim.encrypt_monomial(a), b, rng())
        assert int(sim.decrypt(ct)[0]) == want
        assert ct.depth == 0

    def test_exhaustive_n8(self):
        sim = SimBackend(toy_params(N=8, depth_budget=1))
        r = rng()
        for a in range(8):
            ct_a = sim.encrypt_monomial(a)
            for b in range(8):
                leq = int(sim.decrypt(xcmp_leq(sim, ct_a, b, r))[0])
                gt = int(sim.decrypt(xcmp0_gt(sim, ct_a, b, r))[0])
                assert leq == (1 if a <= b else 0), (a, b)
                assert gt == (1 if a > b else 0), (a, b)

    def test_threshold_range_checked(self):
        sim = SimBackend(toy_params(N=8, depth_budget=1))
        with pytest.raises(BackendError):
            xcmp_leq(sim, sim.encrypt_monomial(1), 8, rng())


class TestXxcmp:
    def test_two_limb_trace(self):
        # a=13=(1,5) base 8, b=11=(1,3): gt1=0, eq1=1, gt0=1 -> 1.
        sim = SimBackend(toy_params(N=8, depth_budget=1))
        q = encode_limb_query(sim, 13, k=2)
        ct = xxcmp_gt(sim, q, 11, rng())
        assert int(sim.decrypt(ct)[0]) == 1
        assert ct.depth == 1

    def test_equal_is_zero(self):
        sim = SimBackend(toy_params(N=8, depth_budget=1))
        for v in (0, 9, 63):
            q = encode_limb_query(sim, v, k=2)
            assert int(sim.decrypt(xxcmp_gt(sim, q, v, rng()))[0]) == 0

    @pytest.mark.parametrize("k,depth", [(2, 1), (3, 2), (4, 2)])
    def test_random_pairs_and_depth(self, k, depth):
        sim = SimBackend(toy_params(N=8, depth_budget=4))
        r = rng()
        hi = 8**k
        for _ in range(60):
            a, b = int(r.integers(0, hi)), int(r.integers(0, hi))
            ct = xxcmp_gt(sim, encode_limb_query(sim, a, k), b, r)
            assert int(sim.decrypt(ct)[0]) == (1 if a > b else 0), (a, b)
            assert ct.depth <= depth

    def test_limb_decompose_roundtrip(self):
        limbs = limb_decompose(13, 2, 8)
        assert limbs == [5, 1]
        with pytest.raises(BackendError):
            limb_decompose(64, 2, 8)


class TestArithCwEq:
    def test_equal_codewords(self):
        sim = batched_sim()
        length, h = 4, 2
        code = cw_encode(3, length, h)
        cts = [sim.encrypt_slots(np.full(sim.params.slots, b)) for b in code.bits]
        pts = [sim.encode_slots(np.full(sim.params.slots, b)) for b in code.bits]
        out = sim.decrypt(arith_cw_eq(sim, cts, pts, h))
        assert np.all(out == 1)

    def test_mismatch_and_null(self):
        sim = batched_sim()
        length, h = 4, 2
        a = cw_encode(0, length, h)  # 0011
        b = cw_encode(2, length, h)  # overlap of one bit at most
        null = cw_encode(None, length, h)
        for x, y, want in [(a, b, 0), (a, null, 0), (null, null, 0), (b, b, 1)]:
            cts = [sim.encrypt_slots(np.full(sim.params.slots, bit)) for bit in x.bits]
            pts = [sim.encode_slots(np.full(sim.params.slots, bit)) for bit in y.bits]
            out = sim.decrypt(arith_cw_eq(sim, cts, pts, h))
            assert np.all(out == want), (x, y)

    def test_depth_is_log_h(self):
        sim = batched_sim(depth=3)
        length, h = 11, 4
        code = cw_encode(7, length, h)
        cts = [sim.encrypt_slots(np.full(sim.params.slots, b)) for b in code.bits]
        pts = [sim.encode_slots(np.full(sim.params.slots, b)) for b in code.bits]
        assert arith_cw_eq(sim, cts, pts, h).depth == 2


class TestRcc:
    @pytest.mark.parametrize("a,b,want", [(3, 5, 1), (3, 2, 0), (0, 6, 1), (7, 7, 1)])
    def test_examples(self, a, b, want):
        sim = batched_sim()
        n, h = 3, 2
        q = ourc_encode_packed(sim, [a], n, h)
        t = pe_encode_packed(sim, [b], n, h)
        ct = rcc_compare(sim, q, t)
        assert first_slots(sim, ct, block_size(n), 1) == [want]

    def test_packed_batch(self):
        sim = batched_sim()
        n, h = 4, 2
        r = rng()
        cap = rcc_capacity(sim.params.slots, n)
        a_vals = [int(v) for v in r.integers(0, 16, size=cap)]
        b_vals = [int(v) for v in r.integers(0, 16, size=cap)]
        q = ourc_encode_packed(sim, a_vals, n, h)
        t = pe_encode_packed(sim, b_vals, n, h)
        got = first_slots(sim, rcc_compare(sim, q, t), block_size(n), cap)
        assert got == [1 if a <= b else 0 for a, b in zip(a_vals, b_vals)]

    def test_result_masked_outside_blocks(self):
        sim = batched_sim()
        n, h = 3, 2
        q = ourc_encode_packed(sim, [1, 2], n, h)
        t = pe_encode_packed(sim, [2, 2], n, h)
        out = sim.decrypt(rcc_compare(sim, q, t))
        block = block_size(n)
        nonzero = np.nonzero(out)[0]
        assert set(nonzero) <= {0, block}

    def test_depth_budget(self):
        sim = batched_sim(depth=2)
        n, h = 8, 4
        q = ourc_encode_packed(sim, [5], n, h)
        t = pe_encode_packed(sim, [9], n, h)
        ct = rcc_compare(sim, q, t)
        assert ct.depth == 2  # ceil(log2 4)

    def test_layout_mismatch_rejected(self):
        sim = batched_sim()
        q = ourc_encode_packed(sim, [1], 3, 2)
        t = pe_encode_packed(sim, [1], 4, 2)
        with pytest.raises(BackendError):
            rcc_compare(sim, q, t)

    def test_capacity_example(self):
        # Layout formula at N=16384, n=8: floor(8192 / 9).
        assert rcc_capacity(8192, 8) == 910

    def test_null_threshold_blocks_yield_zero(self):
        sim = batched_sim()
        n, h = 3, 2
        q = ourc_encode_packed(sim, [0, 0], n, h)  # 0 <= anything
        t = pe_encode_packed(sim, [None, 4], n, h)
        got = first_slots(sim, rcc_compare(sim, q, t), block_size(n), 2)
        assert got == [0, 1]

    def test_default_hamming_weight_bounds(self):
        for n in (4, 8, 16, 26, 32):
            h = default_hamming_weight(n)
            assert 1 <= h <= max(1, n // 2)
            assert cw_min_length(n, h) >= n // 2


class TestFolklore:
    @pytest.mark.parametrize("a,b,want_lt", [(5, 6, 1), (6, 5, 0), (4, 4, 0)])
    def test_examples(self, a, b, want_lt):
        sim = batched_sim()
        q = bits_encode_packed(sim, [a], 3)
        ct = folklore_lt(sim, q, [b])
        assert first_slots(sim, ct, 4, 1) == [want_lt]

    @pytest.mark.parametrize("n", [1, 2, 3, 5])
    def test_exhaustive_small(self, n):
        sim = batched_sim(N=512, depth=4)
        cap = sim.params.slots // (n + 1)
        pairs = [(a, b) for a in range(1 << n) for b in range(1 << n)]
        for chunk_start in range(0, len(pairs), cap):
            chunk = pairs[chunk_start : chunk_start + cap]
            q = bits_encode_packed(sim, [a for a, _ in chunk], n)
            lt = first_slots(sim, folklore_lt(sim, q, [b for _, b in chunk]), n + 1, len(chunk))
            gt = first_slots(sim, folklore_gt(sim, q, [b for _, b in chunk]), n + 1, len(chunk))
            for (a, b), l, g in zip(chunk, lt, gt):
                assert l == (1 if a < b else 0), (n, a, b)
                assert g == (1 if a > b else 0), (n, a, b)

    def test_depth_bound(self):
        sim = batched_sim(N=512, depth=5)
        for n in (3, 8, 13):
            q = bits_encode_packed(sim, [1], n)
            ct = folklore_lt(sim, q, [2])
            bound = 1 + (n - 1).bit_length()
            assert ct.depth <= bound, (n, ct.depth, bound)
