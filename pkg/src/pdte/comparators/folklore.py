"""Bitwise comparison over batched ciphertexts (the binary-school method).

Each comparison occupies a block of n+1 slots (matching the range-cover
layout, so both share one capacity formula); slot offsets 0..n-1 hold the
bits MSB first.  The strict result I[a < b] is

    sum_i gt[i] * prod_{j<i} eq[j]

with gt[i] = (1-a[i]) b[i].  Since the encrypted bits are 0/1 and the
server's bits are cleartext, eq[i] = 1-(a[i]-b[i])^2 reduces to an affine
function of a[i].  The exclusive prefix products multiply the shifted
copies of eq (vacated positions filled with 1) in one balanced tree with
the gt mask folded in, so the depth is 1 + ceil(log2 n) and every shift
mask is applied exactly once before any multiplication.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..backend.base import Backend, BackendError, CipherHandle
from .slots import (
    balanced_product,
    block_value_mask,
    check_capacity,
    inner_block_sum,
    shift_right_fill,
)

BLOCK_EXTRA = 1


def block_size(n: int) -> int:
    return n + BLOCK_EXTRA


def folklore_capacity(slots: int, n: int) -> int:
    return slots // block_size(n)


@dataclass
class PackedBitsQuery:
    """One batched ciphertext holding the bit-decomposed values."""

    ct: CipherHandle
    n: int
    count: int

    @property
    def block(self) -> int:
        return block_size(self.n)


def _bits_msb_first(value: int, n: int) -> list[int]:
    if not 0 <= value < (1 << n):
        raise BackendError(f"value {value} outside [0, 2^{n})")
    return [(value >> (n - 1 - i)) & 1 for i in range(n)]


def _pack_bits(values: Sequence[Optional[int]], n: int, slots: int, fill: int) -> np.ndarray:
    block = block_size(n)
    out = np.zeros(slots, dtype=np.int64)
    for j, v in enumerate(values):
        bits = [fill] * n if v is None else _bits_msb_first(v, n)
        out[j * block : j * block + n] = bits
    return out


def bits_encode_packed(
    backend: Backend, values: Sequence[Optional[int]], n: int
) -> PackedBitsQuery:
    """Encrypt the bit decomposition of each value (client operation)."""
    check_capacity(backend.params.slots, block_size(n), len(values))
    mat = _pack_bits(values, n, backend.params.slots, fill=0)
    return PackedBitsQuery(backend.encrypt_slots(mat), n, len(values))


def _compare_sums(
    backend: Backend,
    query: PackedBitsQuery,
    thresholds: Sequence[Optional[int]],
    swap: bool,
) -> CipherHandle:
    """In-block comparison sums; block-first slots hold the raw bits."""
    n = query.n
    block = query.block
    if len(thresholds) > query.count:
        raise BackendError("more thresholds than packed comparisons")
    p = backend.params.p
    slots = backend.params.slots
    # Unused blocks get threshold bits that force gt to zero everywhere.
    fill = 1 if swap else 0
    b_vec = _pack_bits(thresholds, n, slots, fill=fill)
    a = query.ct
    if swap:
        # gt[i] = a[i] (1 - b[i]):   strictly-greater mask
        gt = backend.mul_plain(a, backend.encode_slots((1 - b_vec) % p))
    else:
        # gt[i] = (1 - a[i]) b[i]:   strictly-less mask
        ones = backend.encode_slots(np.ones(slots, dtype=np.int64))
        gt = backend.mul_plain(backend.rsub(ones, a), backend.encode_slots(b_vec))
    if n == 1:
        hits = gt  # the exclusive prefix product is identically 1
    else:
        # eq[i] = 1 - (a[i]-b[i])^2 = (1 - b[i]) + a[i](2 b[i] - 1) for bits.
        eq = backend.add(
            backend.mul_plain(a, backend.encode_slots((2 * b_vec - 1) % p)),
            backend.encode_slots((1 - b_vec) % p),
        )
        factors = [gt] + [
            shift_right_fill(backend, eq, k, block, 1) for k in range(1, n)
        ]
        hits = balanced_product(backend, factors)
    return inner_block_sum(backend, backend.reduce_to_base(hits), n)


def _compare_core(
    backend: Backend,
    query: PackedBitsQuery,
    thresholds: Sequence[Optional[int]],
    swap: bool,
) -> CipherHandle:
    """Block-first-slot comparison bits; swap=False gives I[a < b]."""
    summed = _compare_sums(backend, query, thresholds, swap)
    mask = block_value_mask(
        backend.params.p, backend.params.slots, query.block, len(thresholds)
    )
    return backend.mul_plain(summed, backend.encode_slots(mask))


def folklore_lt(
    backend: Backend, query: PackedBitsQuery, thresholds: Sequence[Optional[int]]
) -> CipherHandle:
    """I[a < b] per block (strict; complement a swapped call for <=)."""
    return _compare_core(backend, query, thresholds, swap=False)


def folklore_gt(
    backend: Backend, query: PackedBitsQuery, thresholds: Sequence[Optional[int]]
) -> CipherHandle:
    """I[a > b] per block, the routing bit used by tree evaluation."""
    return _compare_core(backend, query, thresholds, swap=True)


def folklore_gt_sums(
    backend: Backend, query: PackedBitsQuery, thresholds: Sequence[Optional[int]]
) -> CipherHandle:
    """Unmasked I[a > b] sums (the tree protocols mask at extraction)."""
    return _compare_sums(backend, query, thresholds, swap=True)
