"""Slot-block layout helpers for batched comparisons.

A batched ciphertext is divided into contiguous blocks of `block` slots,
one independent comparison per block.  All rotation patterns below use
power-of-two amounts only, so a small fixed set of rotation keys covers
every configuration.
"""

from __future__ import annotations

import numpy as np

from ..backend.base import Backend, BackendError, CipherHandle


def capacity(slots: int, block: int) -> int:
    return slots // block


def check_capacity(slots: int, block: int, count: int) -> None:
    if count * block > slots:
        raise BackendError(
            f"{count} comparisons of block {block} exceed {slots} slots "
            f"(capacity {capacity(slots, block)})"
        )


def block_value_mask(p: int, slots: int, block: int, count: int, value: int = 1) -> np.ndarray:
    """value at the first slot of each block, zero elsewhere."""
    mask = np.zeros(slots, dtype=np.int64)
    mask[np.arange(count) * block] = value % p
    return mask


def inner_block_sum(backend: Backend, ct: CipherHandle, count: int) -> CipherHandle:
    """Sum each window of `count` slots into its first slot.

    Result slot j holds sum of input slots [j, j+count); callers mask the
    block-first slots afterwards.  Uses left rotations by powers of two:
    O(log count) rotations via span doubling plus binary-carry combines.
    """
    if count <= 0:
        raise ValueError("count must be positive")
    spans = {1: ct}
    span = 1
    while span * 2 <= count:
        cur = spans[span]
        spans[span * 2] = backend.add(cur, backend.rotate_left(cur, span))
        span *= 2

    def build(c: int) -> CipherHandle:
        top = 1 << (c.bit_length() - 1)
        acc = spans[top]
        rest = c - top
        if rest:
            acc = backend.add(acc, backend.rotate_left(build(rest), top))
        return acc

    return build(count)


def shift_right_fill(
    backend: Backend,
    ct: CipherHandle,
    k: int,
    block: int,
    fill: int,
) -> CipherHandle:
    """Per-block right shift by k slots, vacated positions set to `fill`.

    Slots entering a block from its left neighbour are overwritten, so
    blocks stay independent.
    """
    p = backend.params.p
    slots = backend.params.slots
    offsets = np.arange(slots) % block
    keep = (offsets >= k).astype(np.int64)
    rotated = backend.rotate(ct, k)
    merged = backend.mul_plain(rotated, backend.encode_slots(keep))
    if fill:
        fill_vec = (1 - keep) * (fill % p)
        merged = backend.add(merged, backend.encode_slots(fill_vec))
    return merged


def balanced_product(backend: Backend, factors: list[CipherHandle]) -> CipherHandle:
    """Ciphertext product with multiplicative depth ceil(log2(len(factors)))."""
    if not factors:
        raise ValueError("empty product")
    layer = list(factors)
    while len(layer) > 1:
        nxt = []
        for i in range(0, len(layer) - 1, 2):
            nxt.append(backend.mul_ct(layer[i], layer[i + 1]))
        if len(layer) % 2:
            nxt.append(layer[-1])
        layer = nxt
    return layer[0]
