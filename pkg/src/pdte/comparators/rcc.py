"""Range-cover comparison over batched ciphertexts.

The client encodes each value as a one-sided cover of [a, 2^n - 1], each
cover node as a constant-weight codeword, and spreads the codeword bits
over `length` ciphertexts: ciphertext i, slot j*(n+1)+lv holds bit i of
the level-lv codeword of comparison j.  The server encodes thresholds as
point encodings in the mirrored layout; an arithmetic constant-weight
equality followed by an in-block sum leaves I[a <= b] in each block's
first slot.  Every comparison occupies n+1 slots regardless of the code
parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial
from typing import Optional, Sequence

import numpy as np

from ..backend.base import Backend, BackendError, CipherHandle, Plain
from ..encodings import cw_encode, cw_min_length, ourc, point_encoding
from .slots import balanced_product, block_value_mask, check_capacity, inner_block_sum

BLOCK_EXTRA = 1  # block size is n + 1: one slot per prefix-tree level


def block_size(n: int) -> int:
    return n + BLOCK_EXTRA


def rcc_capacity(slots: int, n: int) -> int:
    """Independent comparisons resolved by one packed evaluation."""
    return slots // block_size(n)


def default_hamming_weight(n: int, relin_cost: int = 25) -> int:
    """Weight minimising estimated work: code length + relin_cost * (h-1).

    Larger weights shorten the code (fewer plaintext multiplications) but
    deepen the equality circuit; weights above n/2 only lengthen the code
    again, so the search stops at n/2.
    """
    best_h, best_cost = 1, None
    for h in range(1, max(1, n // 2) + 1):
        cost = cw_min_length(n, h) + relin_cost * (h - 1)
        if best_cost is None or cost < best_cost:
            best_h, best_cost = h, cost
    return best_h


@lru_cache(maxsize=1 << 20)
def _cw_bits(value: Optional[int], length: int, h: int) -> tuple[int, ...]:
    return cw_encode(value, length, h).bits


@dataclass
class PackedOurcQuery:
    """Client side of a packed comparison batch: `length` ciphertexts."""

    cts: list[CipherHandle]
    n: int
    h: int
    length: int
    count: int

    @property
    def block(self) -> int:
        return block_size(self.n)


@dataclass
class PackedPePlain:
    """Server side: point encodings of the thresholds, same layout."""

    pts: list[Plain]
    n: int
    h: int
    length: int
    count: int


def _pack_levels(
    encodings: Sequence[Optional[Sequence[Optional[int]]]],
    n: int,
    h: int,
    length: int,
    slots: int,
) -> np.ndarray:
    """(length, slots) bit matrix laying level codewords into blocks."""
    block = block_size(n)
    out = np.zeros((length, slots), dtype=np.int64)
    for j, levels in enumerate(encodings):
        if levels is None:
            continue
        base = j * block
        for lv, value in enumerate(levels):
            if value is None:
                continue
            bits = _cw_bits(value, length, h)
            for i in range(length):
                if bits[i]:
                    out[i, base + lv] = 1
    return out


def ourc_encode_packed(
    backend: Backend,
    values: Sequence[Optional[int]],
    n: int,
    h: int,
    length: Optional[int] = None,
) -> PackedOurcQuery:
    """Encrypt one-sided covers of the given values (client operation)."""
    length = length or cw_min_length(n, h)
    if cw_min_length(n, h) > length:
        raise BackendError(f"code length {length} too short for n={n}, h={h}")
    check_capacity(backend.params.slots, block_size(n), len(values))
    for v in values:
        if v is not None and not 0 <= v < (1 << n):
            raise BackendError(f"value {v} outside [0, 2^{n})")
    encs = [None if v is None else ourc(v, n).levels for v in values]
    mat = _pack_levels(encs, n, h, length, backend.params.slots)
    cts = [backend.encrypt_slots(mat[i]) for i in range(length)]
    return PackedOurcQuery(cts, n, h, length, len(values))


def pe_encode_packed(
    backend: Backend,
    thresholds: Sequence[Optional[int]],
    n: int,
    h: int,
    length: Optional[int] = None,
) -> PackedPePlain:
    """Encode threshold point encodings as plaintexts (server operation)."""
    length = length or cw_min_length(n, h)
    check_capacity(backend.params.slots, block_size(n), len(thresholds))
    encs = [None if t is None else point_encoding(t, n).levels for t in thresholds]
    mat = _pack_levels(encs, n, h, length, backend.params.slots)
    pts = [backend.encode_slots(mat[i]) for i in range(length)]
    return PackedPePlain(pts, n, h, length, len(thresholds))


def _inverse_factorial(p: int, h: int) -> int:
    if h >= p:
        raise BackendError(f"h! is not invertible mod {p} for h={h}")
    return pow(factorial(h) % p, p - 2, p)


def _cw_eq_product(
    backend: Backend, x_cts: Sequence[CipherHandle], y_plains: Sequence[Plain], h: int
) -> CipherHandle:
    """prod_{i<h} (h' - i) with h' the codeword inner product, unscaled."""
    if len(x_cts) != len(y_plains):
        raise BackendError("ciphertext/plaintext length mismatch")
    terms = [backend.mul_plain(ct, pt) for ct, pt in zip(x_cts, y_plains)]
    hp = terms[0]
    for t in terms[1:]:
        hp = backend.add(hp, t)
    factors = [backend.sub(hp, i) for i in range(h)]
    return balanced_product(backend, factors)


def arith_cw_eq(
    backend: Backend, x_cts: Sequence[CipherHandle], y_plains: Sequence[Plain], h: int
) -> CipherHandle:
    """Slot-wise constant-weight equality: 1 on equal codewords, else 0.

    Null codewords (all-zero) never match anything, themselves included.
    Depth: ceil(log2 h) ciphertext multiplications.
    """
    raw = _cw_eq_product(backend, x_cts, y_plains, h)
    return backend.mul_scalar(raw, _inverse_factorial(backend.params.p, h))


def rcc_block_sums(backend: Backend, query: PackedOurcQuery, table: PackedPePlain) -> CipherHandle:
    """Unnormalised comparison sums: block j's first slot holds h! * I[a <= b].

    Slots other than block firsts carry partial sums; callers mask what
    they read (the tree protocols fold the 1/h! factor and the slot
    selection into one plaintext multiplication).
    """
    if (query.n, query.h, query.length) != (table.n, table.h, table.length):
        raise BackendError("query/threshold layout mismatch")
    if query.count < table.count:
        raise BackendError("more thresholds than packed comparisons")
    raw = backend.reduce_to_base(_cw_eq_product(backend, query.cts, table.pts, query.h))
    return inner_block_sum(backend, raw, query.n + 1)


def rcc_compare(backend: Backend, query: PackedOurcQuery, table: PackedPePlain) -> CipherHandle:
    """I[a_j <= b_j] in the first slot of block j, zero elsewhere.

    The 1/h! equality normalisation is folded into the final block mask,
    so total ciphertext depth is exactly the equality product's.
    """
    summed = rcc_block_sums(backend, query, table)
    scale = _inverse_factorial(backend.params.p, query.h)
    mask = block_value_mask(
        backend.params.p, backend.params.slots, query.block, table.count, scale
    )
    return backend.mul_plain(summed, backend.encode_slots(mask))
