"""Bit-exact cleartext simulator of the homomorphic evaluation contract.

Payloads hold the exact plaintext a correct RLWE evaluation would decrypt
to; the only cryptographic state tracked is the multiplicative-depth
ledger.  Payload arrays may carry leading batch dimensions, which lets
tests sweep many independent inputs through one circuit evaluation.
"""

from __future__ import annotations

from typing import Union

import numpy as np

from .base import Backend, BackendError, CipherHandle, ModeMismatch, Plain, PlainLike
from .ntt import get_plan
from .params import MODE_BATCHED, MODE_POLY, BackendParams


class SimBackend(Backend):
    backend_name = "sim"

    def __init__(self, params: BackendParams):
        super().__init__(params)
        self._use_ntt = params.N >= 32 and (params.p - 1) % (2 * params.N) == 0

    def _wrap(self, mode: str, data: np.ndarray, depth: int) -> CipherHandle:
        return CipherHandle(self.backend_id, mode, depth, data)

    # -- contract -----------------------------------------------------------

    def encrypt(self, plain: Plain) -> CipherHandle:
        return self._wrap(plain.mode, plain.data % self.params.p, 0)

    def zero(self, mode: str) -> CipherHandle:
        size = self.params.slots if mode == MODE_BATCHED else self.params.N
        return self._wrap(mode, np.zeros(size, dtype=np.int64), 0)

    def decrypt(self, ct: CipherHandle) -> np.ndarray:
        self._own(ct)
        return ct.payload.copy()

    def add(self, ct: CipherHandle, other: Union[CipherHandle, PlainLike]) -> CipherHandle:
        self._own(ct)
        if isinstance(other, CipherHandle):
            self._check_pair(ct, other)
            data = (ct.payload + other.payload) % self.params.p
            return self._wrap(ct.mode, data, max(ct.depth, other.depth))
        plain = self._as_plain(other, ct.mode)
        return self._wrap(ct.mode, (ct.payload + plain.data) % self.params.p, ct.depth)

    def sub(self, ct: CipherHandle, other: Union[CipherHandle, PlainLike]) -> CipherHandle:
        self._own(ct)
        if isinstance(other, CipherHandle):
            self._check_pair(ct, other)
            data = (ct.payload - other.payload) % self.params.p
            return self._wrap(ct.mode, data, max(ct.depth, other.depth))
        plain = self._as_plain(other, ct.mode)
        return self._wrap(ct.mode, (ct.payload - plain.data) % self.params.p, ct.depth)

    def rsub(self, plain: PlainLike, ct: CipherHandle) -> CipherHandle:
        self._own(ct)
        p = self._as_plain(plain, ct.mode)
        return self._wrap(ct.mode, (p.data - ct.payload) % self.params.p, ct.depth)

    def neg(self, ct: CipherHandle) -> CipherHandle:
        self._own(ct)
        return self._wrap(ct.mode, (-ct.payload) % self.params.p, ct.depth)

    def mul_plain(self, ct: CipherHandle, plain: PlainLike) -> CipherHandle:
        self._own(ct)
        p = self._as_plain(plain, ct.mode)
        if ct.mode == MODE_BATCHED:
            data = ct.payload * p.data % self.params.p
        else:
            data = self._poly_mul(ct.payload, p.data)
        return self._wrap(ct.mode, data, ct.depth)

    def mul_ct(self, a: CipherHandle, b: CipherHandle) -> CipherHandle:
        self._own(a)
        self._check_pair(a, b)
        depth = self._bump_depth(max(a.depth, b.depth))
        if a.mode == MODE_BATCHED:
            data = a.payload * b.payload % self.params.p
        else:
            data = self._poly_mul(a.payload, b.payload)
        return self._wrap(a.mode, data, depth)

    def rotate(self, ct: CipherHandle, k: int) -> CipherHandle:
        self._own(ct)
        if ct.mode != MODE_BATCHED:
            raise ModeMismatch("rotate requires a batched ciphertext")
        data = np.roll(ct.payload, k % self.params.slots, axis=-1)
        return self._wrap(ct.mode, data, ct.depth)

    def oblivious_expand_at(self, ct: CipherHandle, k: int) -> CipherHandle:
        self._own(ct)
        if ct.mode != MODE_POLY:
            raise ModeMismatch("expansion requires a polynomial ciphertext")
        if not 0 <= k < self.params.N:
            raise BackendError(f"coefficient index {k} outside [0, N)")
        data = np.zeros_like(ct.payload)
        data[..., 0] = ct.payload[..., k]
        return self._wrap(ct.mode, data, ct.depth)

    # -- internals ----------------------------------------------------------

    def _poly_mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        p = self.params.p
        if self._use_ntt:
            return get_plan(p, self.params.N).negacyclic_mul(a % p, b % p)
        N = self.params.N
        a = np.asarray(a)
        b = np.asarray(b)
        batch = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
        full = np.zeros(batch + (2 * N,), dtype=np.int64)
        for i in range(N):
            full[..., i : i + N] += a[..., i : i + 1] * b % p
            full[..., i : i + N] %= p
        return (full[..., :N] - full[..., N:]) % p
