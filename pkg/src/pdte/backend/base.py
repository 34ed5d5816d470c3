"""Handle types and the evaluation interface shared by both backends.

A backend exposes the eight contract operations (encrypt/decrypt, add,
plaintext and ciphertext multiplication, slot rotation, coefficient
expansion) plus the subtraction/negation conveniences they imply.  Handles
are immutable: every operation returns a new handle, and the depth field
counts ciphertext-ciphertext multiplications on the deepest path.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Optional, Sequence, Union

import numpy as np

from .params import MODE_BATCHED, MODE_POLY, BackendParams

_handle_counter = itertools.count()


class BackendError(Exception):
    pass


class ModeMismatch(BackendError):
    pass


class DepthBudgetExceeded(BackendError):
    pass


@dataclass(frozen=True)
class Plain:
    """Cleartext operand: slot vector (batched) or coefficient vector (poly)."""

    mode: str
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", np.asarray(self.data, dtype=np.int64))


@dataclass(frozen=True)
class CipherHandle:
    """Opaque ciphertext reference; payload layout is backend-private."""

    backend_id: str
    mode: str
    depth: int
    payload: Any
    uid: int = -1

    def __post_init__(self):
        if self.uid < 0:
            object.__setattr__(self, "uid", next(_handle_counter))


PlainLike = Union[Plain, np.ndarray, Sequence[int], int]


class Backend:
    """Common validation and convenience layer; subclasses do the math."""

    backend_name = "abstract"

    def __init__(self, params: BackendParams):
        self.params = params
        self.backend_id = f"{self.backend_name}-{id(self):x}"

    # -- encoding ---------------------------------------------------------

    def encode_slots(self, values: PlainLike) -> Plain:
        if not self.params.supports_batching:
            raise BackendError(f"p={self.params.p} does not support batching at N={self.params.N}")
        data = np.asarray(values, dtype=np.int64) % self.params.p
        if data.ndim == 0:
            data = np.full(self.params.slots, int(data), dtype=np.int64)
        if data.shape[-1] != self.params.slots:
            raise BackendError(f"expected {self.params.slots} slots, got {data.shape[-1]}")
        return Plain(MODE_BATCHED, data)

    def encode_poly(self, coeffs: PlainLike) -> Plain:
        data = np.asarray(coeffs, dtype=np.int64) % self.params.p
        if data.ndim == 0:
            full = np.zeros(self.params.N, dtype=np.int64)
            full[..., 0] = int(data)
            data = full
        if data.shape[-1] != self.params.N:
            raise BackendError(f"expected {self.params.N} coefficients, got {data.shape[-1]}")
        return Plain(MODE_POLY, data)

    def encode_scalar(self, value: int, mode: str) -> Plain:
        if mode == MODE_BATCHED:
            return self.encode_slots(int(value))
        return self.encode_poly(int(value))

    def _as_plain(self, other: PlainLike, mode: str) -> Plain:
        if isinstance(other, Plain):
            if other.mode != mode:
                raise ModeMismatch(f"plain is {other.mode}, ciphertext is {mode}")
            return other
        if isinstance(other, (int, np.integer)):
            return self.encode_scalar(int(other), mode)
        return self.encode_slots(other) if mode == MODE_BATCHED else self.encode_poly(other)

    def _check_pair(self, a: CipherHandle, b: CipherHandle) -> None:
        if a.backend_id != b.backend_id:
            raise BackendError("handles belong to different backends")
        if a.mode != b.mode:
            raise ModeMismatch(f"cannot mix {a.mode} and {b.mode} ciphertexts")

    def _own(self, ct: CipherHandle) -> None:
        if ct.backend_id != self.backend_id:
            raise BackendError("foreign ciphertext handle")

    # -- contract operations (implemented by subclasses) --------------------

    def encrypt(self, plain: Plain) -> CipherHandle:
        raise NotImplementedError

    def decrypt(self, ct: CipherHandle) -> np.ndarray:
        raise NotImplementedError

    def add(self, ct: CipherHandle, other: Union[CipherHandle, PlainLike]) -> CipherHandle:
        raise NotImplementedError

    def sub(self, ct: CipherHandle, other: Union[CipherHandle, PlainLike]) -> CipherHandle:
        raise NotImplementedError

    def rsub(self, plain: PlainLike, ct: CipherHandle) -> CipherHandle:
        """plain - ct."""
        raise NotImplementedError

    def neg(self, ct: CipherHandle) -> CipherHandle:
        raise NotImplementedError

    def mul_plain(self, ct: CipherHandle, plain: PlainLike) -> CipherHandle:
        raise NotImplementedError

    def mul_scalar(self, ct: CipherHandle, value: int) -> CipherHandle:
        return self.mul_plain(ct, self.encode_scalar(value, ct.mode))

    def mul_ct(self, a: CipherHandle, b: CipherHandle) -> CipherHandle:
        raise NotImplementedError

    def rotate(self, ct: CipherHandle, k: int) -> CipherHandle:
        """Circular right rotation: slot i of the result is slot i-k of ct."""
        raise NotImplementedError

    def rotate_left(self, ct: CipherHandle, k: int) -> CipherHandle:
        return self.rotate(ct, (-k) % self.params.slots)

    def rotations_of(self, ct: CipherHandle, amounts: Sequence[int]) -> dict[int, CipherHandle]:
        """Right rotations of one ciphertext by several amounts.

        Backends may share the expensive part of the key switch across
        amounts; this default just loops.
        """
        return {k: self.rotate(ct, k) for k in amounts}

    def rotate_many(self, cts: Sequence[CipherHandle], k: int) -> list[CipherHandle]:
        """Rotate many ciphertexts by one amount (batchable in backends)."""
        return [self.rotate(ct, k) for ct in cts]

    def prepare_plain(self, plain: Plain) -> Any:
        """Precompute a reusable multiplication operand for this plaintext."""
        return plain

    def mul_plain_many(self, cts: Sequence[CipherHandle], prepared: Any) -> list[CipherHandle]:
        return [self.mul_plain(ct, prepared) for ct in cts]

    def oblivious_expand_at(self, ct: CipherHandle, k: int) -> CipherHandle:
        """Constant coefficient of the result = coefficient k of the input."""
        raise NotImplementedError

    # -- helpers ------------------------------------------------------------

    def encrypt_slots(self, values: PlainLike) -> CipherHandle:
        return self.encrypt(self.encode_slots(values))

    def encrypt_poly(self, coeffs: PlainLike) -> CipherHandle:
        return self.encrypt(self.encode_poly(coeffs))

    def encrypt_monomial(self, exponent: int) -> CipherHandle:
        if not 0 <= exponent < self.params.N:
            raise BackendError(f"monomial exponent {exponent} outside [0, N)")
        coeffs = np.zeros(self.params.N, dtype=np.int64)
        coeffs[exponent] = 1
        return self.encrypt_poly(coeffs)

    def zero(self, mode: str) -> CipherHandle:
        """Transparent zero ciphertext; needs no key material."""
        raise NotImplementedError

    def compact(self, ct: CipherHandle) -> CipherHandle:
        """Shrink ciphertext state before rotation-heavy phases (no-op here)."""
        return ct

    def reduce_to_base(self, ct: CipherHandle) -> CipherHandle:
        """Drop unused multiplication levels once no more mults follow."""
        return ct

    def _bump_depth(self, depth: int) -> int:
        if depth + 1 > self.params.depth_budget:
            raise DepthBudgetExceeded(
                f"multiplicative depth {depth + 1} exceeds budget {self.params.depth_budget}"
            )
        return depth + 1
