"""Monomial-encoded comparison in the polynomial ring (XCMP family).

A value a in [N] is encrypted as X^a.  Multiplying by a fixed mask
polynomial places the comparison bit in the constant coefficient; the
remaining coefficients are hidden by a fresh random polynomial.  Values
beyond N are split into base-N limbs: high limbs are compared first and a
limb-equality ladder (built from oblivious coefficient expansion, which
costs no multiplicative depth) combines the per-limb results.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..backend.base import Backend, BackendError, CipherHandle
from .slots import balanced_product


def limb_decompose(value: int, k: int, N: int) -> list[int]:
    """Base-N limbs, least significant first."""
    if not 0 <= value < N**k:
        raise BackendError(f"value {value} outside [0, N^{k})")
    limbs = []
    for _ in range(k):
        limbs.append(value % N)
        value //= N
    return limbs


@dataclass
class LimbQuery:
    """k polynomial ciphertexts, limb i encrypting X^(a_i), LSB first."""

    cts: list[CipherHandle]

    @property
    def k(self) -> int:
        return len(self.cts)


def encode_limb_query(backend: Backend, value: int, k: int) -> LimbQuery:
    limbs = limb_decompose(value, k, backend.params.N)
    return LimbQuery([backend.encrypt_monomial(a) for a in limbs])


def _random_poly(backend: Backend, rng: np.random.Generator, constant: int) -> np.ndarray:
    r = rng.integers(0, backend.params.p, size=backend.params.N, dtype=np.int64)
    r[0] = constant % backend.params.p
    return r


def xcmp_leq(
    backend: Backend, ct: CipherHandle, b: int, rng: np.random.Generator
) -> CipherHandle:
    """I[a <= b] in the constant coefficient; other coefficients random.

    Mask: (1/2) X^(-b) (1 + X + ... + X^(N-1)).  The product's constant
    term is +1 for a <= b and -1 for a > b (negacyclic wrap), so adding a
    randomizer with constant term 1/2 maps it to {0, 1}.  No ciphertext
    multiplications.
    """
    N = backend.params.N
    p = backend.params.p
    if not 0 <= b < N:
        raise BackendError(f"threshold {b} outside [0, N)")
    inv2 = pow(2, p - 2, p)
    mask = np.full(N, inv2, dtype=np.int64)
    if b:
        mask[N - b :] = p - inv2  # X^(i-b) wraps negacyclically for i < b
    randomizer = _random_poly(backend, rng, inv2)
    return backend.add(backend.mul_plain(ct, backend.encode_poly(mask)), randomizer)


def xcmp0_gt(
    backend: Backend, ct: CipherHandle, b: int, rng: np.random.Generator
) -> CipherHandle:
    """I[a > b] exactly in the constant coefficient (randomizer constant 0).

    Mask: -(X + X^2 + ... + X^(N-b-1)).  The constant term of the product
    fires only when a + i = N for some masked i, i.e. a >= b + 1; the
    degree-zero mask term is omitted so that a = 0 yields 0 for every b.
    """
    N = backend.params.N
    p = backend.params.p
    if not 0 <= b < N:
        raise BackendError(f"threshold {b} outside [0, N)")
    mask = np.zeros(N, dtype=np.int64)
    mask[1 : N - b] = p - 1
    randomizer = _random_poly(backend, rng, 0)
    return backend.add(backend.mul_plain(ct, backend.encode_poly(mask)), randomizer)


def xxcmp_gt(
    backend: Backend, query: LimbQuery, b: int, rng: np.random.Generator
) -> CipherHandle:
    """I[a > b] for a, b in [N^k], k = len(query.cts).

    a > b  iff  some limb i has a_i > b_i while all higher limbs agree:
    sum_i gt_i * prod_{j>i} eq_j.  Each summand is one balanced product,
    so depth is ceil(log2 k) and the multiplication count k(k-1)/2.
    Equality ciphertexts come out of the expansion with exact plaintext
    {0,1} constants, which keeps the products' constant terms clean.
    """
    k = query.k
    N = backend.params.N
    if not 0 <= b < N**k:
        raise BackendError(f"threshold {b} outside [0, N^{k})")
    b_limbs = limb_decompose(b, k, N)
    gts = [xcmp0_gt(backend, query.cts[i], b_limbs[i], rng) for i in range(k)]
    eqs = [None] + [
        backend.oblivious_expand_at(query.cts[i], b_limbs[i]) for i in range(1, k)
    ]
    total = None
    for i in range(k):
        factors = [gts[i]] + [eqs[j] for j in range(i + 1, k)]
        term = balanced_product(backend, factors) if len(factors) > 1 else factors[0]
        total = term if total is None else backend.add(total, term)
    return total


def xxcmp_limbs(n_precision: int, N: int, minimum: int = 1) -> int:
    per = N.bit_length() - 1
    return max(minimum, -(-n_precision // per))
