"""Backend parameter sets, the security lookup table, and params digests.

The RLWE scheme never appears in the original problem statement with
concrete moduli, so the (N, prime-chain) selection below is this
artifact's own, documented here and enforced by tests:

* plaintext modulus p = 65537 everywhere (17-bit prime; p - 1 = 2^16 is
  divisible by 2N for every supported N, enabling batching, and p > h! for
  all supported Hamming weights),
* ciphertext primes are ~`prime_bits`-bit NTT primes; a ciphertext starts
  with ``base_primes + sum(level_drops)`` of them and one ct-ct
  multiplication consumes one entry of ``level_drops`` (primes dropped by
  an exact modulus switch),
* one special prime of the same size supports hybrid key switching,
* the total modulus must stay below the 128-bit-security ceiling for the
  ring degree (homomorphicencryption.org tables, ternary secret).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional

from .ntt import is_prime, ntt_primes

DEFAULT_PLAINTEXT_MODULUS = 65537

# Max log2 of the full ciphertext modulus (special primes included) at
# 128-bit classical security with ternary secrets.
MAX_LOGQ_128 = {1024: 27, 2048: 54, 4096: 109, 8192: 218, 16384: 438, 32768: 881}

MODE_BATCHED = "batched"
MODE_POLY = "poly"


@dataclass(frozen=True)
class BackendParams:
    """Shared contract between the simulator and the RLWE backend."""

    N: int
    p: int = DEFAULT_PLAINTEXT_MODULUS
    depth_budget: int = 2
    security_level: int = 128
    prime_bits: int = 30
    base_primes: int = 3
    level_drops: tuple[int, ...] = field(default=None)  # type: ignore[assignment]
    special_primes: int = 2  # must cover one key-switch digit (two primes)
    error_sigma: float = 3.2

    def __post_init__(self):
        if self.N & (self.N - 1) or self.N < 8:
            raise ValueError(f"N must be a power of two >= 8, got {self.N}")
        if not is_prime(self.p):
            raise ValueError(f"plaintext modulus {self.p} is not prime")
        if self.level_drops is None:
            # First two multiplications digest the plaintext-mask noise and
            # need double drops; after that one prime per level sustains the
            # steady state (verified by the noise-margin tests).
            drops = tuple(2 if i < 2 else 1 for i in range(self.depth_budget))
            object.__setattr__(self, "level_drops", drops)
        if len(self.level_drops) != self.depth_budget:
            raise ValueError("level_drops must have depth_budget entries")
        if self.security_level not in (0, 128):
            raise ValueError("security_level must be 0 (testing) or 128")
        if self.security_level == 128:
            total_primes = self.base_primes + sum(self.level_drops) + self.special_primes
            budget = MAX_LOGQ_128.get(self.N, 0)
            if total_primes * self.prime_bits > budget:
                raise ValueError(
                    f"chain of {total_primes} x {self.prime_bits}-bit primes exceeds "
                    f"the {budget}-bit ceiling for N={self.N} at 128-bit security"
                )

    @property
    def slots(self) -> int:
        return self.N // 2

    @property
    def supports_batching(self) -> bool:
        return (self.p - 1) % (2 * self.N) == 0

    def ciphertext_primes(self) -> list[int]:
        """Ciphertext prime chain; drops happen from the end of the list."""
        count = self.base_primes + sum(self.level_drops)
        return ntt_primes(self.N, self.prime_bits, count, skip=(self.p,))

    def special_prime_list(self) -> list[int]:
        skip = tuple(self.ciphertext_primes()) + (self.p,)
        return ntt_primes(self.N, self.prime_bits, self.special_primes, skip=skip)

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "p": self.p,
            "depth_budget": self.depth_budget,
            "security_level": self.security_level,
            "prime_bits": self.prime_bits,
            "base_primes": self.base_primes,
            "level_drops": list(self.level_drops),
            "special_primes": self.special_primes,
            "error_sigma": self.error_sigma,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BackendParams":
        d = dict(d)
        d["level_drops"] = tuple(d["level_drops"])
        return cls(**d)


def poly_limbs(n_precision: int, N: int) -> int:
    """Limb count for base-N decomposition of n-bit values."""
    per = N.bit_length() - 1
    return max(1, -(-n_precision // per))


def xxcmp_depth(k: int) -> int:
    return max(0, (k - 1).bit_length())  # ceil(log2 k)


def folklore_depth(n: int) -> int:
    return 1 + (n - 1).bit_length()  # 1 + ceil(log2 n)


def rcc_depth(h: int) -> int:
    return max(0, (h - 1).bit_length())  # ceil(log2 h)


def _fit_ring(depth_budget: int, minimum_N: int, base_primes: int = 3) -> BackendParams:
    """Smallest (N, prime size) pair whose chain clears the security ceiling."""
    N = minimum_N
    while N <= 32768:
        for bits in (30, 28, 27):
            try:
                return BackendParams(
                    N=N, depth_budget=depth_budget, prime_bits=bits, base_primes=base_primes
                )
            except ValueError:
                continue
        N *= 2
    raise ValueError(f"no 128-bit parameter set for depth {depth_budget}")


def default_batched_params(depth_budget: int, N: Optional[int] = None) -> BackendParams:
    """Batched-mode defaults: N = 16384, growing only if the chain demands.

    Four base primes: the packed tree response accumulates one masked
    comparison bit per path edge over every leaf slot, and that sum plus
    the final masking multiplication needs ~100 bits of floor headroom.
    """
    if N is not None:
        return BackendParams(N=N, depth_budget=depth_budget, base_primes=4)
    return _fit_ring(depth_budget, 16384, base_primes=4)


def rcc_params(n: int, h: int) -> BackendParams:
    return default_batched_params(rcc_depth(h))


def folklore_params(n: int) -> BackendParams:
    return default_batched_params(folklore_depth(n))


def default_poly_params(n_precision: int, N: Optional[int] = None) -> tuple[BackendParams, int]:
    """Polynomial-mode defaults: pick the ring from the precision.

    Returns (params, limb count).  The coefficient-expansion step consumes
    no level, so the chain only covers the limb-combination depth.
    """
    if N is not None:
        k = poly_limbs(n_precision, N)
        return BackendParams(N=N, depth_budget=xxcmp_depth(k)), k
    N = 8192 if n_precision <= 26 else 16384
    while N <= 32768:
        k = poly_limbs(n_precision, N)
        for bits in (30, 28, 27):
            try:
                return BackendParams(N=N, depth_budget=xxcmp_depth(k), prime_bits=bits), k
            except ValueError:
                continue
        N *= 2
    raise ValueError(f"no polynomial-mode parameter set for n={n_precision}")


def toy_params(
    N: int = 512, depth_budget: int = 2, base_primes: int = 3, prime_bits: int = 30
) -> BackendParams:
    """Insecure small-ring parameters for tests (security_level=0)."""
    return BackendParams(
        N=N,
        depth_budget=depth_budget,
        security_level=0,
        base_primes=base_primes,
        prime_bits=prime_bits,
    )


def params_digest(
    params: BackendParams,
    protocol: str,
    n: int,
    h: Optional[int] = None,
    code_length: Optional[int] = None,
) -> bytes:
    """Digest binding a query to the exact evaluation configuration."""
    blob = json.dumps(
        {
            "params": params.to_dict(),
            "protocol": protocol,
            "n": n,
            "h": h,
            "l": code_length,
        },
        sort_keys=True,
    ).encode()
    return hashlib.sha256(blob).digest()
