"""Negacyclic number-theoretic transforms over word-sized primes.

All polynomial arithmetic in the package happens in Z_q[X]/(X^N + 1) for
NTT-friendly primes q = 1 mod 2N below 2^31, so int64 products of two
residues never overflow.  Transforms use the fused Cooley-Tukey /
Gentleman-Sande butterflies with powers of a 2N-th root of unity; the
evaluation-point order of the output is an internal convention exposed via
``exponent_of_output`` so that slot encodings and automorphism
permutations can be derived rather than hard-coded.
"""

from __future__ import annotations

import os
from functools import lru_cache

import numpy as np

try:  # jitted butterflies; the numpy path below stays as the fallback
    if os.environ.get("PDTE_NO_NUMBA"):
        raise ImportError
    import numba

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, valid for all 64-bit integers."""
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _SMALL_PRIMES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def ntt_primes(N: int, bits: int, count: int, skip: tuple[int, ...] = ()) -> list[int]:
    """`count` distinct primes of roughly `bits` bits with q = 1 mod 2N."""
    step = 2 * N
    q = ((1 << bits) // step) * step + 1
    found: list[int] = []
    while len(found) < count:
        if q <= step:
            raise ValueError(f"ran out of {bits}-bit NTT primes for N={N}")
        if is_prime(q) and q not in skip and q not in found:
            found.append(q)
        q -= step
    return found


def primitive_2n_root(q: int, N: int) -> int:
    """A primitive 2N-th root of unity mod q (deterministic pick)."""
    order = 2 * N
    assert (q - 1) % order == 0
    cofactor = (q - 1) // order
    for g in range(2, 10000):
        psi = pow(g, cofactor, q)
        if pow(psi, N, q) == q - 1:  # psi^N = -1 ensures full order 2N
            return psi
    raise ValueError(f"no primitive 2N-th root found for q={q}")


def _bit_reverse(values: list[int]) -> list[int]:
    n = len(values)
    bits = n.bit_length() - 1
    return [values[int(format(i, f"0{bits}b")[::-1], 2)] for i in range(n)] if bits else list(values)


if HAVE_NUMBA:

    @numba.njit("void(int64[:,:], int64[:], int64)", cache=True, nogil=True)
    def _forward_kernel(a, w_br, q):  # pragma: no cover - jitted
        qinv = 1.0 / q
        rows, N = a.shape
        for r in range(rows):
            t = N
            m = 1
            while m < N:
                t //= 2
                for i in range(m):
                    w = w_br[m + i]
                    wf = float(w)
                    j1 = 2 * i * t
                    for j in range(j1, j1 + t):
                        u = a[r, j]
                        x = a[r, j + t]
                        prod = x * w
                        quot = np.int64(float(x) * wf * qinv)
                        v = prod - quot * q
                        if v < 0:
                            v += q
                        elif v >= q:
                            v -= q
                        s = u + v
                        if s >= q:
                            s -= q
                        d = u - v
                        if d < 0:
                            d += q
                        a[r, j] = s
                        a[r, j + t] = d
                m *= 2

    @numba.njit("void(int64[:,:], int64[:], int64, int64)", cache=True, nogil=True)
    def _inverse_kernel(a, winv_br, q, n_inv):  # pragma: no cover - jitted
        qinv = 1.0 / q
        rows, N = a.shape
        n_inv_f = float(n_inv)
        for r in range(rows):
            t = 1
            m = N
            while m > 1:
                m //= 2
                for i in range(m):
                    w = winv_br[m + i]
                    wf = float(w)
                    j1 = 2 * i * t
                    for j in range(j1, j1 + t):
                        u = a[r, j]
                        v = a[r, j + t]
                        s = u + v
                        if s >= q:
                            s -= q
                        d = u - v
                        if d < 0:
                            d += q
                        prod = d * w
                        quot = np.int64(float(d) * wf * qinv)
                        z = prod - quot * q
                        if z < 0:
                            z += q
                        elif z >= q:
                            z -= q
                        a[r, j] = s
                        a[r, j + t] = z
                t *= 2
            for j in range(N):
                x = a[r, j]
                prod = x * n_inv
                quot = np.int64(float(x) * n_inv_f * qinv)
                z = prod - quot * q
                if z < 0:
                    z += q
                elif z >= q:
                    z -= q
                a[r, j] = z


class NttPlan:
    """Cached transform tables for one (q, N) pair."""

    def __init__(self, q: int, N: int):
        if N & (N - 1):
            raise ValueError("N must be a power of two")
        self.q = q
        self.N = N
        psi = primitive_2n_root(q, N)
        self.psi = psi
        pows = [pow(psi, i, q) for i in range(N)]
        inv_psi = pow(psi, 2 * N - 1, q)
        inv_pows = [pow(inv_psi, i, q) for i in range(N)]
        self.w_br = np.array(_bit_reverse(pows), dtype=np.int64)
        self.winv_br = np.array(_bit_reverse(inv_pows), dtype=np.int64)
        self.n_inv = pow(N, q - 2, q)

    def forward(self, a: np.ndarray) -> np.ndarray:
        """Negacyclic NTT along the last axis; input in [0, q)."""
        q = self.q
        N = self.N
        out = np.ascontiguousarray(a, dtype=np.int64).copy()
        if HAVE_NUMBA:
            _forward_kernel(out.reshape(-1, N), self.w_br, q)
            return out
        lead = out.shape[:-1]
        t = N
        m = 1
        while m < N:
            t //= 2
            v = out.reshape(lead + (m, 2, t))
            S = self.w_br[m : 2 * m, None]
            U = v[..., 0, :]
            V = v[..., 1, :] * S % q
            v[..., 1, :] = (U - V) % q
            v[..., 0, :] = (U + V) % q
            m *= 2
        return out

    def inverse(self, a: np.ndarray) -> np.ndarray:
        """Inverse transform along the last axis; output in [0, q)."""
        q = self.q
        N = self.N
        out = np.ascontiguousarray(a, dtype=np.int64).copy()
        if HAVE_NUMBA:
            _inverse_kernel(out.reshape(-1, N), self.winv_br, q, self.n_inv)
            return out
        lead = out.shape[:-1]
        t = 1
        m = N
        while m > 1:
            m //= 2
            v = out.reshape(lead + (m, 2, t))
            S = self.winv_br[m : 2 * m, None]
            U = v[..., 0, :].copy()
            V = v[..., 1, :]
            v[..., 0, :] = (U + V) % q
            v[..., 1, :] = (U - V) * S % q
            t *= 2
        return out * self.n_inv % q

    def exponent_of_output(self) -> np.ndarray:
        """exponents e[i] with forward(X^1)[i] = psi^e[i]: the point order."""
        probe = np.zeros(self.N, dtype=np.int64)
        probe[1] = 1
        values = self.forward(probe)
        table = {pow(self.psi, e, self.q): e for e in range(2 * self.N)}
        return np.array([table[int(v)] for v in values], dtype=np.int64)

    def negacyclic_mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        fa = self.forward(a)
        fb = self.forward(b)
        return self.inverse(fa * fb % self.q)


@lru_cache(maxsize=None)
def get_plan(q: int, N: int) -> NttPlan:
    return NttPlan(q, N)


def automorphism_maps(N: int, g: int) -> tuple[np.ndarray, np.ndarray]:
    """Coefficient gather map for X -> X^g on Z[X]/(X^N+1).

    Returns (src, sign) with out[j] = sign[j] * in[src[j]].
    """
    if g % 2 == 0:
        raise ValueError("galois element must be odd")
    idx = np.arange(N, dtype=np.int64) * g % (2 * N)
    pos = idx % N
    sign = np.where(idx < N, 1, -1).astype(np.int64)
    src = np.empty(N, dtype=np.int64)
    out_sign = np.empty(N, dtype=np.int64)
    src[pos] = np.arange(N)
    out_sign[pos] = sign
    return src, out_sign


def apply_automorphism(coeffs: np.ndarray, src: np.ndarray, sign: np.ndarray, q: int) -> np.ndarray:
    return coeffs[..., src] * sign % q
