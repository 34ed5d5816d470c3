"""RLWE levelled backend: a BGV-style scheme over RNS prime chains.

Ciphertexts are pairs (c0, c1) of polynomials in R_q with
c0 + c1*s = m + p*e (mod q), q a product of word-sized NTT primes.  A
ciphertext-ciphertext multiplication tensors, relinearises with a hybrid
key switch (two special primes, two-prime digits) and then drops chain
primes by an exact modulus switch, so the depth budget of the params maps
directly onto the prime chain.  Slot rotations and coefficient expansion
are Galois automorphisms followed by a key switch and consume no level.

All arithmetic is numpy int64; primes stay below 2^31 so residue products
never overflow.  Exactness discipline: modulus switching multiplies by
(q_drop mod p) before dividing so plaintexts are preserved without scale
tracking, and key-switch results divide out the special primes with the
same plaintext-clean rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .base import (
    Backend,
    BackendError,
    CipherHandle,
    DepthBudgetExceeded,
    ModeMismatch,
    Plain,
    PlainLike,
)
from .ntt import NttPlan, apply_automorphism, automorphism_maps, get_plan
from .params import MODE_BATCHED, MODE_POLY, BackendParams

COEFF = "coeff"
NTT = "ntt"


@dataclass
class RlweCiphertext:
    c0: np.ndarray  # (k, N)
    c1: np.ndarray  # (k, N)
    k: int  # active prime count (prefix of the chain)
    domain: str


@dataclass
class SecretKey:
    s: np.ndarray  # (N,) ternary, centered


@dataclass
class KSKey:
    """Key switching s' -> s over the first `basis_k` chain primes."""

    basis_k: int
    b: np.ndarray  # (digits, basis_k + specials, N), NTT domain
    a: np.ndarray


@dataclass
class PublicKeySet:
    pk0: np.ndarray  # (k_full, N) NTT
    pk1: np.ndarray
    relin: Optional[KSKey] = None
    galois: dict[int, KSKey] = field(default_factory=dict)


@dataclass
class PreparedPlain:
    """Plaintext lifted and transformed once, reusable across products."""

    mode: str
    rows: np.ndarray  # (k, N) NTT domain
    k: int


def _centered(x: np.ndarray, q: int) -> np.ndarray:
    return x - q * (x > q // 2)


class RlweBackend(Backend):
    backend_name = "rlwe"

    def __init__(
        self,
        params: BackendParams,
        seed: Optional[int] = None,
        secret_key: Optional[SecretKey] = None,
        public_set: Optional[PublicKeySet] = None,
    ):
        super().__init__(params)
        self.q_primes = params.ciphertext_primes()
        self.sp_primes = params.special_prime_list()
        self.k_full = len(self.q_primes)
        self.bottom_k = params.base_primes
        self.plans: dict[int, NttPlan] = {
            q: get_plan(q, params.N) for q in self.q_primes + self.sp_primes
        }
        self.rng = np.random.default_rng(seed)
        self.sk = secret_key
        self.public = public_set
        self._sk_ntt: Optional[np.ndarray] = None
        # Prime count -> primes dropped by a multiplication at that count.
        self._drop_at: dict[int, int] = {}
        k = self.k_full
        for d in params.level_drops:
            self._drop_at[k] = d
            k -= d
        if params.supports_batching:
            self._init_slot_maps()
        self._auto_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._perm_cache: dict[int, np.ndarray] = {}
        self._exp_map = self.plans[self.q_primes[0]].exponent_of_output()
        self._pos_of_exp = {int(e): i for i, e in enumerate(self._exp_map)}

    # ------------------------------------------------------------------
    # setup
    # ------------------------------------------------------------------

    def _init_slot_maps(self):
        t = self.params.p
        N = self.params.N
        plan = get_plan(t, N)
        exps = plan.exponent_of_output()
        pos_of_exp = {int(e): i for i, e in enumerate(exps)}
        half = N // 2
        self._row1 = np.empty(half, dtype=np.int64)
        self._row2 = np.empty(half, dtype=np.int64)
        g = 1
        for j in range(half):
            self._row1[j] = pos_of_exp[g]
            self._row2[j] = pos_of_exp[2 * N - g]
            g = g * 3 % (2 * N)

    def _automorphism(self, g: int) -> tuple[np.ndarray, np.ndarray]:
        maps = self._auto_cache.get(g)
        if maps is None:
            maps = automorphism_maps(self.params.N, g)
            self._auto_cache[g] = maps
        return maps

    def gen_secret_key(self) -> SecretKey:
        s = self.rng.integers(-1, 2, size=self.params.N, dtype=np.int64)
        self.sk = SecretKey(s)
        self._sk_ntt = None
        return self.sk

    def _secret_ntt(self) -> np.ndarray:
        if self.sk is None:
            raise BackendError("operation requires the secret key")
        if self._sk_ntt is None:
            self._sk_ntt = np.stack(
                [self.plans[q].forward(self.sk.s % q) for q in self.q_primes + self.sp_primes]
            )
        return self._sk_ntt

    def _gaussian(self, shape) -> np.ndarray:
        sigma = self.params.error_sigma
        return np.rint(self.rng.normal(0.0, sigma, size=shape)).astype(np.int64)

    def _ext_primes(self, basis_k: int) -> list[int]:
        return self.q_primes[:basis_k] + self.sp_primes

    def _digit_spans(self, basis_k: int) -> list[tuple[int, int]]:
        """Fixed pairing of chain primes into <=62-bit digits."""
        return [(i, min(i + 2, basis_k)) for i in range(0, basis_k, 2)]

    def _make_kskey(self, target_ntt_full: np.ndarray, basis_k: int) -> KSKey:
        """Key encrypting G_j * s' under s for each digit j.

        G_j = P on digit-j primes and 0 on every other prime (specials
        included), so one key serves every level <= basis_k.
        """
        if self.sk is None:
            raise BackendError("key generation requires the secret key")
        N = self.params.N
        t = self.params.p
        ext = self._ext_primes(basis_k)
        n_ext = len(ext)
        spans = self._digit_spans(basis_k)
        s_ntt = self._secret_ntt()
        ext_idx = list(range(basis_k)) + list(range(self.k_full, self.k_full + len(self.sp_primes)))
        b = np.zeros((len(spans), n_ext, N), dtype=np.int64)
        a = np.zeros((len(spans), n_ext, N), dtype=np.int64)
        P = 1
        for sp in self.sp_primes:
            P *= sp
        for j, (lo, hi) in enumerate(spans):
            e = self._gaussian(N)  # one small error polynomial per digit
            for row, q in enumerate(ext):
                plan = self.plans[q]
                a_poly = self.rng.integers(0, q, size=N, dtype=np.int64)
                e_poly = plan.forward(e % q)
                s_row = s_ntt[ext_idx[row]]
                val = (-(a_poly * s_row) + t * e_poly) % q
                if lo <= row < hi:  # G_j is P here, 0 elsewhere
                    val = (val + (P % q) * target_ntt_full[ext_idx[row]]) % q
                b[j, row] = val
                a[j, row] = a_poly
        return KSKey(basis_k, b, a)

    def make_public_set(
        self,
        relin: bool = True,
        galois_elements: Sequence[tuple[int, int]] = (),
    ) -> PublicKeySet:
        """(element, basis_k) pairs select which Galois keys to produce."""
        if self.sk is None:
            self.gen_secret_key()
        N = self.params.N
        t = self.params.p
        s_ntt = self._secret_ntt()
        pk1 = np.stack(
            [self.rng.integers(0, q, size=N, dtype=np.int64) for q in self.q_primes]
        )
        e = self._gaussian(N)
        pk0 = np.stack(
            [
                (-(pk1[i] * s_ntt[i]) + t * self.plans[q].forward(e % q)) % q
                for i, q in enumerate(self.q_primes)
            ]
        )
        ps = PublicKeySet(pk0, pk1)
        if relin:
            s2_full = np.stack(
                [
                    s_ntt[i] * s_ntt[i] % q
                    for i, q in enumerate(self.q_primes + self.sp_primes)
                ]
            )
            ps.relin = self._make_kskey(s2_full, self.k_full)
        for g, basis_k in galois_elements:
            if g in ps.galois and ps.galois[g].basis_k >= basis_k:
                continue
            src, sign = self._automorphism(g)
            tau_s = self.sk.s[src] * sign
            tau_full = np.stack(
                [self.plans[q].forward(tau_s % q) for q in self.q_primes + self.sp_primes]
            )
            ps.galois[g] = self._make_kskey(tau_full, basis_k)
        self.public = ps
        return ps

    def load_public_set(self, ps: PublicKeySet) -> None:
        self.public = ps

    def rotation_element(self, amount: int) -> int:
        """Galois element implementing right rotation by `amount` slots."""
        half = self.params.slots
        return pow(3, (half - amount % half) % half, 2 * self.params.N)

    def expansion_elements(self) -> list[int]:
        N = self.params.N
        return [N // (1 << i) + 1 for i in range(N.bit_length() - 1)]

    # ------------------------------------------------------------------
    # domain plumbing
    # ------------------------------------------------------------------

    def _to_ntt(self, poly: np.ndarray, k: int) -> np.ndarray:
        return np.stack([self.plans[self.q_primes[i]].forward(poly[i]) for i in range(k)])

    def _to_coeff(self, poly: np.ndarray, k: int) -> np.ndarray:
        return np.stack([self.plans[self.q_primes[i]].inverse(poly[i]) for i in range(k)])

    def _ct_domain(self, ct: RlweCiphertext, domain: str) -> RlweCiphertext:
        if ct.domain == domain:
            return ct
        conv = self._to_ntt if domain == NTT else self._to_coeff
        return RlweCiphertext(conv(ct.c0, ct.k), conv(ct.c1, ct.k), ct.k, domain)

    def _lift_plain(self, data: np.ndarray, k: int, domain: str) -> np.ndarray:
        t = self.params.p
        coeffs = _centered(data % t, t)
        rows = [coeffs % self.q_primes[i] for i in range(k)]
        out = np.stack(rows)
        if domain == NTT:
            out = self._to_ntt(out, k)
        return out

    def _plain_poly(self, plain: Plain) -> np.ndarray:
        """Plaintext polynomial (mod p) for either mode."""
        if plain.mode == MODE_POLY:
            return plain.data % self.params.p
        t = self.params.p
        N = self.params.N
        values = np.zeros(N, dtype=np.int64)
        values[self._row1] = plain.data % t
        values[self._row2] = plain.data % t
        return get_plan(t, N).inverse(values)

    def _decode_poly(self, coeffs: np.ndarray, mode: str) -> np.ndarray:
        if mode == MODE_POLY:
            return coeffs
        f = get_plan(self.params.p, self.params.N).forward(coeffs)
        return f[self._row1]

    # ------------------------------------------------------------------
    # contract operations
    # ------------------------------------------------------------------

    def encrypt(self, plain: Plain) -> CipherHandle:
        t = self.params.p
        N = self.params.N
        k = self.k_full
        m = self._lift_plain(self._plain_poly(plain), k, NTT)
        if self.sk is not None:
            s_ntt = self._secret_ntt()
            c1 = np.stack(
                [self.rng.integers(0, q, size=N, dtype=np.int64) for q in self.q_primes]
            )
            e = self._gaussian(N)
            c0 = np.stack(
                [
                    (-(c1[i] * s_ntt[i]) + t * self.plans[q].forward(e % q) + m[i]) % q
                    for i, q in enumerate(self.q_primes)
                ]
            )
        elif self.public is not None:
            u = self.rng.integers(-1, 2, size=N, dtype=np.int64)
            e0 = self._gaussian(N)
            e1 = self._gaussian(N)
            c0 = np.empty((k, N), dtype=np.int64)
            c1 = np.empty((k, N), dtype=np.int64)
            for i, q in enumerate(self.q_primes):
                plan = self.plans[q]
                u_n = plan.forward(u % q)
                c0[i] = (self.public.pk0[i] * u_n + t * plan.forward(e0 % q) + m[i]) % q
                c1[i] = (self.public.pk1[i] * u_n + t * plan.forward(e1 % q)) % q
        else:
            raise BackendError("no key material for encryption")
        return CipherHandle(
            self.backend_id, plain.mode, 0, RlweCiphertext(c0, c1, k, NTT)
        )

    def zero(self, mode: str) -> CipherHandle:
        k = self.k_full
        shape = (k, self.params.N)
        payload = RlweCiphertext(
            np.zeros(shape, dtype=np.int64), np.zeros(shape, dtype=np.int64), k, NTT
        )
        return CipherHandle(self.backend_id, mode, 0, payload)

    def decrypt(self, ct: CipherHandle) -> np.ndarray:
        self._own(ct)
        if self.sk is None:
            raise BackendError("decryption requires the secret key")
        payload = ct.payload
        while payload.k > self.bottom_k:
            payload = self._mod_switch(payload)
        payload = self._ct_domain(payload, NTT)
        k = payload.k
        s_ntt = self._secret_ntt()
        rows = []
        for i in range(k):
            q = self.q_primes[i]
            d = (payload.c0[i] + payload.c1[i] * s_ntt[i]) % q
            rows.append(self.plans[q].inverse(d))
        coeffs = self._crt_centered(rows, [self.q_primes[i] for i in range(k)])
        return self._decode_poly(coeffs % self.params.p, ct.mode)

    @staticmethod
    def _crt_centered(rows: list[np.ndarray], primes: list[int]) -> np.ndarray:
        Q = 1
        for q in primes:
            Q *= q
        acc = np.zeros(rows[0].shape, dtype=object)
        for r, q in zip(rows, primes):
            m = Q // q
            acc += r.astype(object) * (m * pow(m, -1, q))
        acc %= Q
        acc = np.where(acc > Q // 2, acc - Q, acc)
        return acc

    def noise_budget_bits(self, ct: CipherHandle) -> float:
        """log2 margin before decryption failure (diagnostic, needs sk)."""
        self._own(ct)
        payload = self._ct_domain(ct.payload, NTT)
        k = payload.k
        s_ntt = self._secret_ntt()
        rows = []
        for i in range(k):
            q = self.q_primes[i]
            d = (payload.c0[i] + payload.c1[i] * s_ntt[i]) % q
            rows.append(self.plans[q].inverse(d))
        coeffs = self._crt_centered(rows, [self.q_primes[i] for i in range(k)])
        worst = max(1, int(np.max(np.abs(coeffs))))
        logq = sum(q.bit_length() for q in self.q_primes[:k])
        return logq - 1 - worst.bit_length()

    def _binary_ct_op(self, a: CipherHandle, b: CipherHandle, sign: int) -> CipherHandle:
        self._own(a)
        self._check_pair(a, b)
        pa, pb = a.payload, b.payload
        k = min(pa.k, pb.k)
        while pa.k > k:
            pa = self._mod_switch(pa)
        while pb.k > k:
            pb = self._mod_switch(pb)
        domain = pa.domain if pa.domain == pb.domain else COEFF
        pa = self._ct_domain(pa, domain)
        pb = self._ct_domain(pb, domain)
        qv = np.array(self.q_primes[:k], dtype=np.int64)[:, None]
        c0 = (pa.c0 + sign * pb.c0) % qv
        c1 = (pa.c1 + sign * pb.c1) % qv
        return CipherHandle(
            self.backend_id,
            a.mode,
            max(a.depth, b.depth),
            RlweCiphertext(c0, c1, k, domain),
        )

    def add(self, ct: CipherHandle, other: Union[CipherHandle, PlainLike]) -> CipherHandle:
        if isinstance(other, CipherHandle):
            return self._binary_ct_op(ct, other, +1)
        if isinstance(other, PreparedPlain):
            return self._plain_add(ct, other, +1)
        return self._plain_add(ct, self._as_plain(other, ct.mode), +1)

    def sub(self, ct: CipherHandle, other: Union[CipherHandle, PlainLike]) -> CipherHandle:
        if isinstance(other, CipherHandle):
            return self._binary_ct_op(ct, other, -1)
        if isinstance(other, PreparedPlain):
            return self._plain_add(ct, other, -1)
        return self._plain_add(ct, self._as_plain(other, ct.mode), -1)

    def neg(self, ct: CipherHandle) -> CipherHandle:
        self._own(ct)
        p = ct.payload
        qv = np.array(self.q_primes[: p.k], dtype=np.int64)[:, None]
        return CipherHandle(
            self.backend_id,
            ct.mode,
            ct.depth,
            RlweCiphertext((-p.c0) % qv, (-p.c1) % qv, p.k, p.domain),
        )

    def rsub(self, plain: PlainLike, ct: CipherHandle) -> CipherHandle:
        if isinstance(plain, PreparedPlain):
            return self._plain_add(self.neg(ct), plain, +1)
        return self._plain_add(self.neg(ct), self._as_plain(plain, ct.mode), +1)

    def _plain_add(self, ct: CipherHandle, plain, sign: int) -> CipherHandle:
        self._own(ct)
        if isinstance(plain, PreparedPlain):
            p = self._ct_domain(ct.payload, NTT)
            if p.k != plain.k:
                raise BackendError("prepared plaintext level mismatch")
            m = plain.rows
        else:
            p = ct.payload
            m = self._lift_plain(self._plain_poly(plain), p.k, p.domain)
        qv = np.array(self.q_primes[: p.k], dtype=np.int64)[:, None]
        c0 = (p.c0 + sign * m) % qv
        return CipherHandle(
            self.backend_id, ct.mode, ct.depth, RlweCiphertext(c0, p.c1, p.k, p.domain)
        )

    def mul_plain(self, ct: CipherHandle, plain) -> CipherHandle:
        self._own(ct)
        p = self._ct_domain(ct.payload, NTT)
        if isinstance(plain, PreparedPlain):
            if p.k != plain.k:
                raise BackendError("prepared plaintext level mismatch")
            m = plain.rows
        else:
            pl = self._as_plain(plain, ct.mode)
            m = self._lift_plain(self._plain_poly(pl), p.k, NTT)
        qv = np.array(self.q_primes[: p.k], dtype=np.int64)[:, None]
        return CipherHandle(
            self.backend_id,
            ct.mode,
            ct.depth,
            RlweCiphertext(p.c0 * m % qv, p.c1 * m % qv, p.k, NTT),
        )

    def mul_ct(self, a: CipherHandle, b: CipherHandle) -> CipherHandle:
        self._own(a)
        self._check_pair(a, b)
        depth = self._bump_depth(max(a.depth, b.depth))
        if self.public is None or self.public.relin is None:
            raise BackendError("ciphertext multiplication requires a relinearisation key")
        pa, pb = a.payload, b.payload
        k = min(pa.k, pb.k)
        drop = self._drop_at.get(k)
        if drop is None:
            raise DepthBudgetExceeded(f"no chain level left for a multiplication at k={k}")
        while pa.k > k:
            pa = self._mod_switch(pa)
        while pb.k > k:
            pb = self._mod_switch(pb)
        pa = self._ct_domain(pa, NTT)
        pb = self._ct_domain(pb, NTT)
        qv = np.array(self.q_primes[:k], dtype=np.int64)[:, None]
        d0 = pa.c0 * pb.c0 % qv
        d1 = (pa.c0 * pb.c1 + pa.c1 * pb.c0) % qv
        d2 = pa.c1 * pb.c1 % qv
        d2_coeff = self._to_coeff(d2, k)
        u0, u1 = self._ks_apply(d2_coeff, self.public.relin, k)
        c0 = (self._to_coeff(d0, k) + u0) % qv
        c1 = (self._to_coeff(d1, k) + u1) % qv
        out = RlweCiphertext(c0, c1, k, COEFF)
        for _ in range(drop):
            out = self._mod_switch(out)
        return CipherHandle(self.backend_id, a.mode, depth, out)

    def rotate(self, ct: CipherHandle, k: int) -> CipherHandle:
        self._own(ct)
        if ct.mode != MODE_BATCHED:
            raise ModeMismatch("rotate requires a batched ciphertext")
        amount = k % self.params.slots
        if amount == 0:
            return ct
        g = self.rotation_element(amount)
        if self._has_galois(g, ct.payload.k):
            payload = self._apply_galois(ct.payload, g)
            return CipherHandle(self.backend_id, ct.mode, ct.depth, payload)
        # Compose from power-of-two rotations.
        payload = ct.payload
        remaining = amount
        bit = 1
        while remaining:
            if remaining & 1:
                g_step = self.rotation_element(bit)
                if not self._has_galois(g_step, payload.k):
                    raise BackendError(f"no rotation key for amount {bit} at level {payload.k}")
                payload = self._apply_galois(payload, g_step)
            remaining >>= 1
            bit <<= 1
        return CipherHandle(self.backend_id, ct.mode, ct.depth, payload)

    def _ntt_point_perm(self, g: int) -> np.ndarray:
        """Permutation with NTT(tau_g(x)) = NTT(x)[perm] (prime independent)."""
        perm = self._perm_cache.get(g)
        if perm is None:
            exps = self._exp_map
            pos = self._pos_of_exp
            perm = np.array(
                [pos[int(e) * g % (2 * self.params.N)] for e in exps], dtype=np.int64
            )
            self._perm_cache[g] = perm
        return perm

    def rotations_of(self, ct: CipherHandle, amounts) -> dict[int, CipherHandle]:
        """Hoisted rotations: one digit decomposition serves every amount."""
        self._own(ct)
        if ct.mode != MODE_BATCHED:
            raise ModeMismatch("rotate requires a batched ciphertext")
        amounts = [a % self.params.slots for a in amounts]
        todo = [a for a in amounts if a]
        out: dict[int, CipherHandle] = {}
        if not todo:
            return {a: ct for a in amounts}
        k = ct.payload.k
        keys = {}
        for a in todo:
            g = self.rotation_element(a)
            key = self.public.galois.get(g) if self.public else None
            if key is None or key.basis_k < k:
                # No direct key: fall back per amount (pow2 composition).
                return {a: (ct if a == 0 else self.rotate(ct, a)) for a in amounts}
            keys[a] = (g, key)
        pc = self._ct_domain(ct.payload, COEFF)
        basis_k = min(key.basis_k for _, key in keys.values())
        dig_ntt = self._digits_ntt(self._digits_coeff(pc.c1, k, basis_k), k)
        qv = np.array(self.q_primes[:k], dtype=np.int64)[:, None]
        for a in todo:
            g, key = keys[a]
            perm = self._ntt_point_perm(g)
            u0, u1 = self._ks_inner(dig_ntt[..., perm], key, k)
            src, sign = self._automorphism(g)
            t0 = pc.c0[:, src] * sign % qv
            payload = RlweCiphertext((t0 + u0) % qv, u1, k, COEFF)
            out[a] = CipherHandle(self.backend_id, ct.mode, ct.depth, payload)
        for a in amounts:
            if a == 0:
                out[a] = ct
        return out

    def rotate_many(self, cts, k: int) -> list[CipherHandle]:
        """One rotation amount applied to a batch in stacked kernel calls."""
        amount = k % self.params.slots
        if amount == 0:
            return list(cts)
        if not cts:
            return []
        level = {ct.payload.k for ct in cts}
        if len(level) != 1:
            return [self.rotate(ct, amount) for ct in cts]
        lvl = level.pop()
        g = self.rotation_element(amount)
        key = self.public.galois.get(g) if self.public else None
        if key is None or key.basis_k < lvl:
            return [self.rotate(ct, amount) for ct in cts]
        coeffs = [self._ct_domain(ct.payload, COEFF) for ct in cts]
        c0s = np.stack([p.c0 for p in coeffs])  # (B, k, N)
        c1s = np.stack([p.c1 for p in coeffs])
        src, sign = self._automorphism(g)
        qv = np.array(self.q_primes[:lvl], dtype=np.int64)[None, :, None]
        t0 = c0s[..., src] * sign % qv
        t1 = c1s[..., src] * sign % qv
        digits = self._digits_coeff(t1, lvl, key.basis_k)
        u0, u1 = self._ks_inner(self._digits_ntt(digits, lvl), key, lvl)
        c0_out = (t0 + u0) % qv
        return [
            CipherHandle(
                self.backend_id,
                ct.mode,
                ct.depth,
                RlweCiphertext(c0_out[b], u1[b], lvl, COEFF),
            )
            for b, ct in enumerate(cts)
        ]

    def prepare_plain(self, plain: Plain, k: Optional[int] = None) -> PreparedPlain:
        k = k or self.bottom_k
        rows = self._lift_plain(self._plain_poly(plain), k, NTT)
        return PreparedPlain(plain.mode, rows, k)

    def mul_plain_many(self, cts, prepared) -> list[CipherHandle]:
        if not isinstance(prepared, PreparedPlain):
            return [self.mul_plain(ct, prepared) for ct in cts]
        out = []
        for ct in cts:
            p = ct.payload
            if p.k != prepared.k:
                raise BackendError("prepared plaintext level mismatch")
            p = self._ct_domain(p, NTT)
            qv = np.array(self.q_primes[: p.k], dtype=np.int64)[:, None]
            payload = RlweCiphertext(
                p.c0 * prepared.rows % qv, p.c1 * prepared.rows % qv, p.k, NTT
            )
            out.append(CipherHandle(self.backend_id, ct.mode, ct.depth, payload))
        return out

    def oblivious_expand_at(self, ct: CipherHandle, k: int) -> CipherHandle:
        self._own(ct)
        if ct.mode != MODE_POLY:
            raise ModeMismatch("expansion requires a polynomial ciphertext")
        N = self.params.N
        if not 0 <= k < N:
            raise BackendError(f"coefficient index {k} outside [0, N)")
        payload = self._ct_domain(ct.payload, COEFF)
        payload = self._mul_monomial(payload, -k)
        for g in self.expansion_elements():
            rotated = self._apply_galois(payload, g)
            qv = np.array(self.q_primes[: payload.k], dtype=np.int64)[:, None]
            payload = RlweCiphertext(
                (payload.c0 + rotated.c0) % qv,
                (payload.c1 + rotated.c1) % qv,
                payload.k,
                COEFF,
            )
        inv_n = pow(N, self.params.p - 2, self.params.p)
        handle = CipherHandle(self.backend_id, ct.mode, ct.depth, payload)
        return self.mul_scalar(handle, inv_n)

    def compact(self, ct: CipherHandle) -> CipherHandle:
        """Drop to the cheapest level that still decrypts (before rotations)."""
        self._own(ct)
        payload = ct.payload
        while payload.k > self.bottom_k:
            payload = self._mod_switch(payload)
        return CipherHandle(self.backend_id, ct.mode, ct.depth, payload)

    def reduce_to_base(self, ct: CipherHandle) -> CipherHandle:
        self._own(ct)
        payload = ct.payload
        while payload.k > self.params.base_primes:
            payload = self._mod_switch(payload)
        return CipherHandle(self.backend_id, ct.mode, ct.depth, payload)

    # ------------------------------------------------------------------
    # internals
    # ------------------------------------------------------------------

    def _mul_monomial(self, p: RlweCiphertext, exponent: int) -> RlweCiphertext:
        """Multiply by X^exponent (negacyclic shift), coeff domain."""
        N = self.params.N
        e = exponent % (2 * N)
        pc = self._ct_domain(p, COEFF)
        idx = (np.arange(N) - e) % (2 * N)
        src = idx % N
        sign = np.where(idx < N, 1, -1).astype(np.int64)
        qv = np.array(self.q_primes[: p.k], dtype=np.int64)[:, None]
        c0 = pc.c0[:, src] * sign % qv
        c1 = pc.c1[:, src] * sign % qv
        return RlweCiphertext(c0, c1, p.k, COEFF)

    def _has_galois(self, g: int, k: int) -> bool:
        key = self.public.galois.get(g) if self.public else None
        return key is not None and key.basis_k >= k

    def _apply_galois(self, p: RlweCiphertext, g: int) -> RlweCiphertext:
        key = self.public.galois.get(g) if self.public else None
        if key is None or key.basis_k < p.k:
            raise BackendError(f"no Galois key for element {g} at level {p.k}")
        src, sign = self._automorphism(g)
        pc = self._ct_domain(p, COEFF)
        k = pc.k
        qv = np.array(self.q_primes[:k], dtype=np.int64)[:, None]
        t0 = pc.c0[:, src] * sign % qv
        t1 = pc.c1[:, src] * sign % qv
        u0, u1 = self._ks_apply(t1, key, k)
        return RlweCiphertext((t0 + u0) % qv, u1, k, COEFF)

    def _digits_coeff(self, d: np.ndarray, k: int, basis_k: int) -> np.ndarray:
        """Centered digit lifts of coeff-domain d (..., k, N) -> (..., J, N)."""
        spans = [(lo, min(hi, k)) for lo, hi in self._digit_spans(basis_k) if lo < k]
        out = np.empty(d.shape[:-2] + (len(spans), d.shape[-1]), dtype=np.int64)
        for j, (lo, hi) in enumerate(spans):
            out[..., j, :] = self._digit_value(d, lo, hi)
        return out

    def _digits_ntt(self, digits: np.ndarray, k: int) -> np.ndarray:
        """Forward-transform digits under every extended prime.

        digits: (..., J, N) signed int64 -> (..., J, n_ext, N) NTT rows.
        """
        ext = self.q_primes[:k] + self.sp_primes
        shape = digits.shape[:-1] + (len(ext), digits.shape[-1])
        out = np.empty(shape, dtype=np.int64)
        for row, q in enumerate(ext):
            out[..., row, :] = self.plans[q].forward(digits % q)
        return out

    def _ks_finish(
        self, acc0: np.ndarray, acc1: np.ndarray, k: int
    ) -> tuple[np.ndarray, np.ndarray]:
        """Inverse-transform accumulators and divide out the special primes."""
        ext = self.q_primes[:k] + self.sp_primes
        for row, q in enumerate(ext):
            plan = self.plans[q]
            acc0[..., row, :] = plan.inverse(acc0[..., row, :])
            acc1[..., row, :] = plan.inverse(acc1[..., row, :])
        rows = k + len(self.sp_primes)
        for sp_i in range(len(self.sp_primes) - 1, -1, -1):
            rows -= 1
            acc0 = self._exact_div(acc0, rows, self.sp_primes[sp_i], ext)
            acc1 = self._exact_div(acc1, rows, self.sp_primes[sp_i], ext)
        return acc0[..., :k, :], acc1[..., :k, :]

    def _ks_inner(
        self, dig_ntt: np.ndarray, key: KSKey, k: int
    ) -> tuple[np.ndarray, np.ndarray]:
        """Accumulate digit rows against the key; returns coeff-domain pair.

        dig_ntt: (..., J, n_ext, N) as produced by _digits_ntt (possibly
        permuted for a hoisted automorphism).
        """
        n_sp = len(self.sp_primes)
        ext = self.q_primes[:k] + self.sp_primes
        key_rows = list(range(k)) + list(range(key.basis_k, key.basis_k + n_sp))
        J = dig_ntt.shape[-3]
        lead = dig_ntt.shape[:-3]
        acc0 = np.zeros(lead + (len(ext), dig_ntt.shape[-1]), dtype=np.int64)
        acc1 = np.zeros_like(acc0)
        for row, q in enumerate(ext):
            kr = key_rows[row]
            a0 = acc0[..., row, :]
            a1 = acc1[..., row, :]
            for j in range(J):
                dj = dig_ntt[..., j, row, :]
                a0 += dj * key.b[j, kr] % q
                a1 += dj * key.a[j, kr] % q
                a0 %= q
                a1 %= q
        return self._ks_finish(acc0, acc1, k)

    def _ks_apply(self, d: np.ndarray, key: KSKey, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Hybrid key switch of coeff-domain d (..., k, N); coeff pair out."""
        if key.basis_k < k:
            raise BackendError("key basis below ciphertext level")
        digits = self._digits_coeff(d, k, key.basis_k)
        return self._ks_inner(self._digits_ntt(digits, k), key, k)

    def _digit_value(self, d: np.ndarray, lo: int, hi: int) -> np.ndarray:
        """Centered CRT lift of prime rows [lo, hi) into int64 (<= 62 bits)."""
        if hi - lo == 1:
            return _centered(d[..., lo, :], self.q_primes[lo])
        qa, qb = self.q_primes[lo], self.q_primes[lo + 1]
        ra, rb = d[..., lo, :], d[..., lo + 1, :]
        inv = pow(qa, -1, qb)
        diff = (rb - ra) % qb
        val = ra + qa * (diff * inv % qb)
        D = qa * qb
        return val - D * (val > D // 2)

    def _exact_div(
        self, acc: np.ndarray, rows: int, divisor: int, ext: list[int]
    ) -> np.ndarray:
        """(acc - v)/divisor with v = acc (mod divisor), v = 0 (mod p)."""
        t = self.params.p
        r = _centered(acc[..., rows, :] % divisor, divisor)
        w = (-r % t) * pow(divisor, -1, t) % t
        w -= t * (w > t // 2)
        v = r + divisor * w
        out = np.empty(acc.shape[:-2] + (rows, acc.shape[-1]), dtype=np.int64)
        for i in range(rows):
            q = ext[i]
            inv = pow(divisor, -1, q)
            out[..., i, :] = (acc[..., i, :] - v) % q * inv % q
        return out

    def _mod_switch(self, p: RlweCiphertext) -> RlweCiphertext:
        """Drop the last active prime; exact and plaintext-preserving."""
        if p.k <= 1:
            raise BackendError("cannot drop the last chain prime")
        pc = self._ct_domain(p, COEFF)
        k = pc.k
        q_drop = self.q_primes[k - 1]
        t = self.params.p
        alpha = q_drop % t
        ext = self.q_primes[:k]
        out = []
        for comp in (pc.c0, pc.c1):
            scaled = np.empty_like(comp)
            for i in range(k):
                scaled[i] = comp[i] * alpha % ext[i]
            out.append(self._exact_div(scaled, k - 1, q_drop, ext))
        return RlweCiphertext(out[0], out[1], k - 1, COEFF)
