"""Integer encodings: constant-weight codes, prefix-tree covers, point encodings.

Everything in this module is a pure function of its inputs and operates on
cleartext integers.  The homomorphic layers build on these encodings but
never change their semantics, so the cleartext inclusion checks here double
as test oracles for the encrypted comparison operators.

Prefix-tree conventions: the domain is [0, 2^n).  Level i groups leaves into
blocks of 2^i, so a node with value v at level i covers leaves
[v * 2^i, (v+1) * 2^i - 1].  Level n is the root (single node, value 0).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Optional

Null = None  # absent entry in an encoding; encodes to the all-zero codeword


def binom(n: int, k: int) -> int:
    """C(n, k) as an exact integer; 0 when k > n."""
    if n < 0 or k < 0:
        raise ValueError(f"binom arguments must be non-negative, got ({n}, {k})")
    return comb(n, k)


def cw_min_length(n: int, h: int) -> int:
    """Smallest code length l with C(l, h) >= 2^n for weight-h codes."""
    if h < 1:
        raise ValueError(f"Hamming weight must be positive, got {h}")
    target = 1 << n
    hi = h
    while comb(hi, h) < target:
        hi *= 2
    lo = hi // 2
    while lo < hi:
        mid = (lo + hi) // 2
        if comb(mid, h) >= target:
            hi = mid
        else:
            lo = mid + 1
    return hi


@dataclass(frozen=True)
class CWCode:
    """Constant-weight codeword: `bits[i]` is bit i, all-zero means Null."""

    bits: tuple[int, ...]
    length: int
    weight: int

    def __post_init__(self) -> None:
        if len(self.bits) != self.length:
            raise ValueError("bit vector length mismatch")
        pop = sum(self.bits)
        if pop != 0 and pop != self.weight:
            raise ValueError(f"popcount {pop} is neither 0 nor {self.weight}")

    @property
    def is_null(self) -> bool:
        return not any(self.bits)

    def __str__(self) -> str:
        return "".join(str(b) for b in reversed(self.bits))


def cw_encode(x: Optional[int], length: int, weight: int) -> CWCode:
    """Encode x into the combinadic constant-weight code CW(length, weight).

    Null encodes to the all-zero string.  Injective on [0, C(length, weight)).
    """
    if x is None:
        return CWCode((0,) * length, length, weight)
    if x < 0 or x >= comb(length, weight):
        raise ValueError(f"{x} is outside [0, C({length},{weight}))")
    bits = [0] * length
    r = x
    w = weight
    for pos in range(length - 1, -1, -1):
        if w == 0:
            break
        c = comb(pos, w)
        if r >= c:
            bits[pos] = 1
            r -= c
            w -= 1
    return CWCode(tuple(bits), length, weight)


def cw_decode(code: CWCode) -> Optional[int]:
    """Inverse of cw_encode; Null for the all-zero string."""
    if code.is_null:
        return None
    x = 0
    w = code.weight
    for pos in range(code.length - 1, -1, -1):
        if code.bits[pos]:
            x += comb(pos, w)
            w -= 1
    return x


@dataclass(frozen=True)
class PrefixEncoding:
    """Per-level prefix-node values; levels[i] is Null or a node at level i.

    Used both for one-sided covers of [x, 2^n - 1] (at most one node per
    level) and for point encodings (every level populated with the
    ancestors of one leaf).
    """

    levels: tuple[Optional[int], ...]
    n: int

    def __post_init__(self) -> None:
        if len(self.levels) != self.n + 1:
            raise ValueError("levels must have n+1 entries")
        for i, v in enumerate(self.levels):
            if v is not None and not (0 <= v < (1 << (self.n - i))):
                raise ValueError(f"level {i} value {v} outside [0, 2^{self.n - i})")

    def covered_leaves(self) -> set[int]:
        """All leaves under the non-Null nodes (test oracle helper)."""
        leaves: set[int] = set()
        for i, v in enumerate(self.levels):
            if v is not None:
                leaves.update(range(v << i, (v + 1) << i))
        return leaves


def ourc(x: int, n: int) -> PrefixEncoding:
    """One-sided uniform range cover of [x, 2^n - 1].

    For x > 0 the populated levels are exactly the set bits of 2^n - x,
    consumed high to low so each node covers the top remaining block.
    x = 0 is covered by the root alone.
    """
    if not 0 <= x < (1 << n):
        raise ValueError(f"x={x} outside [0, 2^{n})")
    levels: list[Optional[int]] = [None] * (n + 1)
    if x == 0:
        levels[n] = 0
        return PrefixEncoding(tuple(levels), n)
    top = 1 << n  # exclusive upper end of the still-uncovered interval
    rest = top - x
    for j in range(n - 1, -1, -1):
        if rest & (1 << j):
            levels[j] = (top >> j) - 1
            top -= 1 << j
    return PrefixEncoding(tuple(levels), n)


def point_encoding(y: int, n: int) -> PrefixEncoding:
    """Ancestors of leaf y, one per level; level i holds floor(y / 2^i)."""
    if not 0 <= y < (1 << n):
        raise ValueError(f"y={y} outside [0, 2^{n})")
    return PrefixEncoding(tuple(y >> i for i in range(n + 1)), n)


def ourc_pe_inclusion(cover: PrefixEncoding, point: PrefixEncoding) -> int:
    """1 iff some level of the cover equals the point's ancestor there.

    With cover = ourc(a) and point = point_encoding(b) this decides a <= b.
    Cover nodes are disjoint, so the match count never exceeds 1.
    """
    if cover.n != point.n:
        raise ValueError("precision mismatch")
    total = 0
    for c, p in zip(cover.levels, point.levels):
        if c is not None and p is not None and c == p:
            total += 1
    return total


@dataclass(frozen=True)
class RangeCover:
    """Two-sided cover of [a, b]: up to two nodes per level, root excluded.

    levels[i] is a pair of optional node values at level i.  The uniform
    form keeps the same shape with Null dummies, which can never match a
    point encoding.
    """

    levels: tuple[tuple[Optional[int], Optional[int]], ...]
    n: int

    def covered_leaves(self) -> set[int]:
        leaves: set[int] = set()
        for i, pair in enumerate(self.levels):
            for v in pair:
                if v is not None:
                    leaves.update(range(v << i, (v + 1) << i))
        return leaves


def best_range_cover(a: int, b: int, n: int) -> RangeCover:
    """Canonical minimal node set covering [a, b] exactly.

    Standard segment decomposition: peel misaligned ends at each level.
    Yields at most two nodes per level and never uses the root (the full
    range is expressed as the two level n-1 children).
    """
    if a > b:
        raise ValueError(f"empty range [{a}, {b}]")
    if not (0 <= a and b < (1 << n)):
        raise ValueError(f"[{a}, {b}] outside [0, 2^{n})")
    levels: list[list[Optional[int]]] = [[None, None] for _ in range(n)]

    def emit(level: int, v: int) -> None:
        pair = levels[level]
        pair[1 if pair[0] is not None else 0] = v

    lo, hi, lvl = a, b, 0
    while lo <= hi and lvl < n - 1:
        if lo & 1:
            emit(lvl, lo)
            lo += 1
        if not (hi & 1):
            emit(lvl, hi)
            hi -= 1
        lo >>= 1
        hi >>= 1
        lvl += 1
    if lo <= hi:
        for v in range(lo, hi + 1):
            emit(lvl, v)
    return RangeCover(tuple((p[0], p[1]) for p in levels), n)


def uniform_range_cover(a: int, b: int, n: int) -> RangeCover:
    """Best cover padded to exactly two entries per level.

    Dummies are Null, i.e. they encode to the all-zero codeword and can
    never register a match.  The returned shape is identical for every
    interval, which is what the private protocol requires.
    """
    return best_range_cover(a, b, n)


def rc_pe_inclusion(rc: RangeCover, pe: PrefixEncoding) -> int:
    """1 iff the point lies in the covered interval; at most 2n checks."""
    if rc.n != pe.n:
        raise ValueError("precision mismatch")
    total = 0
    for i in range(rc.n):
        p = pe.levels[i]
        if p is None:
            continue
        for v in rc.levels[i]:
            if v is not None and v == p:
                total += 1
    return 1 if total else 0
