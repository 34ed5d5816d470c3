"""Rotation-key planning and key file handling.

The client generates keys knowing only public configuration (params,
precision, its own attribute count), never the model.  Key material is
tiered by basis: a key built over the first `basis_k` chain primes works
at every level at or below it, and smaller bases give much smaller keys,
so bulk per-block rotation keys live at the bottom of the chain while the
few keys used during comparisons cover the full chain.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .backend.params import MODE_BATCHED, BackendParams
from .backend.rlwe import RlweBackend
from .comparators.rcc import block_size
from .protocols import query_layout

PROTOCOLS = ("xxcmp", "rcc", "folklore")


def _rotation_element(params: BackendParams, amount: int) -> int:
    half = params.slots
    return pow(3, (half - amount % half) % half, 2 * params.N)


def galois_profile(params: BackendParams, protocol: str, n: int, num_attrs: int) -> list[tuple[int, int]]:
    """(galois element, basis_k) pairs a protocol evaluation may use."""
    full = params.base_primes + sum(params.level_drops)
    base = params.base_primes
    wanted: dict[int, int] = {}

    def add(element: int, basis: int) -> None:
        wanted[element] = max(wanted.get(element, 0), basis)

    if protocol == "xxcmp":
        N = params.N
        for i in range(N.bit_length() - 1):
            add(N // (1 << i) + 1, full)
        return sorted(wanted.items())

    block = block_size(n)
    half = params.slots
    # Block-extraction rotations (two-stage): copy strides, then local offsets.
    for start, size, copies in query_layout(half, n, num_attrs):
        for copy in range(1, copies):
            add(_rotation_element(params, -copy * size * block), base)
        for local in range(1, size):
            add(_rotation_element(params, -local * block), base)
    # In-block sums after the comparison multiplications (left, powers of two).
    j = 1
    while j <= n + 1:
        add(_rotation_element(params, -j), base)
        j *= 2
    # Leaf packing (right, powers of two) at the bottom of the chain.
    j = 1
    while j < half:
        add(_rotation_element(params, j), base)
        j *= 2
    if protocol == "folklore":
        # Prefix-product scan shifts run at pre-multiplication levels.
        j = 1
        while j <= max(1, n):
            add(_rotation_element(params, j), full)
            j *= 2
        add(_rotation_element(params, 1), full)
    return sorted(wanted.items())


@dataclass
class ClientKeys:
    """Client-held backend (secret key inside) plus the shareable set."""

    backend: RlweBackend
    public_set: object


def generate_client_keys(
    params: BackendParams,
    protocol: str,
    n: int,
    num_attrs: int,
    seed: Optional[int] = None,
) -> ClientKeys:
    backend = RlweBackend(params, seed=seed)
    backend.gen_secret_key()
    profile = galois_profile(params, protocol, n, num_attrs)
    public = backend.make_public_set(relin=True, galois_elements=profile)
    return ClientKeys(backend, public)


def server_backend(params: BackendParams, public_set, seed: Optional[int] = None) -> RlweBackend:
    backend = RlweBackend(params, seed=seed)
    backend.load_public_set(public_set)
    return backend
