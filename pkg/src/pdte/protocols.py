"""End-to-end private tree evaluations: query building, server evaluation,
response decoding.

All three protocols share the same shape: one comparison bit per decision
node, edge costs derived from the bit (left edge costs I[x > t], right
edge I[x <= t]), SumPath aggregation (additions only, so traversal adds no
multiplicative depth), and per-leaf masking r_x*s and r_y*s + v.  Exactly
one leaf decrypts to x = 0; its y holds the class.

Batched protocols tile the client's attribute blocks to fill the slot
space, so one packed comparison call can serve every decision node whose
attribute occurrences fit the available copies; extra occurrences go into
further calls against the same query ciphertexts.  Results are returned
as two packed ciphertexts with one leaf per slot.  The monomial protocol
returns one ciphertext pair per leaf.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .backend.base import Backend, BackendError, CipherHandle
from .backend.params import MODE_BATCHED, MODE_POLY
from .comparators.folklore import PackedBitsQuery, bits_encode_packed, folklore_gt_sums
from .comparators.rcc import (
    PackedOurcQuery,
    block_size,
    default_hamming_weight,
    ourc_encode_packed,
    pe_encode_packed,
    rcc_block_sums,
)
from .comparators.xcmp import LimbQuery, encode_limb_query, xxcmp_gt, xxcmp_limbs
from .encodings import cw_min_length
from .tree import DecisionTreeModel, TreeNode

MAX_COPIES = 64  # caps the rotation-key alphabet; extra occurrences add calls


class ProtocolError(Exception):
    pass


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------


@dataclass
class BatchedQueryGroup:
    """One ciphertext group covering attributes [attr_start, attr_start+count)."""

    packed: Union[PackedOurcQuery, PackedBitsQuery]
    attr_start: int
    attr_count: int
    copies: int


@dataclass
class RccQuery:
    groups: list[BatchedQueryGroup]
    n: int
    h: int
    length: int
    num_attributes: int


@dataclass
class FolkloreQuery:
    groups: list[BatchedQueryGroup]
    n: int
    num_attributes: int


@dataclass
class XxcmpQuery:
    limbs: list[LimbQuery]  # one per attribute
    n: int
    k: int


def query_layout(slots: int, n: int, num_attrs: int) -> list[tuple[int, int, int]]:
    """(attr_start, attr_count, copies) per ciphertext group.

    Shared by query construction and rotation-key planning so both sides
    agree on the slot map without seeing the model.
    """
    cap = slots // block_size(n)
    if cap < 1:
        raise ProtocolError("block does not fit in the slot space")
    groups = []
    start = 0
    while start < num_attrs:
        size = min(cap, num_attrs - start)
        copies = min(cap // size, MAX_COPIES)
        groups.append((start, size, copies))
        start += size
    return groups


def _check_attrs(attrs: Sequence[int], n: int) -> None:
    for a in attrs:
        if not 0 <= a < (1 << n):
            raise ProtocolError(f"attribute value {a} outside [0, 2^{n})")


def build_rcc_query(
    backend: Backend,
    attrs: Sequence[int],
    n: int,
    h: Optional[int] = None,
    length: Optional[int] = None,
) -> RccQuery:
    """Encrypt each attribute's cover once, tiled to fill the slots."""
    _check_attrs(attrs, n)
    h = h or default_hamming_weight(n)
    length = length or cw_min_length(n, h)
    groups = []
    for start, size, copies in query_layout(backend.params.slots, n, len(attrs)):
        tiled = list(attrs[start : start + size]) * copies
        packed = ourc_encode_packed(backend, tiled, n, h, length)
        groups.append(BatchedQueryGroup(packed, start, size, copies))
    return RccQuery(groups, n, h, length, len(attrs))


def build_folklore_query(backend: Backend, attrs: Sequence[int], n: int) -> FolkloreQuery:
    _check_attrs(attrs, n)
    groups = []
    for start, size, copies in query_layout(backend.params.slots, n, len(attrs)):
        tiled = list(attrs[start : start + size]) * copies
        packed = bits_encode_packed(backend, tiled, n)
        groups.append(BatchedQueryGroup(packed, start, size, copies))
    return FolkloreQuery(groups, n, len(attrs))


def build_xxcmp_query(backend: Backend, attrs: Sequence[int], n: int) -> XxcmpQuery:
    _check_attrs(attrs, n)
    k = xxcmp_limbs(n, backend.params.N)
    if backend.params.N ** k < (1 << n):
        raise ProtocolError(f"precision {n} does not fit {k} limbs of N={backend.params.N}")
    return XxcmpQuery([encode_limb_query(backend, a, k) for a in attrs], n, k)


# ---------------------------------------------------------------------------
# Responses
# ---------------------------------------------------------------------------


@dataclass
class LeafResponse:
    """Masked per-leaf pairs: exactly one leaf decrypts to x = 0."""

    mode: str  # "per_leaf" | "packed"
    pairs: Optional[list[tuple[CipherHandle, CipherHandle]]] = None
    packed: Optional[tuple[CipherHandle, CipherHandle]] = None


def decode_result(backend: Backend, response: LeafResponse) -> int:
    """Find the unique zero-x leaf and return its y value.

    Raises on zero or multiple zero leaves: either indicates a corrupted
    or non-protocol response.
    """
    if response.mode == "per_leaf":
        xs = [int(backend.decrypt(x)[0]) for x, _ in response.pairs]
        zero_idx = [i for i, v in enumerate(xs) if v == 0]
        if len(zero_idx) != 1:
            raise ProtocolError(f"expected one zero leaf, found {len(zero_idx)}")
        return int(backend.decrypt(response.pairs[zero_idx[0]][1])[0])
    xs = backend.decrypt(response.packed[0])
    ys = backend.decrypt(response.packed[1])
    zero_idx = np.nonzero(xs == 0)[0]
    if len(zero_idx) != 1:
        raise ProtocolError(f"expected one zero leaf, found {len(zero_idx)}")
    return int(ys[zero_idx[0]])


# ---------------------------------------------------------------------------
# Traversal
# ---------------------------------------------------------------------------


def sumpath(
    backend: Backend,
    edge_costs: dict[tuple[int, str], CipherHandle],
    model: DecisionTreeModel,
) -> dict[int, CipherHandle]:
    """Per-leaf sums of root-path edge costs; one top-down pass, additions only."""
    sums: dict[int, CipherHandle] = {}

    def walk(node_id: int, acc: Optional[CipherHandle]) -> None:
        node = model.nodes[node_id]
        if node.kind == "leaf":
            sums[node_id] = acc
            return
        for side, child in (("left", node.left), ("right", node.right)):
            try:
                cost = edge_costs[(node_id, side)]
            except KeyError:
                raise BackendError(f"missing edge cost for ({node_id}, {side})") from None
            walk(child, cost if acc is None else backend.add(acc, cost))

    walk(model.root, None)
    return sums


# ---------------------------------------------------------------------------
# Batched evaluation core (RCC and folklore)
# ---------------------------------------------------------------------------


def _assign_batched_calls(
    model: DecisionTreeModel, groups: list[BatchedQueryGroup]
) -> dict[tuple[int, int], list[tuple[TreeNode, int, int]]]:
    """Schedule nodes onto (group, call) comparison rounds.

    The j-th node using attribute a lands in copy j mod copies, call
    j // copies of a's group.  Returns (group index, call) -> list of
    (node, copy, local attr index).
    """
    by_attr: dict[int, int] = {}
    schedule: dict[tuple[int, int], list[tuple[TreeNode, int, int]]] = {}
    for node_id in model.decision_ids:
        node = model.nodes[node_id]
        gi = next(
            (
                i
                for i, g in enumerate(groups)
                if g.attr_start <= node.attr < g.attr_start + g.attr_count
            ),
            None,
        )
        if gi is None:
            raise ProtocolError(f"attribute {node.attr} not covered by the query")
        occ = by_attr.get(node.attr, 0)
        by_attr[node.attr] = occ + 1
        group = groups[gi]
        copy, call = occ % group.copies, occ // group.copies
        local = node.attr - group.attr_start
        schedule.setdefault((gi, call), []).append((node, copy, local))
    return schedule


def _batched_node_bits(
    backend: Backend,
    model: DecisionTreeModel,
    groups: list[BatchedQueryGroup],
    compare_call: Callable[[BatchedQueryGroup, list[Optional[int]]], CipherHandle],
    block: int,
    scale: int,
) -> tuple[dict[int, CipherHandle], int]:
    """Comparison bit of each decision node isolated in slot 0.

    `compare_call` returns unmasked in-block sums whose block-first slots
    hold scale * bit; the one-hot extraction mask both selects slot 0 and
    divides the scale out, costing a single plaintext multiplication.
    Returns (node id -> bit ciphertext, number of comparison calls).
    """
    schedule = _assign_batched_calls(model, groups)
    p = backend.params.p
    slots = backend.params.slots
    e0 = np.zeros(slots, dtype=np.int64)
    e0[0] = pow(scale % p, p - 2, p)
    one_hot = backend.prepare_plain(backend.encode_slots(e0))
    bits: dict[int, CipherHandle] = {}
    for (gi, _call), entries in sorted(schedule.items()):
        group = groups[gi]
        thresholds: list[Optional[int]] = [None] * (group.copies * group.attr_count)
        for node, copy, local in entries:
            thresholds[copy * group.attr_count + local] = node.threshold
        result = backend.compact(compare_call(group, thresholds))
        by_copy: dict[int, list[tuple[TreeNode, int]]] = {}
        for node, copy, local in entries:
            by_copy.setdefault(copy, []).append((node, local))
        stage1 = backend.rotations_of(
            result,
            [(-copy * group.attr_count * block) % slots for copy in by_copy],
        )
        for copy, nodes in sorted(by_copy.items()):
            source = stage1[(-copy * group.attr_count * block) % slots]
            amounts = [(-local * block) % slots for _, local in nodes]
            rotated = backend.rotations_of(source, amounts)
            masked = backend.mul_plain_many(
                [rotated[(-local * block) % slots] for _, local in nodes], one_hot
            )
            for (node, _local), bit in zip(nodes, masked):
                bits[node.node_id] = bit
    return bits, len(schedule)


def _pack_leaf_sums(
    backend: Backend, model: DecisionTreeModel, sums: dict[int, CipherHandle]
) -> tuple[CipherHandle, list[int]]:
    """Pack slot-0 leaf sums into distinct slots of one ciphertext.

    Subtree widths are padded to powers of two so every combining rotation
    has a power-of-two amount; combines execute level by level so one
    batched rotation serves all same-amount merges.  Returns the packed
    ciphertext and the slot index of each leaf in canonical order.
    """
    slot_of_leaf: dict[int, int] = {}
    width: dict[int, int] = {}
    pad_of: dict[int, int] = {}
    height: dict[int, int] = {}
    leaf_ids: dict[int, list[int]] = {}
    by_height: dict[int, list[int]] = {}

    def measure(node_id: int) -> None:
        node = model.nodes[node_id]
        if node.kind == "leaf":
            slot_of_leaf[node_id] = 0
            width[node_id] = 1
            height[node_id] = 0
            leaf_ids[node_id] = [node_id]
            return
        measure(node.left)
        measure(node.right)
        pad = 1 << (width[node.left] - 1).bit_length()
        for lid in leaf_ids[node.right]:
            slot_of_leaf[lid] += pad
        pad_of[node_id] = pad
        width[node_id] = pad + width[node.right]
        height[node_id] = 1 + max(height[node.left], height[node.right])
        leaf_ids[node_id] = leaf_ids[node.left] + leaf_ids[node.right]
        by_height.setdefault(height[node_id], []).append(node_id)

    measure(model.root)
    if width[model.root] > backend.params.slots:
        raise ProtocolError(
            f"leaf packing needs {width[model.root]} slots, have {backend.params.slots}"
        )

    packed: dict[int, CipherHandle] = {}
    for leaf in model.leaves_in_order():
        s = sums[leaf.node_id]
        if s is None:  # single-leaf tree: the path sum is empty
            s = backend.zero(MODE_BATCHED)
        packed[leaf.node_id] = s
    for h in sorted(by_height):
        jobs_by_pad: dict[int, list[int]] = {}
        for node_id in by_height[h]:
            jobs_by_pad.setdefault(pad_of[node_id], []).append(node_id)
        for pad, node_ids in jobs_by_pad.items():
            rights = [packed.pop(model.nodes[d].right) for d in node_ids]
            rotated = backend.rotate_many(rights, pad)
            for d, r in zip(node_ids, rotated):
                packed[d] = backend.add(packed.pop(model.nodes[d].left), r)
    order = [leaf.node_id for leaf in model.leaves_in_order()]
    return packed[model.root], [slot_of_leaf[i] for i in order]


def _mask_packed_response(
    backend: Backend,
    model: DecisionTreeModel,
    packed_sums: CipherHandle,
    leaf_slots: list[int],
    rng: np.random.Generator,
) -> LeafResponse:
    """x = r_x*s and y = r_y*s + v per leaf slot; junk fills unused slots."""
    p = backend.params.p
    slots = backend.params.slots
    leaves = model.leaves_in_order()
    rx = np.zeros(slots, dtype=np.int64)
    ry = np.zeros(slots, dtype=np.int64)
    values = np.zeros(slots, dtype=np.int64)
    occupied = np.zeros(slots, dtype=bool)
    for leaf, slot in zip(leaves, leaf_slots):
        rx[slot] = rng.integers(1, p)
        ry[slot] = rng.integers(0, p)
        values[slot] = leaf.value % p
        occupied[slot] = True
    free = ~occupied
    junk_x = np.where(free, rng.integers(1, p, size=slots), 0)
    junk_y = np.where(free, rng.integers(0, p, size=slots), values)
    x_ct = backend.add(backend.mul_plain(packed_sums, backend.encode_slots(rx)), junk_x)
    y_ct = backend.add(backend.mul_plain(packed_sums, backend.encode_slots(ry)), junk_y)
    return LeafResponse(mode="packed", packed=(x_ct, y_ct))


def _batched_pdte(
    backend: Backend,
    model: DecisionTreeModel,
    groups: list[BatchedQueryGroup],
    compare_call: Callable[[BatchedQueryGroup, list[Optional[int]]], CipherHandle],
    block: int,
    left_is_bit: bool,
    rng: np.random.Generator,
    scale: int = 1,
) -> LeafResponse:
    bits, _ = _batched_node_bits(backend, model, groups, compare_call, block, scale)
    e0 = np.zeros(backend.params.slots, dtype=np.int64)
    e0[0] = 1
    one_hot = backend.encode_slots(e0)
    costs: dict[tuple[int, str], CipherHandle] = {}
    for node_id, bit in bits.items():
        flipped = backend.rsub(one_hot, bit)
        if left_is_bit:
            costs[(node_id, "left")], costs[(node_id, "right")] = bit, flipped
        else:
            costs[(node_id, "left")], costs[(node_id, "right")] = flipped, bit
    sums = sumpath(backend, costs, model)
    packed, leaf_slots = _pack_leaf_sums(backend, model, sums)
    return _mask_packed_response(backend, model, packed, leaf_slots, rng)


# ---------------------------------------------------------------------------
# The three protocols
# ---------------------------------------------------------------------------


def rcc_pdte(
    backend: Backend,
    query: RccQuery,
    model: DecisionTreeModel,
    rng: np.random.Generator,
) -> LeafResponse:
    """Range-cover comparisons, batched; left edge costs I[x > t] = 1 - c."""
    if query.n != model.precision:
        raise ProtocolError("precision mismatch between query and model")
    if query.num_attributes < model.num_attributes:
        raise ProtocolError("query covers fewer attributes than the model uses")

    def compare(group: BatchedQueryGroup, thresholds: list[Optional[int]]) -> CipherHandle:
        table = pe_encode_packed(backend, thresholds, query.n, query.h, query.length)
        return rcc_block_sums(backend, group.packed, table)

    return _batched_pdte(
        backend,
        model,
        query.groups,
        compare,
        block_size(query.n),
        left_is_bit=False,
        rng=rng,
        scale=factorial(query.h),
    )


def folklore_pdte(
    backend: Backend,
    query: FolkloreQuery,
    model: DecisionTreeModel,
    rng: np.random.Generator,
) -> LeafResponse:
    """Bitwise comparisons, batched; the comparison bit is I[x > t] directly."""
    if query.n != model.precision:
        raise ProtocolError("precision mismatch between query and model")
    if query.num_attributes < model.num_attributes:
        raise ProtocolError("query covers fewer attributes than the model uses")

    def compare(group: BatchedQueryGroup, thresholds: list[Optional[int]]) -> CipherHandle:
        return folklore_gt_sums(backend, group.packed, thresholds)

    return _batched_pdte(
        backend, model, query.groups, compare, block_size(query.n), left_is_bit=True, rng=rng
    )


def xxcmp_pdte(
    backend: Backend,
    query: XxcmpQuery,
    model: DecisionTreeModel,
    rng: np.random.Generator,
) -> LeafResponse:
    """Limb comparisons in polynomial mode; per-leaf ciphertext pairs."""
    if query.n != model.precision:
        raise ProtocolError("attribute/threshold precision mismatch")
    if len(query.limbs) < model.num_attributes:
        raise ProtocolError("query covers fewer attributes than the model uses")
    p = backend.params.p
    costs: dict[tuple[int, str], CipherHandle] = {}
    for node_id in model.decision_ids:
        node = model.nodes[node_id]
        c = xxcmp_gt(backend, query.limbs[node.attr], node.threshold, rng)
        costs[(node_id, "left")] = c
        costs[(node_id, "right")] = backend.rsub(1, c)
    sums = sumpath(backend, costs, model)
    pairs = []
    for leaf in model.leaves_in_order():
        s = sums[leaf.node_id]
        if s is None:
            s = backend.zero(MODE_POLY)
        r_x = int(rng.integers(1, p))
        r_y = int(rng.integers(0, p))
        x_ct = backend.mul_scalar(s, r_x)
        y_ct = backend.add(backend.mul_scalar(s, r_y), backend.encode_scalar(leaf.value, MODE_POLY))
        pairs.append((x_ct, y_ct))
    return LeafResponse(mode="per_leaf", pairs=pairs)
