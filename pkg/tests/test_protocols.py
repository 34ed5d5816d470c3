"""End-to-end protocol tests on the simulator, oracle = eval_clear."""

import numpy as np
import pytest

from pdte.backend import SimBackend, toy_params
from pdte.protocols import (
    ProtocolError,
    build_folklore_query,
    build_rcc_query,
    build_xxcmp_query,
    decode_result,
    folklore_pdte,
    rcc_pdte,
    sumpath,
    xxcmp_pdte,
)
from pdte.tree import DecisionTreeModel, TreeNode, eval_clear, synth_tree


def rng():
    return np.random.default_rng(2024)


def batched_backend(N=2048, depth=6):
    return SimBackend(toy_params(N=N, depth_budget=depth))


def poly_backend(N=256, depth=4):
    return SimBackend(toy_params(N=N, depth_budget=depth))


def depth1_tree(threshold=5, n=3):
    nodes = {
        0: TreeNode(0, "decision", attr=0, threshold=threshold, left=1, right=2),
        1: TreeNode(1, "leaf", value=10),
        2: TreeNode(2, "leaf", value=20),
    }
    return DecisionTreeModel(precision=n, num_attributes=1, root=0, nodes=nodes)


class TestSumpath:
    def test_depth1(self):
        sim = batched_backend()
        model = depth1_tree()
        zero = sim.encrypt_slots(np.zeros(sim.params.slots, dtype=np.int64))
        one = sim.encrypt_slots(np.r_[1, np.zeros(sim.params.slots - 1)].astype(np.int64))
        sums = sumpath(sim, {(0, "left"): zero, (0, "right"): one}, model)
        assert int(sim.decrypt(sums[1])[0]) == 0
        assert int(sim.decrypt(sums[2])[0]) == 1

    def test_missing_edge(self):
        from pdte.backend import BackendError

        sim = batched_backend()
        model = depth1_tree()
        with pytest.raises(BackendError):
            sumpath(sim, {(0, "left"): sim.zero("batched")}, model)

    def test_unique_zero_on_random_tree(self):
        sim = batched_backend()
        model = synth_tree(depth=6, precision=4, num_attributes=3, seed=5)
        attrs = [3, 9, 14]
        e0 = np.zeros(sim.params.slots, dtype=np.int64)
        e0[0] = 1
        costs = {}
        for node_id in model.decision_ids:
            node = model.nodes[node_id]
            bit = 1 if attrs[node.attr] > node.threshold else 0
            costs[(node_id, "left")] = sim.encrypt_slots(e0 * bit)
            costs[(node_id, "right")] = sim.encrypt_slots(e0 * (1 - bit))
        sums = sumpath(sim, costs, model)
        zeros = [lid for lid, ct in sums.items() if int(sim.decrypt(ct)[0]) == 0]
        depth_ok = all(int(sim.decrypt(ct)[0]) <= model.depth() for ct in sums.values())
        assert len(zeros) == 1 and depth_ok
        assert model.nodes[zeros[0]].value == eval_clear(model, attrs)


class TestBoundaryTrio:
    """The depth-1 boundary cases must agree across all three protocols."""

    @pytest.mark.parametrize("x,want", [(3, 10), (6, 20), (5, 10)])
    def test_xxcmp(self, x, want):
        sim = poly_backend(N=8, depth=1)
        model = depth1_tree()
        q = build_xxcmp_query(sim, [x], n=3)
        resp = xxcmp_pdte(sim, q, model, rng())
        assert decode_result(sim, resp) == want

    @pytest.mark.parametrize("x,want", [(3, 10), (6, 20), (5, 10)])
    def test_rcc(self, x, want):
        sim = batched_backend()
        model = depth1_tree()
        q = build_rcc_query(sim, [x], n=3)
        resp = rcc_pdte(sim, q, model, rng())
        assert resp.mode == "packed"
        assert decode_result(sim, resp) == want

    @pytest.mark.parametrize("x,want", [(3, 10), (6, 20), (5, 10)])
    def test_folklore(self, x, want):
        sim = batched_backend()
        model = depth1_tree()
        q = build_folklore_query(sim, [x], n=3)
        resp = folklore_pdte(sim, q, model, rng())
        assert decode_result(sim, resp) == want


def run_protocol(protocol, sim, model, attrs, r):
    if protocol == "xxcmp":
        return xxcmp_pdte(sim, build_xxcmp_query(sim, attrs, model.precision), model, r)
    if protocol == "rcc":
        return rcc_pdte(sim, build_rcc_query(sim, attrs, model.precision), model, r)
    return folklore_pdte(sim, build_folklore_query(sim, attrs, model.precision), model, r)


class TestRandomTrees:
    @pytest.mark.parametrize("protocol", ["xxcmp", "rcc", "folklore"])
    def test_matches_eval_clear(self, protocol):
        r = rng()
        for trial in range(25):
            depth = int(r.integers(1, 7))
            n = int(r.integers(2, 9))
            num_attrs = int(r.integers(1, 8))
            model = synth_tree(depth, n, num_attrs, seed=trial, num_classes=5)
            attrs = [int(v) for v in r.integers(0, 1 << n, size=num_attrs)]
            sim = poly_backend(N=64, depth=4) if protocol == "xxcmp" else batched_backend()
            resp = run_protocol(protocol, sim, model, attrs, r)
            assert decode_result(sim, resp) == eval_clear(model, attrs), (
                protocol,
                trial,
                attrs,
            )

    def test_attribute_reuse_single_call(self):
        # Many nodes sharing one attribute: copies of the same client block
        # serve them; with enough copies one comparison call suffices.
        sim = batched_backend()
        r = rng()
        nodes = {}
        for i in range(7):
            nodes[i] = TreeNode(i, "decision", attr=0, threshold=i + 1, left=2 * i + 1, right=2 * i + 2)
        for i in range(7, 15):
            nodes[i] = TreeNode(i, "leaf", value=i)
        # Repair child pointers into a complete depth-3 tree layout.
        nodes = {}
        next_id = [0]

        def build(level):
            nid = next_id[0]
            next_id[0] += 1
            if level == 3:
                nodes[nid] = TreeNode(nid, "leaf", value=nid)
                return nid
            left = build(level + 1)
            right = build(level + 1)
            nodes[nid] = TreeNode(nid, "decision", attr=0, threshold=2 * nid + 1, left=left, right=right)
            return nid

        root = build(0)
        model = DecisionTreeModel(precision=5, num_attributes=1, root=root, nodes=nodes)
        from pdte.protocols import _assign_batched_calls

        q = build_rcc_query(sim, [13], n=5)
        schedule = _assign_batched_calls(model, q.groups)
        assert len(schedule) == 1  # 7 occurrences within one call's copies
        resp = rcc_pdte(sim, q, model, r)
        assert decode_result(sim, resp) == eval_clear(model, [13])

    def test_unbalanced_tree(self):
        # Left-deep chain of depth 6.
        nodes = {}
        for i in range(6):
            nodes[i] = TreeNode(i, "decision", attr=0, threshold=10 * (i + 1), left=i + 1 if i < 5 else 6, right=7 + i)
        nodes[6] = TreeNode(6, "leaf", value=99)
        for i in range(7, 13):
            nodes[i] = TreeNode(i, "leaf", value=i)
        # children: decision i -> left = i+1 (next decision) except last -> leaf 6
        fixed = {}
        for i in range(6):
            left = i + 1 if i < 5 else 6
            fixed[i] = TreeNode(i, "decision", attr=0, threshold=10 * (i + 1), left=left, right=7 + i)
        fixed[6] = nodes[6]
        for i in range(7, 13):
            fixed[i] = nodes[i]
        model = DecisionTreeModel(precision=7, num_attributes=1, root=0, nodes=fixed)
        sim = batched_backend()
        r = rng()
        for x in (0, 5, 15, 35, 64, 127):
            resp = rcc_pdte(sim, build_rcc_query(sim, [x], n=7), model, r)
            assert decode_result(sim, resp) == eval_clear(model, [x]), x


class TestErrors:
    def test_precision_mismatch(self):
        sim = batched_backend()
        model = depth1_tree(n=3)
        q = build_rcc_query(sim, [1], n=4)
        with pytest.raises(ProtocolError):
            rcc_pdte(sim, q, model, rng())

    def test_attrs_out_of_range_rejected(self):
        sim = batched_backend()
        with pytest.raises(ProtocolError):
            build_rcc_query(sim, [8], n=3)

    def test_decode_rejects_all_nonzero(self):
        sim = poly_backend(N=8, depth=1)
        model = depth1_tree()
        resp = xxcmp_pdte(sim, build_xxcmp_query(sim, [3], 3), model, rng())
        # Corrupt the zero leaf by replacing x with a nonzero constant.
        bad = [(sim.encrypt_poly([1] + [0] * 7), y) for _, y in resp.pairs]
        from pdte.protocols import LeafResponse

        with pytest.raises(ProtocolError):
            decode_result(sim, LeafResponse(mode="per_leaf", pairs=bad))

    def test_decode_rejects_double_zero(self):
        sim = poly_backend(N=8, depth=1)
        model = depth1_tree()
        resp = xxcmp_pdte(sim, build_xxcmp_query(sim, [3], 3), model, rng())
        zero = sim.encrypt_poly([0] * 8)
        bad = [(zero, y) for _, y in resp.pairs]
        from pdte.protocols import LeafResponse

        with pytest.raises(ProtocolError):
            decode_result(sim, LeafResponse(mode="per_leaf", pairs=bad))


class TestDepthLedger:
    def test_traversal_adds_no_depth(self):
        sim = batched_backend()
        model = synth_tree(5, 8, 4, seed=8)
        q = build_rcc_query(sim, [1, 200, 30, 99], n=8)
        from math import factorial

        from pdte.comparators.rcc import block_size, pe_encode_packed, rcc_block_sums
        from pdte.protocols import _batched_node_bits

        def compare(group, thresholds):
            table = pe_encode_packed(sim, thresholds, q.n, q.h, q.length)
            return rcc_block_sums(sim, group.packed, table)

        bits, _ = _batched_node_bits(
            sim, model, q.groups, compare, block_size(q.n), factorial(q.h)
        )
        cmp_depth = max(ct.depth for ct in bits.values())
        resp = rcc_pdte(sim, q, model, rng())
        assert resp.packed[0].depth == cmp_depth
        assert resp.packed[1].depth == cmp_depth

    def test_multiple_query_groups(self):
        # Tiny ring forces the attributes into several ciphertext groups.
        sim = batched_backend(N=64)  # 32 slots, block 9 -> 3 blocks per group
        model = synth_tree(4, 8, 7, seed=11)
        q = build_rcc_query(sim, [5, 250, 17, 99, 3, 128, 77], n=8)
        assert len(q.groups) > 1
        assert decode_result(sim, rcc_pdte(sim, q, model, rng())) == eval_clear(
            model, [5, 250, 17, 99, 3, 128, 77]
        )
