import itertools

import numpy as np
import pytest

from hyperocc import Dataset, FeatureNetwork, ThresholdRule, enumerate_exact, eval_rule, propagate, ScrambleSource
from hyperocc.errors import DataError

from conftest import random_binary


def _net(n_inputs, layers):
    return FeatureNetwork(n_inputs, layers)


class TestEvalRule:
    def test_two_of_two(self):
        rule = ThresholdRule((0, 2), 2)
        assert eval_rule(rule, [[1, 0, 1]], 0) == 1.0
        assert eval_rule(rule, [[1, 1, 0]], 0) == 0.0

    def test_quorum7(self):
        rule = ThresholdRule(range(7), 7)
        assert eval_rule(rule, [[1] * 7], 0) == 1.0
        for j in range(7):
            row = [1] * 7
            row[j] = 0
            assert eval_rule(rule, [row], 0) == 0.0

    def test_threshold_is_half(self):
        rule = ThresholdRule((0,), 1)
        assert eval_rule(rule, [[0.5]], 0) == 1.0
        assert eval_rule(rule, [[0.49]], 0) == 0.0

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_and_or_truth_tables(self, k):
        and_rule, or_rule = ThresholdRule(range(k), k), ThresholdRule(range(k), 1)
        for bits in itertools.product((0, 1), repeat=k):
            assert eval_rule(and_rule, [bits], 0) == float(all(bits))
            assert eval_rule(or_rule, [bits], 0) == float(any(bits))

    def test_layer_refs_through_table(self):
        net = _net(3, [[ThresholdRule((0, 1), 2)], [ThresholdRule([(1, 0), 2], 2)]])
        ds = Dataset(["a", "b", "c"], [[1, 1, 1], [1, 1, 0], [0, 1, 1]])
        act = propagate(net, ds)
        assert [eval_rule(net.layers[1][0], act, e) for e in range(3)] == [1.0, 0.0, 0.0]
        flat = np.hstack([ds.values, act.values])
        assert eval_rule(net.layers[1][0], flat, 0, network=net) == 1.0


class TestRuleValidation:
    def test_sentinel(self):
        s = ThresholdRule.never()
        assert s.is_sentinel
        assert eval_rule(s, [[1, 1]], 0) == 0.0

    @pytest.mark.parametrize("inputs,q", [((0, 1), 0), ((0, 1), 3), ((0, 0), 1), ((), 2)])
    def test_bad(self, inputs, q):
        with pytest.raises(ValueError):
            ThresholdRule(inputs, q)


class TestNetwork:
    def test_causality(self):
        with pytest.raises(ValueError, match="cannot read layer"):
            _net(2, [[ThresholdRule([(1, 0)], 1)]])
        with pytest.raises(ValueError, match="cannot read layer"):
            _net(2, [[ThresholdRule((0,), 1)], [ThresholdRule([(2, 0)], 1)]])

    def test_dangling(self):
        with pytest.raises(ValueError, match="dangling"):
            _net(2, [[ThresholdRule((0,), 1)], [ThresholdRule([(1, 3)], 1)]])
        with pytest.raises(ValueError, match="out of range"):
            _net(2, [[ThresholdRule((5,), 1)]])

    def test_json_roundtrip(self, tmp_path):
        net = FeatureNetwork(
            3,
            [[ThresholdRule((0, 2), 1), ThresholdRule.never()], [ThresholdRule([(1, 0), (1, 1), 1], 2)]],
            ["a", "b", "c"],
        )
        net.save(tmp_path / "n.json")
        assert FeatureNetwork.load(tmp_path / "n.json") == net
        assert net.to_dict()["layers"][1][0]["inputs"] == ["L1/N0", "L1/N1", "b"]

    def test_positions(self):
        net = _net(2, [[ThresholdRule((0,), 1)] * 2, [ThresholdRule((1,), 1)] * 3])
        assert net.node_position(0) == (1, 0)
        assert net.node_position(4) == (2, 2)
        assert net.global_index((2, 1)) == 2 + 3


class TestPropagate:
    def test_identity_layer(self):
        rng = np.random.default_rng(0)
        ds = Dataset(["a", "b", "c"], rng.random((20, 3)))
        net = _net(3, [[ThresholdRule((j,), 1) for j in range(3)]])
        np.testing.assert_array_equal(propagate(net, ds).values, ds.binarized().values)

    def test_exact_sds_rows(self, three_by_three):
        net = _net(3, [[ThresholdRule((0, 1, 2), 2)]])
        act = propagate(net, enumerate_exact(ScrambleSource.from_dataset(three_by_three)))
        assert act.n_rows == 27
        assert act.weights is not None

    def test_width_64(self):
        ds = random_binary(np.random.default_rng(1), max_cols=8, min_cols=8)
        layers = [[ThresholdRule((i % 8,), 1) for i in range(32)], [ThresholdRule([(1, i)], 1) for i in range(32)]]
        assert propagate(_net(8, layers), ds).shape == (ds.n_rows, 64)

    def test_arity_mismatch(self):
        with pytest.raises(DataError):
            propagate(_net(3, [[ThresholdRule((0,), 1)]]), Dataset(["a"], [[1]]))

    def test_matches_eval_rule(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            ds = random_binary(rng, max_cols=6, min_cols=3)
            n = ds.n_cols
            l1 = []
            for _ in range(4):
                inp = tuple(rng.choice(n, size=rng.integers(1, n + 1), replace=False))
                l1.append(ThresholdRule(inp, rng.integers(1, len(inp) + 1)))
            l2 = [ThresholdRule([(1, 0), (1, 3), 0], 2), ThresholdRule([(1, 1), (1, 2)], 1)]
            net = _net(n, [l1, l2])
            act = propagate(net, ds)
            for e in range(ds.n_rows):
                for flat, (li, ni, rule) in enumerate(net.nodes()):
                    assert act.nodes[flat, e] == eval_rule(rule, act, e)

    def test_quorum_monotone(self):
        """Raising Q can only switch a node off."""
        rng = np.random.default_rng(4)
        ds = random_binary(rng, max_cols=6, min_cols=6)
        inputs = (0, 1, 2, 3, 4, 5)
        acts = [propagate(_net(6, [[ThresholdRule(inputs, q)]]), ds).nodes[0] for q in range(1, 7)]
        for lo, hi in zip(acts, acts[1:]):
            assert (hi <= lo).all()

    def test_pure(self):
        ds = random_binary(np.random.default_rng(5))
        net = _net(ds.n_cols, [[ThresholdRule((0, 1), 1)]])
        np.testing.assert_array_equal(propagate(net, ds).nodes, propagate(net, ds).nodes)
