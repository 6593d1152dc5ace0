"""Flat parameter vector -> feature network.

Each node owns one membership score per candidate input (every input
column, then every node of every earlier layer) followed by one raw
quorum parameter. Inputs with a positive score are included; the quorum is
the squashed raw parameter times the subset size, rounded and clamped to
``[1, size]``. A node with no positive score becomes the always-FALSE
sentinel.
"""
from dataclasses import dataclass

import numpy as np

from ..network import FeatureNetwork, ThresholdRule


@dataclass(frozen=True)
class ParamLayout:
    n_inputs: int
    layer_sizes: tuple

    def __post_init__(self):
        object.__setattr__(self, "layer_sizes", tuple(int(s) for s in self.layer_sizes))
        if self.n_inputs < 1 or any(s < 1 for s in self.layer_sizes):
            raise ValueError("need at least one input and one node per layer")

    def candidates(self, layer) -> int:
        """Candidate input count for nodes of ``layer`` (1-based)."""
        return self.n_inputs + sum(self.layer_sizes[: layer - 1])

    def blocks(self):
        """Yield ``(layer, start, stop, candidates)`` parameter slices, one per layer."""
        start = 0
        for layer, size in enumerate(self.layer_sizes, start=1):
            cand = self.candidates(layer)
            stop = start + size * (cand + 1)
            yield layer, start, stop, cand
            start = stop

    @property
    def param_count(self) -> int:
        return sum(size * (self.candidates(layer) + 1) for layer, size in enumerate(self.layer_sizes, start=1))

    def layer_stop(self, layer) -> int:
        """Index one past the last parameter of ``layer``."""
        for li, _, stop, _ in self.blocks():
            if li == layer:
                return stop
        raise ValueError(f"no layer {layer}")


def squash(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=np.float64)))


def _quorums(q_raw, sizes):
    q = np.floor(squash(q_raw) * sizes + 0.5).astype(np.int64)
    return np.clip(q, 1, np.maximum(sizes, 1))


def decode_compiled(params, layout: ParamLayout):
    """Kernel arrays ``(input_index, input_ptr, quorum)`` for ``params``.

    Equivalent to ``params_to_network(params, ...).compiled()`` without
    building rule objects.
    """
    params = np.asarray(params, dtype=np.float64)
    if params.shape != (layout.param_count,):
        raise ValueError(f"expected {layout.param_count} parameters, got {params.shape}")
    index_parts, sizes_all, quorum_parts = [], [], []
    for _, start, stop, cand in layout.blocks():
        block = params[start:stop].reshape(-1, cand + 1)
        member = block[:, :cand] > 0.0
        rows, cols = np.nonzero(member)
        sizes = member.sum(axis=1)
        index_parts.append(cols.astype(np.int64))
        sizes_all.append(sizes)
        quorum_parts.append(_quorums(block[:, cand], sizes))
    index = np.concatenate(index_parts)
    sizes = np.concatenate(sizes_all)
    ptr = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    return index, ptr, np.concatenate(quorum_parts)


def params_to_network(params, layer_sizes, n_inputs, input_names=None) -> FeatureNetwork:
    layout = ParamLayout(n_inputs, layer_sizes)
    index, ptr, quorum = decode_compiled(params, layout)
    offsets = np.concatenate([[0], np.cumsum(layout.layer_sizes)])
    layers, flat = [], 0
    for layer, size in enumerate(layout.layer_sizes, start=1):
        rules = []
        for _ in range(size):
            refs = []
            for g in index[ptr[flat] : ptr[flat + 1]]:
                g = int(g)
                if g < n_inputs:
                    refs.append(g)
                else:
                    node = g - n_inputs
                    src_layer = int(np.searchsorted(offsets, node, side="right"))
                    refs.append((src_layer, node - int(offsets[src_layer - 1])))
            rules.append(ThresholdRule(refs, quorum[flat]) if refs else ThresholdRule.never())
            flat += 1
        layers.append(rules)
    return FeatureNetwork(n_inputs, layers, input_names)
