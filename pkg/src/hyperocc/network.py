"""Layered networks of quorum rules.

A node reference is either an ``int`` (an input column) or a
``(layer, node)`` pair, with layers numbered from 1 and nodes from 0. In
text form nodes are written ``"L<layer>/N<node>"`` and input columns by
name. Internally every reference is flattened to one index: input columns
first, then nodes layer by layer.
"""
import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .dataset import TRUE_THRESHOLD
from .errors import DataError

_NODE_REF = re.compile(r"^L(\d+)/N(\d+)$")


def node_label(layer, node) -> str:
    return f"L{layer}/N{node}"


@dataclass(frozen=True)
class ThresholdRule:
    """TRUE iff at least ``quorum`` of ``inputs`` are TRUE.

    The rule with no inputs and quorum 1 is the always-FALSE sentinel used
    for nodes that decode to an empty input set.
    """

    inputs: tuple
    quorum: int

    def __post_init__(self):
        refs = tuple(_normalize_ref(r) for r in self.inputs)
        object.__setattr__(self, "inputs", refs)
        object.__setattr__(self, "quorum", int(self.quorum))
        if len(set(refs)) != len(refs):
            raise ValueError(f"duplicate inputs in rule: {refs}")
        if refs and not 1 <= self.quorum <= len(refs):
            raise ValueError(f"quorum {self.quorum} outside [1, {len(refs)}]")
        if not refs and self.quorum != 1:
            raise ValueError("a rule without inputs must be the quorum-1 sentinel")

    @classmethod
    def never(cls) -> "ThresholdRule":
        return cls((), 1)

    @property
    def is_sentinel(self) -> bool:
        return not self.inputs


def _normalize_ref(ref):
    if isinstance(ref, (int, np.integer)):
        if ref < 0:
            raise ValueError(f"negative input column {ref}")
        return int(ref)
    layer, node = ref
    if layer < 1 or node < 0:
        raise ValueError(f"bad node reference {ref!r}")
    return (int(layer), int(node))


class FeatureNetwork:
    """Immutable layered collection of :class:`ThresholdRule` nodes."""

    def __init__(self, n_inputs, layers, input_names=None):
        self.n_inputs = int(n_inputs)
        if input_names is None:
            input_names = [f"x{i}" for i in range(self.n_inputs)]
        self.input_names = tuple(input_names)
        if len(self.input_names) != self.n_inputs:
            raise ValueError("one name per input column required")
        self.layers = tuple(tuple(layer) for layer in layers)
        self.layer_sizes = tuple(len(layer) for layer in self.layers)
        self.layer_offsets = tuple(int(x) for x in np.concatenate([[0], np.cumsum(self.layer_sizes)]))
        index, ptr, quorum = [], [0], []
        for li, layer in enumerate(self.layers, start=1):
            for rule in layer:
                for ref in rule.inputs:
                    index.append(self._resolve(ref, li))
                ptr.append(len(index))
                quorum.append(rule.quorum)
        self._input_index = np.asarray(index, dtype=np.int64)
        self._input_ptr = np.asarray(ptr, dtype=np.int64)
        self._quorum = np.asarray(quorum, dtype=np.int64)

    def _resolve(self, ref, layer):
        if isinstance(ref, int):
            if ref >= self.n_inputs:
                raise ValueError(f"input column {ref} out of range for {self.n_inputs} inputs")
            return ref
        src_layer, src_node = ref
        if src_layer >= layer:
            raise ValueError(f"node in layer {layer} cannot read layer {src_layer}")
        if src_node >= self.layer_sizes[src_layer - 1]:
            raise ValueError(f"dangling reference {node_label(*ref)}")
        return self.n_inputs + self.layer_offsets[src_layer - 1] + src_node

    @property
    def node_count(self) -> int:
        return self.layer_offsets[-1]

    def global_index(self, ref) -> int:
        ref = _normalize_ref(ref)
        return self._resolve(ref, len(self.layers) + 1)

    def node_position(self, flat_node):
        """(layer, node) of the ``flat_node``-th node."""
        layer = int(np.searchsorted(self.layer_offsets, flat_node, side="right"))
        return layer, flat_node - self.layer_offsets[layer - 1]

    def nodes(self):
        """Yield ``(layer, node, rule)`` in evaluation order."""
        for li, layer in enumerate(self.layers, start=1):
            for ni, rule in enumerate(layer):
                yield li, ni, rule

    def ref_label(self, ref) -> str:
        ref = _normalize_ref(ref)
        if isinstance(ref, int):
            return self.input_names[ref]
        return node_label(*ref)

    def parse_ref(self, text):
        m = _NODE_REF.match(text)
        if m:
            return (int(m.group(1)), int(m.group(2)))
        try:
            return self.input_names.index(text)
        except ValueError:
            raise ValueError(f"unknown input reference {text!r}") from None

    def truncated(self, n_layers) -> "FeatureNetwork":
        return FeatureNetwork(self.n_inputs, self.layers[:n_layers], self.input_names)

    def compiled(self):
        """Flat (input_index, input_ptr, quorum) arrays consumed by the kernels."""
        return self._input_index, self._input_ptr, self._quorum

    def to_dict(self) -> dict:
        return {
            "inputs": list(self.input_names),
            "layers": [
                [{"inputs": [self.ref_label(r) for r in rule.inputs], "quorum": rule.quorum} for rule in layer]
                for layer in self.layers
            ],
        }

    @classmethod
    def from_dict(cls, doc) -> "FeatureNetwork":
        names = list(doc["inputs"])
        shell = cls(len(names), [], names)
        layers = []
        for layer in doc["layers"]:
            layers.append([ThresholdRule([shell.parse_ref(r) for r in node["inputs"]], node["quorum"]) for node in layer])
        return cls(len(names), layers, names)

    def save(self, path, **extra) -> None:
        doc = self.to_dict()
        doc.update(extra)
        Path(path).write_text(json.dumps(doc, indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "FeatureNetwork":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def __eq__(self, other):
        if not isinstance(other, FeatureNetwork):
            return NotImplemented
        return (self.n_inputs, self.input_names, self.layers) == (other.n_inputs, other.input_names, other.layers)

    def __repr__(self):
        return f"FeatureNetwork(n_inputs={self.n_inputs}, layer_sizes={self.layer_sizes})"


@dataclass(frozen=True)
class BinaryInputs:
    """Binarized input columns, (columns, rows) uint8, ready for propagation."""

    bits: np.ndarray
    weights: object = None

    @classmethod
    def from_data(cls, data) -> "BinaryInputs":
        if isinstance(data, BinaryInputs):
            return data
        bits = np.ascontiguousarray(data.by_column >= TRUE_THRESHOLD, dtype=np.uint8)
        bits.setflags(write=False)
        return cls(bits, getattr(data, "weights", None))

    @property
    def n_cols(self) -> int:
        return self.bits.shape[0]

    @property
    def n_rows(self) -> int:
        return self.bits.shape[1]


class ActivationTable:
    """Binary activation of every node on every row, plus optional row weights."""

    __slots__ = ("network", "inputs", "nodes", "weights")

    def __init__(self, network, inputs, nodes, weights=None):
        self.network = network
        self.inputs = inputs
        self.nodes = nodes
        self.weights = weights

    @property
    def n_rows(self) -> int:
        return self.nodes.shape[1]

    @property
    def values(self) -> np.ndarray:
        """Rows-by-nodes float matrix of 0.0/1.0."""
        return self.nodes.T.astype(np.float64)

    @property
    def shape(self):
        return (self.n_rows, self.nodes.shape[0])

    def node_column(self, node) -> np.ndarray:
        """Activations of a node given as flat index or ``(layer, node)``."""
        if isinstance(node, tuple):
            node = self.network.global_index(node) - self.network.n_inputs
        return self.nodes[node]

    def ref_column(self, ref) -> np.ndarray:
        g = self.network.global_index(ref)
        n_in = self.network.n_inputs
        return self.inputs.bits[g] if g < n_in else self.nodes[g - n_in]


def eval_rule(rule: ThresholdRule, activations_so_far, example_index, network=None) -> float:
    """Evaluate one rule on one example.

    ``activations_so_far`` is an :class:`ActivationTable` or a rows-by-refs
    array of values indexed by flat reference; ``(layer, node)`` references
    into a plain array need ``network`` to be flattened.
    """
    count = 0
    for ref in rule.inputs:
        if isinstance(activations_so_far, ActivationTable):
            v = activations_so_far.ref_column(ref)[example_index]
        else:
            g = ref if isinstance(ref, int) else network.global_index(ref)
            v = activations_so_far[example_index][g]
        count += v >= TRUE_THRESHOLD
    return 1.0 if count >= rule.quorum else 0.0


def propagate(net: FeatureNetwork, data) -> ActivationTable:
    """Evaluate every node on every row, layer by layer.

    ``data`` may be a :class:`~hyperocc.dataset.Dataset`, an
    :class:`~hyperocc.scramble.SdsSample` (weights are carried through) or
    pre-binarized :class:`BinaryInputs`.
    """
    inputs = BinaryInputs.from_data(data)
    if inputs.n_cols != net.n_inputs:
        raise DataError(f"network expects {net.n_inputs} input columns, data has {inputs.n_cols}")
    nodes = np.zeros((net.node_count, inputs.n_rows), dtype=np.uint8)
    index, ptr, quorum = net.compiled()
    if net.node_count:
        kernels.propagate_nodes(inputs.bits, nodes, index, ptr, quorum)
    return ActivationTable(net, inputs, nodes, inputs.weights)
