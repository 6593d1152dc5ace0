"""Coverage objective: high, uniform coverage of the examples by high-hoc features.

For every example ``e`` and pooled node ``k``, ``P_k(e) = activation * hoc``.
``d(e)`` is the square root of the mean of the ``top_h`` largest ``P_k(e)``
(missing entries count as zero when fewer than ``top_h`` nodes are pooled),
and the coverage is the mean of ``d(e)`` over the examples.
"""
import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import kernels
from .network import ActivationTable

DEFAULT_TOP_H = 10


@dataclass(frozen=True)
class CoverageConfig:
    top_h: int = DEFAULT_TOP_H
    # layers (1-based) whose nodes are pooled; None pools every layer
    node_scope: Optional[tuple] = None

    def __post_init__(self):
        if int(self.top_h) < 1:
            raise ValueError("top_h must be >= 1")
        object.__setattr__(self, "top_h", int(self.top_h))
        if self.node_scope is not None:
            object.__setattr__(self, "node_scope", tuple(int(x) for x in self.node_scope))


@dataclass(frozen=True)
class RuleConstraints:
    """Extra conditions on rules; a node violating any of them scores 0."""

    min_qr: Optional[float] = None
    max_qs: Optional[float] = None
    min_hoc: Optional[float] = None

    def apply(self, qr, qs, scores) -> np.ndarray:
        scores = np.array(scores, dtype=np.float64)
        ok = np.ones(scores.shape, dtype=bool)
        if self.min_qr is not None:
            ok &= np.asarray(qr) >= self.min_qr
        if self.max_qs is not None:
            ok &= np.asarray(qs) <= self.max_qs
        if self.min_hoc is not None:
            ok &= scores >= self.min_hoc
        scores[~ok] = 0.0
        return scores

    @property
    def active(self) -> bool:
        return any(v is not None for v in (self.min_qr, self.max_qs, self.min_hoc))


@dataclass
class CoverageReport:
    cov: float
    per_example_d: np.ndarray
    per_layer_cov: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "cov": self.cov,
            "per_layer_cov": {str(k): v for k, v in self.per_layer_cov.items()},
            "per_example_d": [float(x) for x in self.per_example_d],
        }

    @classmethod
    def from_dict(cls, doc) -> "CoverageReport":
        return cls(
            doc["cov"],
            np.asarray(doc["per_example_d"], dtype=np.float64),
            {int(k): v for k, v in doc["per_layer_cov"].items()},
        )

    def save(self, path, **extra) -> None:
        doc = self.to_dict()
        doc.update(extra)
        Path(path).write_text(json.dumps(doc, indent=2) + "\n")

    def write_d_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["example", "d"])
            for i, d in enumerate(self.per_example_d):
                w.writerow([i, repr(float(d))])


def clean_scores(hoc_scores) -> np.ndarray:
    """Per-node scores as floats with undefined (``None``/NaN) and negatives mapped to 0."""
    arr = np.array([np.nan if h is None else h for h in hoc_scores], dtype=np.float64)
    arr = np.nan_to_num(arr, nan=0.0)
    return np.maximum(arr, 0.0)


def per_example_d(nodes, scores, top_h) -> np.ndarray:
    """``d(e)`` for a (nodes, rows) uint8 activation block and per-node scores."""
    n_rows = nodes.shape[1]
    if nodes.shape[0] == 0:
        return np.zeros(n_rows)
    order = np.argsort(-scores, kind="stable").astype(np.int64)
    return kernels.coverage_d(
        np.ascontiguousarray(nodes, dtype=np.uint8),
        np.ascontiguousarray(scores[order]),
        order,
        int(top_h),
    )


def coverage(activations: ActivationTable, hoc_scores, cfg: CoverageConfig = CoverageConfig()) -> CoverageReport:
    """Coverage of the rows of ``activations`` by the pooled nodes."""
    scores = clean_scores(hoc_scores)
    net = activations.network
    nodes = activations.nodes
    if scores.shape != (nodes.shape[0],):
        raise ValueError(f"need one hoc score per node ({nodes.shape[0]}), got {scores.shape}")
    scope = set(cfg.node_scope) if cfg.node_scope is not None else set(range(1, len(net.layers) + 1))

    def pooled(max_layer):
        idx = []
        for layer in range(1, max_layer + 1):
            if layer in scope:
                idx.extend(range(net.layer_offsets[layer - 1], net.layer_offsets[layer]))
        return np.asarray(idx, dtype=np.int64)

    per_layer = {}
    d = np.zeros(activations.n_rows)
    for layer in range(1, len(net.layers) + 1):
        idx = pooled(layer)
        d = per_example_d(nodes[idx], scores[idx], cfg.top_h)
        per_layer[layer] = float(d.mean()) if d.size else 0.0
    cov = float(d.mean()) if d.size else 0.0
    return CoverageReport(cov, d, per_layer)
