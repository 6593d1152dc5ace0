"""Rule statistics: TRUE-probabilities, hyper-occurrence, pairwise baselines."""
import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .dataset import Dataset, binarize
from .network import ActivationTable, FeatureNetwork, propagate

UNDEF = "undef"
REPORT_FIELDS = ("layer", "node", "inputs", "quorum", "qr", "qs", "hoc")
# qs within this of qr counts as equal: weighted sums over exact scrambled
# rows can land an ulp below a qr they equal in exact arithmetic
PROB_TOL = 1e-12


def true_probability(activations: ActivationTable, node) -> float:
    """Fraction of rows (or weight mass, for exact scrambled data) on which ``node`` fires."""
    col = activations.node_column(node)
    return _true_probability(col, activations.weights)


def _true_probability(col, weights) -> float:
    if weights is None:
        return float(np.count_nonzero(col)) / col.shape[0]
    return float(weights[col != 0].sum())


def true_probabilities(activations: ActivationTable) -> np.ndarray:
    """TRUE-probability of every node at once."""
    nodes = activations.nodes
    if nodes.shape[0] == 0:
        return np.zeros(0)
    if activations.weights is None:
        return np.count_nonzero(nodes, axis=1) / nodes.shape[1]
    return nodes.astype(np.float64) @ activations.weights


def hoc(qr: float, qs: float) -> Optional[float]:
    """``1 - qs/qr``, or ``None`` where undefined (``qr == 0`` or ``qs >= qr``)."""
    if qr <= 0.0 or qs >= qr - PROB_TOL:
        return None
    return 1.0 - qs / qr


def hoc_scores(qr, qs) -> np.ndarray:
    """Vectorized :func:`hoc` with undefined entries scored 0."""
    qr = np.asarray(qr, dtype=np.float64)
    qs = np.asarray(qs, dtype=np.float64)
    defined = (qr > 0.0) & (qs < qr - PROB_TOL)
    out = np.zeros(qr.shape, dtype=np.float64)
    out[defined] = 1.0 - qs[defined] / qr[defined]
    return out


def _binary_pair(ds: Dataset, col_a, col_b):
    a = binarize(ds.column(col_a))
    b = binarize(ds.column(col_b))
    return a, b


def pearson_binary(ds: Dataset, col_a, col_b) -> Optional[float]:
    """Correlation of two binarized columns from their empirical probabilities.

    Returns ``None`` when either column is constant.
    """
    a, b = _binary_pair(ds, col_a, col_b)
    pa, pb, pab = a.mean(), b.mean(), (a * b).mean()
    var = pa * (1.0 - pa) * pb * (1.0 - pb)
    if var <= 0.0:
        return None
    return float((pab - pa * pb) / math.sqrt(var))


def mutual_information(ds: Dataset, col_a, col_b) -> float:
    """Mutual information in bits between two binarized columns."""
    a, b = _binary_pair(ds, col_a, col_b)
    n = int(a.shape[0])
    total = 0.0
    # integer counts: an exactly factorizing joint gives ratio 1 and log 0
    for va in (0.0, 1.0):
        ca = int(np.count_nonzero(a == va))
        for vb in (0.0, 1.0):
            cab = int(np.count_nonzero((a == va) & (b == vb)))
            if cab == 0:
                continue
            cb = int(np.count_nonzero(b == vb))
            total += (cab / n) * math.log2((cab * n) / (ca * cb))
    return max(total, 0.0)


@dataclass(frozen=True)
class HocReport:
    layer: int
    node: int
    inputs: tuple
    quorum: int
    qr: float
    qs: float
    hoc: Optional[float]

    @property
    def score(self) -> float:
        return 0.0 if self.hoc is None else self.hoc

    def to_dict(self) -> dict:
        d = asdict(self)
        d["inputs"] = list(self.inputs)
        return d


def score_network(net: FeatureNetwork, rds, sds) -> list:
    """One :class:`HocReport` per node: qr from ``rds``, qs from ``sds``."""
    if net.node_count == 0:
        return []
    qr = true_probabilities(propagate(net, rds))
    qs = true_probabilities(propagate(net, sds))
    return build_reports(net, qr, qs)


def build_reports(net, qr, qs) -> list:
    out = []
    for flat, (layer, node, rule) in enumerate(net.nodes()):
        out.append(
            HocReport(
                layer=layer,
                node=node,
                inputs=tuple(net.ref_label(r) for r in rule.inputs),
                quorum=rule.quorum,
                qr=float(qr[flat]),
                qs=float(qs[flat]),
                hoc=hoc(float(qr[flat]), float(qs[flat])),
            )
        )
    return out


def top_reports(reports, top=None) -> list:
    """Reports grouped by layer, each group sorted by descending hoc (undefined last)."""
    out = []
    for layer in sorted({r.layer for r in reports}):
        group = [r for r in reports if r.layer == layer]
        group.sort(key=lambda r: (r.hoc is None, -(r.hoc or 0.0), -r.qr, r.node))
        out.extend(group if top is None else group[:top])
    return out


def _fmt(v):
    return UNDEF if v is None else repr(float(v))


def write_reports_tsv(reports, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(REPORT_FIELDS)
        for r in reports:
            w.writerow([r.layer, r.node, " ".join(r.inputs), r.quorum, _fmt(r.qr), _fmt(r.qs), _fmt(r.hoc)])


def read_reports_tsv(path) -> list:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh, delimiter="\t"))
    if not rows or tuple(rows[0]) != REPORT_FIELDS:
        raise ValueError(f"{path}: not a rule table")
    out = []
    for row in rows[1:]:
        layer, node, inputs, quorum, qr, qs, h = row
        out.append(
            HocReport(
                int(layer),
                int(node),
                tuple(inputs.split()),
                int(quorum),
                float(qr),
                float(qs),
                None if h == UNDEF else float(h),
            )
        )
    return out


def write_reports_json(reports, path, **extra) -> None:
    doc = dict(extra)
    doc["fields"] = list(REPORT_FIELDS)
    doc["rules"] = [r.to_dict() for r in reports]
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def read_reports_json(path) -> list:
    doc = json.loads(Path(path).read_text())
    return [
        HocReport(d["layer"], d["node"], tuple(d["inputs"]), d["quorum"], d["qr"], d["qs"], d["hoc"])
        for d in doc["rules"]
    ]


def pairwise_matrices(ds: Dataset):
    """Pearson and mutual-information matrices over every column pair (``None`` = undefined)."""
    n = ds.n_cols
    pearson = [[None] * n for _ in range(n)]
    mi = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            pearson[i][j] = pearson[j][i] = pearson_binary(ds, i, j)
            mi[i][j] = mi[j][i] = mutual_information(ds, i, j)
    return pearson, mi
