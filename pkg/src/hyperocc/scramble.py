"""Scrambled datasets: same per-column marginals as the data, no dependence between columns.

Two constructions are offered. ``enumerate_exact`` lists every combination of
per-column distinct values once, weighted by the product of the values'
empirical frequencies; statistics computed on it are exact. ``sample_mc``
draws rows by sampling every column independently from its marginal.
"""
import csv
from dataclasses import dataclass
from math import prod
from pathlib import Path

import numpy as np

from .dataset import TRUE_THRESHOLD, Dataset, format_value, marginals
from .errors import CapExceededError, DataError
from .seeding import derive_rng

DEFAULT_EXACT_CAP = 10**7
DEFAULT_SAMPLE_SIZE = 10_000
WEIGHT_COLUMN = "sds_weight"


@dataclass(frozen=True)
class ScrambleSource:
    columns: tuple
    marginals: tuple
    origin_rows: int

    @classmethod
    def from_dataset(cls, ds: Dataset) -> "ScrambleSource":
        return cls(ds.columns, tuple(marginals(ds)), ds.n_rows)

    @property
    def n_cols(self) -> int:
        return len(self.marginals)

    def combination_count(self) -> int:
        return prod(len(m.distinct_values) for m in self.marginals)


class SdsSample:
    """Rows of a scrambled dataset, optionally weighted (exact mode).

    Unweighted samples are read as equally likely rows. Storage is
    column-major like :class:`Dataset`.
    """

    __slots__ = ("columns", "_data", "mode", "seed", "weights")

    def __init__(self, columns, by_column, mode, seed=None, weights=None):
        data = np.ascontiguousarray(by_column, dtype=np.float64)
        data.setflags(write=False)
        if weights is not None:
            weights = np.ascontiguousarray(weights, dtype=np.float64)
            weights.setflags(write=False)
            if weights.shape != (data.shape[1],):
                raise ValueError("one weight per row required")
        if mode not in ("exact", "monte_carlo"):
            raise ValueError(f"unknown SDS mode {mode!r}")
        self.columns = tuple(columns)
        self._data = data
        self.mode = mode
        self.seed = seed
        self.weights = weights

    @property
    def by_column(self) -> np.ndarray:
        return self._data

    @property
    def values(self) -> np.ndarray:
        return self._data.T

    @property
    def n_rows(self) -> int:
        return self._data.shape[1]

    @property
    def n_cols(self) -> int:
        return self._data.shape[0]

    @property
    def sample_size(self) -> int:
        return self.n_rows

    def __repr__(self):
        w = ", weighted" if self.weights is not None else ""
        return f"SdsSample(mode={self.mode!r}, n_rows={self.n_rows}, n_cols={self.n_cols}{w})"


def enumerate_exact(src: ScrambleSource, weight_output: bool = True, cap: int = DEFAULT_EXACT_CAP) -> SdsSample:
    """Exact scrambled dataset.

    With ``weight_output`` (the default) every combination of distinct
    column values appears once, weighted by ``prod_c freq_c(v_c) / origin_rows``.
    Without it, the full multiset is materialized: each combination is
    repeated ``prod_c freq_c(v_c)`` times, ``origin_rows ** n_cols`` rows in
    all. Either way the row count must not exceed ``cap``.
    """
    sizes = [len(m.distinct_values) for m in src.marginals]
    n_comb = prod(sizes)
    n_out = n_comb if weight_output else src.origin_rows ** src.n_cols
    if n_out > cap:
        raise CapExceededError(
            f"exact scrambled dataset would have {n_out} rows (cap {cap}); use Monte-Carlo sampling instead"
        )
    data = np.empty((src.n_cols, n_comb), dtype=np.float64)
    weights = np.ones(n_comb, dtype=np.float64)
    counts = np.ones(n_comb, dtype=np.int64)
    outer = 1
    for j, m in enumerate(src.marginals):
        inner = n_comb // (outer * sizes[j])
        vals = np.asarray(m.distinct_values, dtype=np.float64)
        freq = np.asarray(m.frequencies, dtype=np.int64)
        data[j] = np.tile(np.repeat(vals, inner), outer)
        weights *= np.tile(np.repeat(freq / src.origin_rows, inner), outer)
        counts *= np.tile(np.repeat(freq, inner), outer)
        outer *= sizes[j]
    if weight_output:
        return SdsSample(src.columns, data, "exact", weights=weights)
    return SdsSample(src.columns, np.repeat(data, counts, axis=1), "exact")


def _mc_value_indices(src: ScrambleSource, sample_size, seed):
    """Per column, the index into its distinct values of every sampled row."""
    if sample_size < 1:
        raise ValueError("sample_size must be >= 1")
    rng = derive_rng(seed, "sds")
    # integer draws over the origin rows keep the empirical probabilities exact
    picks = rng.integers(0, src.origin_rows, size=(src.n_cols, sample_size), dtype=np.uint32)
    idx = np.zeros((src.n_cols, sample_size), dtype=np.int32)
    two = [j for j, m in enumerate(src.marginals) if len(m.frequencies) == 2]
    if two:
        first = np.array([src.marginals[j].frequencies[0] for j in two], dtype=np.uint32)
        idx[two] = picks[two] >= first[:, None]
    for j, m in enumerate(src.marginals):
        if len(m.frequencies) > 2:
            idx[j] = np.searchsorted(np.cumsum(m.frequencies), picks[j], side="right")
    return idx


def sample_mc(src: ScrambleSource, sample_size: int = DEFAULT_SAMPLE_SIZE, seed: int = 0) -> SdsSample:
    """Draw ``sample_size`` rows, each column independently from its empirical marginal."""
    idx = _mc_value_indices(src, sample_size, seed)
    data = np.empty(idx.shape, dtype=np.float64)
    for j, m in enumerate(src.marginals):
        data[j] = np.asarray(m.distinct_values, dtype=np.float64)[idx[j]]
    return SdsSample(src.columns, data, "monte_carlo", seed=seed)


def sample_mc_bits(src: ScrambleSource, sample_size: int = DEFAULT_SAMPLE_SIZE, seed: int = 0) -> np.ndarray:
    """Binarized ``sample_mc(src, sample_size, seed)`` as (columns, rows) uint8, without the float copy."""
    idx = _mc_value_indices(src, sample_size, seed)
    out = np.empty(idx.shape, dtype=np.uint8)
    luts = [(np.asarray(m.distinct_values) >= TRUE_THRESHOLD).astype(np.uint8) for m in src.marginals]
    # a (FALSE, TRUE) pair of values maps index straight to bit
    direct = [j for j, lut in enumerate(luts) if lut.tolist() == [0, 1]]
    out[direct] = idx[direct]
    for j, lut in enumerate(luts):
        if lut.tolist() != [0, 1]:
            out[j] = lut[idx[j]]
    return out


def write_sds_csv(sample: SdsSample, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = list(sample.columns)
        if sample.weights is not None:
            header.append(WEIGHT_COLUMN)
        w.writerow(header)
        for i, row in enumerate(sample.values):
            cells = [format_value(v) for v in row]
            if sample.weights is not None:
                cells.append(repr(float(sample.weights[i])))
            w.writerow(cells)


def read_sds_csv(path, mode=None) -> SdsSample:
    """Inverse of :func:`write_sds_csv`. A trailing weight column marks an exact sample."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file")
    header, body = rows[0], [r for r in rows[1:] if r]
    try:
        arr = np.array(body, dtype=np.float64).reshape(len(body), len(header))
    except ValueError as exc:
        raise DataError(f"{path}: malformed scrambled dataset: {exc}") from exc
    weights = None
    if header and header[-1] == WEIGHT_COLUMN:
        weights = arr[:, -1]
        arr = arr[:, :-1]
        header = header[:-1]
    if mode is None:
        mode = "exact" if weights is not None else "monte_carlo"
    return SdsSample(header, arr.T, mode, weights=weights)
