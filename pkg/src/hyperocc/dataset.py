"""Tabular datasets of [0, 1] values: loading, validation, marginals, synthesis."""
import csv
import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError
from .seeding import derive_rng

#: Values at or above this are TRUE.
TRUE_THRESHOLD = 0.5


def binarize(values):
    """Map values to 1.0 where ``>= 0.5`` and 0.0 elsewhere."""
    return (np.asarray(values, dtype=np.float64) >= TRUE_THRESHOLD).astype(np.float64)


_binarize = binarize


class Dataset:
    """Immutable, column-oriented table of values in [0, 1].

    ``values`` is the familiar rows-by-columns view; ``by_column`` exposes the
    underlying column-major storage, where each column is contiguous.
    """

    __slots__ = ("_columns", "_data")

    def __init__(self, columns: Sequence[str], values):
        columns = tuple(str(c) for c in columns)
        arr = np.array(values, dtype=np.float64, copy=True)
        if arr.ndim != 2:
            raise DataError(f"values must be 2-D, got shape {arr.shape}")
        n_rows, n_cols = arr.shape
        if n_rows < 1 or n_cols < 1:
            raise DataError(f"dataset needs at least one row and one column, got {arr.shape}")
        if len(columns) != n_cols:
            raise DataError(f"{len(columns)} column names for {n_cols} columns")
        _check_names(columns)
        bad = ~((arr >= 0.0) & (arr <= 1.0))
        if bad.any():
            r, c = np.argwhere(bad)[0]
            raise DataError(f"value {arr[r, c]!r} at row {r}, column {columns[c]!r} is outside [0, 1]")
        data = np.ascontiguousarray(arr.T)
        data.setflags(write=False)
        self._columns = columns
        self._data = data

    @property
    def columns(self) -> tuple:
        return self._columns

    @property
    def n_rows(self) -> int:
        return self._data.shape[1]

    @property
    def n_cols(self) -> int:
        return self._data.shape[0]

    @property
    def values(self) -> np.ndarray:
        return self._data.T

    @property
    def by_column(self) -> np.ndarray:
        return self._data

    def column(self, key) -> np.ndarray:
        return self._data[self.column_index(key)]

    def column_index(self, key) -> int:
        if isinstance(key, (int, np.integer)):
            if not 0 <= key < self.n_cols:
                raise IndexError(f"column index {key} out of range for {self.n_cols} columns")
            return int(key)
        try:
            return self._columns.index(key)
        except ValueError:
            raise KeyError(f"no column named {key!r}") from None

    def is_binary(self) -> bool:
        return bool(np.all((self._data == 0.0) | (self._data == 1.0)))

    def binarized(self) -> "Dataset":
        if self.is_binary():
            return self
        return Dataset(self._columns, binarize(self.values))

    def fingerprint(self) -> str:
        """SHA-256 over column names and the raw float64 values."""
        h = hashlib.sha256()
        h.update("\x1f".join(self._columns).encode("utf-8"))
        h.update(np.ascontiguousarray(self._data).tobytes())
        return h.hexdigest()

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return self._columns == other._columns and np.array_equal(self._data, other._data)

    def __hash__(self):
        return hash(self.fingerprint())

    def __repr__(self):
        return f"Dataset(n_rows={self.n_rows}, n_cols={self.n_cols})"


def _check_names(columns):
    seen = set()
    for name in columns:
        if not name.strip():
            raise DataError("column names must be non-empty")
        if name in seen:
            raise DataError(f"duplicate column name {name!r}")
        seen.add(name)


@dataclass(frozen=True)
class ColumnMarginal:
    distinct_values: tuple
    frequencies: tuple

    @property
    def n_rows(self) -> int:
        return int(sum(self.frequencies))

    def probabilities(self) -> np.ndarray:
        freq = np.asarray(self.frequencies, dtype=np.float64)
        return freq / freq.sum()


def marginals(ds: Dataset) -> list:
    out = []
    for col in ds.by_column:
        vals, counts = np.unique(col, return_counts=True)
        out.append(ColumnMarginal(tuple(float(v) for v in vals), tuple(int(c) for c in counts)))
    return out


def format_value(v) -> str:
    v = float(v)
    if v == 0.0:
        return "0"
    if v == 1.0:
        return "1"
    return repr(v)


def load_csv(path, binarize: bool = False) -> Dataset:
    """Read a header-plus-numbers CSV into a :class:`Dataset`.

    Errors name the file line and column of the offending cell.
    """
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a header row") from None
        header = [h.strip() for h in header]
        _check_names(header)
        rows = []
        for line_no, raw in enumerate(reader, start=2):
            if not raw or (len(raw) == 1 and not raw[0].strip()):
                continue
            if len(raw) != len(header):
                raise DataError(f"{path}: line {line_no} has {len(raw)} fields, expected {len(header)}")
            row = []
            for j, cell in enumerate(raw):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: line {line_no}, column {header[j]!r}: cannot parse {cell!r} as a number"
                    ) from None
                if not 0.0 <= v <= 1.0:
                    raise DataError(
                        f"{path}: line {line_no}, column {header[j]!r}: value {cell.strip()} is outside [0, 1]"
                    )
                row.append(v)
            rows.append(row)
    if not rows:
        raise DataError(f"{path}: no data rows")
    values = np.array(rows, dtype=np.float64)
    if binarize:
        values = _binarize(values)
    return Dataset(header, values)


def write_csv(ds: Dataset, path, extra_columns=None) -> None:
    """Write ``ds`` as CSV; ``extra_columns`` maps name -> per-row values appended on the right."""
    extra_columns = dict(extra_columns or {})
    header = list(ds.columns) + list(extra_columns)
    extras = [np.asarray(v, dtype=np.float64) for v in extra_columns.values()]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i, row in enumerate(ds.values):
            cells = [format_value(v) for v in row]
            cells += [repr(float(e[i])) for e in extras]
            w.writerow(cells)


@dataclass(frozen=True)
class PlantSpec:
    """A quorum dependency: ``target`` is 1 iff at least ``quorum`` of ``relevant_vars`` are 1."""

    relevant_vars: tuple
    quorum: int
    target_var: int
    noise_rate: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "relevant_vars", tuple(int(v) for v in self.relevant_vars))
        object.__setattr__(self, "quorum", int(self.quorum))
        object.__setattr__(self, "target_var", int(self.target_var))
        object.__setattr__(self, "noise_rate", float(self.noise_rate))

    def validate(self, n_cols=None) -> None:
        rel = self.relevant_vars
        if not rel:
            raise ValueError("plant needs at least one relevant variable")
        if len(set(rel)) != len(rel):
            raise ValueError(f"duplicate relevant variables in {rel}")
        if self.target_var in rel:
            raise ValueError(f"target {self.target_var} is also a relevant variable")
        if not 1 <= self.quorum <= len(rel):
            raise ValueError(f"quorum {self.quorum} outside [1, {len(rel)}]")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ValueError(f"noise_rate {self.noise_rate} outside [0, 1]")
        if n_cols is not None:
            for v in rel + (self.target_var,):
                if not 0 <= v < n_cols:
                    raise ValueError(f"variable index {v} out of range for {n_cols} columns")

    def to_dict(self) -> dict:
        return {
            "relevant_vars": list(self.relevant_vars),
            "quorum": self.quorum,
            "target_var": self.target_var,
            "noise_rate": self.noise_rate,
        }


def generate_planted(n_rows, n_background_vars, plant, seed, exhaustive=False, column_prefix="v") -> Dataset:
    """Synthesize a binary dataset with one or more planted quorum rules.

    The table has ``n_background_vars + len(plants)`` columns. Background
    columns are iid fair coins; each plant's target column is the quorum
    predicate over its relevant (background) columns, flipped per row with
    probability ``noise_rate``.

    With ``exhaustive=True`` the background columns enumerate every one of
    the ``2**n_background_vars`` bit patterns, each repeated
    ``n_rows / 2**n_background_vars`` times, instead of being sampled.
    """
    plants = [plant] if isinstance(plant, PlantSpec) else list(plant)
    n_cols = int(n_background_vars) + len(plants)
    if n_rows < 1 or n_background_vars < 1:
        raise ValueError("need n_rows >= 1 and n_background_vars >= 1")
    targets = [p.target_var for p in plants]
    if len(set(targets)) != len(targets):
        raise ValueError(f"plants share a target column: {targets}")
    for p in plants:
        p.validate(n_cols)
        if set(p.relevant_vars) & set(targets):
            raise ValueError("relevant variables must be background columns, not another plant's target")
    background = [j for j in range(n_cols) if j not in set(targets)]

    data = np.zeros((n_cols, n_rows), dtype=np.float64)
    if exhaustive:
        n_patterns = 1 << int(n_background_vars)
        if n_rows % n_patterns:
            raise ValueError(f"exhaustive mode needs n_rows to be a multiple of 2**{n_background_vars}")
        pattern = np.arange(n_rows) % n_patterns
        for bit, j in enumerate(background):
            data[j] = (pattern >> bit) & 1
    else:
        rng = derive_rng(seed, "background")
        data[background] = rng.integers(0, 2, size=(len(background), n_rows))

    for i, p in enumerate(plants):
        count = data[list(p.relevant_vars)].sum(axis=0)
        target = (count >= p.quorum).astype(np.float64)
        if p.noise_rate > 0.0:
            flip = derive_rng(seed, "noise", i).random(n_rows) < p.noise_rate
            target = np.where(flip, 1.0 - target, target)
        data[p.target_var] = target

    names = [f"{column_prefix}{j}" for j in range(n_cols)]
    return Dataset(names, data.T)
