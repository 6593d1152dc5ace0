"""Grid genome: parameters encoded as (k, c) cells edited by ordered change events.

Every cell of a square grid holds a parameter index ``k`` and a real value
``c``; parameter ``i`` is the sum of ``c`` over the cells whose ``k`` is
``i``. A genome is an ordered list of events replayed onto an initial grid:

* proliferation overwrites ``c`` in a square area with a base value plus a
  per-cell jitter drawn from the event's own seed;
* swap exchanges the ``k`` values of two equally shaped areas.

Events before ``frozen_prefix`` can no longer be mutated.
"""
import threading
from collections import OrderedDict
from dataclasses import dataclass, replace

import numpy as np

PROLIFERATION = "proliferation"
SWAP = "swap"


@dataclass(frozen=True)
class ChangeEvent:
    kind: str
    center: tuple
    radius: int
    base: float = 0.0
    seed: int = 0
    center2: tuple = (0, 0)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "center": list(self.center), "radius": self.radius}
        if self.kind == PROLIFERATION:
            d.update(base=self.base, seed=self.seed)
        else:
            d["center2"] = list(self.center2)
        return d

    @classmethod
    def from_dict(cls, d) -> "ChangeEvent":
        return cls(
            d["kind"],
            tuple(d["center"]),
            int(d["radius"]),
            float(d.get("base", 0.0)),
            int(d.get("seed", 0)),
            tuple(d.get("center2", (0, 0))),
        )


@dataclass(frozen=True)
class PoetGenome:
    events: tuple = ()
    frozen_prefix: int = 0

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        if not 0 <= self.frozen_prefix <= len(self.events):
            raise ValueError("frozen_prefix must lie within the event list")

    def frozen(self) -> tuple:
        return self.events[: self.frozen_prefix]

    def freeze_and_extend(self, fresh) -> "PoetGenome":
        return PoetGenome(self.events + tuple(fresh), len(self.events))

    def to_dict(self) -> dict:
        return {"frozen_prefix": self.frozen_prefix, "events": [e.to_dict() for e in self.events]}

    @classmethod
    def from_dict(cls, d) -> "PoetGenome":
        return cls(tuple(ChangeEvent.from_dict(e) for e in d["events"]), int(d["frozen_prefix"]))


@dataclass(frozen=True)
class PoetGrid:
    """Initial grid state; ``k`` and ``c`` are (side, side) arrays."""

    k: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        if self.k.shape != self.c.shape or self.k.ndim != 2 or self.k.shape[0] != self.k.shape[1]:
            raise ValueError("k and c must be equal square arrays")

    @property
    def side(self) -> int:
        return self.k.shape[0]

    @classmethod
    def from_cells(cls, cells, side) -> "PoetGrid":
        """Build from a row-major list of ``(k, c)`` pairs."""
        arr = np.asarray(cells, dtype=np.float64).reshape(side, side, 2)
        return cls(arr[..., 0].astype(np.int64), arr[..., 1].copy())

    @classmethod
    def initial(cls, side, param_count, rng) -> "PoetGrid":
        """Zero values; ``k`` spread evenly over all parameters, positions shuffled."""
        k = np.arange(side * side, dtype=np.int64) % param_count
        rng.shuffle(k)
        return cls(k.reshape(side, side), np.zeros((side, side)))


def auto_side(param_count) -> int:
    return int(np.ceil(np.sqrt(param_count)))


def _window(center, radius, side):
    """Row and column slices of the square area, clipped, plus the offset of the clip."""
    r, c = center
    r0, r1 = max(r - radius, 0), min(r + radius + 1, side)
    c0, c1 = max(c - radius, 0), min(c + radius + 1, side)
    return slice(r0, r1), slice(c0, c1), (r0 - (r - radius), c0 - (c - radius))


def jitter_pattern(seed, radius, scale) -> np.ndarray:
    """Full (2r+1)^2 jitter for an event, independent of where the area is clipped."""
    n = 2 * radius + 1
    if scale == 0.0:
        return np.zeros((n, n))
    return scale * np.random.Generator(np.random.PCG64(seed)).standard_normal((n, n))


def apply_event(k, c, ev: ChangeEvent, jitter=0.0) -> None:
    """Replay one event in place on ``k`` and ``c``."""
    side = k.shape[0]
    if ev.kind == PROLIFERATION:
        rs, cs, (dr, dc) = _window(ev.center, ev.radius, side)
        pat = jitter_pattern(ev.seed, ev.radius, jitter)
        h, w = rs.stop - rs.start, cs.stop - cs.start
        c[rs, cs] = ev.base + pat[dr : dr + h, dc : dc + w]
    elif ev.kind == SWAP:
        # common offsets that keep both areas inside the grid
        (r1, c1), (r2, c2), rad = ev.center, ev.center2, ev.radius
        lo_r = max(-rad, -r1, -r2)
        hi_r = min(rad, side - 1 - r1, side - 1 - r2)
        lo_c = max(-rad, -c1, -c2)
        hi_c = min(rad, side - 1 - c1, side - 1 - c2)
        if lo_r > hi_r or lo_c > hi_c or (r1, c1) == (r2, c2):
            return
        a = (slice(r1 + lo_r, r1 + hi_r + 1), slice(c1 + lo_c, c1 + hi_c + 1))
        b = (slice(r2 + lo_r, r2 + hi_r + 1), slice(c2 + lo_c, c2 + hi_c + 1))
        ka, kb = k[a].copy(), k[b].copy()
        k[a] = kb
        k[b] = ka
    else:
        raise ValueError(f"unknown event kind {ev.kind!r}")


def replay(grid: PoetGrid, events, jitter=0.0):
    k, c = grid.k.copy(), grid.c.copy()
    for ev in events:
        apply_event(k, c, ev, jitter)
    return k, c


def decode_grid(genome: PoetGenome, grid_init: PoetGrid, param_count, jitter=0.0) -> np.ndarray:
    """Replay ``genome`` on ``grid_init``; parameter i = sum of c over cells with k == i."""
    k, c = replay(grid_init, genome.events, jitter)
    return np.bincount(k.ravel(), weights=c.ravel(), minlength=param_count)[:param_count]


class PoetDecoder:
    """:func:`decode_grid` with the replayed frozen prefix memoized.

    Frozen events are shared by whole lineages, so their replay is computed
    once per distinct prefix.
    """

    def __init__(self, grid_init: PoetGrid, param_count, jitter=0.0, cache_size=512):
        self.grid_init = grid_init
        self.param_count = int(param_count)
        self.jitter = float(jitter)
        self.cache_size = cache_size
        self._cache = OrderedDict()
        self._lock = threading.Lock()

    def _prefix_state(self, frozen):
        with self._lock:
            hit = self._cache.get(frozen)
            if hit is not None:
                self._cache.move_to_end(frozen)
                return hit
        state = replay(self.grid_init, frozen, self.jitter)
        for arr in state:
            arr.setflags(write=False)
        with self._lock:
            self._cache[frozen] = state
            while len(self._cache) > self.cache_size:
                self._cache.popitem(last=False)
        return state

    def __call__(self, genome: PoetGenome) -> np.ndarray:
        k0, c0 = self._prefix_state(genome.frozen())
        k, c = k0.copy(), c0.copy()
        for ev in genome.events[genome.frozen_prefix :]:
            apply_event(k, c, ev, self.jitter)
        return np.bincount(k.ravel(), weights=c.ravel(), minlength=self.param_count)[: self.param_count]


def _random_cell(rng, side):
    return (int(rng.integers(side)), int(rng.integers(side)))


def random_event(rng, side, max_radius, base_sigma, p_proliferation=0.75) -> ChangeEvent:
    radius = int(rng.integers(0, max_radius + 1))
    if rng.random() < p_proliferation:
        return ChangeEvent(
            PROLIFERATION,
            _random_cell(rng, side),
            radius,
            base=float(rng.normal(0.0, base_sigma)),
            seed=int(rng.integers(2**62)),
        )
    return ChangeEvent(SWAP, _random_cell(rng, side), radius, center2=_random_cell(rng, side))


def neutral_event(rng, side) -> ChangeEvent:
    """A swap of an area with itself: changes nothing until mutated."""
    cell = _random_cell(rng, side)
    return ChangeEvent(SWAP, cell, 0, center2=cell)


def _shift(cell, rng, side, step):
    r, c = cell
    r = int(np.clip(r + rng.integers(-step, step + 1), 0, side - 1))
    c = int(np.clip(c + rng.integers(-step, step + 1), 0, side - 1))
    return (r, c)


def mutate_event(ev: ChangeEvent, rng, side, max_radius, sigma, base_sigma, p_redraw=0.1) -> ChangeEvent:
    if rng.random() < p_redraw:
        return random_event(rng, side, max_radius, base_sigma)
    op = int(rng.integers(3))
    step = max(1, side // 8)
    if op == 0:
        radius = int(np.clip(ev.radius + rng.choice((-1, 1)), 0, max_radius))
        return replace(ev, radius=radius)
    if ev.kind == PROLIFERATION:
        if op == 1:
            return replace(ev, base=float(ev.base + rng.normal(0.0, sigma)), seed=int(rng.integers(2**62)))
        return replace(ev, center=_shift(ev.center, rng, side, step))
    if op == 1:
        return replace(ev, center2=_shift(ev.center2, rng, side, step))
    return replace(ev, center=_shift(ev.center, rng, side, step))


def mutate_genome(genome: PoetGenome, rng, rate, side, max_radius, sigma, base_sigma) -> PoetGenome:
    """Mutate each event past the frozen prefix with probability ``rate``.

    When ``rate > 0`` at least one mutable event is changed.
    """
    events = list(genome.events)
    mutable = range(genome.frozen_prefix, len(events))
    if rate <= 0.0 or not mutable:
        return genome
    hit = [i for i in mutable if rng.random() < rate]
    if not hit:
        hit = [int(rng.choice(list(mutable)))]
    for i in hit:
        events[i] = mutate_event(events[i], rng, side, max_radius, sigma, base_sigma)
    return PoetGenome(tuple(events), genome.frozen_prefix)
