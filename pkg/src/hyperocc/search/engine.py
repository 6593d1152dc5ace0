"""Generational loop shared by the grid-genome (POET) and plain-vector (GA) searches.

Every random draw comes from a stream derived from the master seed and a
use-site label (initialization, per-generation scrambled sample, breeding,
freezing), so a run is reproducible from its seed and a checkpoint only has
to store the population, never generator state.
"""
import base64
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .. import kernels
from ..dataset import Dataset
from ..metrics import hoc_scores, score_network
from ..network import BinaryInputs, propagate
from ..objective import CoverageReport, coverage
from ..scramble import ScrambleSource, enumerate_exact, sample_mc, sample_mc_bits
from ..seeding import derive_int, derive_rng
from . import ga, poet
from .config import SearchConfig
from .decode import ParamLayout, decode_compiled, params_to_network

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "hyperocc-checkpoint/1"
# config keys that may change between a checkpoint and its resumption
_RESUMABLE_KEYS = {"generations", "workers", "checkpoint_every"}


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best_fitness: float
    mean_fitness: float
    best_so_far: float


@dataclass
class SearchResult:
    config: SearchConfig
    genome: object
    params: np.ndarray
    network: object
    reports: list
    coverage: CoverageReport
    history: list
    best_fitness: float
    best_generation: int
    report_sds_mode: str = "exact"
    timings: dict = field(default_factory=dict)


def encode_array(arr) -> str:
    return base64.b64encode(np.ascontiguousarray(arr, dtype="<f8").tobytes()).decode("ascii")


def decode_array(text) -> np.ndarray:
    return np.frombuffer(base64.b64decode(text), dtype="<f8").copy()


class Evaluator:
    """Coverage fitness of a parameter vector against RDS and one scrambled sample."""

    def __init__(self, rds_inputs: BinaryInputs, layout: ParamLayout, cfg: SearchConfig):
        self.rds = rds_inputs
        self.layout = layout
        self.cfg = cfg
        self.constraints = cfg.constraints
        offsets = np.concatenate([[0], np.cumsum(layout.layer_sizes)])
        self._layer_of_node = np.repeat(np.arange(1, len(layout.layer_sizes) + 1), layout.layer_sizes)
        self._offsets = offsets
        self.set_stage(len(layout.layer_sizes), None)

    def set_stage(self, active_layers, fixed_params):
        """Pool only layers ``<= active_layers``; pin earlier layers' parameters to ``fixed_params``."""
        self.active_layers = active_layers
        scope = self.cfg.node_scope
        pool = self._layer_of_node <= active_layers
        if scope is not None:
            pool &= np.isin(self._layer_of_node, scope)
        self.pool = pool
        self.fixed_stop = self.layout.layer_stop(active_layers - 1) if active_layers > 1 and fixed_params is not None else 0
        self.fixed_params = fixed_params

    def pin(self, params):
        if self.fixed_stop:
            params = params.copy()
            params[: self.fixed_stop] = self.fixed_params[: self.fixed_stop]
        return params

    def node_stats(self, params, sds: BinaryInputs):
        index, ptr, quorum = decode_compiled(params, self.layout)
        n_nodes = quorum.shape[0]
        nodes_r = np.empty((n_nodes, self.rds.n_rows), dtype=np.uint8)
        nodes_s = np.empty((n_nodes, sds.n_rows), dtype=np.uint8)
        kernels.propagate_nodes(self.rds.bits, nodes_r, index, ptr, quorum)
        kernels.propagate_nodes(sds.bits, nodes_s, index, ptr, quorum)
        qr = np.count_nonzero(nodes_r, axis=1) / self.rds.n_rows
        if sds.weights is None:
            qs = np.count_nonzero(nodes_s, axis=1) / sds.n_rows
        else:
            qs = np.array([sds.weights[row != 0].sum() for row in nodes_s])
        return nodes_r, qr, qs

    def __call__(self, params, sds: BinaryInputs) -> float:
        nodes_r, qr, qs = self.node_stats(params, sds)
        scores = hoc_scores(qr, qs)
        if self.constraints.active:
            scores = self.constraints.apply(qr, qs, scores)
        scores[~self.pool] = 0.0
        order = np.argsort(-scores, kind="stable").astype(np.int64)
        d = kernels.coverage_d(nodes_r, np.ascontiguousarray(scores[order]), order, self.cfg.top_h)
        return float(d.mean())


class _Algo:
    """Genome operations for one search flavour."""

    def __init__(self, cfg: SearchConfig, layout: ParamLayout):
        self.cfg = cfg
        self.layout = layout
        p = layout.param_count
        if cfg.algo == "poet":
            self.side = cfg.grid_side or poet.auto_side(p)
            grid = poet.PoetGrid.initial(self.side, p, derive_rng(cfg.seed, "grid"))
            self.decoder = poet.PoetDecoder(grid, p, cfg.jitter)

    def initial(self, i):
        cfg = self.cfg
        rng = derive_rng(cfg.seed, "init", i)
        if cfg.algo == "poet":
            events = tuple(
                poet.random_event(rng, self.side, cfg.max_radius, cfg.base_sigma) for _ in range(cfg.events_per_epoch)
            )
            return poet.PoetGenome(events, 0)
        return ga.initial_vector(self.layout, rng, cfg.init_inputs)

    def params(self, genome):
        if self.cfg.algo == "poet":
            return self.decoder(genome)
        return genome

    def child(self, population, fitness, rng):
        cfg = self.cfg
        a = _tournament(fitness, rng, cfg.tournament_size)
        if cfg.algo == "poet":
            return a, poet.mutate_genome(
                population[a], rng, cfg.mutation_rate, self.side, cfg.max_radius, cfg.mutation_sigma, cfg.base_sigma
            )
        vec = population[a]
        if cfg.crossover_rate > 0.0 and rng.random() < cfg.crossover_rate:
            b = _tournament(fitness, rng, cfg.tournament_size)
            vec = ga.uniform_crossover(vec, population[b], rng)
        return a, ga.mutate_vector(vec, rng, cfg.mutation_rate, cfg.mutation_sigma)

    def freeze(self, population, generation):
        if self.cfg.algo != "poet":
            return population
        out = []
        for i, g in enumerate(population):
            rng = derive_rng(self.cfg.seed, "freeze", generation, i)
            out.append(g.freeze_and_extend(poet.neutral_event(rng, self.side) for _ in range(self.cfg.events_per_epoch)))
        return out

    def dump(self, genome):
        return genome.to_dict() if self.cfg.algo == "poet" else encode_array(genome)

    def load(self, doc):
        return poet.PoetGenome.from_dict(doc) if self.cfg.algo == "poet" else decode_array(doc)


def _tournament(fitness, rng, size) -> int:
    picks = rng.integers(0, len(fitness), size=size)
    best = picks[0]
    for i in picks[1:]:
        if fitness[i] > fitness[best]:
            best = i
    return int(best)


def breed(algo: _Algo, population, fitness, generation):
    """Next population and, for each child, the index of its (first) parent."""
    cfg = algo.cfg
    rng = derive_rng(cfg.seed, "breed", generation)
    order = np.argsort(-np.asarray(fitness), kind="stable")
    children = [population[i] for i in order[: cfg.elitism]]
    parents = [int(i) for i in order[: cfg.elitism]]
    while len(children) < cfg.population:
        a, child = algo.child(population, fitness, rng)
        children.append(child)
        parents.append(a)
    return children, parents


def _stage_schedule(cfg: SearchConfig):
    """Per-generation number of active layers."""
    n_layers = len(cfg.layer_sizes)
    if cfg.training == "joint" or n_layers == 1:
        return lambda g: n_layers
    per = max(1, cfg.generations // n_layers)
    return lambda g: min(n_layers, g // per + 1)


def _sds_provider(cfg: SearchConfig, src: ScrambleSource):
    if cfg.sds_mode == "exact":
        fixed = BinaryInputs.from_data(enumerate_exact(src, cap=cfg.exact_cap))
        return lambda g: fixed
    cache = {}

    def provide(g):
        key = g if cfg.sds_resample else 0
        if key not in cache:
            cache.clear()
            seed = derive_int(cfg.seed, "sds", key)
            bits = sample_mc_bits(src, cfg.sds_sample_size, seed)
            bits.setflags(write=False)
            cache[key] = BinaryInputs(bits)
        return cache[key]

    return provide


def report_sds(cfg: SearchConfig, src: ScrambleSource):
    """Scrambled data used for final reports: exact when small enough, a large sample otherwise."""
    if src.combination_count() <= cfg.report_exact_cap:
        return enumerate_exact(src, cap=cfg.report_exact_cap), "exact"
    return sample_mc(src, cfg.report_sample_size, derive_int(cfg.seed, "report")), "monte_carlo"


def evolve(
    rds: Dataset,
    cfg: SearchConfig,
    resume: Optional[dict] = None,
    checkpoint_path=None,
    on_generation: Optional[Callable] = None,
) -> SearchResult:
    """Maximize coverage over network parameters.

    ``on_generation(generation, population, fitness, parents)`` is called
    after each generation is evaluated and bred; ``parents[i]`` is the
    index in ``population`` of next-generation child ``i``'s parent.
    """
    t0 = time.perf_counter()
    rds_b = rds.binarized()
    src = ScrambleSource.from_dataset(rds_b)
    layout = ParamLayout(rds.n_cols, cfg.layer_sizes)
    algo = _Algo(cfg, layout)
    evaluator = Evaluator(BinaryInputs.from_data(rds_b), layout, cfg)
    sds_for = _sds_provider(cfg, src)
    stage_of = _stage_schedule(cfg)

    if resume is not None:
        _check_resume(resume, cfg, rds_b)
        start = int(resume["next_generation"])
        population = [algo.load(d) for d in resume["population"]]
        history = [GenerationStats(**h) for h in resume["history"]]
        b = resume["best"]
        best = (b["fitness"], algo.load(b["genome"]), decode_array(b["params"]), b["generation"])
        fixed = decode_array(resume["fixed_params"]) if resume.get("fixed_params") else None
    else:
        start = 0
        population = [algo.initial(i) for i in range(cfg.population)]
        history = []
        best = None
        fixed = None

    executor = ThreadPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    stage = stage_of(start)
    evaluator.set_stage(stage, fixed)
    try:
        for g in range(start, cfg.generations):
            new_stage = stage_of(g)
            if new_stage != stage:
                stage = new_stage
                fixed = best[2].copy()
                evaluator.set_stage(stage, fixed)
            if cfg.algo == "poet" and g > 0 and g % cfg.freeze_interval == 0:
                population = algo.freeze(population, g)
            sds = sds_for(g)
            params = [evaluator.pin(algo.params(x)) for x in population]
            if executor is None:
                fitness = [evaluator(p, sds) for p in params]
            else:
                fitness = list(executor.map(lambda p: evaluator(p, sds), params))
            i_best = int(np.argmax(fitness))
            if best is None or fitness[i_best] > best[0]:
                best = (float(fitness[i_best]), population[i_best], params[i_best], g)
            history.append(GenerationStats(g, float(fitness[i_best]), float(np.mean(fitness)), best[0]))
            children, parents = breed(algo, population, fitness, g)
            if on_generation is not None:
                on_generation(g, population, fitness, parents)
            population = children
            done = g + 1
            if checkpoint_path and cfg.checkpoint_every and done % cfg.checkpoint_every == 0:
                write_checkpoint(checkpoint_path, cfg, rds_b, algo, done, population, best, history, fixed)
            if g % 50 == 0:
                log.info("generation %d best %.5f mean %.5f best-so-far %.5f", g, *astuple_stats(history[-1]))
    finally:
        if executor is not None:
            executor.shutdown()
    if checkpoint_path:
        write_checkpoint(checkpoint_path, cfg, rds_b, algo, max(cfg.generations, start), population, best, history, fixed)
    t_search = time.perf_counter() - t0

    if best is None:
        raise ValueError("no generations were run")
    result = finalize(rds_b, cfg, best[2], src)
    result.genome = best[1]
    result.history = history
    result.best_fitness = best[0]
    result.best_generation = best[3]
    result.timings = {"search_s": t_search, "total_s": time.perf_counter() - t0}
    return result


def astuple_stats(s: GenerationStats):
    return s.best_fitness, s.mean_fitness, s.best_so_far


def finalize(rds_b: Dataset, cfg: SearchConfig, params, src=None) -> SearchResult:
    """Decode ``params`` and score the network with the report scrambled dataset."""
    src = src or ScrambleSource.from_dataset(rds_b)
    net = params_to_network(params, cfg.layer_sizes, rds_b.n_cols, rds_b.columns)
    sds, mode = report_sds(cfg, src)
    reports = score_network(net, rds_b, sds)
    qr = np.array([r.qr for r in reports])
    qs = np.array([r.qs for r in reports])
    scores = hoc_scores(qr, qs)
    if cfg.constraints.active:
        scores = cfg.constraints.apply(qr, qs, scores)
    cov = coverage(propagate(net, rds_b), scores, cfg.coverage)
    return SearchResult(cfg, None, np.asarray(params), net, reports, cov, [], 0.0, -1, mode)


def evolve_baseline_ga(rds: Dataset, cfg: SearchConfig, **kwargs) -> SearchResult:
    return evolve(rds, cfg.replace(algo="ga"), **kwargs)


def write_checkpoint(path, cfg, rds_b, algo, next_generation, population, best, history, fixed) -> None:
    doc = {
        "format": CHECKPOINT_FORMAT,
        "config": cfg.to_dict(),
        "dataset_sha256": rds_b.fingerprint(),
        "next_generation": next_generation,
        "rng": {"scheme": "derived-per-generation", "master_seed": cfg.seed, "next_generation": next_generation},
        "population": [algo.dump(x) for x in population],
        "best": {
            "fitness": best[0],
            "genome": algo.dump(best[1]),
            "params": encode_array(best[2]),
            "generation": best[3],
        },
        "fixed_params": encode_array(fixed) if fixed is not None else None,
        "history": [h.__dict__ for h in history],
    }
    tmp = Path(str(path) + ".tmp")
    tmp.write_text(json.dumps(doc))
    tmp.replace(path)


def load_checkpoint(path) -> dict:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a search checkpoint")
    return doc


def _check_resume(doc, cfg: SearchConfig, rds_b: Dataset):
    if doc["dataset_sha256"] != rds_b.fingerprint():
        raise ValueError("checkpoint was written for a different dataset")
    saved = {k: v for k, v in doc["config"].items() if k not in _RESUMABLE_KEYS}
    now = {k: v for k, v in cfg.to_dict().items() if k not in _RESUMABLE_KEYS}
    if saved != now:
        diff = sorted(k for k in set(saved) | set(now) if saved.get(k) != now.get(k))
        raise ValueError(f"checkpoint config differs in: {diff}")
    if cfg.training == "greedy" and doc["config"]["generations"] != cfg.generations:
        # the per-layer stage boundaries are derived from the generation count
        raise ValueError("greedy training cannot change the generation count on resume")


def write_history_csv(history, path) -> None:
    with Path(path).open("w") as fh:
        fh.write("generation,best_fitness,mean_fitness,best_so_far\n")
        for h in history:
            fh.write(f"{h.generation},{h.best_fitness!r},{h.mean_fitness!r},{h.best_so_far!r}\n")


def read_history_csv(path) -> list:
    lines = Path(path).read_text().splitlines()[1:]
    out = []
    for line in lines:
        g, b, m, s = line.split(",")
        out.append(GenerationStats(int(g), float(b), float(m), float(s)))
    return out
