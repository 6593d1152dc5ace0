"""Evolutionary search over quorum-rule networks."""
from .config import SearchConfig
from .decode import ParamLayout, decode_compiled, params_to_network
from .engine import (
    GenerationStats,
    SearchResult,
    evolve,
    evolve_baseline_ga,
    load_checkpoint,
    read_history_csv,
    write_history_csv,
)
from .poet import ChangeEvent, PoetDecoder, PoetGenome, PoetGrid, decode_grid

__all__ = [
    "ChangeEvent",
    "GenerationStats",
    "ParamLayout",
    "PoetDecoder",
    "PoetGenome",
    "PoetGrid",
    "SearchConfig",
    "SearchResult",
    "decode_compiled",
    "decode_grid",
    "evolve",
    "evolve_baseline_ga",
    "load_checkpoint",
    "params_to_network",
    "read_history_csv",
    "write_history_csv",
]
