"""Plain GA over the raw parameter vector: Gaussian mutation, uniform crossover."""
from statistics import NormalDist

import numpy as np

from .decode import ParamLayout


def initial_vector(layout: ParamLayout, rng, init_inputs=4.0) -> np.ndarray:
    """Random parameters whose nodes include about ``init_inputs`` candidates each."""
    out = np.empty(layout.param_count)
    for _, start, stop, cand in layout.blocks():
        p = min(0.5, init_inputs / cand)
        mean = NormalDist().inv_cdf(p) if p < 0.5 else 0.0
        block = rng.normal(0.0, 1.0, size=stop - start).reshape(-1, cand + 1)
        block[:, :cand] += mean
        out[start:stop] = block.ravel()
    return out


def mutate_vector(vec, rng, rate, sigma) -> np.ndarray:
    if rate <= 0.0:
        return vec
    hit = rng.random(vec.shape[0]) < rate
    if not hit.any():
        hit[rng.integers(vec.shape[0])] = True
    child = vec.copy()
    child[hit] += rng.normal(0.0, sigma, size=int(hit.sum()))
    return child


def uniform_crossover(a, b, rng) -> np.ndarray:
    mask = rng.random(a.shape[0]) < 0.5
    return np.where(mask, a, b)
