"""Ventricle confidence scoring and genetic-algorithm region selection."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .image_core import complement, distance_transform_l1_raw, hadamard, normalize_to_unit
from .mser import ExtremalRegion
from .preprocess import PreprocessResult


@dataclass
class ConfidenceContext:
    dp: np.ndarray       # normalized L1 distance to the background
    ic: np.ndarray       # normalized complement of the cleaned slice
    lp: np.ndarray       # normalized product of the two
    dp_raw: np.ndarray   # distance to the background in pixels


@dataclass
class ScoredRegion:
    region: ExtremalRegion
    confidence: float


@dataclass(frozen=True)
class GaParams:
    population: int = 50
    generations: int = 100
    crossover_rate: float = 0.8
    mutation_rate: float | None = None   # None -> 1 / bit length
    elitism: int = 2
    rng_seed: int | tuple[int, ...] = 42

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if not 0 <= self.elitism < self.population:
            raise ValueError("elitism must be in [0, population)")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")


@dataclass
class VentricleSelection:
    selected: list[ScoredRegion]
    fitness: float
    mask: np.ndarray
    bits: np.ndarray
    history: list[float] = field(default_factory=list)  # best-ever fitness per generation


def build_confidence(pre: PreprocessResult) -> ConfidenceContext:
    if not pre.background.any():
        raise ValueError("slice has no background; boundary distance undefined")
    dp_raw = distance_transform_l1_raw(pre.background)
    dp = normalize_to_unit(dp_raw)
    ic = normalize_to_unit(complement(pre.cleaned))
    lp = hadamard(dp, ic)
    return ConfidenceContext(dp, ic, lp, dp_raw)


def score_regions(regions: list[ExtremalRegion], ctx: ConfidenceContext) -> list[ScoredRegion]:
    flat = ctx.lp.ravel()
    return [ScoredRegion(r, float(flat[r.pixels].mean())) for r in regions]


def fitness(bits, confidences) -> float:
    """Region count times the product of the selected confidences; 0 if nothing is selected."""
    bits = np.asarray(bits, dtype=bool)
    conf = np.asarray(confidences, dtype=np.float64)
    if bits.shape != conf.shape:
        raise ValueError("selection length must equal the region count")
    n = int(bits.sum())
    if n == 0:
        return 0.0
    return n * float(np.prod(conf[bits]))


def _population_fitness(pop: np.ndarray, conf: np.ndarray) -> np.ndarray:
    n = pop.sum(axis=1)
    prod = np.where(pop, conf, 1.0).prod(axis=1)
    return np.where(n > 0, n * prod, 0.0)


def ga_select(scored: list[ScoredRegion], params: GaParams | None = None,
              shape: tuple[int, int] | None = None) -> VentricleSelection:
    """Pick the subset of regions maximising the fitness with a generational GA.

    Tournaments of two, single-point crossover, per-bit mutation and
    elitism. The first individual selects every region and the second only
    the most confident one; the rest are uniform random bit strings.
    """
    params = params or GaParams()
    mask = np.zeros(shape, dtype=bool) if shape is not None else None
    n_bits = len(scored)
    if n_bits == 0:
        return VentricleSelection([], 0.0, mask, np.zeros(0, dtype=bool), [0.0])

    conf = np.array([s.confidence for s in scored], dtype=np.float64)
    rng = np.random.default_rng(params.rng_seed)
    size = params.population
    mut = params.mutation_rate if params.mutation_rate is not None else 1.0 / n_bits

    pop = rng.random((size, n_bits)) < 0.5
    pop[0] = True
    pop[1] = False
    pop[1, int(np.argmax(conf))] = True
    fit = _population_fitness(pop, conf)
    i_best = int(np.argmax(fit))
    best_bits, best_fit = pop[i_best].copy(), float(fit[i_best])
    history = [best_fit]

    n_child = size - params.elitism
    cols = np.arange(n_bits)
    for _ in range(params.generations):
        elite = pop[np.argsort(-fit, kind="stable")[:params.elitism]]
        a = rng.integers(0, size, (n_child, 2))
        b = rng.integers(0, size, (n_child, 2))
        winners = np.where(fit[a] >= fit[b], a, b)
        p1, p2 = pop[winners[:, 0]], pop[winners[:, 1]]
        children = p1.copy()
        if n_bits > 1:
            cross = rng.random(n_child) < params.crossover_rate
            points = rng.integers(1, n_bits, n_child)
            tail = cross[:, None] & (cols[None, :] >= points[:, None])
            children[tail] = p2[tail]
        children ^= rng.random((n_child, n_bits)) < mut
        pop = np.vstack([elite, children])
        fit = _population_fitness(pop, conf)
        i_best = int(np.argmax(fit))
        if fit[i_best] > best_fit:
            best_bits, best_fit = pop[i_best].copy(), float(fit[i_best])
        history.append(best_fit)

    selected = [s for s, keep in zip(scored, best_bits) if keep]
    if mask is not None:
        flat = mask.ravel()
        for s in selected:
            flat[s.region.pixels] = True
    return VentricleSelection(selected, best_fit, mask, best_bits, history)
