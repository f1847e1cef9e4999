"""Generational engine: initial languages, teacher selection and learning."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import FrozenSet, Iterable, Optional, Tuple

import numpy as np
import numpy.typing as npt

from .language import (
    Agent,
    AssociationMatrix,
    ComprehensionCache,
    build_cache,
    overall_comprehension,
)
from .random_streams import RandomStreams

logger = logging.getLogger(__name__)


class Strategy(str, Enum):
    """How a child's teacher is chosen in the parents' generation."""

    BASE = "BASE"
    MODEL_A = "MODEL_A"
    MODEL_B = "MODEL_B"
    MODEL_C = "MODEL_C"

    @property
    def uses_imitation_set(self) -> bool:
        return self is not Strategy.BASE

    @property
    def order(self) -> int:
        return list(Strategy).index(self)


@dataclass(frozen=True)
class ModelParams:
    """Parameters of one simulated realization."""

    n: int = 100
    m: int = 8
    s: int = 15
    q: int = 4
    strategy: Strategy = Strategy.MODEL_A
    r_rel: float = 0.1
    generations: int = 500
    include_parent: bool = True
    fitness_includes_self: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        for name in ("n", "m", "s", "q"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1, got {getattr(self, name)}")
        if self.generations < 0:
            raise ValueError(f"generations must be non-negative, got {self.generations}")
        if not 0 < self.r_rel <= 1:
            raise ValueError(f"r_rel must lie in (0, 1], got {self.r_rel}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.strategy.uses_imitation_set and not self.include_parent and self.imitation_size >= self.n:
            raise ValueError(
                f"Imitation set of {self.imitation_size} agents cannot exclude the parent "
                f"in a population of {self.n}"
            )

    @property
    def imitation_size(self) -> int:
        """R = max(1, round(r * N)), rounding halves up."""

        return min(self.n, max(1, math.floor(self.r_rel * self.n + 0.5)))


@dataclass(frozen=True)
class Population:
    generation: int
    agents: Tuple[Agent, ...]
    cache: ComprehensionCache

    @property
    def size(self) -> int:
        return len(self.agents)

    def overall_comprehension(self) -> float:
        return overall_comprehension(self.cache)


def _population(generation: int, agents: Iterable[Agent]) -> Population:
    members = tuple(agents)
    return Population(generation=generation, agents=members, cache=build_cache(members))


def init_population(params: ModelParams, rng: np.random.Generator) -> Population:
    """Generation 0: every meaning row gets Q uniformly drawn signals."""

    uniform = np.full(params.s, 1.0 / params.s)
    counts = rng.multinomial(params.q, uniform, size=(params.n, params.m)).astype(np.float64)
    return _population(0, (Agent.from_association(index, counts[index]) for index in range(params.n)))


def fitness_vector(cache: ComprehensionCache, include_self: bool = True) -> npt.NDArray[np.float64]:
    totals = cache.f.sum(axis=1)
    if not include_self:
        totals = totals - np.diag(cache.f)
    return totals


def fitness(i: int, cache: ComprehensionCache, include_self: bool = True) -> float:
    """Sum of agent i's mutual comprehension with the population."""

    row = cache.f[i]
    total = float(row.sum())
    return total if include_self else total - float(row[i])


def roulette(weights: npt.ArrayLike, rng: np.random.Generator) -> int:
    """Draw an index with probability proportional to its weight."""

    values = np.asarray(weights, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("Roulette selection needs a non-empty weight vector")
    if np.any(values < 0):
        raise ValueError("Roulette weights must be non-negative")
    cumulative = np.cumsum(values)
    total = cumulative[-1]
    if total <= 0:
        logger.warning("All %s roulette weights are zero; drawing uniformly", values.size)
        return int(rng.integers(values.size))
    index = int(np.searchsorted(cumulative, rng.random() * total, side="right"))
    return min(index, values.size - 1)


def select_base_teacher(
    cache: ComprehensionCache,
    rng: np.random.Generator,
    include_self: Optional[bool] = None,
    fitness_values: Optional[npt.NDArray[np.float64]] = None,
) -> int:
    """Roulette over the whole population.

    ``fitness_values`` lets a generation reuse one precomputed fitness vector;
    it already fixes whether self-comprehension counts.
    """

    if fitness_values is not None:
        if include_self is not None:
            raise ValueError("Pass either include_self or precomputed fitness values, not both")
        return roulette(fitness_values, rng)
    return roulette(fitness_vector(cache, True if include_self is None else include_self), rng)


def ring_distance(a: int, b: int, n: int) -> int:
    gap = abs(a - b) % n
    return min(gap, n - gap)


def build_imitation_set(
    parent: int,
    population: Population,
    params: ModelParams,
    rng: np.random.Generator,
) -> FrozenSet[int]:
    """Assemble the R candidate teachers around ``parent``.

    With ``include_parent`` the parent fills one of the R slots. Rankings by
    language (MODEL_A) or ring distance (MODEL_B) break ties at random.
    """

    n = population.size
    size = params.imitation_size
    if not params.strategy.uses_imitation_set:
        raise ValueError("The BASE strategy does not build imitation sets")
    if size > n:
        raise ValueError(f"Imitation set size {size} exceeds population size {n}")
    slots = size - 1 if params.include_parent else size
    candidates = np.delete(np.arange(n), parent)
    if slots > candidates.size:
        raise ValueError(f"Cannot choose {slots} non-parent agents out of {candidates.size}")

    if params.strategy is Strategy.MODEL_C:
        chosen = rng.choice(candidates, size=slots, replace=False)
    else:
        if params.strategy is Strategy.MODEL_A:
            primary = -population.cache.f[parent, candidates]
        else:
            origin = population.agents[parent].position
            primary = np.array(
                [ring_distance(origin, population.agents[j].position, n) for j in candidates]
            )
        tie_break = rng.random(candidates.size)
        order = np.lexsort((tie_break, primary))
        chosen = candidates[order[:slots]]

    members = {int(index) for index in chosen}
    if params.include_parent:
        members.add(parent)
    return frozenset(members)


def select_teacher(
    parent: int,
    imitation_set: Iterable[int],
    cache: ComprehensionCache,
    rng: np.random.Generator,
) -> int:
    """Pick a member of the imitation set weighted by its comprehension with the parent."""

    members = sorted(imitation_set)
    if not members:
        raise ValueError("Imitation set must not be empty")
    return members[roulette(cache.f[parent, members], rng)]


def learn_from_teacher(teacher: Agent, q: int, rng: np.random.Generator) -> AssociationMatrix:
    """Sample Q signals per meaning from the teacher's encoding."""

    if q < 1:
        raise ValueError(f"Sampling size must be at least 1, got {q}")
    return rng.multinomial(q, teacher.enc).astype(np.float64)


def step_generation(population: Population, params: ModelParams, streams: RandomStreams) -> Population:
    """Replace every agent by exactly one child who learned from a teacher.

    Each child draws from its own substream keyed by (generation, child), so
    the outcome does not depend on the order children are produced in.
    """

    generation = population.generation + 1
    base_weights = None
    if params.strategy is Strategy.BASE:
        base_weights = fitness_vector(population.cache, params.fitness_includes_self)

    children = []
    for parent, parent_agent in enumerate(population.agents):
        rng = streams.for_child(generation, parent)
        if base_weights is not None:
            teacher = select_base_teacher(population.cache, rng, fitness_values=base_weights)
        else:
            imitation_set = build_imitation_set(parent, population, params, rng)
            teacher = select_teacher(parent, imitation_set, population.cache, rng)
        assoc = learn_from_teacher(population.agents[teacher], params.q, rng)
        children.append(Agent.from_association(parent, assoc, position=parent_agent.position))

    return _population(generation, children)


__all__ = [
    "ModelParams",
    "Population",
    "Strategy",
    "build_imitation_set",
    "fitness",
    "fitness_vector",
    "init_population",
    "learn_from_teacher",
    "ring_distance",
    "roulette",
    "select_base_teacher",
    "select_teacher",
    "step_generation",
]
