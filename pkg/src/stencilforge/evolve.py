"""Generational GA over stencil populations.

Selection is tournament based with elitism; variation is an area crossover
(segments whose midpoints fall inside a random rectangle of the drawing
swap sides) plus a three-part mutation (delete / nudge endpoints / insert).
When the population grows too self-similar, mutation probabilities are
temporarily boosted to push diversity back up.

Determinism contract: every stochastic decision draws from a substream
keyed by (seed, generation, slot), so runs are reproducible bit-for-bit
regardless of evaluation parallelism, and a run can be resumed at any
generation boundary without carrying RNG state.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .core import (
    GridSpec,
    Segment,
    Stencil,
    is_valid,
    random_segment,
    random_stencil,
    segment,
    segment_contains,
    segment_midpoint,
)
from .raster import RenderSettings, TargetSet
from .search import (
    FitnessConfig,
    FitnessVariant,
    SearchConfig,
    evaluate_stencil,
    subset_mean_score,
)

MUTATION_DIRECTIONS = (
    (-1, -1), (-1, 0), (-1, 1),
    (0, -1), (0, 1),
    (1, -1), (1, 0), (1, 1),
)


@dataclass(frozen=True)
class EvoConfig:
    """Run parameters: GA dials plus the shared geometry/eval settings."""

    population_size: int = 100
    generations: int = 300
    tournament_size: int = 3
    elite_count: int = 1
    crossover_prob: float = 0.9
    p_delete: float = 0.1
    p_modify: float = 0.9
    p_insert: float = 0.1
    modify_rate: float = 0.05  # per-segment coin once the modify procedure fires
    similarity_threshold: float = 0.6
    boost_factor: float = 3.0
    rng_seed: int = 0
    grid: GridSpec = GridSpec()
    bounds: tuple[int, int] = (10, 40)
    render: RenderSettings = RenderSettings()
    search: SearchConfig = SearchConfig()
    fitness: FitnessConfig = FitnessConfig()
    threads: int = 1

    def __post_init__(self):
        for name in ("crossover_prob", "p_delete", "p_modify", "p_insert", "modify_rate"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if not (0.0 <= self.similarity_threshold <= 1.0):
            raise ValueError("similarity_threshold must be in [0, 1]")
        if self.boost_factor < 1.0:
            raise ValueError("boost_factor must be >= 1")
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if not (0 <= self.elite_count < self.population_size):
            raise ValueError("elite_count must be < population_size")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if self.rng_seed < 0:
            raise ValueError("rng_seed must be non-negative")
        lo, hi = self.bounds
        if not (1 <= lo <= hi):
            raise ValueError(f"infeasible bounds {self.bounds}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    best_fitness: float
    mean_fitness: float
    best_element_count: int
    mean_element_count: float
    mean_l_score: float
    mean_nonl_score: Optional[float]
    population_similarity: float
    boost_active: bool


STATS_COLUMNS = (
    "generation",
    "best_fitness",
    "mean_fitness",
    "best_element_count",
    "mean_element_count",
    "mean_l_score",
    "mean_nonl_score",
    "population_similarity",
    "boost_active",
)


@dataclass(frozen=True)
class RunStats:
    """One record per completed generation, generation 0 included."""

    records: tuple[GenerationRecord, ...]

    def to_csv(self) -> str:
        lines = [",".join(STATS_COLUMNS)]
        for r in self.records:
            lines.append(
                ",".join(
                    [
                        str(r.generation),
                        repr(r.best_fitness),
                        repr(r.mean_fitness),
                        str(r.best_element_count),
                        repr(r.mean_element_count),
                        repr(r.mean_l_score),
                        "" if r.mean_nonl_score is None else repr(r.mean_nonl_score),
                        repr(r.population_similarity),
                        "1" if r.boost_active else "0",
                    ]
                )
            )
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class GenerationSnapshot:
    """Immutable view of one completed generation, ranked by fitness."""

    generation: int
    population: tuple[Stencil, ...]
    record: GenerationRecord


Observer = Callable[[GenerationSnapshot], None]


# --- variation operators -----------------------------------------------------


def area_crossover(
    parent_a: Stencil,
    parent_b: Stencil,
    grid: GridSpec,
    rng: np.random.Generator,
    max_attempts: int = 20,
) -> tuple[Stencil, Stencil]:
    """Swap the segments whose midpoints fall inside a random rectangle.

    The rectangle is spanned by two uniform corner points in continuous
    grid space, so the exchange follows the drawing, not gene positions,
    and may move different counts each way. Rectangles producing invalid
    children are resampled; after ``max_attempts`` the parents are returned
    unchanged (minus their evaluation caches).
    """
    d = grid.density - 1
    for _ in range(max_attempts):
        x_lo, x_hi = sorted((rng.uniform(0, d), rng.uniform(0, d)))
        y_lo, y_hi = sorted((rng.uniform(0, d), rng.uniform(0, d)))

        def inside(seg: Segment) -> bool:
            mx, my = segment_midpoint(seg)
            return x_lo <= mx <= x_hi and y_lo <= my <= y_hi

        moved_a = [s for s in parent_a.segments if inside(s)]
        kept_a = [s for s in parent_a.segments if not inside(s)]
        moved_b = [s for s in parent_b.segments if inside(s)]
        kept_b = [s for s in parent_b.segments if not inside(s)]

        child_a = Stencil(
            segments=tuple(dict.fromkeys(kept_a + moved_b)), bounds=parent_a.bounds
        )
        child_b = Stencil(
            segments=tuple(dict.fromkeys(kept_b + moved_a)), bounds=parent_b.bounds
        )
        if is_valid(child_a, grid) and is_valid(child_b, grid):
            return child_a, child_b
    return parent_a.bare(), parent_b.bare()


def _try_insert(
    segs: list[Segment], grid: GridSpec, rng: np.random.Generator, attempts: int
) -> None:
    for _ in range(attempts):
        cand = random_segment(grid, rng)
        if cand in segs:
            continue
        if any(segment_contains(cand, s) or segment_contains(s, cand) for s in segs):
            continue
        segs.append(cand)
        return


def _try_modify_one(
    segs: list[Segment], i: int, grid: GridSpec, rng: np.random.Generator, attempts: int
) -> None:
    for _ in range(attempts):
        s = segs[i]
        end = int(rng.integers(0, 2))
        x, y = (s.x1, s.y1) if end == 0 else (s.x2, s.y2)
        dirs = [
            (dx, dy) for dx, dy in MUTATION_DIRECTIONS if grid.in_range(x + dx, y + dy)
        ]
        dx, dy = dirs[int(rng.integers(0, len(dirs)))]
        moved = (
            segment(x + dx, y + dy, s.x2, s.y2)
            if end == 0
            else segment(s.x1, s.y1, x + dx, y + dy)
        )
        if moved.is_null():
            continue
        others = [t for j, t in enumerate(segs) if j != i]
        if moved in others:
            continue
        if any(
            segment_contains(moved, t) or segment_contains(t, moved) for t in others
        ):
            continue
        segs[i] = moved
        return


def mutate(
    stencil: Stencil,
    config: EvoConfig,
    boost: float,
    rng: np.random.Generator,
    max_attempts: int = 20,
) -> Stencil:
    """Apply the three mutation procedures, each with its own (boosted) coin.

    Deletion removes one random gene, modification nudges one endpoint of
    one or more genes by a single grid step in one of eight directions,
    insertion adds a fresh random gene. A procedure that cannot keep the
    stencil valid within the attempt budget is skipped.
    """
    grid = config.grid
    lo, hi = stencil.bounds
    segs = list(stencil.segments)

    if rng.random() < min(1.0, config.p_delete * boost):
        if len(segs) - 1 >= lo:
            del segs[int(rng.integers(0, len(segs)))]

    if rng.random() < min(1.0, config.p_modify * boost):
        picks = [i for i in range(len(segs)) if rng.random() < config.modify_rate]
        if not picks:
            picks = [int(rng.integers(0, len(segs)))]
        for i in picks:
            _try_modify_one(segs, i, grid, rng, max_attempts)

    if rng.random() < min(1.0, config.p_insert * boost):
        if len(segs) + 1 <= hi:
            _try_insert(segs, grid, rng, max_attempts)

    return Stencil(segments=tuple(segs), bounds=stencil.bounds)


def population_similarity(population: Sequence[Stencil]) -> float:
    """Mean pairwise Jaccard similarity of the canonical segment sets."""
    if len(population) < 2:
        raise ValueError("population similarity needs at least 2 individuals")
    sets = [s.segment_set() for s in population]
    total = 0.0
    pairs = 0
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            union = len(sets[i] | sets[j])
            total += len(sets[i] & sets[j]) / union if union else 1.0
            pairs += 1
    return total / pairs


# --- evaluation with memoization / optional process pool ---------------------

_WORKER_CTX: dict = {}


def _pool_init(targets, settings, grid, search_config, fitness_config):
    _WORKER_CTX["args"] = (targets, settings, grid, search_config, fitness_config)


def _pool_eval(stencil: Stencil) -> Stencil:
    targets, settings, grid, search_config, fitness_config = _WORKER_CTX["args"]
    return evaluate_stencil(stencil, targets, settings, grid, search_config, fitness_config)


class _Evaluator:
    """Evaluates populations, memoizing by genotype within the run.

    Evaluation is a pure function of the genotype under fixed run settings,
    so clones and surviving elites never pay for re-evaluation. With
    ``threads > 1`` unique genotypes are spread over a process pool; results
    are identical to the serial path.
    """

    def __init__(self, config: EvoConfig, targets: TargetSet):
        self._config = config
        self._targets = targets
        self._cache: dict[tuple[Segment, ...], Stencil] = {}
        self._pool: Optional[ProcessPoolExecutor] = None
        if config.threads > 1:
            self._pool = ProcessPoolExecutor(
                max_workers=config.threads,
                initializer=_pool_init,
                initargs=(targets, config.render, config.grid, config.search, config.fitness),
            )

    def evaluate_all(self, stencils: Sequence[Stencil]) -> list[Stencil]:
        cfg = self._config
        missing: list[tuple[Segment, ...]] = []
        for s in stencils:
            if s.segments not in self._cache and s.segments not in missing:
                missing.append(s.segments)
        todo = [Stencil(segments=m, bounds=cfg.bounds) for m in missing]
        if self._pool is not None:
            results = list(self._pool.map(_pool_eval, todo, chunksize=4))
        else:
            results = [
                evaluate_stencil(
                    s, self._targets, cfg.render, cfg.grid, cfg.search, cfg.fitness
                )
                for s in todo
            ]
        for genotype, evaluated in zip(missing, results):
            self._cache[genotype] = evaluated
        return [self._cache[s.segments] for s in stencils]

    def retain(self, population: Sequence[Stencil]) -> None:
        """Drop cache entries for genotypes no longer alive; bounds memory."""
        self._cache = {s.segments: s for s in population}

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None


# --- run orchestration --------------------------------------------------------


def _substream(seed: int, generation: int, slot: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, generation, slot)))


def _tournament(
    population: Sequence[Stencil], size: int, rng: np.random.Generator
) -> Stencil:
    best: Optional[Stencil] = None
    for _ in range(size):
        cand = population[int(rng.integers(0, len(population)))]
        if best is None or (cand.fitness or 0.0) > (best.fitness or 0.0):
            best = cand
    assert best is not None
    return best


def _ranked(population: Sequence[Stencil]) -> list[Stencil]:
    return sorted(population, key=lambda s: -(s.fitness or 0.0))


def _l_characters(config: EvoConfig, targets: TargetSet) -> tuple[str, ...]:
    if config.fitness.variant is FitnessVariant.EXP3:
        return tuple(ch for ch in targets.characters if ch in config.fitness.evaluated_subset)
    return targets.characters


def _make_record(
    generation: int,
    population: Sequence[Stencil],
    similarity: float,
    config: EvoConfig,
    targets: TargetSet,
) -> GenerationRecord:
    ranked = _ranked(population)
    best = ranked[0]
    l_chars = _l_characters(config, targets)
    nonl_chars = tuple(ch for ch in targets.characters if ch not in l_chars)
    fitnesses = [s.fitness or 0.0 for s in population]
    return GenerationRecord(
        generation=generation,
        best_fitness=best.fitness or 0.0,
        mean_fitness=sum(fitnesses) / len(fitnesses),
        best_element_count=len(best),
        mean_element_count=sum(len(s) for s in population) / len(population),
        mean_l_score=subset_mean_score(best, l_chars),
        mean_nonl_score=subset_mean_score(best, nonl_chars) if nonl_chars else None,
        population_similarity=similarity,
        boost_active=similarity >= config.similarity_threshold,
    )


def evolve(
    config: EvoConfig,
    targets: TargetSet,
    observer: Optional[Observer] = None,
    start_generation: int = 0,
    initial_population: Optional[Sequence[Stencil]] = None,
    should_stop: Optional[Callable[[], bool]] = None,
) -> tuple[tuple[Stencil, ...], RunStats]:
    """Run the GA and return the final evaluated population plus statistics.

    ``observer`` receives an immutable snapshot after every completed
    generation (generation 0 included) and must hand off quickly; the loop
    blocks on it. ``start_generation``/``initial_population`` resume a run
    from a snapshot; because variation substreams are keyed by generation,
    a resumed run is identical to an uninterrupted one. ``should_stop`` is
    polled at each generation boundary.
    """
    unknown = config.fitness.evaluated_subset - set(targets.characters)
    if config.fitness.variant is FitnessVariant.EXP3 and unknown:
        raise ValueError(f"evaluated subset not within targets: {sorted(unknown)}")

    evaluator = _Evaluator(config, targets)
    records: list[GenerationRecord] = []
    try:
        if initial_population is None:
            population = [
                random_stencil(config.grid, config.bounds, _substream(config.rng_seed, 0, i))
                for i in range(config.population_size)
            ]
            population = evaluator.evaluate_all(population)
        else:
            population = evaluator.evaluate_all(list(initial_population))

        similarity = population_similarity(population)
        record = _make_record(start_generation, population, similarity, config, targets)
        records.append(record)
        if observer is not None and start_generation == 0:
            observer(GenerationSnapshot(0, tuple(_ranked(population)), record))

        for gen in range(start_generation + 1, config.generations + 1):
            if should_stop is not None and should_stop():
                break
            boost = config.boost_factor if records[-1].boost_active else 1.0
            elites = _ranked(population)[: config.elite_count]
            offspring: list[Stencil] = []
            slot = 0
            want = config.population_size - config.elite_count
            while len(offspring) < want:
                rng = _substream(config.rng_seed, gen, slot)
                slot += 1
                parent_a = _tournament(population, config.tournament_size, rng)
                parent_b = _tournament(population, config.tournament_size, rng)
                if rng.random() < config.crossover_prob:
                    child_a, child_b = area_crossover(parent_a, parent_b, config.grid, rng)
                else:
                    child_a, child_b = parent_a.bare(), parent_b.bare()
                child_a = mutate(child_a, config, boost, rng)
                child_b = mutate(child_b, config, boost, rng)
                offspring.append(child_a)
                if len(offspring) < want:
                    offspring.append(child_b)
            population = elites + evaluator.evaluate_all(offspring)
            evaluator.retain(population)
            similarity = population_similarity(population)
            record = _make_record(gen, population, similarity, config, targets)
            records.append(record)
            if observer is not None:
                observer(GenerationSnapshot(gen, tuple(_ranked(population)), record))
    finally:
        evaluator.close()

    return tuple(population), RunStats(records=tuple(records))
