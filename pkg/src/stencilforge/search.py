"""Per-character mask search and the stencil fitness functions.

The mask search is steepest-ascent hill climbing over segment activations:
start from the empty mask, evaluate every single-segment activation, take
the best strictly-improving neighbor, repeat until no neighbor improves.
Ties break toward the lowest segment index, which makes the whole search
deterministic and lets a brute-force reference reproduce it exactly.

Scores are 1 - RMSE against the target bitmap. The implementation batches
neighbor scoring with incremental coverage sums; for binary targets every
intermediate sum is an exact small integer, so the scores are bit-identical
to rendering each neighbor from scratch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import GlyphMask, GlyphSolution, GridSpec, Stencil, point_on_segment
from .raster import Canvas, RenderSettings, TargetSet, segment_ink

EXP3_DEFAULT_SUBSET = frozenset("BIQVWX")


@dataclass(frozen=True)
class SearchConfig:
    """Mask search knobs: how many alternative configurations to keep."""

    top_k: int = 5

    def __post_init__(self):
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")


class FitnessVariant(str, Enum):
    EXP1 = "exp1"
    EXP2 = "exp2"
    EXP3 = "exp3"


@dataclass(frozen=True)
class FitnessConfig:
    """Which fitness function guides evolution and its penalty floors."""

    variant: FitnessVariant = FitnessVariant.EXP1
    evaluated_subset: frozenset[str] = frozenset()
    size_floor: float = 0.95
    gaps_floor: float = 0.975

    def __post_init__(self):
        if not (0 < self.size_floor <= 1) or not (0 < self.gaps_floor <= 1):
            raise ValueError("penalty floors must lie in (0, 1]")
        if self.variant is FitnessVariant.EXP3 and not self.evaluated_subset:
            raise ValueError("exp3 fitness needs a non-empty evaluated subset")


# --- hill climbing ----------------------------------------------------------


def stencil_ink_indices(
    stencil: Stencil, grid: GridSpec, settings: RenderSettings
) -> list[np.ndarray]:
    """Flat pixel indices covered by each segment's stroke, in genotype order."""
    return [
        np.flatnonzero(segment_ink(seg, grid, settings).ravel())
        for seg in stencil.segments
    ]


def _climb(
    idx_list: Sequence[np.ndarray],
    target_flat: np.ndarray,
    top_k: int,
    character: str,
) -> GlyphSolution:
    """Greedy forward selection over precomputed per-segment ink indices.

    Every evaluated mask (the empty start and each neighbor of each step,
    neighbors in ascending segment-index order) enters the alternatives
    pool; the pool is stable-sorted by descending score at the end.
    """
    n_seg = len(idx_list)
    n_px = target_flat.size
    w = 2.0 * target_flat - 1.0  # per-pixel SSE delta of turning a pixel to ink
    base_sse = float(np.sum((1.0 - target_flat) ** 2))

    counts = [len(ix) for ix in idx_list]
    use_reduceat = n_seg > 0 and min(counts) > 0
    if use_reduceat:
        idx_all = np.concatenate(idx_list)
        starts = np.cumsum([0] + counts[:-1])
        w_all = w[idx_all]

    covered = np.zeros(n_px, dtype=bool)
    active_flags = np.zeros(n_seg, dtype=bool)
    active: tuple[int, ...] = ()
    cur_sse = base_sse
    cur_score = 1.0 - math.sqrt(cur_sse / n_px)

    # (sorted base actives, extra index or None, score), in evaluation order
    pool: list[tuple[tuple[int, ...], Optional[int], float]] = [((), None, cur_score)]

    while not active_flags.all():
        if use_reduceat:
            gains = np.add.reduceat(w_all * ~covered[idx_all], starts)
        else:
            gains = np.array(
                [w[ix[~covered[ix]]].sum() if len(ix) else 0.0 for ix in idx_list]
            )
        scores = 1.0 - np.sqrt((cur_sse + gains) / n_px)
        ranked = np.where(active_flags, -np.inf, scores)
        for i in range(n_seg):
            if not active_flags[i]:
                pool.append((active, i, float(scores[i])))
        best = int(np.argmax(ranked))
        best_score = float(scores[best])
        if not best_score > cur_score:
            break
        covered[idx_list[best]] = True
        cur_sse = float(cur_sse + gains[best])
        cur_score = best_score
        active_flags[best] = True
        active = tuple(sorted(active + (best,)))

    ordered = sorted(pool, key=lambda entry: -entry[2])
    alternatives = []
    for base, extra, score in ordered[:top_k]:
        indices = base if extra is None else tuple(sorted(base + (extra,)))
        alternatives.append((GlyphMask.from_active(indices, n_seg), score))
    return GlyphSolution(
        character=character,
        best_mask=GlyphMask.from_active(active, n_seg),
        best_score=cur_score,
        alternatives=tuple(alternatives),
    )


def hillclimb_mask(
    stencil: Stencil,
    target: Canvas,
    settings: RenderSettings,
    grid: GridSpec,
    config: SearchConfig,
    character: str = "?",
) -> GlyphSolution:
    """Search the best activation mask for one target glyph."""
    idx_list = stencil_ink_indices(stencil, grid, settings)
    return _climb(idx_list, target.pixels.ravel(), config.top_k, character)


def evaluate_stencil(
    stencil: Stencil,
    targets: TargetSet,
    settings: RenderSettings,
    grid: GridSpec,
    search_config: SearchConfig,
    fitness_config: FitnessConfig,
) -> Stencil:
    """Attach per-character solutions and the configured fitness to a stencil.

    Solutions are computed for every target character, including the ones a
    subset fitness leaves out of the score, so reuse across all glyphs stays
    observable.
    """
    idx_list = stencil_ink_indices(stencil, grid, settings)
    solutions = {
        ch: _climb(
            idx_list,
            targets.bitmaps[ch].pixels.ravel(),
            search_config.top_k,
            ch,
        )
        for ch in targets.characters
    }
    scored = stencil.with_evaluation(solutions, 0.0)
    return stencil.with_evaluation(solutions, compute_fitness(scored, targets, fitness_config))


# --- fitness functions ------------------------------------------------------


def _mean_best_score(stencil: Stencil, characters: Iterable[str]) -> float:
    if stencil.solutions is None:
        raise ValueError("stencil has no stored solutions")
    scores = []
    for ch in characters:
        if ch not in stencil.solutions:
            raise ValueError(f"stencil has no solution for character {ch!r}")
        scores.append(stencil.solutions[ch].best_score)
    if not scores:
        raise ValueError("no characters to average over")
    return sum(scores) / len(scores)


def fit_exp_1(stencil: Stencil, targets: TargetSet) -> float:
    """Mean best glyph score over all target characters; tends to 1."""
    return _mean_best_score(stencil, targets.characters)


def reduce_size(
    stencil: Stencil,
    bounds: tuple[int, int] | None = None,
    size_floor: float = 0.95,
) -> float:
    """Element-count penalty: 1 at the minimum count, the floor at the maximum."""
    lo, hi = bounds if bounds is not None else stencil.bounds
    n = len(stencil.segments)
    if hi == lo:
        return 1.0
    return 1.0 - (1.0 - size_floor) * (n - lo) / (hi - lo)


def reduce_gaps(stencil: Stencil, gaps_floor: float = 0.975) -> float:
    """Endpoint-incidence reward: the floor when no endpoint touches another
    element, 1.0 when every endpoint lies on some other segment.

    Incidence uses the exact integer point-on-segment test in grid space,
    so the result is resolution independent.
    """
    segs = stencil.segments
    if not segs:
        return gaps_floor
    touching = 0
    for i, s in enumerate(segs):
        for x, y in (s.p1, s.p2):
            if any(
                point_on_segment(x, y, other)
                for j, other in enumerate(segs)
                if j != i
            ):
                touching += 1
    p = touching / (2 * len(segs))
    return gaps_floor + (1.0 - gaps_floor) * p


def fit_exp_2(
    stencil: Stencil,
    targets: TargetSet,
    size_floor: float = 0.95,
    gaps_floor: float = 0.975,
) -> float:
    """Glyph similarity discounted by element count and endpoint gaps."""
    return (
        fit_exp_1(stencil, targets)
        * reduce_size(stencil, size_floor=size_floor)
        * reduce_gaps(stencil, gaps_floor=gaps_floor)
    )


def fit_exp_3(
    stencil: Stencil,
    targets: TargetSet,
    subset: frozenset[str] | set[str],
    size_floor: float = 0.95,
    gaps_floor: float = 0.975,
) -> float:
    """Subset fitness: like exp2 but the similarity mean runs over L only."""
    if not subset:
        raise ValueError("evaluated subset must be non-empty")
    unknown = set(subset) - set(targets.characters)
    if unknown:
        raise ValueError(f"evaluated subset not within targets: {sorted(unknown)}")
    chars = [ch for ch in targets.characters if ch in subset]
    return (
        _mean_best_score(stencil, chars)
        * reduce_size(stencil, size_floor=size_floor)
        * reduce_gaps(stencil, gaps_floor=gaps_floor)
    )


def compute_fitness(stencil: Stencil, targets: TargetSet, config: FitnessConfig) -> float:
    if config.variant is FitnessVariant.EXP1:
        return fit_exp_1(stencil, targets)
    if config.variant is FitnessVariant.EXP2:
        return fit_exp_2(stencil, targets, config.size_floor, config.gaps_floor)
    return fit_exp_3(
        stencil, targets, config.evaluated_subset, config.size_floor, config.gaps_floor
    )


def subset_mean_score(stencil: Stencil, characters: Iterable[str]) -> float:
    """Mean stored best score over an arbitrary character subset."""
    return _mean_best_score(stencil, characters)


# --- shared-element analysis -------------------------------------------------


@dataclass(frozen=True)
class SharedElementMatrix:
    """Pairwise counts of segments shared by the best masks of two glyphs."""

    characters: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]

    def to_csv(self) -> str:
        lines = ["," + ",".join(self.characters)]
        for ch, row in zip(self.characters, self.counts):
            lines.append(ch + "," + ",".join(str(v) for v in row))
        return "\n".join(lines) + "\n"


def shared_elements(stencil: Stencil) -> SharedElementMatrix:
    """How many active segments each pair of best-mask glyphs has in common."""
    if not stencil.solutions:
        raise ValueError("stencil has no stored solutions")
    characters = tuple(stencil.solutions.keys())
    actives = [set(stencil.solutions[ch].best_mask.active_indices()) for ch in characters]
    counts = tuple(
        tuple(len(a & b) for b in actives)
        for a in actives
    )
    return SharedElementMatrix(characters=characters, counts=counts)
