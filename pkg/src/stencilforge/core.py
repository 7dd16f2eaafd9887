"""Domain types for stencils: grids, line segments, activation masks.

A stencil is a reusable arrangement of grid-constrained line segments.
Individual characters are drawn by activating a subset of the segments
through a binary mask, so the same physical arrangement yields a whole
alphabet of related glyphs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Mapping, NamedTuple, Optional

import numpy as np


class InfeasibleStencilError(RuntimeError):
    """Raised when random stencil construction exhausts its rejection budget."""


@dataclass(frozen=True)
class GridSpec:
    """Square grid; segment endpoints take integer coordinates in [0, density-1]."""

    density: int = 10

    def __post_init__(self):
        if self.density < 2:
            raise ValueError(f"grid density must be >= 2, got {self.density}")

    def in_range(self, x: int, y: int) -> bool:
        return 0 <= x < self.density and 0 <= y < self.density


class Segment(NamedTuple):
    """One stencil element: a straight line between two grid points.

    Canonical form orders the endpoints lexicographically so that equal
    elements compare equal regardless of how they were drawn.
    """

    x1: int
    y1: int
    x2: int
    y2: int

    def canonical(self) -> "Segment":
        if (self.x1, self.y1) <= (self.x2, self.y2):
            return self
        return Segment(self.x2, self.y2, self.x1, self.y1)

    @property
    def p1(self) -> tuple[int, int]:
        return (self.x1, self.y1)

    @property
    def p2(self) -> tuple[int, int]:
        return (self.x2, self.y2)

    def is_null(self) -> bool:
        return self.p1 == self.p2


def segment(x1: int, y1: int, x2: int, y2: int) -> Segment:
    """Build a segment already in canonical endpoint order."""
    return Segment(x1, y1, x2, y2).canonical()


def segment_midpoint(seg: Segment) -> tuple[float, float]:
    """Midpoint of a segment as exact float halves."""
    return ((seg.x1 + seg.x2) / 2, (seg.y1 + seg.y2) / 2)


def point_on_segment(x: int, y: int, seg: Segment) -> bool:
    """True iff integer point (x, y) lies on the closed segment.

    Exact integer test: zero cross product (collinearity) plus containment
    in the segment's bounding box. No epsilon is involved.
    """
    dx, dy = seg.x2 - seg.x1, seg.y2 - seg.y1
    cross = dx * (y - seg.y1) - dy * (x - seg.x1)
    if cross != 0:
        return False
    return (
        min(seg.x1, seg.x2) <= x <= max(seg.x1, seg.x2)
        and min(seg.y1, seg.y2) <= y <= max(seg.y1, seg.y2)
    )


def segment_contains(outer: Segment, inner: Segment) -> bool:
    """True iff ``inner`` lies entirely on ``outer`` (and is not the same segment)."""
    if inner == outer:
        return False
    return point_on_segment(inner.x1, inner.y1, outer) and point_on_segment(
        inner.x2, inner.y2, outer
    )


@dataclass(frozen=True)
class GlyphMask:
    """Bit vector selecting the active segments of one stencil for one glyph."""

    bits: tuple[bool, ...]

    @classmethod
    def empty(cls, length: int) -> "GlyphMask":
        return cls(bits=(False,) * length)

    @classmethod
    def full(cls, length: int) -> "GlyphMask":
        return cls(bits=(True,) * length)

    @classmethod
    def from_active(cls, active: Iterable[int], length: int) -> "GlyphMask":
        bits = [False] * length
        for i in active:
            bits[i] = True
        return cls(bits=tuple(bits))

    @classmethod
    def from_bitstring(cls, s: str) -> "GlyphMask":
        if set(s) - {"0", "1"}:
            raise ValueError(f"mask bitstring may only contain 0/1: {s!r}")
        return cls(bits=tuple(c == "1" for c in s))

    def __len__(self) -> int:
        return len(self.bits)

    def active_indices(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.bits) if b)

    def popcount(self) -> int:
        return sum(self.bits)

    def bitstring(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)


@dataclass(frozen=True)
class GlyphSolution:
    """Best known mask for one character plus runner-up alternatives.

    ``alternatives`` holds up to top-k (mask, score) pairs in descending
    score order; the best mask is always its first entry.
    """

    character: str
    best_mask: GlyphMask
    best_score: float
    alternatives: tuple[tuple[GlyphMask, float], ...]


@dataclass(frozen=True)
class Stencil:
    """Variable-length genotype: an ordered list of canonical segments.

    The segment list order is irrelevant to rendering and fitness (glyphs
    depend on the *set* of active segments); it only anchors mask indices.
    ``solutions`` and ``fitness`` are evaluation caches attached by the
    search module; value semantics are preserved by replacing, never
    mutating.
    """

    segments: tuple[Segment, ...]
    bounds: tuple[int, int] = (10, 40)
    solutions: Optional[Mapping[str, GlyphSolution]] = None
    fitness: Optional[float] = None

    def __len__(self) -> int:
        return len(self.segments)

    def segment_set(self) -> frozenset[Segment]:
        return frozenset(self.segments)

    def with_evaluation(
        self, solutions: Mapping[str, GlyphSolution], fitness: float
    ) -> "Stencil":
        return replace(self, solutions=dict(solutions), fitness=fitness)

    def bare(self) -> "Stencil":
        """Copy without evaluation caches."""
        return replace(self, solutions=None, fitness=None)


def is_valid(stencil: Stencil, grid: GridSpec) -> bool:
    """Total validity predicate every variation operator must preserve.

    Holds iff: segments are pairwise distinct, all coordinates lie on the
    grid, the count is within the stencil's bounds, no segment has null
    length, and no segment contains another (checked over ordered pairs
    with exact integer arithmetic).
    """
    segs = stencil.segments
    n = len(segs)
    lo, hi = stencil.bounds
    if not (lo <= n <= hi):
        return False
    if len(set(segs)) != n:
        return False
    for s in segs:
        if s.is_null():
            return False
        if not (grid.in_range(s.x1, s.y1) and grid.in_range(s.x2, s.y2)):
            return False
        if s.canonical() != s:
            return False
    for a in segs:
        for b in segs:
            if a is not b and segment_contains(a, b):
                return False
    return True


def random_segment(grid: GridSpec, rng: np.random.Generator) -> Segment:
    """Draw one non-null canonical segment uniformly from the grid."""
    d = grid.density
    while True:
        x1, y1, x2, y2 = (int(v) for v in rng.integers(0, d, size=4))
        if (x1, y1) != (x2, y2):
            return segment(x1, y1, x2, y2)


def random_stencil(
    grid: GridSpec,
    bounds: tuple[int, int],
    rng: np.random.Generator,
    max_rejections: int = 10_000,
) -> Stencil:
    """Seed a valid stencil with a uniform segment count within ``bounds``.

    Segments are drawn one at a time and rejected while they duplicate or
    share a line with an existing element. Exhausting the rejection budget
    signals an infeasible (grid, bounds) configuration.
    """
    lo, hi = bounds
    if not (1 <= lo <= hi):
        raise ValueError(f"infeasible bounds {bounds}")
    count = int(rng.integers(lo, hi + 1))
    chosen: list[Segment] = []
    rejections = 0
    while len(chosen) < count:
        cand = random_segment(grid, rng)
        ok = cand not in chosen and not any(
            segment_contains(cand, s) or segment_contains(s, cand) for s in chosen
        )
        if ok:
            chosen.append(cand)
        else:
            rejections += 1
            if rejections >= max_rejections:
                raise InfeasibleStencilError(
                    f"gave up seeding a stencil after {rejections} rejected draws "
                    f"(density={grid.density}, bounds={bounds})"
                )
    return Stencil(segments=tuple(chosen), bounds=(lo, hi))
