"""Built-in blocky reference alphabet used as a self-contained target set.

The 26 capitals are hand-written segment lists on the default 10-point
grid (x right, y down, coordinates 0..9) and rendered through the normal
raster pipeline, so the test suite and demo runs need no font files. The
letterforms are deliberately angular: curves are approximated with
straight strokes on the same grid the evolved stencils use.
"""

from __future__ import annotations

from .core import GridSpec, GlyphMask, Stencil, segment
from .raster import Canvas, RenderSettings, TargetSet, render

ALPHABET_GRID_DENSITY = 10

# The default subset-evaluation characters are drawn at exactly the stencil
# stroke, so a stencil can reproduce them pixel-perfectly and subset-driven
# searches saturate; every other letter carries a heavier stroke, keeping
# whole-alphabet coverage demand above subset coverage demand.
LIGHT_LETTERS = frozenset("BIQVWX")
HEAVY_STROKE_RATIO = 5 / 3

# Letters outside the exp3 subset {B, I, Q, V, W, X} deliberately vary their
# frames (widths, midline heights, stem positions) so the alphabet as a whole
# demands more distinct element positions than the subset alone.
# fmt: off
LETTER_SEGMENTS: dict[str, tuple[tuple[int, int, int, int], ...]] = {
    "A": ((1, 9, 4, 0), (4, 0, 7, 9), (2, 6, 6, 6)),
    "B": ((1, 0, 1, 9), (1, 0, 6, 0), (1, 4, 6, 4), (1, 9, 6, 9), (6, 0, 6, 9)),
    "C": ((2, 0, 8, 0), (2, 0, 2, 9), (2, 9, 8, 9)),
    "D": ((1, 0, 1, 9), (1, 0, 5, 0), (5, 0, 7, 2), (7, 2, 7, 7), (7, 7, 5, 9), (1, 9, 5, 9)),
    "E": ((1, 0, 1, 9), (1, 0, 7, 0), (1, 5, 6, 5), (1, 9, 7, 9)),
    "F": ((1, 0, 1, 9), (1, 0, 7, 0), (1, 3, 6, 3)),
    "G": ((1, 0, 7, 0), (1, 0, 1, 9), (1, 9, 7, 9), (7, 6, 7, 9), (4, 6, 7, 6)),
    "H": ((1, 0, 1, 9), (7, 0, 7, 9), (1, 4, 7, 4)),
    "I": ((4, 0, 4, 9), (2, 0, 6, 0), (2, 9, 6, 9)),
    "J": ((6, 0, 6, 9), (2, 9, 6, 9), (2, 7, 2, 9)),
    "K": ((1, 0, 1, 9), (1, 5, 7, 0), (1, 5, 7, 9)),
    "L": ((2, 0, 2, 9), (2, 9, 8, 9)),
    "M": ((0, 0, 0, 9), (0, 0, 4, 5), (4, 5, 8, 0), (8, 0, 8, 9)),
    "N": ((1, 0, 1, 9), (1, 0, 7, 9), (7, 0, 7, 9)),
    "O": ((1, 0, 7, 0), (7, 0, 7, 9), (1, 9, 7, 9), (1, 0, 1, 9)),
    "P": ((1, 0, 1, 9), (1, 0, 6, 0), (6, 0, 6, 3), (1, 3, 6, 3)),
    "Q": ((1, 0, 7, 0), (7, 0, 7, 9), (1, 9, 7, 9), (1, 0, 1, 9), (5, 6, 8, 9)),
    "R": ((1, 0, 1, 9), (1, 0, 6, 0), (6, 0, 6, 4), (1, 4, 6, 4), (3, 4, 7, 9)),
    "S": ((1, 0, 7, 0), (1, 0, 1, 5), (1, 5, 7, 5), (7, 5, 7, 9), (1, 9, 7, 9)),
    "T": ((0, 0, 8, 0), (4, 0, 4, 9)),
    "U": ((2, 0, 2, 9), (2, 9, 8, 9), (8, 0, 8, 9)),
    "V": ((1, 0, 4, 9), (4, 9, 7, 0)),
    "W": ((1, 0, 2, 9), (2, 9, 4, 3), (4, 3, 6, 9), (6, 9, 7, 0)),
    "X": ((1, 0, 7, 9), (1, 9, 7, 0)),
    "Y": ((1, 0, 4, 5), (4, 5, 7, 0), (4, 5, 4, 9)),
    "Z": ((1, 0, 7, 0), (1, 9, 7, 0), (1, 9, 7, 9)),
}
# fmt: on

BUILTIN_CHARACTERS = tuple(sorted(LETTER_SEGMENTS))


def letter_canvas(character: str, settings: RenderSettings) -> Canvas:
    """Render one reference capital with the shared raster pipeline.

    Light letters use the stencil stroke itself, so their strokes are
    exactly representable by stencil elements; the rest render heavier.
    """
    coords = LETTER_SEGMENTS[character]
    segs = tuple(segment(*c) for c in coords)
    stencil = Stencil(segments=segs, bounds=(1, len(segs)))
    grid = GridSpec(ALPHABET_GRID_DENSITY)
    if character not in LIGHT_LETTERS:
        settings = RenderSettings(
            canvas_size=settings.canvas_size,
            stroke_weight=settings.stroke_weight * HEAVY_STROKE_RATIO,
        )
    return render(stencil, GlyphMask.full(len(segs)), settings, grid)


def builtin_targets(settings: RenderSettings | None = None) -> TargetSet:
    """The packaged A-Z target set at the given render settings."""
    settings = settings or RenderSettings()
    bitmaps = {ch: letter_canvas(ch, settings) for ch in BUILTIN_CHARACTERS}
    return TargetSet(
        characters=BUILTIN_CHARACTERS,
        bitmaps=bitmaps,
        canvas_size=settings.canvas_size,
    )
