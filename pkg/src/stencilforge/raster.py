"""Deterministic rasterization of masked stencils and the pixel similarity metric.

Canvases are float arrays in [0, 1] with 0 = ink and 1 = white ground.
Rendering is hard-edged (no antialiasing): a pixel is ink iff its center
lies within half the stroke weight of an active segment, giving a
capsule-shaped stroke with round caps. This keeps renders bit-exact and
platform independent while the similarity metric still accepts grayscale
targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .core import GlyphMask, GridSpec, Segment, Stencil


@dataclass(frozen=True)
class RenderSettings:
    """Canvas resolution and the preset stroke weight of stencil elements."""

    canvas_size: int = 64
    stroke_weight: float = 3.0

    def __post_init__(self):
        if self.canvas_size < 8:
            raise ValueError(f"canvas_size must be >= 8, got {self.canvas_size}")
        if not self.stroke_weight > 0:
            raise ValueError(f"stroke_weight must be > 0, got {self.stroke_weight}")

    @property
    def margin(self) -> float:
        # Strokes whose axis sits on the grid border must never clip.
        return self.stroke_weight / 2 + 1.0


@dataclass(frozen=True)
class Canvas:
    """Square grayscale image; 0.0 = black ink, 1.0 = white ground."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.shape[0] != px.shape[1]:
            raise ValueError(f"canvas must be square 2-D, got shape {px.shape}")
        if px.size and (px.min() < 0.0 or px.max() > 1.0):
            raise ValueError("canvas pixel values must lie in [0, 1]")
        px = px.copy()
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @classmethod
    def blank(cls, size: int) -> "Canvas":
        return cls(np.ones((size, size)))

    @property
    def size(self) -> int:
        return self.pixels.shape[0]

    def ink_count(self) -> int:
        return int(np.count_nonzero(self.pixels == 0.0))


@dataclass(frozen=True)
class TargetSet:
    """Reference glyph bitmaps, one per target character, all the same size."""

    characters: tuple[str, ...]
    bitmaps: Mapping[str, Canvas]
    canvas_size: int

    def __post_init__(self):
        if not self.characters:
            raise ValueError("target set has no characters")
        if len(set(self.characters)) != len(self.characters):
            raise ValueError("target characters must be duplicate-free")
        for ch in self.characters:
            bm = self.bitmaps.get(ch)
            if bm is None:
                raise ValueError(f"no bitmap for character {ch!r}")
            if bm.size != self.canvas_size:
                raise ValueError(
                    f"bitmap for {ch!r} is {bm.size}px, expected {self.canvas_size}px"
                )

    def __iter__(self):
        return iter(self.characters)


def grid_transform(grid: GridSpec, settings: RenderSettings) -> tuple[float, float]:
    """Affine grid->canvas map as (margin, scale): px = margin + g * scale."""
    m = settings.margin
    scale = (settings.canvas_size - 2 * m) / (grid.density - 1)
    return m, scale


def segment_ink(seg: Segment, grid: GridSpec, settings: RenderSettings) -> np.ndarray:
    """Boolean (size, size) array of pixels whose centers the stroke covers.

    The distance test runs only inside the segment's padded bounding box;
    pixels outside it cannot be within stroke reach.
    """
    size = settings.canvas_size
    m, scale = grid_transform(grid, settings)
    r = settings.stroke_weight / 2
    ax, ay = m + seg.x1 * scale, m + seg.y1 * scale
    bx, by = m + seg.x2 * scale, m + seg.y2 * scale

    c_lo = max(0, int(math.floor(min(ax, bx) - r)) - 1)
    c_hi = min(size - 1, int(math.ceil(max(ax, bx) + r)) + 1)
    r_lo = max(0, int(math.floor(min(ay, by) - r)) - 1)
    r_hi = min(size - 1, int(math.ceil(max(ay, by) + r)) + 1)

    ink = np.zeros((size, size), dtype=bool)
    if c_lo > c_hi or r_lo > r_hi:
        return ink

    xs = np.arange(c_lo, c_hi + 1) + 0.5
    ys = np.arange(r_lo, r_hi + 1) + 0.5
    X, Y = np.meshgrid(xs, ys)
    vx, vy = bx - ax, by - ay
    norm2 = vx * vx + vy * vy
    if norm2 == 0.0:
        dx, dy = X - ax, Y - ay
    else:
        t = np.clip(((X - ax) * vx + (Y - ay) * vy) / norm2, 0.0, 1.0)
        dx, dy = X - (ax + t * vx), Y - (ay + t * vy)
    ink[r_lo : r_hi + 1, c_lo : c_hi + 1] = dx * dx + dy * dy <= r * r
    return ink


def render(
    stencil: Stencil,
    mask: GlyphMask,
    settings: RenderSettings,
    grid: GridSpec,
) -> Canvas:
    """Draw the mask's active segments in black on a white canvas.

    The result depends only on the *set* of active segments; an empty mask
    yields an all-white canvas.
    """
    if len(mask) != len(stencil.segments):
        raise ValueError(
            f"mask length {len(mask)} does not match segment count {len(stencil.segments)}"
        )
    size = settings.canvas_size
    covered = np.zeros((size, size), dtype=bool)
    for seg, active in zip(stencil.segments, mask.bits):
        if active:
            covered |= segment_ink(seg, grid, settings)
    px = np.ones((size, size))
    px[covered] = 0.0
    return Canvas(px)


def render_expression(
    stencil: Stencil,
    character: str,
    settings: RenderSettings,
    grid: GridSpec,
) -> Canvas:
    """Render the stored best mask for ``character``."""
    if not stencil.solutions or character not in stencil.solutions:
        raise KeyError(f"stencil has no stored solution for character {character!r}")
    return render(stencil, stencil.solutions[character].best_mask, settings, grid)


def rmse(a: Canvas, b: Canvas) -> float:
    """Root-mean-square pixel difference; in [0, 1] for canvases in [0, 1]."""
    if a.size != b.size:
        raise ValueError(f"canvas size mismatch: {a.size} vs {b.size}")
    return float(np.sqrt(np.mean((a.pixels - b.pixels) ** 2)))


def glyph_score(
    stencil: Stencil,
    mask: GlyphMask,
    target: Canvas,
    settings: RenderSettings,
    grid: GridSpec,
) -> float:
    """Similarity of the masked render to a target glyph: 1 - rmse."""
    return 1.0 - rmse(render(stencil, mask, settings, grid), target)


# --- target ingestion ------------------------------------------------------


def read_pgm(path: str | Path) -> np.ndarray:
    """Parse a plain (P2) PGM file into a float array normalized to [0, 1]."""
    text = Path(path).read_text(encoding="ascii")
    tokens: list[str] = []
    for line in text.splitlines():
        hash_at = line.find("#")
        if hash_at >= 0:
            line = line[:hash_at]
        tokens.extend(line.split())
    if not tokens or tokens[0] != "P2":
        raise ValueError(f"{path}: not a plain PGM (P2) file")
    if len(tokens) < 4:
        raise ValueError(f"{path}: truncated PGM header")
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as exc:
        raise ValueError(f"{path}: malformed PGM header") from exc
    if width <= 0 or height <= 0 or not (0 < maxval < 65536):
        raise ValueError(f"{path}: bad PGM dimensions or maxval")
    samples = tokens[4:]
    if len(samples) != width * height:
        raise ValueError(
            f"{path}: expected {width * height} samples, found {len(samples)}"
        )
    try:
        values = np.array([int(s) for s in samples], dtype=np.float64)
    except ValueError as exc:
        raise ValueError(f"{path}: non-integer PGM sample") from exc
    if values.min() < 0 or values.max() > maxval:
        raise ValueError(f"{path}: sample out of range 0..{maxval}")
    return (values / maxval).reshape((height, width))


def write_pgm(canvas: Canvas, path: str | Path) -> None:
    """Write a canvas as plain PGM (P2, maxval 255), ink-dark convention."""
    px = np.rint(canvas.pixels * 255).astype(int)
    lines = [f"P2", f"{canvas.size} {canvas.size}", "255"]
    lines.extend(" ".join(str(v) for v in row) for row in px)
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_targets(directory: str | Path) -> TargetSet:
    """Load a target glyph directory: manifest.txt plus one <CHAR>.pgm each.

    All bitmaps must be square and share one size; violations are rejected
    rather than resampled.
    """
    directory = Path(directory)
    manifest = directory / "manifest.txt"
    if not manifest.is_file():
        raise FileNotFoundError(f"missing manifest: {manifest}")
    characters = tuple(
        line.strip() for line in manifest.read_text(encoding="utf-8").splitlines() if line.strip()
    )
    if not characters:
        raise ValueError(f"{manifest}: empty manifest")
    bitmaps: dict[str, Canvas] = {}
    size: int | None = None
    for ch in characters:
        path = directory / f"{ch}.pgm"
        if not path.is_file():
            raise FileNotFoundError(f"missing target bitmap: {path}")
        px = read_pgm(path)
        if px.shape[0] != px.shape[1]:
            raise ValueError(f"{path}: target bitmap must be square, got {px.shape}")
        if size is None:
            size = px.shape[0]
        elif px.shape[0] != size:
            raise ValueError(
                f"{path}: size {px.shape[0]}px does not match {size}px of earlier targets"
            )
        bitmaps[ch] = Canvas(px)
    assert size is not None
    return TargetSet(characters=characters, bitmaps=bitmaps, canvas_size=size)
