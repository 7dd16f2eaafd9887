"""Persistence of stencils and shape-replacement assets.

The ``.stencil`` document is versioned UTF-8 JSON with a fixed key layout:
human-diffable, lossless across save/load, and tolerant of unknown
top-level keys (they are preserved verbatim so future fields survive a
round trip through older tooling). Activation masks are stored as '0'/'1'
strings indexed in genotype order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

import numpy as np

from .core import GlyphMask, GlyphSolution, GridSpec, Segment, Stencil
from .raster import RenderSettings

DOCUMENT_FORMAT = "stencil-document"
DOCUMENT_VERSION = 1
LIBRARY_FORMAT = "shape-library"
MAPPING_FORMAT = "shape-mapping"


class DocumentError(ValueError):
    """Malformed, truncated, or unsupported persisted artifact."""


@dataclass(frozen=True)
class StencilDocument:
    """Self-contained snapshot of one stencil and its evaluation state."""

    density: int
    bounds: tuple[int, int]
    canvas_size: int
    stroke_weight: float
    segments: tuple[Segment, ...]
    solutions: tuple[GlyphSolution, ...] = ()
    fitness_variant: Optional[str] = None
    fitness_value: Optional[float] = None
    evaluated_subset: Optional[str] = None
    provenance: Mapping[str, Any] = field(default_factory=dict)
    extras: Mapping[str, Any] = field(default_factory=dict)

    @classmethod
    def from_stencil(
        cls,
        stencil: Stencil,
        grid: GridSpec,
        settings: RenderSettings,
        fitness_variant: Optional[str] = None,
        evaluated_subset: Optional[str] = None,
        provenance: Optional[Mapping[str, Any]] = None,
    ) -> "StencilDocument":
        solutions = tuple(stencil.solutions.values()) if stencil.solutions else ()
        return cls(
            density=grid.density,
            bounds=stencil.bounds,
            canvas_size=settings.canvas_size,
            stroke_weight=settings.stroke_weight,
            segments=stencil.segments,
            solutions=solutions,
            fitness_variant=fitness_variant,
            fitness_value=stencil.fitness,
            evaluated_subset=evaluated_subset,
            provenance=dict(provenance or {}),
        )

    def to_stencil(self) -> Stencil:
        solutions = {sol.character: sol for sol in self.solutions}
        return Stencil(
            segments=self.segments,
            bounds=self.bounds,
            solutions=solutions or None,
            fitness=self.fitness_value,
        )

    def grid(self) -> GridSpec:
        return GridSpec(self.density)

    def render_settings(self) -> RenderSettings:
        return RenderSettings(self.canvas_size, self.stroke_weight)

    def solution_for(self, character: str) -> GlyphSolution:
        for sol in self.solutions:
            if sol.character == character:
                return sol
        raise KeyError(f"document has no solution for character {character!r}")


def _solution_to_json(sol: GlyphSolution) -> dict:
    return {
        "character": sol.character,
        "mask": sol.best_mask.bitstring(),
        "score": sol.best_score,
        "alternatives": [[m.bitstring(), s] for m, s in sol.alternatives],
    }


def _solution_from_json(obj: Any, n_segments: int) -> GlyphSolution:
    try:
        character = obj["character"]
        mask = GlyphMask.from_bitstring(obj["mask"])
        score = float(obj["score"])
        alts = tuple(
            (GlyphMask.from_bitstring(m), float(s)) for m, s in obj["alternatives"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DocumentError(f"malformed solution entry: {exc}") from exc
    for m in (mask, *(m for m, _ in alts)):
        if len(m) != n_segments:
            raise DocumentError(
                f"mask length {len(m)} does not match {n_segments} segments"
            )
    return GlyphSolution(
        character=character, best_mask=mask, best_score=score, alternatives=alts
    )


KNOWN_KEYS = (
    "format",
    "version",
    "grid",
    "bounds",
    "render",
    "segments",
    "solutions",
    "fitness",
    "provenance",
)


def document_to_json(doc: StencilDocument) -> dict:
    body: dict[str, Any] = {
        "format": DOCUMENT_FORMAT,
        "version": DOCUMENT_VERSION,
        "grid": {"density": doc.density},
        "bounds": list(doc.bounds),
        "render": {
            "canvas_size": doc.canvas_size,
            "stroke_weight": doc.stroke_weight,
        },
        "segments": [list(s) for s in doc.segments],
        "solutions": [_solution_to_json(s) for s in doc.solutions],
        "fitness": {
            "variant": doc.fitness_variant,
            "value": doc.fitness_value,
            "evaluated_subset": doc.evaluated_subset,
        },
        "provenance": dict(doc.provenance),
    }
    for key, value in doc.extras.items():
        if key not in KNOWN_KEYS:
            body[key] = value
    return body


def serialize_stencil(doc: StencilDocument) -> str:
    return json.dumps(document_to_json(doc), indent=2, ensure_ascii=False) + "\n"


def parse_stencil(text: str) -> StencilDocument:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"stencil document parse error at byte {exc.pos}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise DocumentError("stencil document must be a JSON object")
    if raw.get("format") != DOCUMENT_FORMAT:
        raise DocumentError(f"not a {DOCUMENT_FORMAT} file")
    if raw.get("version") != DOCUMENT_VERSION:
        raise DocumentError(f"unsupported document version {raw.get('version')!r}")
    try:
        density = int(raw["grid"]["density"])
        bounds = tuple(int(v) for v in raw["bounds"])
        render = raw["render"]
        canvas_size = int(render["canvas_size"])
        stroke_weight = float(render["stroke_weight"])
        segments = tuple(Segment(*(int(v) for v in s)) for s in raw["segments"])
        fitness = raw.get("fitness") or {}
    except (KeyError, TypeError, ValueError) as exc:
        raise DocumentError(f"malformed stencil document: {exc}") from exc
    if len(bounds) != 2:
        raise DocumentError(f"bounds must have 2 entries, got {len(bounds)}")
    solutions = tuple(
        _solution_from_json(obj, len(segments)) for obj in raw.get("solutions", [])
    )
    extras = {k: v for k, v in raw.items() if k not in KNOWN_KEYS}
    return StencilDocument(
        density=density,
        bounds=(bounds[0], bounds[1]),
        canvas_size=canvas_size,
        stroke_weight=stroke_weight,
        segments=segments,
        solutions=solutions,
        fitness_variant=fitness.get("variant"),
        fitness_value=fitness.get("value"),
        evaluated_subset=fitness.get("evaluated_subset"),
        provenance=raw.get("provenance") or {},
        extras=extras,
    )


def save_stencil(doc: StencilDocument, path: str | Path) -> None:
    Path(path).write_text(serialize_stencil(doc), encoding="utf-8")


def load_stencil(path: str | Path) -> StencilDocument:
    return parse_stencil(Path(path).read_text(encoding="utf-8"))


# --- shape assets -------------------------------------------------------------


@dataclass(frozen=True)
class ShapeAsset:
    """A vector shape in the unit reference frame.

    The frame puts the replaced segment along (0,0) -> (1,0) with the
    stroke spanning y in [-0.5, 0.5]; instantiation stretches x by segment
    length and y by stroke weight. ``stroke`` assets are drawn as stroked
    outlines (unit width) instead of filled regions.
    """

    id: str
    path: str
    stroke: bool = False

    def __post_init__(self):
        if not self.id:
            raise ValueError("shape asset id must be non-empty")
        if not self.path.strip():
            raise ValueError(f"shape asset {self.id!r} has an empty path")


@dataclass(frozen=True)
class ShapeLibrary:
    shapes: tuple[ShapeAsset, ...]

    def __post_init__(self):
        ids = [s.id for s in self.shapes]
        if len(set(ids)) != len(ids):
            raise ValueError("shape ids must be unique within a library")

    def __getitem__(self, shape_id: str) -> ShapeAsset:
        for s in self.shapes:
            if s.id == shape_id:
                return s
        raise KeyError(f"unknown shape id {shape_id!r}")

    def ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.shapes)

    def merged_with(self, other: "ShapeLibrary") -> "ShapeLibrary":
        mine = {s.id for s in self.shapes}
        return ShapeLibrary(
            shapes=self.shapes + tuple(s for s in other.shapes if s.id not in mine)
        )


def _circle(cx: float, cy: float, r: float) -> str:
    return (
        f"M {cx - r} {cy} "
        f"A {r} {r} 0 1 0 {cx + r} {cy} "
        f"A {r} {r} 0 1 0 {cx - r} {cy} Z"
    )


def _rect(x0: float, y0: float, x1: float, y1: float) -> str:
    return f"M {x0} {y0} L {x1} {y0} L {x1} {y1} L {x0} {y1} Z"


def builtin_shape_library() -> ShapeLibrary:
    """Packaged shape families for element replacement."""
    dots = " ".join(_circle(x, 0.0, 0.3) for x in (0.1, 0.3, 0.5, 0.7, 0.9))
    dashes = " ".join(
        _rect(x, -0.35, x + 0.2, 0.35) for x in (0.05, 0.4, 0.75)
    )
    circles = " ".join(_circle(x, 0.0, 0.125) for x in (0.125, 0.375, 0.625, 0.875))
    squares = " ".join(
        _rect(x - 0.1, -0.5, x + 0.1, 0.5) for x in (0.125, 0.375, 0.625, 0.875)
    )
    return ShapeLibrary(
        shapes=(
            ShapeAsset("line", "M 0 0 L 1 0", stroke=True),
            ShapeAsset("solid-bar", _rect(0.0, -0.5, 1.0, 0.5)),
            ShapeAsset("dot-row", dots),
            ShapeAsset("dash-row", dashes),
            ShapeAsset("circle-chain", circles),
            ShapeAsset("square-chain", squares),
        )
    )


def serialize_shape_library(library: ShapeLibrary) -> str:
    body = {
        "format": LIBRARY_FORMAT,
        "version": 1,
        "shapes": [
            {"id": s.id, "path": s.path, "stroke": s.stroke} for s in library.shapes
        ],
    }
    return json.dumps(body, indent=2, ensure_ascii=False) + "\n"


def parse_shape_library(text: str) -> ShapeLibrary:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"shape library parse error at byte {exc.pos}: {exc.msg}") from exc
    if not isinstance(raw, dict) or raw.get("format") != LIBRARY_FORMAT:
        raise DocumentError(f"not a {LIBRARY_FORMAT} file")
    if raw.get("version") != 1:
        raise DocumentError(f"unsupported shape library version {raw.get('version')!r}")
    try:
        shapes = tuple(
            ShapeAsset(s["id"], s["path"], bool(s.get("stroke", False)))
            for s in raw["shapes"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DocumentError(f"malformed shape library: {exc}") from exc
    return ShapeLibrary(shapes=shapes)


def load_shape_library(path: str | Path) -> ShapeLibrary:
    return parse_shape_library(Path(path).read_text(encoding="utf-8"))


# --- shape mappings -----------------------------------------------------------


@dataclass(frozen=True)
class ShapeMapping:
    """Which shape replaces each stencil element.

    ``explicit`` mode lists assignments per segment index; ``random`` mode
    derives a full assignment reproducibly from its seed and the library's
    asset order.
    """

    mode: str = "explicit"  # "explicit" | "random"
    assignments: Mapping[int, str] = field(default_factory=dict)
    seed: Optional[int] = None

    def __post_init__(self):
        if self.mode not in ("explicit", "random"):
            raise ValueError(f"unknown mapping mode {self.mode!r}")
        if self.mode == "random" and self.seed is None:
            raise ValueError("random mapping mode needs a seed")
        for idx in self.assignments:
            if idx < 0:
                raise ValueError(f"negative segment index {idx} in mapping")

    def resolve(self, n_segments: int, library: ShapeLibrary) -> dict[int, ShapeAsset]:
        """Concrete per-index asset assignment covering ``n_segments`` slots.

        Random mode covers every index; explicit mode may be partial, and
        consumers must reject active indices it leaves unmapped.
        """
        if self.mode == "random":
            rng = np.random.default_rng(self.seed)
            ids = library.ids()
            return {
                i: library[ids[int(rng.integers(0, len(ids)))]]
                for i in range(n_segments)
            }
        out = {}
        for idx, shape_id in self.assignments.items():
            if idx >= n_segments:
                raise ValueError(
                    f"mapping index {idx} out of range for {n_segments} segments"
                )
            out[idx] = library[shape_id]
        return out


def serialize_shape_mapping(mapping: ShapeMapping) -> str:
    body: dict[str, Any] = {"format": MAPPING_FORMAT, "version": 1, "mode": mapping.mode}
    if mapping.mode == "random":
        body["seed"] = mapping.seed
    body["assignments"] = {str(k): v for k, v in sorted(mapping.assignments.items())}
    return json.dumps(body, indent=2, ensure_ascii=False) + "\n"


def parse_shape_mapping(text: str) -> ShapeMapping:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"shape mapping parse error at byte {exc.pos}: {exc.msg}") from exc
    if not isinstance(raw, dict) or raw.get("format") != MAPPING_FORMAT:
        raise DocumentError(f"not a {MAPPING_FORMAT} file")
    if raw.get("version") != 1:
        raise DocumentError(f"unsupported shape mapping version {raw.get('version')!r}")
    try:
        assignments = {int(k): str(v) for k, v in (raw.get("assignments") or {}).items()}
        mode = raw.get("mode", "explicit")
        seed = raw.get("seed")
        return ShapeMapping(
            mode=mode, assignments=assignments, seed=None if seed is None else int(seed)
        )
    except (TypeError, ValueError) as exc:
        raise DocumentError(f"malformed shape mapping: {exc}") from exc


def load_shape_mapping(path: str | Path) -> ShapeMapping:
    return parse_shape_mapping(Path(path).read_text(encoding="utf-8"))
