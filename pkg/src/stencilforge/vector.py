"""Vector (SVG) and PNG exports: stencils, glyphs, shape assemblies, specimens.

Page coordinates equal raster canvas coordinates (one unit per pixel),
so vector exports and raster renders of the same stencil line up exactly.
All output is a deterministic byte stream for identical inputs.
"""

from __future__ import annotations

import hashlib
import io
from pathlib import Path
from typing import Mapping, Optional

from PIL import Image

from .core import GlyphMask, Segment
from .documents import ShapeAsset, ShapeLibrary, ShapeMapping, StencilDocument
from .raster import Canvas, grid_transform


def _fmt(v: float) -> str:
    # Shortest round-trip representation: exact geometry, stable bytes.
    if v == int(v):
        return str(int(v))
    return repr(float(v))


def color_for_index(index: int) -> str:
    """Stable pseudo-random element color; same index, same color, forever."""
    digest = hashlib.sha256(f"stencil-element-{index}".encode()).digest()
    # Keep channels away from white so strokes stay visible on the page.
    r, g, b = (40 + v % 180 for v in digest[:3])
    return f"#{r:02x}{g:02x}{b:02x}"


def _page_endpoints(
    seg: Segment, doc: StencilDocument
) -> tuple[float, float, float, float]:
    m, scale = grid_transform(doc.grid(), doc.render_settings())
    return (
        m + seg.x1 * scale,
        m + seg.y1 * scale,
        m + seg.x2 * scale,
        m + seg.y2 * scale,
    )


def _svg_open(width: float, height: float) -> str:
    return (
        '<svg xmlns="http://www.w3.org/2000/svg" '
        f'width="{_fmt(width)}" height="{_fmt(height)}" '
        f'viewBox="0 0 {_fmt(width)} {_fmt(height)}">'
    )


def _segment_line(seg: Segment, doc: StencilDocument, stroke: str) -> str:
    x1, y1, x2, y2 = _page_endpoints(seg, doc)
    w = doc.stroke_weight
    return (
        f'<path d="M {_fmt(x1)} {_fmt(y1)} L {_fmt(x2)} {_fmt(y2)}" '
        f'stroke="{stroke}" stroke-width="{_fmt(w)}" stroke-linecap="round" fill="none"/>'
    )


def export_svg_stencil(doc: StencilDocument) -> str:
    """All stencil elements, one stroked path each in a stable per-index color."""
    size = doc.canvas_size
    lines = [_svg_open(size, size)]
    for i, seg in enumerate(doc.segments):
        lines.append(_segment_line(seg, doc, color_for_index(i)))
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def svg_glyph_for_mask(doc: StencilDocument, mask: GlyphMask) -> str:
    """Active segments only, drawn in black at the document's stroke weight."""
    if len(mask) != len(doc.segments):
        raise ValueError(
            f"mask length {len(mask)} does not match {len(doc.segments)} segments"
        )
    size = doc.canvas_size
    lines = [_svg_open(size, size)]
    for i in mask.active_indices():
        lines.append(_segment_line(doc.segments[i], doc, "#000000"))
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def export_svg_glyph(doc: StencilDocument, character: str) -> str:
    """The stored best mask for ``character`` as black stroked paths."""
    return svg_glyph_for_mask(doc, doc.solution_for(character).best_mask)


def _shape_instance(
    seg: Segment, doc: StencilDocument, asset: ShapeAsset
) -> str:
    x1, y1, x2, y2 = _page_endpoints(seg, doc)
    dx, dy = x2 - x1, y2 - y1
    length = (dx * dx + dy * dy) ** 0.5
    sw = doc.stroke_weight
    # Unit frame -> page: x axis along the segment scaled by its length,
    # y axis across it scaled by the stroke weight.
    a, b = dx, dy
    c, d = -dy / length * sw, dx / length * sw
    matrix = f"matrix({_fmt(a)} {_fmt(b)} {_fmt(c)} {_fmt(d)} {_fmt(x1)} {_fmt(y1)})"
    if asset.stroke:
        paint = 'fill="none" stroke="#000000" stroke-width="1" stroke-linecap="round"'
    else:
        paint = 'fill="#000000" stroke="none"'
    return f'<path d="{asset.path}" transform="{matrix}" {paint}/>'


def _glyph_shape_fragment(
    doc: StencilDocument,
    mask: GlyphMask,
    assignment: Mapping[int, ShapeAsset],
) -> list[str]:
    out = []
    for i in mask.active_indices():
        if i not in assignment:
            raise ValueError(f"active segment {i} has no shape assigned")
        out.append(_shape_instance(doc.segments[i], doc, assignment[i]))
    return out


def assemble_with_shapes(
    doc: StencilDocument,
    character: str,
    mapping: ShapeMapping,
    library: ShapeLibrary,
) -> str:
    """Draw a glyph with each active element replaced by its mapped shape.

    Output depends only on the set of active segments and the resolved
    assignment; explicit mappings must cover every active index.
    """
    mask = doc.solution_for(character).best_mask
    assignment = mapping.resolve(len(doc.segments), library)
    size = doc.canvas_size
    lines = [_svg_open(size, size)]
    lines.extend(_glyph_shape_fragment(doc, mask, assignment))
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def render_specimen(
    doc: StencilDocument,
    text: str,
    mapping: Optional[ShapeMapping] = None,
    library: Optional[ShapeLibrary] = None,
    tracking: float = 4.0,
) -> str:
    """Lay glyphs left to right on a shared baseline with a fixed advance.

    Characters without a stored solution advance the pen but draw nothing.
    An optional shape mapping is applied uniformly to every glyph.
    """
    size = doc.canvas_size
    advance = size + tracking
    width = max(1.0, advance * len(text))
    lines = [_svg_open(width, size)]
    assignment = None
    if mapping is not None:
        if library is None:
            raise ValueError("a shape mapping needs a shape library")
        assignment = mapping.resolve(len(doc.segments), library)
    solved = {sol.character for sol in doc.solutions}
    for pos, ch in enumerate(text):
        if ch not in solved:
            continue
        mask = doc.solution_for(ch).best_mask
        lines.append(f'<g transform="translate({_fmt(pos * advance)} 0)">')
        if assignment is None:
            for i in mask.active_indices():
                lines.append(_segment_line(doc.segments[i], doc, "#000000"))
        else:
            lines.extend(_glyph_shape_fragment(doc, mask, assignment))
        lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def png_bytes(canvas: Canvas) -> bytes:
    """Encode a canvas as 8-bit grayscale PNG."""
    import numpy as np

    arr = np.rint(canvas.pixels * 255).astype(np.uint8)
    img = Image.fromarray(arr, mode="L")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def write_png(canvas: Canvas, path: str | Path) -> None:
    Path(path).write_bytes(png_bytes(canvas))
