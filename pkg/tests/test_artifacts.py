import hashlib
import json
import math
import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from stencilforge.core import GlyphMask, random_stencil, segment, Stencil
from stencilforge.documents import (
    DocumentError,
    ShapeAsset,
    ShapeLibrary,
    ShapeMapping,
    StencilDocument,
    builtin_shape_library,
    load_shape_library,
    load_stencil,
    parse_shape_mapping,
    parse_stencil,
    save_stencil,
    serialize_shape_library,
    serialize_shape_mapping,
    serialize_stencil,
)
from stencilforge.raster import Canvas, TargetSet, grid_transform
from stencilforge.search import FitnessConfig, FitnessVariant, SearchConfig, evaluate_stencil
from stencilforge.vector import (
    assemble_with_shapes,
    color_for_index,
    export_svg_glyph,
    export_svg_stencil,
    png_bytes,
    render_specimen,
    svg_glyph_for_mask,
    write_png,
)

SVG_NS = "{http://www.w3.org/2000/svg}"


def evaluated_doc(grid, settings, alphabet, rng, chars="AIT"):
    st = random_stencil(grid, (6, 12), rng)
    ts = TargetSet(
        characters=tuple(chars),
        bitmaps={ch: alphabet.bitmaps[ch] for ch in chars},
        canvas_size=alphabet.canvas_size,
    )
    ev = evaluate_stencil(
        st, ts, settings, grid, SearchConfig(), FitnessConfig(FitnessVariant.EXP1)
    )
    return StencilDocument.from_stencil(
        ev, grid, settings, fitness_variant="exp1", provenance={"seed": 7, "generation": 3}
    )


def svg_paths(svg_text):
    root = ET.fromstring(svg_text)
    return root.findall(f".//{SVG_NS}path")


class TestStencilDocument:
    def test_save_load_round_trip(self, tmp_path, grid, settings, alphabet, rng):
        doc = evaluated_doc(grid, settings, alphabet, rng)
        path = tmp_path / "a.stencil"
        save_stencil(doc, path)
        back = load_stencil(path)
        assert back == doc

    def test_reserialization_is_byte_identical(self, grid, settings, alphabet, rng):
        doc = evaluated_doc(grid, settings, alphabet, rng)
        blob = serialize_stencil(doc)
        again = serialize_stencil(parse_stencil(blob))
        assert hashlib.sha256(again.encode()).hexdigest() == hashlib.sha256(
            blob.encode()
        ).hexdigest()

    def test_truncated_file_names_byte_offset(self, grid, settings, alphabet, rng):
        blob = serialize_stencil(evaluated_doc(grid, settings, alphabet, rng))
        with pytest.raises(DocumentError, match=r"at byte \d+"):
            parse_stencil(blob[: len(blob) // 2])

    def test_unknown_fields_survive_round_trip(self, grid, settings, alphabet, rng):
        doc = evaluated_doc(grid, settings, alphabet, rng)
        raw = json.loads(serialize_stencil(doc))
        raw["future_field"] = {"nested": [1, 2, 3]}
        reparsed = parse_stencil(json.dumps(raw))
        assert reparsed.extras == {"future_field": {"nested": [1, 2, 3]}}
        again = parse_stencil(serialize_stencil(reparsed))
        assert again == reparsed

    def test_unsupported_version_rejected(self, grid, settings, alphabet, rng):
        raw = json.loads(serialize_stencil(evaluated_doc(grid, settings, alphabet, rng)))
        raw["version"] = 99
        with pytest.raises(DocumentError, match="version"):
            parse_stencil(json.dumps(raw))

    def test_wrong_format_rejected(self):
        with pytest.raises(DocumentError, match="not a"):
            parse_stencil('{"format": "something-else", "version": 1}')

    def test_mask_length_mismatch_rejected(self, grid, settings, alphabet, rng):
        raw = json.loads(serialize_stencil(evaluated_doc(grid, settings, alphabet, rng)))
        raw["solutions"][0]["mask"] = "1"
        with pytest.raises(DocumentError, match="mask length"):
            parse_stencil(json.dumps(raw))

    def test_to_stencil_round_trip(self, grid, settings, alphabet, rng):
        doc = evaluated_doc(grid, settings, alphabet, rng)
        st = doc.to_stencil()
        assert st.segments == doc.segments
        assert st.fitness == doc.fitness_value
        assert set(st.solutions) == {"A", "I", "T"}
        doc2 = StencilDocument.from_stencil(
            st, doc.grid(), doc.render_settings(),
            fitness_variant="exp1", provenance=doc.provenance,
        )
        assert doc2 == doc

    def test_scores_round_trip_exactly(self, grid, settings, alphabet, rng):
        doc = evaluated_doc(grid, settings, alphabet, rng)
        back = parse_stencil(serialize_stencil(doc))
        for a, b in zip(doc.solutions, back.solutions):
            assert a.best_score == b.best_score
            assert [s for _, s in a.alternatives] == [s for _, s in b.alternatives]


class TestShapeLibrary:
    def test_builtin_assets_present(self):
        lib = builtin_shape_library()
        assert set(lib.ids()) == {
            "line", "solid-bar", "dot-row", "dash-row", "circle-chain", "square-chain",
        }

    def test_round_trip(self, tmp_path):
        lib = builtin_shape_library()
        path = tmp_path / "shapes.json"
        path.write_text(serialize_shape_library(lib))
        assert load_shape_library(path) == lib

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValueError):
            ShapeLibrary(shapes=(ShapeAsset("x", "M 0 0"), ShapeAsset("x", "M 1 1")))

    def test_unknown_id_raises(self):
        with pytest.raises(KeyError):
            builtin_shape_library()["nope"]

    def test_empty_path_rejected(self):
        with pytest.raises(ValueError):
            ShapeAsset("p", "   ")


class TestShapeMapping:
    def test_random_mode_is_reproducible(self):
        lib = builtin_shape_library()
        m = ShapeMapping(mode="random", seed=7)
        a = m.resolve(12, lib)
        b = m.resolve(12, lib)
        assert a == b
        assert set(a) == set(range(12))

    def test_random_needs_seed(self):
        with pytest.raises(ValueError):
            ShapeMapping(mode="random")

    def test_explicit_out_of_range_rejected(self):
        lib = builtin_shape_library()
        m = ShapeMapping(assignments={5: "line"})
        with pytest.raises(ValueError):
            m.resolve(3, lib)

    def test_serialization_round_trip(self):
        m = ShapeMapping(assignments={0: "dot-row", 2: "line"})
        assert parse_shape_mapping(serialize_shape_mapping(m)) == m
        r = ShapeMapping(mode="random", seed=123)
        assert parse_shape_mapping(serialize_shape_mapping(r)) == r


class TestSvgExports:
    def test_stencil_export_has_one_path_per_segment(self, grid, settings, alphabet, rng):
        doc = evaluated_doc(grid, settings, alphabet, rng)
        svg = export_svg_stencil(doc)
        assert len(svg_paths(svg)) == len(doc.segments)

    def test_bare_stencil_exports_without_solutions(self, grid, settings):
        st = Stencil(segments=(segment(0, 0, 9, 9), segment(0, 9, 9, 0)), bounds=(1, 4))
        doc = StencilDocument.from_stencil(st, grid, settings)
        svg = export_svg_stencil(doc)
        assert len(svg_paths(svg)) == 2

    def test_exports_are_deterministic(self, grid, settings, alphabet, rng):
        doc = evaluated_doc(grid, settings, alphabet, rng)
        assert export_svg_stencil(doc) == export_svg_stencil(doc)
        assert color_for_index(3) == color_for_index(3)
        assert color_for_index(3) != color_for_index(4)

    def test_glyph_export_path_count_is_popcount(self, grid, settings, alphabet, rng):
        doc = evaluated_doc(grid, settings, alphabet, rng)
        for sol in doc.solutions:
            svg = export_svg_glyph(doc, sol.character)
            assert len(svg_paths(svg)) == sol.best_mask.popcount()

    def test_empty_mask_gives_blank_page(self, grid, settings):
        st = Stencil(segments=(segment(0, 0, 9, 9),), bounds=(1, 4))
        doc = StencilDocument.from_stencil(st, grid, settings)
        svg = svg_glyph_for_mask(doc, GlyphMask.empty(1))
        assert len(svg_paths(svg)) == 0

    def test_missing_solution_raises(self, grid, settings, alphabet, rng):
        doc = evaluated_doc(grid, settings, alphabet, rng)
        with pytest.raises(KeyError):
            export_svg_glyph(doc, "Z")


def path_line_endpoints(path_el):
    m = re.match(
        r"M (-?[\d.]+) (-?[\d.]+) L (-?[\d.]+) (-?[\d.]+)", path_el.get("d")
    )
    return tuple(float(v) for v in m.groups())


def apply_matrix(transform, x, y):
    m = re.match(r"matrix\(([^)]+)\)", transform)
    a, b, c, d, e, f = (float(v) for v in m.group(1).split())
    return (a * x + c * y + e, b * x + d * y + f)


class TestShapeAssembly:
    def test_identity_line_matches_glyph_export_geometry(
        self, grid, settings, alphabet, rng
    ):
        doc = evaluated_doc(grid, settings, alphabet, rng)
        lib = builtin_shape_library()
        mapping = ShapeMapping(
            assignments={i: "line" for i in range(len(doc.segments))}
        )
        ch = doc.solutions[0].character
        plain = export_svg_glyph(doc, ch)
        skinned = assemble_with_shapes(doc, ch, mapping, lib)
        plain_pts = sorted(
            tuple(sorted([(x1, y1), (x2, y2)]))
            for x1, y1, x2, y2 in map(path_line_endpoints, svg_paths(plain))
        )
        skinned_pts = []
        for p in svg_paths(skinned):
            x1, y1, x2, y2 = path_line_endpoints(p)
            t = p.get("transform")
            q1, q2 = apply_matrix(t, x1, y1), apply_matrix(t, x2, y2)
            skinned_pts.append(tuple(sorted([q1, q2])))
        skinned_pts.sort()
        assert len(plain_pts) == len(skinned_pts)
        for (a1, a2), (b1, b2) in zip(plain_pts, skinned_pts):
            for (ax, ay), (bx, by) in ((a1, b1), (a2, b2)):
                assert math.isclose(ax, bx, abs_tol=1e-9)
                assert math.isclose(ay, by, abs_tol=1e-9)

    def test_random_mapping_reproducible_bytes(self, grid, settings, alphabet, rng):
        doc = evaluated_doc(grid, settings, alphabet, rng)
        lib = builtin_shape_library()
        mapping = ShapeMapping(mode="random", seed=7)
        ch = doc.solutions[0].character
        assert assemble_with_shapes(doc, ch, mapping, lib) == assemble_with_shapes(
            doc, ch, mapping, lib
        )

    def test_horizontal_scale_equals_segment_length(self, grid, settings):
        # grid-length-5 horizontal segment: x axis of the emitted matrix must
        # stretch the unit asset by 5 grid steps in page units.
        from dataclasses import replace

        from stencilforge.core import GlyphSolution

        st = Stencil(segments=(segment(2, 4, 7, 4),), bounds=(1, 2))
        doc = StencilDocument.from_stencil(st, grid, settings)
        doc = replace(
            doc,
            solutions=(
                GlyphSolution(
                    character="A",
                    best_mask=GlyphMask.full(1),
                    best_score=1.0,
                    alternatives=(),
                ),
            ),
        )
        lib = builtin_shape_library()
        svg = assemble_with_shapes(doc, "A", ShapeMapping(assignments={0: "dot-row"}), lib)
        (p,) = svg_paths(svg)
        m = re.match(r"matrix\(([^)]+)\)", p.get("transform"))
        a, b, c, d, e, f = (float(v) for v in m.group(1).split())
        _, scale = grid_transform(doc.grid(), doc.render_settings())
        assert math.isclose(a, 5 * scale, rel_tol=1e-9)
        assert b == 0.0
        assert math.isclose(d, settings.stroke_weight, rel_tol=1e-9)

    def test_unmapped_active_index_rejected(self, grid, settings, alphabet, rng):
        doc = evaluated_doc(grid, settings, alphabet, rng)
        lib = builtin_shape_library()
        sol = doc.solutions[0]
        active = sol.best_mask.active_indices()
        if not active:
            pytest.skip("best mask is empty for this draw")
        mapping = ShapeMapping(assignments={})
        with pytest.raises(ValueError, match="no shape assigned"):
            assemble_with_shapes(doc, sol.character, mapping, lib)


class TestSpecimen:
    def test_empty_text_is_empty_page(self, grid, settings, alphabet, rng):
        doc = evaluated_doc(grid, settings, alphabet, rng)
        svg = render_specimen(doc, "")
        root = ET.fromstring(svg)
        assert len(root.findall(f"{SVG_NS}g")) == 0

    def test_two_glyphs_offset_by_one_advance(self, grid, settings, alphabet, rng):
        doc = evaluated_doc(grid, settings, alphabet, rng, chars="AI")
        svg = render_specimen(doc, "AI", tracking=4.0)
        root = ET.fromstring(svg)
        groups = root.findall(f"{SVG_NS}g")
        assert len(groups) == 2
        advance = doc.canvas_size + 4.0
        assert groups[0].get("transform") == "translate(0 0)"
        assert groups[1].get("transform") == f"translate({advance:.6g} 0)"

    def test_offsets_form_arithmetic_progression(self, grid, settings, alphabet, rng):
        chars = "AIT"
        doc = evaluated_doc(grid, settings, alphabet, rng, chars=chars)
        text = "TIA" * 3
        svg = render_specimen(doc, text, tracking=2.0)
        root = ET.fromstring(svg)
        xs = [
            float(re.match(r"translate\(([-\d.]+) 0\)", g.get("transform")).group(1))
            for g in root.findall(f"{SVG_NS}g")
        ]
        advance = doc.canvas_size + 2.0
        assert xs == [i * advance for i in range(len(text))]

    def test_unknown_characters_advance_silently(self, grid, settings, alphabet, rng):
        doc = evaluated_doc(grid, settings, alphabet, rng, chars="AI")
        svg = render_specimen(doc, "A?I", tracking=0.0)
        root = ET.fromstring(svg)
        groups = root.findall(f"{SVG_NS}g")
        assert len(groups) == 2
        assert groups[1].get("transform") == f"translate({2 * doc.canvas_size:.6g} 0)"

    def test_mapping_applied_uniformly(self, grid, settings, alphabet, rng):
        doc = evaluated_doc(grid, settings, alphabet, rng, chars="AI")
        lib = builtin_shape_library()
        svg = render_specimen(doc, "AI", mapping=ShapeMapping(mode="random", seed=3), library=lib)
        assert "matrix(" in svg
        assert render_specimen(
            doc, "AI", mapping=ShapeMapping(mode="random", seed=3), library=lib
        ) == svg


class TestPng:
    def test_png_round_trips_pixels(self, tmp_path, rng):
        from PIL import Image

        px = np.rint(rng.random((16, 16)) * 255) / 255
        canvas = Canvas(px)
        data = png_bytes(canvas)
        path = tmp_path / "c.png"
        write_png(canvas, path)
        assert path.read_bytes() == data
        back = np.asarray(Image.open(path)) / 255
        assert np.allclose(back, px, atol=1 / 255)

    def test_png_bytes_deterministic(self, rng):
        canvas = Canvas(rng.random((12, 12)))
        assert png_bytes(canvas) == png_bytes(canvas)
