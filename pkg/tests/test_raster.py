import hashlib
import math

import numpy as np
import pytest

from stencilforge.core import GlyphMask, GridSpec, Stencil, random_stencil, segment
from stencilforge.raster import (
    Canvas,
    RenderSettings,
    glyph_score,
    load_targets,
    read_pgm,
    render,
    render_expression,
    rmse,
    write_pgm,
)


def scalar_reference_render(segments, active, settings, density):
    """Slow, loop-based rasterizer used as an independent oracle."""
    size = settings.canvas_size
    m = settings.stroke_weight / 2 + 1.0
    scale = (size - 2 * m) / (density - 1)
    r = settings.stroke_weight / 2
    px = [[1.0] * size for _ in range(size)]
    for k in active:
        seg = segments[k]
        ax, ay = m + seg.x1 * scale, m + seg.y1 * scale
        bx, by = m + seg.x2 * scale, m + seg.y2 * scale
        vx, vy = bx - ax, by - ay
        n2 = vx * vx + vy * vy
        for row in range(size):
            for col in range(size):
                cx, cy = col + 0.5, row + 0.5
                t = 0.0 if n2 == 0 else max(0.0, min(1.0, ((cx - ax) * vx + (cy - ay) * vy) / n2))
                dx, dy = cx - (ax + t * vx), cy - (ay + t * vy)
                if dx * dx + dy * dy <= r * r:
                    px[row][col] = 0.0
    return np.array(px)


def stencil_of(coords, bounds=(1, 40)):
    return Stencil(segments=tuple(segment(*c) for c in coords), bounds=bounds)


class TestRender:
    def test_empty_mask_is_all_white(self, grid, settings, rng):
        st = random_stencil(grid, (5, 10), rng)
        canvas = render(st, GlyphMask.empty(len(st)), settings, grid)
        assert np.all(canvas.pixels == 1.0)

    def test_horizontal_bar_matches_scalar_oracle(self):
        settings = RenderSettings(canvas_size=32, stroke_weight=3.0)
        st = stencil_of([(0, 2, 4, 2)])
        grid = GridSpec(5)
        canvas = render(st, GlyphMask.full(1), settings, grid)
        oracle = scalar_reference_render(st.segments, [0], settings, 5)
        assert np.array_equal(canvas.pixels, oracle)
        assert canvas.ink_count() > 0
        # A mid-grid horizontal stroke is ~3 px tall and vertically centered.
        rows_with_ink = sorted(set(np.nonzero(canvas.pixels == 0.0)[0]))
        assert rows_with_ink == [14, 15, 16, 17]
        assert np.array_equal(canvas.pixels, np.flipud(canvas.pixels))

    def test_random_renders_match_scalar_oracle(self, rng):
        settings = RenderSettings(canvas_size=24, stroke_weight=2.5)
        grid = GridSpec(6)
        for _ in range(5):
            st = random_stencil(grid, (2, 5), rng)
            mask = GlyphMask.from_bitstring(
                "".join(rng.choice(["0", "1"], size=len(st)))
            )
            got = render(st, mask, settings, grid)
            want = scalar_reference_render(
                st.segments, mask.active_indices(), settings, 6
            )
            assert np.array_equal(got.pixels, want)

    def test_render_depends_only_on_active_set(self, grid, settings, rng):
        st = random_stencil(grid, (6, 12), rng)
        n = len(st)
        perm = list(rng.permutation(n))
        shuffled = Stencil(segments=tuple(st.segments[i] for i in perm), bounds=st.bounds)
        active = sorted(rng.choice(n, size=n // 2, replace=False))
        mask_a = GlyphMask.from_active(active, n)
        mask_b = GlyphMask.from_active([perm.index(i) for i in active], n)
        a = render(st, mask_a, settings, grid)
        b = render(shuffled, mask_b, settings, grid)
        assert np.array_equal(a.pixels, b.pixels)

    def test_mask_length_mismatch_rejected(self, grid, settings, rng):
        st = random_stencil(grid, (5, 10), rng)
        with pytest.raises(ValueError):
            render(st, GlyphMask.empty(len(st) + 1), settings, grid)

    def test_translation_shifts_ink_by_constant_offset(self):
        # canvas 60 / stroke 4 makes one grid step exactly 6 px.
        settings = RenderSettings(canvas_size=60, stroke_weight=4.0)
        grid = GridSpec(10)
        base = stencil_of([(1, 1, 4, 2), (2, 3, 3, 1)])
        moved = stencil_of([(2, 2, 5, 3), (3, 4, 4, 2)])
        a = render(base, GlyphMask.full(2), settings, grid).pixels
        b = render(moved, GlyphMask.full(2), settings, grid).pixels
        ink_a, ink_b = a == 0.0, b == 0.0
        best, best_overlap = None, -1
        for dr in range(-8, 9):
            for dc in range(-8, 9):
                overlap = int(
                    np.count_nonzero(np.roll(ink_a, (dr, dc), axis=(0, 1)) & ink_b)
                )
                if overlap > best_overlap:
                    best, best_overlap = (dr, dc), overlap
        assert best == (6, 6)
        assert best_overlap == int(np.count_nonzero(ink_a))


class TestRmse:
    def test_identical_is_zero(self):
        c = Canvas.blank(8)
        assert rmse(c, c) == 0.0

    def test_black_vs_white_is_one(self):
        black = Canvas(np.zeros((8, 8)))
        white = Canvas.blank(8)
        assert rmse(black, white) == 1.0

    def test_half_differing_pixels(self):
        a = Canvas(np.array([[1.0, 1.0], [1.0, 1.0]]))
        b = Canvas(np.array([[1.0, 0.0], [1.0, 0.0]]))
        assert rmse(a, b) == pytest.approx(math.sqrt(0.5), abs=1e-15)

    def test_size_mismatch_rejected(self):
        with pytest.raises(ValueError):
            rmse(Canvas.blank(8), Canvas.blank(9))

    def test_metric_properties_on_random_triples(self, rng):
        for _ in range(50):
            a, b, c = (Canvas(rng.random((6, 6))) for _ in range(3))
            assert rmse(a, a) == 0.0
            assert rmse(a, b) == rmse(b, a)
            assert rmse(a, c) <= rmse(a, b) + rmse(b, c) + 1e-12


class TestGlyphScore:
    def test_exact_match_scores_one(self, grid, settings, rng):
        st = random_stencil(grid, (4, 8), rng)
        mask = GlyphMask.full(len(st))
        target = render(st, mask, settings, grid)
        assert glyph_score(st, mask, target, settings, grid) == 1.0

    def test_empty_mask_vs_white_scores_one(self, grid, settings, rng):
        st = random_stencil(grid, (4, 8), rng)
        white = Canvas.blank(settings.canvas_size)
        assert glyph_score(st, GlyphMask.empty(len(st)), white, settings, grid) == 1.0

    def test_empty_mask_vs_partially_black(self, grid, settings, rng):
        st = random_stencil(grid, (4, 8), rng)
        size = settings.canvas_size
        px = np.ones((size, size))
        px.ravel()[:100] = 0.0  # fraction f = 100 / size^2 fully black
        score = glyph_score(st, GlyphMask.empty(len(st)), Canvas(px), settings, grid)
        assert score == 1.0 - math.sqrt(100 / size**2)

    def test_ink_never_helps_a_white_target(self, grid, settings, rng):
        white = Canvas.blank(settings.canvas_size)
        for _ in range(10):
            st = random_stencil(grid, (5, 12), rng)
            n = len(st)
            active: list[int] = []
            prev = glyph_score(st, GlyphMask.empty(n), white, settings, grid)
            order = list(rng.permutation(n))
            for i in order[: n // 2]:
                active.append(i)
                cur = glyph_score(
                    st, GlyphMask.from_active(active, n), white, settings, grid
                )
                assert cur <= prev + 1e-15
                prev = cur

    def test_score_always_in_unit_interval(self, grid, settings, rng):
        for _ in range(25):
            st = random_stencil(grid, (3, 10), rng)
            n = len(st)
            mask = GlyphMask.from_bitstring("".join(rng.choice(["0", "1"], size=n)))
            target = Canvas(rng.random((settings.canvas_size, settings.canvas_size)))
            s = glyph_score(st, mask, target, settings, grid)
            assert 0.0 <= s <= 1.0


class TestRenderExpression:
    def test_missing_solution_raises(self, grid, settings, rng):
        st = random_stencil(grid, (4, 8), rng)
        with pytest.raises(KeyError):
            render_expression(st, "A", settings, grid)


class TestPgm:
    def test_round_trip(self, tmp_path, rng):
        canvas = Canvas(np.rint(rng.random((16, 16)) * 255) / 255)
        path = tmp_path / "x.pgm"
        write_pgm(canvas, path)
        back = read_pgm(path)
        assert np.allclose(back, canvas.pixels, atol=1e-9)

    def test_comments_and_whitespace_tolerated(self, tmp_path):
        path = tmp_path / "c.pgm"
        path.write_text("P2 # magic\n# a comment line\n2 2\n255\n0 255\n128  64\n")
        px = read_pgm(path)
        assert px.shape == (2, 2)
        assert px[0, 0] == 0.0 and px[0, 1] == 1.0

    @pytest.mark.parametrize(
        "content",
        [
            "P5\n2 2\n255\n0 0 0 0",
            "P2\n2 2\n255\n0 0 0",
            "P2\n2 2\n255\n0 0 0 300",
            "P2\n2 2\n",
            "P2\n2 2\n255\n0 0 zero 0",
        ],
    )
    def test_malformed_rejected(self, tmp_path, content):
        path = tmp_path / "bad.pgm"
        path.write_text(content)
        with pytest.raises(ValueError):
            read_pgm(path)


class TestLoadTargets:
    def _write_targets(self, directory, chars, size=16):
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "manifest.txt").write_text("\n".join(chars) + "\n")
        for i, ch in enumerate(chars):
            px = np.ones((size, size))
            px[i + 1, :] = 0.0
            write_pgm(Canvas(px), directory / f"{ch}.pgm")

    def test_loads_directory(self, tmp_path):
        self._write_targets(tmp_path / "t", ["A", "B", "C"])
        ts = load_targets(tmp_path / "t")
        assert ts.characters == ("A", "B", "C")
        assert ts.canvas_size == 16
        assert ts.bitmaps["B"].pixels[2, 0] == 0.0

    def test_size_mismatch_rejected(self, tmp_path):
        d = tmp_path / "t"
        self._write_targets(d, ["A", "B"])
        write_pgm(Canvas(np.ones((8, 8))), d / "B.pgm")
        with pytest.raises(ValueError):
            load_targets(d)

    def test_missing_file_rejected(self, tmp_path):
        d = tmp_path / "t"
        self._write_targets(d, ["A", "B"])
        (d / "B.pgm").unlink()
        with pytest.raises(FileNotFoundError):
            load_targets(d)

    def test_missing_manifest_rejected(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_targets(tmp_path)

    def test_duplicate_characters_rejected(self, tmp_path):
        d = tmp_path / "t"
        self._write_targets(d, ["A"])
        (d / "manifest.txt").write_text("A\nA\n")
        with pytest.raises(ValueError):
            load_targets(d)


EXPECTED_ALPHABET_DIGEST = (
    "78f29b048f16bbc203dfa20c8de4e448571b02490cb7f5b017967ae110c665ac"
)


class TestBuiltinAlphabet:
    def test_shape_and_binary_values(self, alphabet):
        assert alphabet.characters == tuple("ABCDEFGHIJKLMNOPQRSTUVWXYZ")
        assert alphabet.canvas_size == 64
        for ch in alphabet.characters:
            px = alphabet.bitmaps[ch].pixels
            assert set(np.unique(px)) <= {0.0, 1.0}
            assert (px == 0.0).sum() > 100  # every letter has real ink

    def test_fixture_digest_frozen(self, alphabet):
        h = hashlib.sha256()
        for ch in alphabet.characters:
            h.update(ch.encode())
            h.update(
                np.rint(alphabet.bitmaps[ch].pixels * 255).astype(np.uint8).tobytes()
            )
        assert h.hexdigest() == EXPECTED_ALPHABET_DIGEST

    def test_letters_are_distinct(self, alphabet):
        blobs = {
            ch: alphabet.bitmaps[ch].pixels.tobytes() for ch in alphabet.characters
        }
        assert len(set(blobs.values())) == 26
