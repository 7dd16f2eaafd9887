import itertools

import numpy as np
import pytest

from stencilforge.core import (
    GridSpec,
    InfeasibleStencilError,
    Segment,
    Stencil,
    is_valid,
    point_on_segment,
    random_stencil,
    segment,
    segment_contains,
    segment_midpoint,
)


def stencil_of(coords, bounds=(1, 40)):
    return Stencil(segments=tuple(segment(*c) for c in coords), bounds=bounds)


class TestSegment:
    def test_canonical_orders_endpoints(self):
        assert segment(4, 4, 0, 0) == Segment(0, 0, 4, 4)
        assert segment(0, 0, 4, 4) == Segment(0, 0, 4, 4)
        assert segment(2, 5, 2, 1) == Segment(2, 1, 2, 5)

    def test_canonicalization_is_idempotent(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            coords = [int(v) for v in rng.integers(0, 10, size=4)]
            once = Segment(*coords).canonical()
            assert once.canonical() == once

    def test_midpoints(self):
        assert segment_midpoint(Segment(0, 0, 4, 0)) == (2.0, 0.0)
        assert segment_midpoint(Segment(1, 1, 2, 2)) == (1.5, 1.5)
        assert segment_midpoint(Segment(0, 3, 5, 0)) == (2.5, 1.5)

    def test_point_on_segment_exact(self):
        s = segment(0, 0, 6, 3)
        assert point_on_segment(2, 1, s)
        assert point_on_segment(0, 0, s)
        assert not point_on_segment(1, 1, s)  # off the line
        assert not point_on_segment(8, 4, s)  # collinear but beyond the box


class TestIsValid:
    def test_collinear_sub_segment_rejected(self):
        grid = GridSpec(5)
        assert not is_valid(stencil_of([(0, 0, 0, 4), (0, 1, 0, 3)]), grid)

    def test_crossing_segments_allowed(self):
        grid = GridSpec(5)
        assert is_valid(stencil_of([(0, 0, 4, 4), (0, 4, 4, 0)]), grid)

    def test_null_segment_rejected(self):
        grid = GridSpec(5)
        st = Stencil(segments=(Segment(2, 2, 2, 2),), bounds=(1, 40))
        assert not is_valid(st, grid)

    def test_duplicate_segments_rejected(self):
        grid = GridSpec(5)
        st = Stencil(segments=(Segment(0, 0, 3, 0), Segment(0, 0, 3, 0)), bounds=(1, 40))
        assert not is_valid(st, grid)

    def test_out_of_grid_rejected(self):
        grid = GridSpec(5)
        assert not is_valid(stencil_of([(0, 0, 5, 0)]), grid)
        assert is_valid(stencil_of([(0, 0, 4, 0)]), grid)

    def test_count_bounds_enforced(self):
        grid = GridSpec(5)
        st = stencil_of([(0, 0, 4, 0)], bounds=(2, 40))
        assert not is_valid(st, grid)
        st = stencil_of([(0, 0, 4, 0), (0, 1, 4, 1), (0, 2, 4, 2)], bounds=(1, 2))
        assert not is_valid(st, grid)

    def test_containment_checked_both_directions(self):
        # The shorter segment listed first must still be caught.
        grid = GridSpec(6)
        assert not is_valid(stencil_of([(0, 1, 0, 3), (0, 0, 0, 4)]), grid)

    def test_shared_endpoint_is_not_containment(self):
        grid = GridSpec(10)
        assert is_valid(stencil_of([(6, 0, 6, 4), (6, 4, 6, 9)]), grid)

    def test_non_canonical_order_rejected(self):
        grid = GridSpec(5)
        st = Stencil(segments=(Segment(4, 4, 0, 0),), bounds=(1, 40))
        assert not is_valid(st, grid)

    def test_order_insensitive(self, rng):
        grid = GridSpec(10)
        for _ in range(50):
            st = random_stencil(grid, (5, 15), rng)
            perm = rng.permutation(len(st.segments))
            shuffled = Stencil(
                segments=tuple(st.segments[i] for i in perm), bounds=st.bounds
            )
            assert is_valid(shuffled, grid)


class TestSegmentContains:
    def test_self_is_not_contained(self):
        s = segment(0, 0, 4, 4)
        assert not segment_contains(s, s)

    def test_diagonal_subsegment(self):
        assert segment_contains(segment(0, 0, 6, 6), segment(2, 2, 4, 4))
        assert not segment_contains(segment(2, 2, 4, 4), segment(0, 0, 6, 6))

    def test_parallel_not_contained(self):
        assert not segment_contains(segment(0, 0, 6, 0), segment(0, 1, 6, 1))


class TestRandomStencil:
    def test_count_within_bounds_and_valid(self, rng):
        grid = GridSpec(10)
        for _ in range(20):
            st = random_stencil(grid, (20, 40), rng)
            assert 20 <= len(st) <= 40
            assert is_valid(st, grid)

    def test_density_two_draws_one_of_six(self):
        # C(4, 2) = 6 possible canonical segments on a 2x2 grid.
        points = [(0, 0), (0, 1), (1, 0), (1, 1)]
        universe = {
            segment(*p, *q) for p, q in itertools.combinations(points, 2)
        }
        assert len(universe) == 6
        grid = GridSpec(2)
        seen = set()
        for i in range(60):
            st = random_stencil(grid, (1, 1), np.random.default_rng(i))
            assert len(st) == 1
            assert st.segments[0] in universe
            seen.add(st.segments[0])
        assert len(seen) == 6  # all six reachable

    def test_seed_determinism(self):
        grid = GridSpec(10)
        a = random_stencil(grid, (10, 40), np.random.default_rng(42))
        b = random_stencil(grid, (10, 40), np.random.default_rng(42))
        assert a.segments == b.segments

    def test_infeasible_bounds_raise(self):
        # Only 6 distinct segments exist on a 2x2 grid.
        grid = GridSpec(2)
        with pytest.raises(InfeasibleStencilError):
            random_stencil(grid, (7, 7), np.random.default_rng(0), max_rejections=500)

    def test_rejects_bad_bounds(self):
        with pytest.raises(ValueError):
            random_stencil(GridSpec(5), (0, 4), np.random.default_rng(0))


class TestGridSpec:
    def test_density_minimum(self):
        with pytest.raises(ValueError):
            GridSpec(1)
        assert GridSpec(2).density == 2
