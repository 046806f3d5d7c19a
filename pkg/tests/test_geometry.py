"""Stem line, mask splitting, hull, perimeters, and rectification."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from wiltmetrics import geometry, raster
from wiltmetrics.errors import DegenerateStemError, ValidationError

RES = raster.PixelResolution(0.052)

masks = hnp.arrays(
    np.uint8,
    st.tuples(st.integers(1, 16), st.integers(1, 16)),
    elements=st.integers(0, 1),
)


class TestStemLine:
    def test_vertical_line_exact(self):
        m = np.zeros((10, 10), dtype=np.uint8)
        m[:, 4] = 1
        line = geometry.fit_stem_line(m)
        assert line.alpha == pytest.approx(4.0) and line.beta == pytest.approx(0.0)

    def test_slanted_line_exact(self):
        # pixels exactly on x = 3 + 2y fit with zero residual
        m = np.zeros((5, 15), dtype=np.uint8)
        for y in range(5):
            m[y, 3 + 2 * y] = 1
        line = geometry.fit_stem_line(m)
        assert line.alpha == pytest.approx(3.0, abs=1e-12)
        assert line.beta == pytest.approx(2.0, abs=1e-12)

    def test_least_squares_against_polyfit(self):
        rng = np.random.default_rng(20)
        m = (rng.random((30, 30)) > 0.8).astype(np.uint8)
        ys, xs = np.nonzero(m)
        beta_ref, alpha_ref = np.polyfit(ys, xs, 1)
        line = geometry.fit_stem_line(m)
        assert line.alpha == pytest.approx(alpha_ref, abs=1e-9)
        assert line.beta == pytest.approx(beta_ref, abs=1e-9)

    def test_empty_mask_raises(self):
        with pytest.raises(DegenerateStemError):
            geometry.fit_stem_line(np.zeros((5, 5), dtype=np.uint8))

    def test_single_row_raises(self):
        m = np.zeros((5, 5), dtype=np.uint8)
        m[2, 1:4] = 1
        with pytest.raises(DegenerateStemError):
            geometry.fit_stem_line(m)

    def test_centroid_fallback(self):
        m = np.zeros((5, 5), dtype=np.uint8)
        m[1, 1] = m[1, 3] = 1
        line = geometry.centroid_stem_line(m)
        assert line.alpha == pytest.approx(2.0) and line.beta == 0.0

    def test_centroid_fallback_empty_raises(self):
        with pytest.raises(DegenerateStemError):
            geometry.centroid_stem_line(np.zeros((3, 3), dtype=np.uint8))


class TestSplit:
    def test_tie_goes_left(self):
        m = np.ones((1, 5), dtype=np.uint8)
        halves = geometry.split_mask(m, geometry.StemLine(alpha=2.0, beta=0.0))
        assert halves.left[0].tolist() == [1, 1, 1, 0, 0]
        assert halves.right[0].tolist() == [0, 0, 0, 1, 1]

    @given(masks, st.floats(-5, 20), st.floats(-1, 1))
    @settings(max_examples=80, deadline=None)
    def test_split_partitions(self, m, alpha, beta):
        halves = geometry.split_mask(m, geometry.StemLine(alpha, beta))
        assert np.array_equal(halves.left | halves.right, m)
        assert not np.any(halves.left & halves.right)

    @given(masks, st.floats(-5, 20), st.floats(-1, 1))
    @settings(max_examples=80, deadline=None)
    def test_rectify_preserves_row_counts(self, m, alpha, beta):
        line = geometry.StemLine(alpha, beta)
        halves = geometry.split_mask(m, line)
        rect = geometry.rectify_halves(halves, line)
        assert np.array_equal(rect.left.sum(axis=1), halves.left.sum(axis=1))
        assert np.array_equal(rect.right.sum(axis=1), halves.right.sum(axis=1))

    def test_rectify_mirror_symmetry(self):
        # mirroring about a half-integer stem line swaps the halves exactly
        rng = np.random.default_rng(21)
        m = (rng.random((10, 12)) > 0.6).astype(np.uint8)
        line = geometry.StemLine(alpha=5.5, beta=0.0)  # mirror axis of width 12
        mirrored = m[:, ::-1].copy()
        r1 = geometry.rectify_halves(geometry.split_mask(m, line), line)
        r2 = geometry.rectify_halves(geometry.split_mask(mirrored, line), line)
        w = max(r1.left.shape[1], r2.right.shape[1])

        def pad(a):
            return np.pad(a, ((0, 0), (0, w - a.shape[1])))

        assert np.array_equal(pad(r1.left), pad(r2.right))
        assert np.array_equal(pad(r1.right), pad(r2.left))


class TestProfiles:
    def test_hand_example(self):
        m = np.array([[1, 1, 0], [0, 1, 0]], dtype=np.uint8)
        assert geometry.horizontal_profile(m).tolist() == [2, 1]
        assert geometry.vertical_profile(m).tolist() == [1, 2, 0]


class TestHull:
    def test_rectangle_exact(self):
        m = np.ones((5, 8), dtype=np.uint8)
        hull = geometry.convex_hull(m, raster.PixelResolution(1.0))
        assert hull.area_cm2 == pytest.approx((8 - 1) * (5 - 1))
        assert hull.perimeter_cm == pytest.approx(2 * (7 + 4))
        assert not hull.degenerate

    def test_against_scipy(self):
        sp = pytest.importorskip("scipy.spatial")
        rng = np.random.default_rng(22)
        for _ in range(30):
            m = (rng.random((20, 20)) > 0.7).astype(np.uint8)
            ys, xs = np.nonzero(m)
            if len(xs) < 3 or len({(x, y) for x, y in zip(xs, ys)}) < 3:
                continue
            pts = np.column_stack([xs, ys]).astype(float)
            try:
                ref = sp.ConvexHull(pts)
            except Exception:
                continue  # scipy rejects degenerate (collinear) inputs
            hull = geometry.convex_hull(m, raster.PixelResolution(1.0))
            assert hull.area_cm2 == pytest.approx(ref.volume, abs=1e-9)
            assert hull.perimeter_cm == pytest.approx(ref.area, abs=1e-9)

    @given(masks)
    @settings(max_examples=60, deadline=None)
    def test_all_points_inside_hull(self, m):
        ys, xs = np.nonzero(m)
        if len(xs) == 0:
            with pytest.raises(ValidationError):
                geometry.convex_hull(m, RES)
            return
        hull = geometry.convex_hull(m, RES)
        verts = hull.vertices
        if len(verts) < 3:
            return
        # every mask pixel center lies inside or on the hull polygon
        sx, sy = verts[:, 0], verts[:, 1]
        orientation = np.sign(np.dot(sx, np.roll(sy, -1)) - np.dot(sy, np.roll(sx, -1)))
        for x, y in zip(xs, ys):
            for i in range(len(verts)):
                ax, ay = verts[i]
                bx, by = verts[(i + 1) % len(verts)]
                cross = (bx - ax) * (y - ay) - (by - ay) * (x - ax)
                assert orientation * cross >= -1e-9

    def test_single_pixel_degenerate(self):
        m = np.zeros((5, 5), dtype=np.uint8)
        m[2, 2] = 1
        hull = geometry.convex_hull(m, RES)
        assert hull.degenerate and hull.area_cm2 == 0.0 and hull.perimeter_cm == 0.0

    def test_collinear_degenerate(self):
        m = np.zeros((5, 5), dtype=np.uint8)
        m[2, 1:4] = 1
        hull = geometry.convex_hull(m, raster.PixelResolution(1.0))
        assert hull.degenerate
        assert hull.area_cm2 == 0.0
        assert hull.perimeter_cm == pytest.approx(4.0)  # out-and-back over 2 px

    def test_shoelace_triangle(self):
        assert geometry.polygon_area([(0, 0), (4, 0), (0, 3)]) == pytest.approx(6.0)
        assert geometry.polygon_perimeter([(0, 0), (4, 0), (0, 3)]) == pytest.approx(12.0)


class TestMaskPerimeter:
    def test_single_pixel(self):
        m = np.zeros((3, 3), dtype=np.uint8)
        m[1, 1] = 1
        assert geometry.mask_perimeter(m, raster.PixelResolution(1.0)) == pytest.approx(4.0)

    def test_full_rectangle(self):
        m = np.ones((4, 6), dtype=np.uint8)
        assert geometry.mask_perimeter(m, raster.PixelResolution(1.0)) == pytest.approx(2 * (4 + 6))

    def test_hole_adds_inner_boundary(self):
        m = np.ones((5, 5), dtype=np.uint8)
        m[2, 2] = 0
        assert geometry.mask_perimeter(m, raster.PixelResolution(1.0)) == pytest.approx(20 + 4)
