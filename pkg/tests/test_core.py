from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hsseg.core import GridGeometry, HyperCube, LabelMap, WeightField, pixel_center, validate_cube
from hsseg.errors import (
    ClassOutOfRange,
    IndexOutOfRange,
    InvalidArguments,
    NonFiniteValue,
    NonPowerOfTwoSide,
    ShapeMismatch,
)


def test_valid_cube():
    geom = GridGeometry(2, 16)
    cube = HyperCube(geom, 4, np.arange(1024, dtype=float))
    validate_cube(cube)
    assert cube.data.shape == (256, 4)
    assert geom.N == 256


def test_side_not_power_of_two():
    with pytest.raises(NonPowerOfTwoSide):
        GridGeometry(2, 3)
    raw = SimpleNamespace(geom=SimpleNamespace(d=2, side=3), p=1, data=np.zeros(9))
    with pytest.raises(NonPowerOfTwoSide):
        validate_cube(raw)


def test_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        HyperCube(GridGeometry(2, 4), 2, np.zeros(31))


def test_nan_rejected():
    data = np.zeros(16 * 3)
    data[7] = np.nan
    with pytest.raises(NonFiniteValue):
        HyperCube(GridGeometry(2, 4), 3, data)


def test_cube_is_read_only():
    cube = HyperCube(GridGeometry(1, 4), 1, np.zeros(4))
    with pytest.raises(ValueError):
        cube.data[0, 0] = 1.0


@pytest.mark.parametrize(
    "d, side, i, expected",
    [
        (2, 2, 0, (0.25, 0.25)),
        (2, 2, 3, (0.75, 0.75)),
        (1, 4, 1, (0.375,)),
        (2, 2, 1, (0.25, 0.75)),  # axis 0 slowest
    ],
)
def test_pixel_center(d, side, i, expected):
    assert pixel_center(GridGeometry(d, side), i) == pytest.approx(expected)


def test_pixel_center_out_of_range():
    with pytest.raises(IndexOutOfRange):
        pixel_center(GridGeometry(2, 2), 4)


@given(st.integers(1, 3), st.integers(0, 3))
def test_centers_are_a_bijection_inside_the_cube(d, j):
    geom = GridGeometry(d, 2 ** j)
    centers = np.array([pixel_center(geom, i) for i in range(geom.N)])
    assert len({tuple(c) for c in centers}) == geom.N
    assert np.all((centers > 0) & (centers < 1))
    np.testing.assert_allclose(centers, geom.centers())


def test_label_map_range():
    geom = GridGeometry(1, 4)
    LabelMap(geom, 2, [0, 1, 1, 0])
    with pytest.raises(ClassOutOfRange):
        LabelMap(geom, 2, [0, 2, 1, 0])


def test_weight_field_rows_on_simplex():
    geom = GridGeometry(1, 2)
    wf = WeightField.from_pi(geom, [0.25, 1.0])
    np.testing.assert_allclose(wf.weights, [[0.25, 0.75], [1.0, 0.0]])
    with pytest.raises(InvalidArguments):
        WeightField(geom, 2, [[0.5, 0.6], [1.0, 0.0]])


def test_from_pixel_count():
    assert GridGeometry.from_pixel_count(4096, 2) == GridGeometry(2, 64)
    with pytest.raises(ShapeMismatch):
        GridGeometry.from_pixel_count(8, 2)
