import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from minsurf.imageio import (
    FormatError,
    parse_grid,
    parse_pgm,
    preview_path,
    read_grid,
    read_image,
    to_bytes,
    write_grid,
    write_pgm,
)


def test_grid_layout(tmp_path):
    path = tmp_path / "a.f64grid"
    write_grid(path, np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.5]]))
    data = path.read_bytes()
    assert data.startswith(b"F64GRID\n3 2\n")
    assert len(data) == len(b"F64GRID\n3 2\n") + 48
    assert np.frombuffer(data[-8:], "<f8")[0] == 6.5


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 7), st.integers(1, 7)),
              elements=st.floats(allow_nan=False, allow_infinity=False)))
def test_grid_round_trip_bitwise(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("g") / "x.f64grid"
    write_grid(path, values)
    back = read_grid(path)
    assert back.shape == values.shape
    assert back.tobytes() == np.ascontiguousarray(values).tobytes()


def test_grid_rejects_bad_input(tmp_path):
    with pytest.raises(ValueError):
        write_grid(tmp_path / "x", np.array([[np.inf]]))
    with pytest.raises(FormatError, match="magic"):
        parse_grid(b"F32GRID\n1 1\n" + bytes(8))
    with pytest.raises(FormatError, match="payload"):
        parse_grid(b"F64GRID\n2 1\n" + bytes(8))
    with pytest.raises(FormatError, match="non-finite"):
        parse_grid(b"F64GRID\n1 1\n" + np.array([np.nan], "<f8").tobytes())


def test_pgm_bytes_map_exactly(tmp_path):
    raster = np.arange(256, dtype=np.uint8).reshape(16, 16)
    data = b"P5\n# a comment\n16 16\n# another\n255\n" + raster.tobytes()
    img = parse_pgm(data)
    assert img.dtype == np.float64
    np.testing.assert_array_equal(img, raster.astype(float))


def test_pgm_round_trip(tmp_path):
    img = np.random.default_rng(0).integers(0, 256, (9, 7)).astype(float)
    path = tmp_path / "a.pgm"
    write_pgm(path, img)
    np.testing.assert_array_equal(read_image(path), img)


def test_pgm_rejects_other_variants():
    with pytest.raises(FormatError, match="maxval"):
        parse_pgm(b"P5\n1 1\n65535\n\x00\x00")
    with pytest.raises(FormatError, match="P5"):
        parse_pgm(b"P2\n1 1\n255\n0\n")
    with pytest.raises(FormatError, match="truncated"):
        parse_pgm(b"P5\n4 4\n255\n\x00")


def test_read_image_dispatch(tmp_path):
    path = tmp_path / "x.bin"
    path.write_bytes(b"GIF89a")
    with pytest.raises(FormatError, match="unrecognized"):
        read_image(path)
    write_grid(path, np.eye(3))
    np.testing.assert_array_equal(read_image(path), np.eye(3))


def test_preview_clamps_and_rounds_half_even():
    values = np.array([[-3.0, 0.5, 1.5, 2.5], [254.5, 255.4, 300.0, 127.49]])
    np.testing.assert_array_equal(to_bytes(values), [[0, 0, 2, 2], [254, 255, 255, 127]])


def test_preview_path():
    assert preview_path("out/r.f64grid") == "out/r.preview.pgm"
    assert preview_path("r.dat") == "r.dat.preview.pgm"
