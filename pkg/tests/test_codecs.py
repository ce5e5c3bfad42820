import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phavforge.codecs import (
    FAR_PLANE_M,
    UnknownClassError,
    UnknownColorError,
    default_palette,
    depth_decode,
    depth_encode,
    flow_decode,
    flow_encode,
    load_palette,
    palette_inverse,
    palette_lookup,
)


def test_depth_examples():
    assert depth_encode(0.01) == 1
    assert depth_encode(655.35) == 65535
    assert depth_encode(0.0) == 0
    assert depth_encode(0.005) == 1  # ties round up
    assert depth_encode(1e6) == 65535
    assert depth_decode(12345) == 123.45
    assert FAR_PLANE_M == 655.35


@given(st.floats(0.0, 655.35))
def test_depth_round_trip(d):
    assert abs(depth_decode(depth_encode(d)) - d) <= 0.005 + 1e-12


def test_depth_array_and_errors():
    d = np.linspace(0, 700, 1001)
    q = depth_encode(d)
    assert q.dtype == np.uint16 and q.shape == d.shape
    assert np.all(np.diff(q.astype(int)) >= 0)
    for bad in (-0.01, float("nan")):
        with pytest.raises(ValueError):
            depth_encode(bad)


@given(st.integers(1, 4096), st.floats(-1.0, 1.0))
def test_flow_round_trip(dim, frac):
    u = frac * dim
    assert abs(flow_decode(flow_encode(u, dim), dim) - u) <= dim / 65535 + 1e-9


def test_flow_examples():
    assert flow_encode(-640, 640) == 0
    assert flow_encode(640, 640) == 65535
    assert flow_encode(0.0, 640) == 32768
    with pytest.raises(ValueError):
        flow_encode(641, 640)
    with pytest.raises(ValueError):
        flow_encode(0, 0)


def test_palette_shape():
    p = default_palette()
    assert len(p) == 63
    assert len(p.human_classes()) == 27
    assert len(set(p.colors.values())) == 63
    for name in p.classes():
        assert palette_inverse(palette_lookup(name)) == name


def test_palette_spot_checks():
    assert palette_lookup("Road") == (100, 60, 100)
    assert palette_lookup("Head") == (220, 20, 60)
    assert palette_inverse((220, 20, 60)) == "Head"


def test_palette_errors(tmp_path):
    with pytest.raises(UnknownColorError):
        palette_inverse((0, 0, 0))
    with pytest.raises(UnknownClassError):
        palette_lookup("Dragon")
    assert issubclass(UnknownColorError, KeyError)
    dup = tmp_path / "p.csv"
    dup.write_text("class,group,r,g,b\nA,x,1,2,3\nB,x,1,2,3\n")
    with pytest.raises(ValueError, match="share"):
        load_palette(dup)
