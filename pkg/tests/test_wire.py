import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lossycma.constants import wavelength
from lossycma.errors import EvenSegmentCount, GeometryError
from lossycma.wire import DipoleSpec, delta_gap_excitation, segment_dipole

LAM = wavelength(1e9)


def test_three_segment_partition():
    spec = DipoleSpec(0.5 * LAM, 0.25 * LAM, 1e9, segments_N=3)
    m = segment_dipole(spec)
    h, L = spec.height_h, spec.length_L
    np.testing.assert_allclose(m.node_z, [h, h + L / 4, h + L / 2, h + 3 * L / 4, h + L], rtol=1e-15)
    assert m.feed_index + 1 == 2


def test_physical_units_mesh():
    spec = DipoleSpec(0.15, 0.075, 1e9, segments_N=41)
    assert spec.wavelength == pytest.approx(0.29979, abs=1e-5)
    m = segment_dipole(spec)
    assert m.n_segments == 42
    assert len(m.node_z) == 43
    assert m.node_z[-1] == pytest.approx(0.225, abs=1e-15)
    assert m.feed_index + 1 == 21


@pytest.mark.parametrize("kw, err", [
    (dict(segments_N=4), EvenSegmentCount),
    (dict(segments_N=1), GeometryError),
    (dict(segments_N=3.5), GeometryError),
    (dict(length_L=0.0), GeometryError),
    (dict(height_h=-0.1), GeometryError),
    (dict(radius_a=LAM / 50), GeometryError),
    (dict(radius_a=0.0), GeometryError),
])
def test_invalid_specs(kw, err):
    base = dict(length_L=0.5 * LAM, height_h=0.25 * LAM, frequency=1e9)
    with pytest.raises(err):
        DipoleSpec(**{**base, **kw})


def test_defaults():
    spec = DipoleSpec(0.5 * LAM, 0.25 * LAM, 1e9)
    assert spec.segments_N == 41
    assert spec.radius_a == pytest.approx(LAM / 1000)
    assert spec.k0 == pytest.approx(2 * np.pi / LAM)


def test_delta_gap():
    m = segment_dipole(DipoleSpec(0.5 * LAM, 0.25 * LAM, 1e9))
    V = delta_gap_excitation(m, 1 + 0j)
    assert np.count_nonzero(V) == 1
    assert V[20] == 1
    assert not np.any(delta_gap_excitation(m, 0))
    V = delta_gap_excitation(m, 2 - 3j)
    assert V[m.feed_index] == 2 - 3j


def test_mesh_is_deterministic_and_frozen():
    spec = DipoleSpec(0.5 * LAM, 0.25 * LAM, 1e9)
    a, b = segment_dipole(spec), segment_dipole(spec)
    assert np.array_equal(a.node_z, b.node_z)
    assert a.same_as(b)
    with pytest.raises(ValueError):
        a.node_z[0] = 0.0


@settings(max_examples=60, deadline=None)
@given(L=st.floats(0.05, 3.0), h=st.floats(0.01, 20.0), half=st.integers(1, 60))
def test_mesh_properties(L, h, half):
    N = 2 * half + 1
    spec = DipoleSpec(L * LAM, h * LAM, 1e9, segments_N=N)
    m = segment_dipole(spec)
    z = m.node_z
    assert z[0] == spec.height_h
    assert z[-1] == spec.height_h + spec.length_L
    assert np.all(np.diff(z) > 0)
    assert m.supports().shape == (N, 3)
    # rooftops form a partition of unity away from the two end segments
    zz = np.linspace(z[1], z[-2], 257)
    np.testing.assert_allclose(m.basis_values(zz).sum(axis=1), 1.0, atol=1e-12)
    # every interior segment is the rising piece of one function and the falling piece of another
    s = m.supports()
    assert s[0, 0] == z[0] and s[-1, 2] == z[-1]
    np.testing.assert_array_equal(s[1:, 0], s[:-1, 1])
