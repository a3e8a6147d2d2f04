"""Thin vertical dipole geometry, uniform segmentation and delta-gap feed."""

from dataclasses import dataclass, field

import numpy as np

from .constants import wavelength, wavenumber
from .errors import EvenSegmentCount, GeometryError


@dataclass(frozen=True)
class DipoleSpec:
    """Z-directed PEC dipole occupying ``[height_h, height_h + length_L]``.

    ``radius_a`` defaults to a thousandth of the free-space wavelength.
    """

    length_L: float
    height_h: float
    frequency: float
    radius_a: float | None = None
    segments_N: int = 41

    def __post_init__(self):
        if self.radius_a is None:
            object.__setattr__(self, "radius_a", self.wavelength / 1000.0)
        validate_spec(self)

    @property
    def wavelength(self):
        return wavelength(self.frequency)

    @property
    def k0(self):
        return wavenumber(self.frequency)


def validate_spec(spec):
    if not spec.length_L > 0:
        raise GeometryError(f"length_L must be positive, got {spec.length_L}")
    if not spec.height_h > 0:
        raise GeometryError(f"height_h must be positive, got {spec.height_h}")
    if not spec.frequency > 0:
        raise GeometryError(f"frequency must be positive, got {spec.frequency}")
    if not spec.radius_a > 0:
        raise GeometryError(f"radius_a must be positive, got {spec.radius_a}")
    if spec.radius_a >= spec.wavelength / 100:
        raise GeometryError(
            f"radius_a={spec.radius_a} is not thin (must be < wavelength/100)")
    n = spec.segments_N
    if int(n) != n or n < 3:
        raise GeometryError(f"segments_N must be an integer >= 3, got {n}")
    if n % 2 == 0:
        raise EvenSegmentCount(f"segments_N must be odd, got {n}")


@dataclass(frozen=True)
class WireMesh:
    """Uniform mesh with ``N + 1`` segments and ``N`` interior rooftop functions.

    Basis function ``n`` (0-based) peaks at ``node_z[n + 1]`` and is supported
    on segments ``n`` (rising) and ``n + 1`` (falling). ``feed_index`` is
    0-based, so the centre function of an ``N = 41`` mesh is index 20.
    """

    spec: DipoleSpec
    node_z: np.ndarray = field(repr=False)
    feed_index: int

    @property
    def N(self):
        return self.spec.segments_N

    @property
    def delta(self):
        return self.spec.length_L / (self.N + 1)

    @property
    def n_segments(self):
        return self.N + 1

    @property
    def basis_peaks(self):
        return self.node_z[1:-1]

    def supports(self):
        """Per basis function, the (start, peak, end) node coordinates."""
        z = self.node_z
        return np.column_stack([z[:-2], z[1:-1], z[2:]])

    def basis_values(self, z):
        """Matrix ``B[i, n]`` of rooftop function ``n`` evaluated at ``z[i]``."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        peaks = self.basis_peaks
        return np.clip(1.0 - np.abs(z[:, None] - peaks[None, :]) / self.delta, 0.0, None)

    def same_as(self, other):
        return self.spec == other.spec


def segment_dipole(spec: DipoleSpec) -> WireMesh:
    validate_spec(spec)
    n_seg = spec.segments_N + 1
    h, L = spec.height_h, spec.length_L
    node_z = h + L * np.arange(n_seg + 1) / n_seg
    node_z[-1] = h + L
    node_z.setflags(write=False)
    return WireMesh(spec=spec, node_z=node_z, feed_index=(spec.segments_N - 1) // 2)


def delta_gap_excitation(mesh: WireMesh, voltage: complex = 1.0) -> np.ndarray:
    V = np.zeros(mesh.N, dtype=complex)
    V[mesh.feed_index] = voltage
    return V
