"""Galerkin method-of-moments impedance matrices for the vertical dipole.

Rooftop basis and testing functions on a uniform mesh. The Pocklington
operator ``(k0^2 + d^2/dz^2)`` is moved onto the basis derivatives by
integration by parts, which flips the sign of the charge term for kernels
that depend on ``z + z'`` (image charges have opposite sign). The resulting
matrix is

    Z_mn = j eta0/k0 * sum_{segment pairs} [k0^2 <f_m, G f_n> -+ <f_m', G f_n'>]

with ``-`` for the direct and ``+`` for the reflected kernel; the overall
sign makes ``Re(Z)`` the (positive semidefinite) radiation operator.

Because the mesh is uniform, every segment-pair double integral reduces to
a one-dimensional integral over the difference (direct kernel) or sum
(reflected kernel) of the axial coordinates with a polynomial weight. The
1-D integrals are evaluated with Gauss-Legendre after the substitution
``x = a sinh(s)``, which cancels the thin-wire ``1/sqrt(a^2 + x^2)`` peak.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from numpy.polynomial.legendre import leggauss

from .constants import ETA0
from .errors import FitMissing, SingularMatrix, SingularSelfTerm
from .greens import FOUR_PI, ComplexImageSet
from .wire import WireMesh, delta_gap_excitation

log = logging.getLogger(__name__)

_PIECES = ("r", "f")
_SHIFT = {"r": 0, "f": 1}       # rising piece of basis n is segment n, falling is n + 1
_SLOPE = {"r": 1.0, "f": -1.0}
_SHAPE = {"r": lambda x: x, "f": lambda x: 1.0 - x, "1": lambda x: np.ones_like(x)}
_KEYS = ("rr", "rf", "fr", "ff", "11")


def _weights(nu, mode):
    """Polynomial weights of a unit-segment double integral.

    ``mode="diff"``: ``W(nu) = int phi_p(t) phi_q(t - nu) dt`` for ``nu`` in [-1, 1];
    ``mode="sum"``:  ``W(nu) = int phi_p(t) phi_q(nu - t) dt`` for ``nu`` in [0, 2].
    """
    g, w = leggauss(4)
    nu = np.asarray(nu, dtype=float)
    if mode == "diff":
        lo, hi = np.maximum(0.0, nu), np.minimum(1.0, 1.0 + nu)
    else:
        lo, hi = np.maximum(0.0, nu - 1.0), np.minimum(1.0, nu)
    half = 0.5 * (hi - lo)
    tau = half[..., None] * (g + 1.0) + lo[..., None]
    other = tau - nu[..., None] if mode == "diff" else nu[..., None] - tau
    return {key: half * np.sum(w * _SHAPE[key[0]](tau) * _SHAPE[key[1]](other), axis=-1)
            for key in _KEYS}


def _sinh_rule(x1, x2, a, nq):
    """Nodes and weights for ``int_{x1}^{x2} f(x) dx`` mapped through ``x = a sinh(s)``."""
    g, w = leggauss(nq)
    s1, s2 = np.arcsinh(x1 / a), np.arcsinh(x2 / a)
    half = 0.5 * (s2 - s1)
    s = half[..., None] * (g + 1.0) + s1[..., None]
    x = a * np.sinh(s)
    wx = half[..., None] * w * a * np.cosh(s)
    return x, wx


def _pair_integrals(offsets, delta, a, kernel, mode, nq, shift=0.0):
    """``int int phi_p(t) phi_q(t') K(x) dt dt'`` for each integer segment offset.

    The kernel argument is ``x = (offset + nu) * delta + shift`` where ``nu``
    is the normalized difference (``mode="diff"``) or sum (``mode="sum"``)
    of the local coordinates. The sinh map is centred on ``x = 0``, where the
    kernel peaks.
    """
    offsets = np.asarray(offsets, dtype=float)
    halves = ((-1.0, 0.0), (0.0, 1.0)) if mode == "diff" else ((0.0, 1.0), (1.0, 2.0))
    out = {key: np.zeros(len(offsets), dtype=complex) for key in _KEYS}
    for n1, n2 in halves:
        x, wx = _sinh_rule((offsets + n1) * delta + shift, (offsets + n2) * delta + shift, a, nq)
        nu = (x - shift) / delta - offsets[:, None]
        W = _weights(nu, mode)
        K = kernel(x)
        for key in _KEYS:
            out[key] += np.sum(wx * K * W[key], axis=1) * delta
    return out


def _combine(I, idx_fn, N, charge_sign, k0, delta, symmetric_offsets):
    m = np.arange(N)[:, None]
    n = np.arange(N)[None, :]
    Z = np.zeros((N, N), dtype=complex)
    for p in _PIECES:
        for q in _PIECES:
            off = idx_fn(m + _SHIFT[p], n + _SHIFT[q])
            if symmetric_offsets:
                # I_pq(-D) = I_qp(D) for an even kernel
                pos = off >= 0
                vec = np.where(pos, I[p + q][np.abs(off)], I[q + p][np.abs(off)])
            else:
                vec = I[p + q][off]
            Z += k0**2 * vec + charge_sign * _SLOPE[p] * _SLOPE[q] / delta**2 * I["11"][np.abs(off)]
    return Z


def direct_matrix(mesh: WireMesh, nq=32):
    spec = mesh.spec
    a, k0, delta, N = spec.radius_a, spec.k0, mesh.delta, mesh.N
    if not a > 0:
        raise SingularSelfTerm("thin-wire self term needs a positive radius")

    def kernel(x):
        R = np.sqrt(a * a + x * x)
        return np.exp(-1j * k0 * R) / (FOUR_PI * R)

    I = _pair_integrals(np.arange(N + 1), delta, a, kernel, "diff", nq)
    Z = _combine(I, lambda so, ss: so - ss, N, -1.0, k0, delta, True)
    return 1j * ETA0 / k0 * Z


def reflected_matrix(mesh: WireMesh, terms, nq=24):
    """Contribution of reflected point sources ``(coef, v)`` at ``z + z' - j v``."""
    spec = mesh.spec
    a, k0, delta, N, h = spec.radius_a, spec.k0, mesh.delta, mesh.N, spec.height_h
    if not terms:
        return np.zeros((N, N), dtype=complex)

    def kernel(w):
        out = np.zeros(w.shape, dtype=complex)
        for coef, v in terms:
            d = np.sqrt(a * a + (w - 1j * v) ** 2 + 0j)
            out += coef * np.exp(-1j * k0 * d) / (FOUR_PI * d)
        return out

    I = _pair_integrals(np.arange(2 * N + 1), delta, a, kernel, "sum", nq, shift=2.0 * h)
    # J_rf and J_fr agree analytically; average away the quadrature asymmetry
    avg = 0.5 * (I["rf"] + I["fr"])
    I["rf"], I["fr"] = avg, avg
    Z = _combine(I, lambda so, ss: so + ss, N, +1.0, k0, delta, False)
    return 1j * ETA0 / k0 * Z


def kernel_terms(kernel):
    """Normalize a kernel selector to (tag, reflected terms, images)."""
    if kernel is None or kernel == "free":
        return "free", [], None
    if kernel == "pec":
        return "pec", [(1.0, 0j)], None
    if kernel == "lossy":
        raise FitMissing("lossy kernel requires a fitted ComplexImageSet")
    if isinstance(kernel, ComplexImageSet):
        return "lossy", kernel.reflected_terms(), kernel
    raise ValueError(f"unknown kernel {kernel!r}")


@dataclass(frozen=True)
class ImpedanceSystem:
    mesh: WireMesh
    kernel: str
    Z: np.ndarray = field(repr=False)
    R_o: np.ndarray = field(repr=False)
    X_o: np.ndarray = field(repr=False)
    R_L: np.ndarray = field(repr=False)
    X_L: np.ndarray = field(repr=False)
    V: np.ndarray = field(repr=False)
    images: ComplexImageSet | None = None

    @property
    def N(self):
        return self.mesh.N

    @property
    def R_LG(self):
        return self.R_o + self.R_L

    @property
    def X_LG(self):
        return self.X_o + self.X_L

    @property
    def Z_o(self):
        return self.R_o + 1j * self.X_o

    def symmetry_error(self):
        return np.max(np.abs(self.Z - self.Z.T)) / np.max(np.abs(self.Z))

    def with_excitation(self, V):
        V = np.asarray(V, dtype=complex)
        if V.shape != (self.N,):
            raise ValueError("excitation length does not match the mesh")
        return ImpedanceSystem(self.mesh, self.kernel, self.Z, self.R_o, self.X_o,
                               self.R_L, self.X_L, V, self.images)


def assemble(mesh: WireMesh, kernel="free", voltage=1.0, nq=32, nq_reflected=24):
    tag, terms, images = kernel_terms(kernel)
    Zd = direct_matrix(mesh, nq)
    Zr = reflected_matrix(mesh, terms, nq_reflected)
    Z = Zd + Zr
    mats = [np.ascontiguousarray(x) for x in (Z, Zd.real, Zd.imag, Zr.real, Zr.imag)]
    for x in mats:
        x.setflags(write=False)
    V = delta_gap_excitation(mesh, voltage)
    return ImpedanceSystem(mesh, tag, *mats, V=V, images=images)


def solve_direct(sys: ImpedanceSystem, V=None):
    V = sys.V if V is None else np.asarray(V, dtype=complex)
    if not np.any(V):
        return np.zeros_like(V)
    cond = np.linalg.cond(sys.Z)
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularMatrix("impedance matrix is singular", cond)
    lu = sla.lu_factor(sys.Z)
    J = sla.lu_solve(lu, V)
    resid = np.linalg.norm(sys.Z @ J - V) / np.linalg.norm(V)
    if resid > 1e-10:
        raise SingularMatrix(f"direct solve residual {resid:.2e} exceeds 1e-10", cond)
    return J


def input_impedance(sys: ImpedanceSystem, J):
    f = sys.mesh.feed_index
    return sys.V[f] / J[f]


# -- export ------------------------------------------------------------------

def write_binary(matrix, path):
    """Row-major, little-endian complex128 (re/im interleaved), no header."""
    np.ascontiguousarray(matrix, dtype="<c16").tofile(path)


def read_binary(path, N):
    return np.fromfile(path, dtype="<c16").reshape(N, N)


def write_csv(matrix, path):
    """One row per matrix row; columns alternate real and imaginary parts."""
    M = np.asarray(matrix, dtype=complex)
    N = M.shape[1]
    inter = np.empty((M.shape[0], 2 * N))
    inter[:, 0::2] = M.real
    inter[:, 1::2] = M.imag
    header = ",".join(f"re_{j},im_{j}" for j in range(N))
    np.savetxt(path, inter, delimiter=",", header=header, comments="", fmt="%.8e")
