"""Near fields, far-field patterns and far-sphere inner products.

Near fields use the same kernel split as the impedance matrix: the vector
potential carries ``G_d + G_r`` and the charge (scalar-potential) term
carries ``G_d - G_r``, where ``G_r`` is the sum of reflected point sources
at ``z + z' - j v``.

Far fields are the free-space radiation integral of the dipole current
alone; with ``(1/eta0) * sphere integral of |E|^2`` this reproduces the
quadratic form ``J^H R_o J`` of the radiation operator.
"""

import csv
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .constants import ETA0, EPS0, MU0
from .errors import GridMismatch, PointOnWire
from .greens import FOUR_PI
from .mom import kernel_terms
from .wire import WireMesh


# -- near fields -----------------------------------------------------------------

@dataclass(frozen=True)
class FieldCut:
    points: np.ndarray
    E: np.ndarray = field(repr=False)
    H: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.points)

    def to_csv(self, path):
        cols = ["x", "y", "z"] + [f"{part}_{c}{ax}" for c in "EH" for ax in "xyz" for part in ("re", "im")]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for p, e, h in zip(self.points, self.E, self.H):
                vals = list(p)
                for v in (*e, *h):
                    vals += [v.real, v.imag]
                w.writerow([f"{x:.8e}" for x in vals])

    def to_gnuplot(self, path):
        """Whitespace-separated columns: x y z |Ex| |Ey| |Ez| |Hx| |Hy| |Hz|."""
        data = np.column_stack([self.points, np.abs(self.E), np.abs(self.H)])
        np.savetxt(path, data, fmt="%.8e", header="x y z |Ex| |Ey| |Ez| |Hx| |Hy| |Hz|")


def _dG_over_d(d, k0):
    """``(dG/dd) / d`` for ``G = exp(-j k0 d) / (4 pi d)``."""
    G = np.exp(-1j * k0 * d) / (FOUR_PI * d)
    return G, -(1j * k0 + 1.0 / d) * G / d


def _current_samples(J, mesh: WireMesh, nq):
    """Gauss nodes on every segment with the interpolated current and its slope."""
    g, w = leggauss(nq)
    z0 = mesh.node_z[:-1]
    dz = np.diff(mesh.node_z)
    nodes_J = np.concatenate([[0.0], np.asarray(J, dtype=complex), [0.0]])
    t = 0.5 * (g + 1.0)
    zq = z0[:, None] + dz[:, None] * t[None, :]
    Jq = nodes_J[:-1, None] * (1 - t) + nodes_J[1:, None] * t
    dJ = (np.diff(nodes_J) / dz)[:, None] * np.ones_like(t)
    wq = 0.5 * dz[:, None] * w[None, :]
    return zq.ravel(), Jq.ravel(), dJ.ravel(), wq.ravel()


def near_fields(J, mesh: WireMesh, kernel, points, nq=16):
    """Total E and H at Cartesian ``points`` above the interface."""
    _, terms, _ = kernel_terms(kernel)
    spec = mesh.spec
    k0 = spec.k0
    omega = k0 / np.sqrt(MU0 * EPS0)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    rho = np.hypot(x, y)
    on_wire = (rho < spec.radius_a) & (z >= mesh.node_z[0]) & (z <= mesh.node_z[-1])
    if np.any(on_wire):
        raise PointOnWire(f"{int(on_wire.sum())} observation point(s) inside the wire")
    E = np.zeros((len(pts), 3), dtype=complex)
    H = np.zeros((len(pts), 3), dtype=complex)
    if not np.any(J):
        return FieldCut(pts, E, H)

    zq, Jq, dJq, wq = _current_samples(J, mesh, nq)
    r2 = rho[:, None] ** 2
    # direct
    zd = z[:, None] - zq[None, :]
    d = np.sqrt(r2 + zd**2)
    G, Gd = _dG_over_d(d, k0)
    vec = G.copy()            # enters the vector potential
    drho_vec = Gd.copy()      # (1/rho) d/drho of the vector kernel
    drho_chg = Gd.copy()      # (1/rho) d/drho of the charge kernel
    dz_chg = Gd * zd          # d/dz of the charge kernel
    for coef, v in terms:
        w = z[:, None] + zq[None, :] - 1j * v
        dc = np.sqrt(r2 + w**2 + 0j)
        Gc, Gcd = _dG_over_d(dc, k0)
        vec = vec + coef * Gc
        drho_vec = drho_vec + coef * Gcd
        drho_chg = drho_chg - coef * Gcd
        dz_chg = dz_chg - coef * Gcd * w
    Jw, dJw = Jq * wq, dJq * wq
    c = -1j / (omega * EPS0)
    Ez = c * (k0**2 * (vec @ Jw) + dz_chg @ dJw)
    Erho = c * rho * (drho_chg @ dJw)
    Hphi = -rho * (drho_vec @ Jw)
    with np.errstate(invalid="ignore", divide="ignore"):
        cphi = np.where(rho > 0, x / np.where(rho > 0, rho, 1.0), 1.0)
        sphi = np.where(rho > 0, y / np.where(rho > 0, rho, 1.0), 0.0)
    E[:, 0], E[:, 1], E[:, 2] = Erho * cphi, Erho * sphi, Ez
    H[:, 0], H[:, 1] = -Hphi * sphi, Hphi * cphi
    return FieldCut(pts, E, H)


def line_cut(x_range, height, n=101, y=0.0):
    """Points along the x axis at a fixed height."""
    xs = np.linspace(x_range[0], x_range[1], n)
    return np.column_stack([xs, np.full(n, y), np.full(n, height)])


def rms_difference(a: FieldCut, b: FieldCut, which="E"):
    """``sqrt(sum |a - b|^2 / sum |b|^2)`` over all points and components."""
    A, B = getattr(a, which), getattr(b, which)
    return float(np.sqrt(np.sum(np.abs(A - B) ** 2) / np.sum(np.abs(B) ** 2)))


# -- far fields ------------------------------------------------------------------

@dataclass(frozen=True)
class SphereGrid:
    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray = field(repr=False)   # (n_theta, n_phi), sums to 4 pi

    def same_as(self, other):
        return (self.theta.shape == other.theta.shape and self.phi.shape == other.phi.shape
                and np.array_equal(self.theta, other.theta) and np.array_equal(self.phi, other.phi))


def sphere_grid(n_theta=64, n_phi=128):
    """Gauss-Legendre in cos(theta) times a uniform phi rule."""
    x, w = leggauss(n_theta)
    theta = np.arccos(x[::-1])
    wt = w[::-1]
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    weights = np.outer(wt, np.full(n_phi, 2 * np.pi / n_phi))
    return SphereGrid(theta, phi, weights)


@dataclass(frozen=True)
class SpherePattern:
    grid: SphereGrid
    E_theta: np.ndarray = field(repr=False)
    E_phi: np.ndarray = field(repr=False)

    def power(self):
        return float(np.real(sphere_inner(self, self)))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["theta", "phi", "re_Etheta", "im_Etheta", "re_Ephi", "im_Ephi"])
            for i, t in enumerate(self.grid.theta):
                for j, p in enumerate(self.grid.phi):
                    et, ep = self.E_theta[i, j], self.E_phi[i, j]
                    w.writerow([f"{v:.8e}" for v in (t, p, et.real, et.imag, ep.real, ep.imag)])


def far_field(J, mesh: WireMesh, grid: SphereGrid | None = None):
    """Far-zone pattern of the wire current with ``exp(-j k0 r)/r`` removed."""
    grid = sphere_grid() if grid is None else grid
    k0 = mesh.spec.k0
    delta = mesh.delta
    zc = mesh.basis_peaks
    ct = np.cos(grid.theta)
    xi = k0 * ct
    # Fourier transform of a rooftop of half-width delta
    shape = delta * np.sinc(xi * delta / (2 * np.pi)) ** 2
    phase = np.exp(1j * np.outer(xi, zc))
    F = (shape[:, None] * phase) @ np.asarray(J, dtype=complex)
    Et = 1j * ETA0 * k0 / FOUR_PI * np.sin(grid.theta) * F
    Et = np.repeat(Et[:, None], len(grid.phi), axis=1)
    return SpherePattern(grid, Et, np.zeros_like(Et))


def sphere_inner(Em: SpherePattern, En: SpherePattern):
    """``(1/eta0) * sphere integral of conj(E_m) . E_n``."""
    if not Em.grid.same_as(En.grid):
        raise GridMismatch("patterns are sampled on different sphere grids")
    integrand = np.conj(Em.E_theta) * En.E_theta + np.conj(Em.E_phi) * En.E_phi
    return complex(np.sum(Em.grid.weights * integrand) / ETA0)


def orthogonality_report(modes, sys, K=5, grid=None):
    """Pairwise matrix-form and sphere-quadrature cross powers of the first ``K`` modes.

    Each row holds ``(m, n, matrix, quadrature, loss)`` with 1-based indices:
    ``matrix`` is ``|J_m^T R_o J_n|``, ``quadrature`` the sphere inner product
    magnitude, ``loss`` is ``|J_m^T R_L J_n|``, all normalized by
    ``sqrt(P_m P_n)`` with ``P = J^T R_o J``.
    """
    grid = sphere_grid() if grid is None else grid
    K = min(K, int(modes.n_resolved))
    J = modes.modes[:, :K]
    pats = [far_field(J[:, i], sys.mesh, grid) for i in range(K)]
    G = J.T @ sys.R_o @ J
    GL = J.T @ sys.R_L @ J
    P = np.diag(G)
    rows = []
    for m in range(K):
        for n in range(m + 1, K):
            s = np.sqrt(P[m] * P[n])
            q = sphere_inner(pats[m], pats[n])
            rows.append((m + 1, n + 1, abs(G[m, n]) / s, abs(q) / s, abs(GL[m, n]) / s))
    return rows
