"""Characteristic-mode eigenproblems and modal expansions.

Four formulations share one engine, the real symmetric pencil ``A u = lam B u``:

============  =========  =========
formulation   A          B
============  =========  =========
isolated      X_o        R_o
pec           X_LG       R_LG      (PEC ground system)
conventional  X_LG       R_LG      (lossy ground system)
proposed      X_LG       R_o       (lossy ground system)
============  =========  =========

The radiation operator of a thin dipole is positive definite only in exact
arithmetic. Its high-order spectrum decays below machine precision, so a
plain Cholesky of ``B`` fails at ordinary mesh densities. The solver instead
factors the shifted matrix ``C = sigma B - A``, which is safely definite
(higher-order modes are strongly capacitive), solves ``A u = mu C u`` and
maps back with ``lam = sigma mu / (1 + mu)``.
"""

import json
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import NotPositiveDefinite, SingularPMatrix
from .mom import ImpedanceSystem

log = logging.getLogger(__name__)

FORMULATIONS = ("isolated", "pec", "conventional", "proposed")

# Modes whose radiated power (max-entry normalization) falls below this
# fraction of the strongest mode are below the numerical floor of R_o.
RESOLVED_POWER_FLOOR = 1e-7


def gen_eig_sym(A, B):
    """Solve ``A u = lam B u`` by Cholesky reduction of ``B``.

    Returns eigenvalues in ascending order and ``B``-orthonormal eigenvectors.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    try:
        Lc = sla.cholesky(B, lower=True)
    except sla.LinAlgError as exc:
        raise NotPositiveDefinite(f"right-hand matrix is not positive definite: {exc}") from None
    S = sla.solve_triangular(Lc, sla.solve_triangular(Lc, A, lower=True).T, lower=True)
    lam, W = sla.eigh(0.5 * (S + S.T))
    U = sla.solve_triangular(Lc.T, W, lower=False)
    return lam, U


def shifted_pencil(A, B, sigma=10.0, max_tries=8):
    """Eigenpairs of ``A u = lam B u`` for positive semidefinite ``B``.

    Returns ``(lam, U, sigma)`` with ``lam`` ascending in the shifted
    parameter. Raises NotPositiveDefinite if no shift in
    ``sigma * 10**k`` makes ``sigma B - A`` definite.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    for _ in range(max_tries):
        C = sigma * B - A
        try:
            mu, U = sla.eigh(A, 0.5 * (C + C.T))
        except sla.LinAlgError:
            sigma *= 10.0
            continue
        # mu = -1 corresponds to lam = infinity (exact null space of B)
        with np.errstate(divide="ignore"):
            lam = sigma * mu / (1.0 + mu)
        return lam, U, sigma
    raise NotPositiveDefinite("no shift made sigma*B - A positive definite")


def normalize_modes(U):
    """Scale each column so its largest-magnitude entry is exactly +1."""
    U = np.array(U, dtype=float, copy=True)
    idx = np.argmax(np.abs(U), axis=0)
    peak = U[idx, np.arange(U.shape[1])]
    U /= peak
    U[idx, np.arange(U.shape[1])] = 1.0
    return U


@dataclass(frozen=True)
class ModeSet:
    formulation: str
    eigenvalues: np.ndarray
    modes: np.ndarray = field(repr=False)   # columns, max entry +1
    A: np.ndarray = field(repr=False)
    B: np.ndarray = field(repr=False)
    resolved: np.ndarray = field(repr=False)
    shift: float | None = None
    definite: bool = True
    mesh: object = field(default=None, repr=False)

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def n_resolved(self):
        return int(np.count_nonzero(self.resolved))

    def mode(self, n):
        """Mode ``n`` (0-based) as a read-only view."""
        return self.modes[:, n]

    def residuals(self):
        """``|A u - lam B u| / ((|A| + |lam| |B|) |u|)`` per mode (2-norms).

        Infinite eigenvalues (numerical null space of ``B``) use the limiting
        form ``|B u| / (|B| |u|)``.
        """
        nA, nB = np.linalg.norm(self.A, 2), np.linalg.norm(self.B, 2)
        lam = self.eigenvalues
        fin = np.isfinite(lam)
        AU, BU = self.A @ self.modes, self.B @ self.modes
        unorm = np.linalg.norm(self.modes, axis=0)
        out = np.empty(len(lam))
        out[fin] = (np.linalg.norm(AU[:, fin] - BU[:, fin] * lam[fin], axis=0)
                    / ((nA + np.abs(lam[fin]) * nB) * unorm[fin]))
        out[~fin] = np.linalg.norm(BU[:, ~fin], axis=0) / (nB * unorm[~fin])
        return out

    def orthogonality(self, M=None, only_resolved=True):
        """Largest normalized off-diagonal ``|J_m^T M J_n|`` (``M`` defaults to ``B``)."""
        M = self.B if M is None else M
        J = self.modes[:, self.resolved] if only_resolved else self.modes
        G = J.T @ M @ J
        d = np.sqrt(np.abs(np.diag(G)))
        Gn = np.abs(G) / np.outer(d, d)
        np.fill_diagonal(Gn, 0.0)
        return float(Gn.max()) if Gn.size else 0.0

    def to_csv(self, path):
        """One column per mode; the header row carries the eigenvalues."""
        header = ",".join(f"{lam:.8e}" for lam in self.eigenvalues)
        np.savetxt(path, self.modes, delimiter=",", header=header, comments="", fmt="%.8e")

    def summary(self, k=None):
        k = len(self) if k is None else k
        return {
            "formulation": self.formulation,
            "N": len(self),
            "resolved": self.n_resolved,
            "definite": self.definite,
            "eigenvalues": [float(x) for x in self.eigenvalues[:k]],
        }

    def to_json(self, path=None, k=None):
        text = json.dumps(self.summary(k), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def pencil_for(sys: ImpedanceSystem, formulation):
    if formulation == "isolated":
        return sys.X_o, sys.R_o
    if formulation == "pec":
        if sys.kernel != "pec":
            raise ValueError("pec formulation needs a system assembled with the pec kernel")
        return sys.X_LG, sys.R_LG
    if formulation == "conventional":
        return sys.X_LG, sys.R_LG
    if formulation == "proposed":
        return sys.X_LG, sys.R_o
    raise ValueError(f"unknown formulation {formulation!r}; expected one of {FORMULATIONS}")


def psd_margin(B):
    """Smallest eigenvalue of ``B`` relative to its largest."""
    w = np.linalg.eigvalsh(B)
    return w[0] / w[-1]


def _finish(formulation, lam, U, A, B, shift, definite, mesh=None):
    U = normalize_modes(U)
    order = np.argsort(np.abs(lam), kind="stable")
    lam, U = lam[order], U[:, order]
    power = np.einsum("in,ij,jn->n", U, B, U)
    resolved = power >= RESOLVED_POWER_FLOOR * np.max(np.abs(power))
    for arr in (lam, U, resolved):
        arr.setflags(write=False)
    return ModeSet(formulation, lam, U, A, B, resolved, shift, definite, mesh)


def solve_modes(sys: ImpedanceSystem, formulation="proposed", sigma=10.0, psd_tol=1e-10):
    """Characteristic modes of ``sys`` under one of ``FORMULATIONS``."""
    A, B = pencil_for(sys, formulation)
    margin = psd_margin(B)
    if margin < -psd_tol:
        if formulation in ("isolated", "proposed"):
            raise NotPositiveDefinite(
                f"radiation operator R_o is indefinite (min/max eigenvalue {margin:.3e})")
        log.warning("%s: R_LG is indefinite (min/max eigenvalue %.3e); using the general pencil",
                    formulation, margin)
        lam, U = sla.eig(A, B)
        bad = np.abs(lam.imag) > 1e-9 * np.maximum(np.abs(lam), 1.0)
        if np.any(bad):
            raise NotPositiveDefinite(
                f"{formulation}: R_LG indefinite and {int(bad.sum())} eigenvalues are complex, "
                f"e.g. {lam[bad][0]:.6g}")
        return _finish(formulation, lam.real, U.real, A, B, None, False, sys.mesh)
    lam, U, shift = shifted_pencil(A, B, sigma)
    return _finish(formulation, lam, U, A, B, shift, True, sys.mesh)


# -- modal expansion -----------------------------------------------------------

@dataclass(frozen=True)
class ModalExpansion:
    alpha: np.ndarray
    P: np.ndarray = field(repr=False)
    modes: ModeSet = field(repr=False)
    condition: float = float("nan")

    @property
    def current(self):
        return self.modes.modes @ self.alpha

    def partial(self, k):
        """Current rebuilt from the first ``k`` modes with the full-system weights."""
        return self.modes.modes[:, :k] @ self.alpha[:k]


def modal_weights(modes: ModeSet, sys: ImpedanceSystem, V=None, cond_limit=1e15):
    """Weighting coefficients of the modal expansion of the driven current.

    For isolated modes the coefficients decouple and take the closed form
    ``J_n^T V / ((1 + j lam_n) J_n^T R_o J_n)``. For the proposed lossy
    modes the coupling-power matrix is ``diag(P^XG) + P^L`` with
    ``P^L = J^T R_L J``. Other formulations use the general ``J^T Z J``.
    """
    V = sys.V if V is None else np.asarray(V, dtype=complex)
    J = modes.modes
    rhs = J.T @ V
    if modes.formulation == "isolated":
        pxg = np.einsum("in,ij,jn->n", J, sys.R_o + 1j * sys.X_o, J)
        P = np.diag(pxg)
        if np.any(pxg == 0):
            raise SingularPMatrix("zero modal power in isolated expansion", np.inf)
        alpha = rhs / pxg
        cond = float(np.max(np.abs(pxg)) / np.min(np.abs(pxg)))
    else:
        if modes.formulation == "proposed":
            # diagonal power (1 + j lam_n) J_n^T R_o J_n, evaluated as a
            # quadratic form so that unresolved modes stay accurate
            pxg = np.einsum("in,ij,jn->n", J, sys.R_o + 1j * sys.X_LG, J)
            P = np.diag(pxg) + J.T @ sys.R_L @ J
        else:
            P = J.T @ sys.Z @ J
        cond = float(np.linalg.cond(P))
        if not np.isfinite(cond) or cond > cond_limit:
            raise SingularPMatrix("coupling-power matrix is singular", cond)
        alpha = np.linalg.solve(P, rhs)
    return ModalExpansion(alpha, P, modes, cond)
