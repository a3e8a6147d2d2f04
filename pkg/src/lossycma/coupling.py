"""Ground-coupled modes predicted from isolated modes.

A ground-coupled mode is written as a real combination of isolated modes,
``J_LG,m = sum_n k_mn J_on``. Projecting the proposed pencil
``X_LG J = lam R_o J`` onto the isolated modes gives

    (P_XL + diag(P_Xo)) k = lam diag(P_Ro) k

with ``P_Ro,n = J_on^T R_o J_on``, ``P_Xo,n = J_on^T X_o J_on`` and
``P_XL = J_o^T X_L J_o``. Truncating to a subset of isolated modes gives
the K-mode approximations; K = 2 has a closed form.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ComplexRoots, DegenerateQuadratic, MeshMismatch, NotPositiveDefinite
from .modes import ModeSet, normalize_modes, shifted_pencil
from .mom import ImpedanceSystem


@dataclass(frozen=True)
class CouplingSystem:
    P_Ro: np.ndarray
    P_Xo: np.ndarray
    P_XL: np.ndarray
    isolated: ModeSet = field(repr=False)
    system: ImpedanceSystem = field(repr=False)

    @property
    def N(self):
        return len(self.P_Ro)

    def left(self, subset=None):
        idx = np.arange(self.N) if subset is None else np.asarray(subset)
        return self.P_XL[np.ix_(idx, idx)] + np.diag(self.P_Xo[idx])

    def right(self, subset=None):
        idx = np.arange(self.N) if subset is None else np.asarray(subset)
        return np.diag(self.P_Ro[idx])

    def rayleigh(self, J):
        """Eigenvalue estimate of the proposed pencil for the vector ``J``."""
        s = self.system
        return float(J @ s.X_LG @ J) / float(J @ s.R_o @ J)


@dataclass(frozen=True)
class CoupledPrediction:
    subset: tuple
    eigenvalues: np.ndarray
    coefficients: np.ndarray        # row m holds k_mn for predicted mode m
    modes: np.ndarray = field(repr=False)   # columns, max entry +1

    @property
    def K(self):
        return len(self.subset)

    def table_coefficients(self):
        """Coefficients scaled so the largest-magnitude entry of each row is 1."""
        k = np.asarray(self.coefficients, dtype=float)
        idx = np.argmax(np.abs(k), axis=1)
        return k / k[np.arange(len(k)), idx][:, None]


def interaction_powers(isolated: ModeSet, sys_lossy: ImpedanceSystem):
    """Interaction-power matrices between isolated modes and the ground."""
    if isolated.formulation != "isolated":
        raise ValueError("interaction powers need isolated-dipole modes")
    if isolated.mesh is None or not isolated.mesh.same_as(sys_lossy.mesh):
        raise MeshMismatch("isolated modes and ground system use different meshes")
    J = isolated.modes
    P_Ro = np.einsum("in,ij,jn->n", J, sys_lossy.R_o, J)
    # lam_n * P_Ro,n evaluated as the quadratic form; identical for resolved
    # modes and finite for modes beyond the radiation floor
    P_Xo = np.einsum("in,ij,jn->n", J, sys_lossy.X_o, J)
    P_XL = J.T @ sys_lossy.X_L @ J
    P_XL = 0.5 * (P_XL + P_XL.T)
    if np.any(P_Ro[isolated.resolved] <= 0):
        raise NotPositiveDefinite("non-positive radiated power for a resolved isolated mode")
    for a in (P_Ro, P_Xo, P_XL):
        a.setflags(write=False)
    return CouplingSystem(P_Ro, P_Xo, P_XL, isolated, sys_lossy)


def _predict(cs, subset, K):
    J = cs.isolated.modes[:, list(subset)] @ K.T
    return normalize_modes(J)


def coupled_modes(cs: CouplingSystem, subset=None):
    """Solve the projected pencil on ``subset`` (0-based isolated-mode indices)."""
    subset = tuple(range(cs.N)) if subset is None else tuple(int(i) for i in subset)
    if len(set(subset)) != len(subset) or not subset:
        raise ValueError("subset must be a nonempty set of distinct indices")
    if max(subset) >= cs.N or min(subset) < 0:
        raise ValueError("subset index out of range")
    lam, U, _ = shifted_pencil(cs.left(subset), cs.right(subset))
    order = np.argsort(np.abs(lam), kind="stable")
    lam, U = lam[order], U[:, order]
    K = U.T
    return CoupledPrediction(subset, lam, K, _predict(cs, subset, K))


def quadratic_coefficients(cs: CouplingSystem, n1, n2, variant="derived"):
    """``(a, b, c)`` of ``a k^2 + b k + c = 0`` for ``k = k2/k1``.

    ``variant="derived"`` eliminates the eigenvalue between both projected
    equations; ``variant="printed"`` reproduces the typeset closed form for
    comparison.
    """
    R1, R2 = cs.P_Ro[n1], cs.P_Ro[n2]
    X1, X2 = cs.P_Xo[n1], cs.P_Xo[n2]
    L11, L12, L22 = cs.P_XL[n1, n1], cs.P_XL[n1, n2], cs.P_XL[n2, n2]
    if L12 == 0:
        raise DegenerateQuadratic("modes do not interact (P_XL,n1n2 = 0)")
    a = R2
    if variant == "derived":
        c = -R1
        b = (a * (X1 + L11) - R1 * (X2 + L22)) / L12
    elif variant == "printed":
        c = R1
        b = (a * (X1 + L12) - c * (X2 + L22)) / L12
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return a, b, c


def first_order_pair(cs: CouplingSystem, n1, n2, variant="derived"):
    """Closed-form two-mode prediction; returns the two predicted modes."""
    if n1 == n2:
        raise ValueError("first-order pair needs two distinct modes")
    a, b, c = quadratic_coefficients(cs, n1, n2, variant)
    roots = quadratic_roots(a, b, c)
    K = np.array([[1.0, r] for r in roots])
    J = _predict(cs, (n1, n2), K)
    lam = np.array([cs.rayleigh(J[:, i]) for i in range(2)])
    order = np.argsort(np.abs(lam), kind="stable")
    return CoupledPrediction((n1, n2), lam[order], K[order], J[:, order])


def quadratic_roots(a, b, c, tol=1e-14):
    scale = max(abs(a), abs(b), abs(c))
    if scale == 0 or abs(a) <= tol * scale:
        raise DegenerateQuadratic("leading coefficient vanishes")
    disc = b * b - 4 * a * c
    if disc < 0:
        raise ComplexRoots("coefficient ratio is complex", disc)
    # cancellation-free form
    q = -0.5 * (b + np.copysign(np.sqrt(disc), b))
    r1 = q / a
    r2 = c / q if q != 0 else -r1
    return np.array(sorted((r1, r2), key=lambda r: (abs(r), r))[::-1])


# -- reports ---------------------------------------------------------------------

def prediction_errors(pred: CoupledPrediction, reference: ModeSet, count=None):
    """``(delta_lambda %, delta_angle deg)`` of the predictions against ``reference``."""
    from .metrics import eigenvalue_error, mode_angle_error

    count = pred.K if count is None else min(count, pred.K)
    dl = np.array([eigenvalue_error(pred.eigenvalues[i], reference.eigenvalues[i])
                   for i in range(count)])
    da = np.array([mode_angle_error(pred.modes[:, i], reference.modes[:, i])
                   for i in range(count)])
    return dl, da


def write_report(pred: CoupledPrediction, reference: ModeSet, path_csv, path_json=None, count=None):
    """CSV (and optional JSON) of the first ``count`` predicted modes."""
    dl, da = prediction_errors(pred, reference, count)
    kt = pred.table_coefficients()[:len(dl)]
    with open(path_csv, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mode", "lambda_pred", "lambda_ref", "d_lambda_pct", "d_angle_deg"]
                   + [f"k_{n + 1}" for n in pred.subset])
        for i in range(len(dl)):
            w.writerow([i + 1, f"{pred.eigenvalues[i]:.8e}", f"{reference.eigenvalues[i]:.8e}",
                        f"{dl[i]:.8e}", f"{da[i]:.8e}"] + [f"{x:.8e}" for x in kt[i]])
    if path_json is not None:
        with open(path_json, "w") as fh:
            json.dump({"subset": [n + 1 for n in pred.subset],
                       "eigenvalues": pred.eigenvalues[:len(dl)].tolist(),
                       "d_lambda_pct": dl.tolist(), "d_angle_deg": da.tolist(),
                       "coefficients": kt.tolist()}, fh, indent=2)
            fh.write("\n")
