"""Mode comparison metrics and ground efficiency."""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ZeroDenominator, ZeroReference, ZeroVector


def eigenvalue_error(lam_cand, lam_ref):
    """Relative eigenvalue deviation in percent."""
    if lam_ref == 0:
        raise ZeroReference("reference eigenvalue is zero")
    return 100.0 * abs((lam_cand - lam_ref) / lam_ref)


def mode_angle_error(J_cand, J_ref):
    """Sign-invariant angle between two current vectors, in degrees."""
    a = np.asarray(J_cand)
    b = np.asarray(J_ref)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ZeroVector("mode angle needs nonzero vectors")
    ua, ub = a / na, b / nb
    inner = np.vdot(ua, ub)
    # arccos(|ua.ub|) written as 2 atan2(|ua - s ub|, |ua + s ub|), which keeps
    # full precision for nearly parallel vectors
    s = inner / abs(inner) if inner != 0 else 1.0
    ub = ub * np.conj(s)
    return float(np.degrees(2.0 * np.arctan2(np.linalg.norm(ua - ub), np.linalg.norm(ua + ub))))


def mode_errors(cand, ref, count):
    """Per-mode ``(delta_lambda %, delta_angle deg)`` arrays for two ModeSets."""
    dl = np.array([eigenvalue_error(cand.eigenvalues[i], ref.eigenvalues[i]) for i in range(count)])
    da = np.array([mode_angle_error(cand.modes[:, i], ref.modes[:, i]) for i in range(count)])
    return dl, da


@dataclass(frozen=True)
class EfficiencyReport:
    eta: float
    P_R_iso: float
    P_R_LG: float
    R_rad_o: float
    R_rad_LG: float
    eta_modal: float | None = None


def radiated_power(J, R_o):
    J = np.asarray(J)
    return float(np.real(np.conj(J) @ R_o @ J))


def ground_efficiency(sys_iso, J_o, sys_lossy, J_LG, expansions=None):
    """Radiated-power ratio of the grounded and isolated dipole.

    Both currents must come from the same excitation. If ``expansions`` is
    given as ``(iso, lossy)`` ModalExpansions, the modal sums are evaluated
    too and stored in ``eta_modal``.
    """
    P_iso = radiated_power(J_o, sys_iso.R_o)
    P_lg = radiated_power(J_LG, sys_lossy.R_o)
    if P_iso == 0:
        raise ZeroDenominator("isolated radiated power is zero")
    f = sys_iso.mesh.feed_index
    I_o, I_lg = J_o[f], J_LG[f]
    # the quadratic form J^H R J is twice the time-average power
    R_o = P_iso / abs(I_o) ** 2 if I_o else float("nan")
    R_lg = P_lg / abs(I_lg) ** 2 if I_lg else float("nan")
    eta_modal = None
    if expansions is not None:
        e_iso, e_lg = expansions
        eta_modal = modal_radiated_power(e_lg, sys_lossy.R_o) / modal_radiated_power(e_iso, sys_iso.R_o)
    return EfficiencyReport(P_lg / P_iso, P_iso, P_lg, R_o, R_lg, eta_modal)


def modal_radiated_power(expansion, R_o):
    """``sum_n |alpha_n|^2 J_n^T R_o J_n`` (the modes are R_o-orthogonal)."""
    J = expansion.modes.modes
    p = np.einsum("in,ij,jn->n", J, R_o, J)
    return float(np.sum(np.abs(expansion.alpha) ** 2 * p))


def write_table(path, row_labels, columns):
    """CSV with a label column and one column per ``(name, values)`` pair."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mode"] + [name for name, _ in columns])
        for i, label in enumerate(row_labels):
            w.writerow([label] + [f"{vals[i]:.8e}" for _, vals in columns])
