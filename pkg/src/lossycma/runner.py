"""Scenario execution, sweeps and report files."""

import csv
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import ScenarioConfig
from .coupling import coupled_modes, first_order_pair, interaction_powers, prediction_errors, write_report
from .errors import CMAError
from .fields import line_cut, near_fields, rms_difference
from .greens import HalfSpace, prony_fit
from .metrics import ground_efficiency, mode_errors
from .modes import modal_weights, solve_modes
from .mom import assemble, solve_direct, input_impedance
from .wire import segment_dipole

log = logging.getLogger(__name__)


def _fmt(x):
    return f"{x:.8e}"


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


class ScenarioError(CMAError):
    """A numerical failure annotated with the scenario that raised it."""


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    spec: object
    mesh: object
    images: object = None
    systems: dict = field(default_factory=dict)
    modesets: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    coupling: dict = field(default_factory=dict)
    first_order: object = None
    efficiency: object = None
    field_cuts: dict = field(default_factory=dict)
    input_impedance: complex | None = None
    files: list = field(default_factory=list)

    def eigen_table(self, k=None):
        k = self.config.n_report if k is None else k
        return {f: ms.eigenvalues[:k] for f, ms in self.modesets.items()}


def _ground_kernel(cfg, spec):
    kind = cfg.ground.kind
    if kind == "none":
        return "free", None
    if kind == "pec":
        return "pec", None
    im = prony_fit(spec, HalfSpace(cfg.ground.eps_r), M=cfg.images.M, T0=cfg.images.T0, Ns=cfg.images.Ns)
    return im, im


def _modes(res, form, sys):
    """Reuse a solved ModeSet or solve it on demand."""
    ms = res.modesets.get(form)
    if ms is None:
        tol = res.config.tolerances
        ms = solve_modes(sys, form, sigma=tol.sigma, psd_tol=tol.psd_tol)
    return ms


def execute(cfg: ScenarioConfig) -> ScenarioResult:
    """Run one scenario in memory."""
    spec = cfg.dipole()
    mesh = segment_dipole(spec)
    res = ScenarioResult(cfg, spec, mesh)
    kernel, res.images = _ground_kernel(cfg, spec)
    res.systems["free"] = assemble(mesh, "free")
    ground = res.systems["free"] if kernel == "free" else assemble(mesh, kernel)
    res.systems["ground"] = ground
    if "pec" in cfg.formulations:
        res.systems["pec"] = ground if kernel == "pec" else assemble(mesh, "pec")
    tol = cfg.tolerances
    for form in cfg.formulations:
        sys = {"isolated": res.systems["free"], "pec": res.systems.get("pec")}.get(form, ground)
        res.modesets[form] = solve_modes(sys, form, sigma=tol.sigma, psd_tol=tol.psd_tol)
    iso = res.modesets.get("isolated")
    if iso is not None:
        k = min(cfg.n_report, iso.n_resolved)
        for form, ms in res.modesets.items():
            if form != "isolated":
                res.errors[form] = mode_errors(ms, iso, min(k, ms.n_resolved))
    J_g = solve_direct(ground)
    res.input_impedance = complex(input_impedance(ground, J_g))

    if cfg.coupling.enabled:
        iso = _modes(res, "isolated", res.systems["free"])
        ref = _modes(res, "proposed", ground)
        cs = interaction_powers(iso, ground)
        for K in cfg.coupling.K:
            subset = None if K == "full" else range(min(int(K), mesh.N))
            pred = coupled_modes(cs, subset)
            res.coupling[str(K)] = (pred, ref)
        if cfg.coupling.first_order:
            res.first_order = (first_order_pair(cs, 0, 1, cfg.coupling.variant), ref)

    if cfg.efficiency:
        free = res.systems["free"]
        iso = _modes(res, "isolated", free)
        pro = _modes(res, "proposed", ground)
        J_o = solve_direct(free)
        res.efficiency = ground_efficiency(free, J_o, ground, J_g,
                                           (modal_weights(iso, free), modal_weights(pro, ground)))

    if cfg.field_cuts:
        form = "proposed" if ground is not res.systems["free"] else "isolated"
        ms = _modes(res, form, ground)
        exp = modal_weights(ms, ground)
        s = cfg.scale()
        for cut in cfg.field_cuts:
            pts = line_cut((cut.x_min * s, cut.x_max * s), cut.height * s, cut.points)
            direct = near_fields(J_g, mesh, kernel, pts)
            modal = near_fields(exp.partial(cut.modes), mesh, kernel, pts)
            res.field_cuts[cut.name] = (direct, modal, rms_difference(modal, direct))
    return res


def write_outputs(res: ScenarioResult, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    files = []

    def path(name):
        files.append(name)
        return os.path.join(out_dir, name)

    cfg = res.config
    k = cfg.n_report
    forms = list(res.modesets)
    with open(path("eigenvalues.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mode"] + forms)
        for i in range(k):
            w.writerow([i + 1] + [_fmt(res.modesets[f].eigenvalues[i]) for f in forms])
    for f, ms in res.modesets.items():
        ms.to_csv(path(f"modes_{f}.csv"))
    if res.errors:
        with open(path("mode_errors.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["mode"] + [f"{c}_{f}" for f in res.errors for c in ("d_lambda_pct", "d_angle_deg")])
            n = min(len(v[0]) for v in res.errors.values())
            for i in range(n):
                row = [i + 1]
                for dl, da in res.errors.values():
                    row += [_fmt(dl[i]), _fmt(da[i])]
                w.writerow(row)
    for K, (pred, ref) in res.coupling.items():
        count = min(k, ref.n_resolved)
        write_report(pred, ref, path(f"coupling_K{K}.csv"), path(f"coupling_K{K}.json"), count)
    if res.first_order is not None:
        pred, ref = res.first_order
        write_report(pred, ref, path("coupling_first_order.csv"), None, 2)
    if res.efficiency is not None:
        e = res.efficiency
        with open(path("efficiency.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["eta", "eta_modal", "P_R_iso", "P_R_LG", "R_rad_o", "R_rad_LG"])
            w.writerow([_fmt(x) for x in (e.eta, e.eta_modal, e.P_R_iso, e.P_R_LG, e.R_rad_o, e.R_rad_LG)])
    for name, (direct, modal, _) in res.field_cuts.items():
        direct.to_csv(path(f"field_{name}_direct.csv"))
        modal.to_csv(path(f"field_{name}_modal.csv"))
        direct.to_gnuplot(path(f"field_{name}_direct.dat"))
        modal.to_gnuplot(path(f"field_{name}_modal.dat"))
    if res.images is not None:
        with open(path("images.json"), "w") as fh:
            fh.write(res.images.to_json(indent=2, sort_keys=True) + "\n")
    manifest = {
        "library": "lossycma",
        "version": __version__,
        "config": _jsonable(cfg.model_dump()),
        "derived": {
            "wavelength_m": res.spec.wavelength,
            "length_m": res.spec.length_L,
            "height_m": res.spec.height_h,
            "radius_m": res.spec.radius_a,
            "segment_m": res.mesh.delta,
            "feed_index": res.mesh.feed_index,
            "input_impedance_ohm": _jsonable(res.input_impedance),
            "quadrature": {"direct_nodes": 32, "reflected_nodes": 24, "sphere": [64, 128]},
            "shift": {f: ms.shift for f, ms in res.modesets.items()},
            "resolved_modes": {f: ms.n_resolved for f, ms in res.modesets.items()},
        },
        "images": None if res.images is None else {
            "M": res.images.M, "fit_residual": res.images.fit_residual,
            "K_eps": _jsonable(complex(res.images.K_eps)),
        },
        "field_cut_rms": {n: v[2] for n, v in res.field_cuts.items()},
        "files": sorted(files),
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    res.files = sorted(files) + ["manifest.json"]
    return res.files


def run(cfg: ScenarioConfig, out_dir=None):
    """Execute ``cfg`` (or its sweep) and write reports to ``out_dir`` if given."""
    if cfg.sweep is not None:
        return sweep(cfg, cfg.sweep.axis, cfg.sweep.values, out_dir=out_dir)
    try:
        res = execute(cfg)
    except CMAError as exc:
        raise ScenarioError(f"scenario {cfg.name!r}: {exc}") from exc
    out_dir = out_dir or cfg.output_dir
    if out_dir:
        write_outputs(res, out_dir)
    return res


def _label(axis, v):
    return f"{v.real:.6g}{v.imag:+.6g}j" if isinstance(v, complex) else f"{v:.6g}"


def sweep(cfg: ScenarioConfig, axis, values, out_dir=None, workers=1):
    """Run one scenario per value; results keep the order of ``values``."""
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    cfgs = [cfg.with_value(axis, v) for v in values]
    out_dir = out_dir or cfg.output_dir

    def one(i):
        sub = None if out_dir is None else os.path.join(out_dir, f"{axis}_{i:03d}")
        return run(cfgs[i], sub)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(one, range(len(cfgs))))
    else:
        results = [one(i) for i in range(len(cfgs))]
    if out_dir:
        write_sweep_tables(results, axis, values, out_dir)
    return results


def write_sweep_tables(results, axis, values, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "sweep_eigenvalues.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([axis, "formulation", "rank", "eigenvalue"])
        for v, r in zip(values, results):
            for f, ms in r.modesets.items():
                for i in range(r.config.n_report):
                    w.writerow([_label(axis, v), f, i + 1, _fmt(ms.eigenvalues[i])])
    if any(r.efficiency is not None for r in results):
        with open(os.path.join(out_dir, "sweep_efficiency.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([axis, "eta", "eta_modal"])
            for v, r in zip(values, results):
                if r.efficiency is not None:
                    w.writerow([_label(axis, v), _fmt(r.efficiency.eta), _fmt(r.efficiency.eta_modal)])
    if any(r.coupling for r in results):
        with open(os.path.join(out_dir, "sweep_coupling.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([axis, "K", "mode", "d_lambda_pct", "d_angle_deg"])
            for v, r in zip(values, results):
                for K, (pred, ref) in r.coupling.items():
                    dl, da = prediction_errors(pred, ref, min(r.config.n_report, ref.n_resolved))
                    for i in range(len(dl)):
                        w.writerow([_label(axis, v), K, i + 1, _fmt(dl[i]), _fmt(da[i])])
