"""Command line entry point: ``dspin <subcommand> --config <path> [--out <dir>]``.

Exit codes: 0 ok, 2 configuration error, 3 geometry error, 4 numerical
tolerance failure. Every run writes its outputs atomically and finishes with
``manifest.json`` (config hash, engine version, conventions, warnings and the
sha256 of each output file).
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import os
import sys
import tempfile
from dataclasses import replace

import numpy as np

from . import __version__
from . import config as cfgmod
from . import conventions as conv
from . import curves as cv
from . import fermi
from . import flux
from . import hamiltonian as ham
from . import interferometer as itf
from . import kernels
from . import transport as tr
from .errors import ConfigInvalid, DspinError, NumericalError
from .parallel import worker_count

SUBCOMMANDS = ("describe", "frames", "fermi-check", "texture", "wilson", "flux", "conductance", "convention-report")


class ToleranceFailure(NumericalError):
    pass


def fmt(x):
    if isinstance(x, str):
        return x
    x = float(x)
    if x == 0.0:
        return "0"  # folds -0.0 as well
    return format(x, ".17g")


def csv_bytes(header, rows):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(x) for x in row) + "\n")
    return buf.getvalue().encode("utf-8")


def json_bytes(obj):
    return (json.dumps(_plain(obj), sort_keys=True, indent=2, allow_nan=True) + "\n").encode("utf-8")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_atomic(path, data):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# scenario handlers: each returns (outputs, warnings, failure message or None)


def _curve(cfg):
    if "curve" not in cfg or "kind" not in cfg["curve"]:
        raise ConfigInvalid("this run needs a curve record", key="curve.kind")
    return cv.curve_from_config(cfg["curve"])


def _closed_form_warnings(curve_id, params):
    if curve_id not in ham.CLOSED_FORM_CURVES:
        return []
    ref = ham.closed_form_reference(curve_id, np.linspace(0, 2 * np.pi, 64), params)
    return [f"printed closed form for {curve_id}: {f['quantity']} fails '{f['check']}'" for f in ref.flags]


def _initial(cfg, curve, direction):
    init = cfg["initial"]
    if isinstance(init, str):
        s0 = 0.0 if direction == "forward" else curve.length
        d = curve.darboux(s0)
        return {"t": d.t_vec, "N": d.N_vec, "B": d.B_vec}[init]
    return np.asarray(init, dtype=float)


def run_describe(cfg):
    curve = _curve(cfg)
    rows = ham.describe_rows(curve, cfg["grid"]["n"])
    warnings = _closed_form_warnings(curve.name, cfg["curve"].get("params"))
    return {"describe.csv": csv_bytes(ham.DESCRIBE_COLUMNS, rows)}, warnings, None


FRAME_COLUMNS = (
    "s", "phi", "tx", "ty", "tz", "Nx", "Ny", "Nz", "Bx", "By", "Bz",
    "theta", "kappa", "tau", "kappa_g", "kappa_n", "tau_g", "K", "M",
)


def run_frames(cfg):
    curve = _curve(cfg)
    s = np.linspace(0.0, curve.length, cfg["grid"]["n"] + 1)
    d = curve.darboux(s)
    cols = np.column_stack(
        [s, d.param, d.t_vec, d.N_vec, d.B_vec, d.theta, d.kappa, d.tau, d.kappa_g, d.kappa_n, d.tau_g, d.K, d.M]
    )
    rows = [tuple(ham.zero_small(r)) for r in cols]
    warnings = []
    branch = conv.frenet_branch_residuals(curve)
    summary = {"frenet_branch_residuals": None}
    if branch is None:
        warnings.append("curvature vanishes somewhere: Frenet columns are nan")
    else:
        summary["frenet_branch_residuals"] = {"plus": branch[0], "minus": branch[1]}
    if curve.closed:
        summary["seam_turning_angle"] = curve.seam_turning_angle()
        if abs(summary["seam_turning_angle"]) > 1e-8:
            warnings.append(f"closed curve has a corner at the seam (turning {summary['seam_turning_angle']:.6f} rad)")
    return {"frames.csv": csv_bytes(FRAME_COLUMNS, rows), "frames.json": json_bytes(summary)}, warnings, None


def run_fermi(cfg):
    curve = _curve(cfg)
    L = curve.length
    s_points = cfg["fermi"].get("s_points") or [0.2 * L, 0.5 * L, 0.8 * L]
    q_grid = cfg["fermi"]["q_grid"]
    rows = fermi.fermi_rows(curve, s_points, q_grid)
    lo, hi = cfg["tolerances"]["fermi_slope_min"], cfg["tolerances"]["fermi_slope_max"]
    fits = []
    failure = None
    for s in s_points:
        chk = fermi.expansion_order_check(curve, s, q_grid)
        fits.append(
            {
                "s": chk.s,
                "slope": None if chk.fit_failed else chk.slope,
                "fit_failed": chk.fit_failed,
                "max_residual": float(np.max(chk.residual)),
                "kappa_g": chk.kappa_g,
                "K": chk.K,
                "in_window": (not chk.fit_failed) and lo <= chk.slope <= hi,
            }
        )
        if not chk.fit_failed and chk.slope < lo:
            failure = f"residual slope {chk.slope:.3f} below {lo} at s={s}"
    warnings = [f"order fit skipped at s={f['s']:.6g}: residuals at the differencing floor" for f in fits if f["fit_failed"]]
    out = {
        "fermi.csv": csv_bytes(("s", "q", "gss_numeric", "gss_series", "residual"), rows),
        "fermi_fit.json": json_bytes({"slope_window": [lo, hi], "points": fits}),
    }
    return out, warnings, failure


def run_texture(cfg):
    curve = _curve(cfg)
    direction = cfg["direction"]
    tex = tr.evolve_spin_texture(
        curve,
        _initial(cfg, curve, direction),
        cfg["grid"]["n"],
        direction,
        cfg.get("extra_field"),
        cfg["grid"]["substeps"],
        cfg["method"],
    )
    rep = tr.precession_residual(tex, strict=False)
    failure = None
    if rep.fd_error > tr.FD_ERROR_LIMIT:
        failure = f"texture grid too coarse: differencing error {rep.fd_error:.3g}"
    summary = {
        "r1_lab_law": rep.r1,
        "r2_doubled_darboux_law": rep.r2,
        "fd_error_estimate": rep.fd_error,
        "satisfied_law": rep.satisfied_law,
        "bloch_norm_defect": float(np.max(np.abs(np.linalg.norm(tex.m_lab, axis=-1) - 1))),
        "rows": len(tex),
    }
    out = {"texture.csv": csv_bytes(tr.TEXTURE_COLUMNS, tex.rows()), "precession.json": json_bytes(summary)}
    return out, [], failure


def run_wilson(cfg):
    curve = _curve(cfg)
    L = curve.length
    warnings = [] if curve.closed else ["curve is not closed: traces are of the end-to-end propagator"]
    U_ad, summ = tr.adiabatic_propagator(curve, 0.0, L, cfg["grid"]["quad_n"])
    rows = []
    ops = []
    for n in cfg["grid"]["segments"]:
        U = tr.path_ordered_propagator(curve, 0.0, L, n, extra_field=cfg.get("extra_field"))
        ops.append(U)
        w = tr.wilson_loop(U)
        rows.append((curve.name, n, w.real, w.imag, summ.Phi))
    U_ode = tr.ode_propagator_oracle(curve, 0.0, L, cfg["tolerances"]["ode"], extra_field=cfg.get("extra_field"))
    summary = {
        "ode_trace": [tr.wilson_loop(U_ode).real, tr.wilson_loop(U_ode).imag],
        "distance_finest_to_ode": ops[-1].distance(U_ode),
        "adiabatic": {"Phi": summ.Phi, "phi_s": summ.phi_s, "phi_N": summ.phi_N, "phi_q": summ.phi_q,
                      "h": summ.h, "trace": tr.wilson_loop(U_ad).real},
    }
    if cfg.get("extra_field") is None:
        R = tr.frame_transport_rotation(curve, 0.0, L)
        summary["frame_transport_rotation_gap"] = float(np.max(np.abs(ops[-1].rotation() - R)))
    out = {
        "wilson.csv": csv_bytes(("curve", "n", "Re_tr", "Im_tr", "Phi_adiabatic"), rows),
        "wilson.json": json_bytes(summary),
    }
    return out, warnings, None


def run_flux(cfg):
    curve = _curve(cfg)
    reg = cfg["region"]
    if "vertices" in reg:
        region = flux.region_from_polygon(reg["vertices"], reg.get("seed"))
        I, info = flux.region_curvature_integral(curve.surface, region, reg["grid"])
        report = {"area_integral_K": I, "flux_over_Phi0": I / (2 * np.pi), "quadrature": info,
                  "phi_N": None, "region": "polygon"}
        return {"flux.json": json_bytes(report)}, ["polygon region: boundary term not evaluated"], None
    if curve.name.startswith("viviani") and reg.get("seed") is None:
        # self-intersecting chart image: the lobe (or both) must be chosen explicitly
        raise ConfigInvalid("Viviani regions need an interior seed point choosing the lobe", key="region.seed")
    region = flux.region_from_curve(curve, reg["closure"], reg.get("seed"))
    rep = flux.gauss_bonnet_and_flux(curve, region, reg["euler_chi"], reg["grid"])
    warnings = [f"region closure '{rep.closure}' chosen for {curve.name}"]
    if rep.corner_angles:
        warnings.append(f"boundary has {len(rep.corner_angles)} corner(s); turning angles included in phi_N")
    failure = None
    tol = cfg["tolerances"]["gb_residual"]
    if abs(rep.gb_residual) > tol:
        failure = f"Gauss-Bonnet residual {rep.gb_residual:.3g} exceeds {tol:g}"
    return {"flux.json": json_bytes(rep.as_dict())}, warnings, failure


def run_conductance(cfg):
    ccfg = cfg["curve"]
    icfg = cfg["interferometer"]
    grid = itf.default_phi_grid(cfg["grid"]["sweep_n"])
    if ccfg["kind"] in ("viviani_on_cylinder", "viviani_on_sphere"):
        curves = {
            "G_cylinder": cv.curve_from_config({**ccfg, "kind": "viviani_on_cylinder"}),
            "G_sphere": cv.curve_from_config({**ccfg, "kind": "viviani_on_sphere"}),
        }
    else:
        curves = {"G": cv.curve_from_config(ccfg)}
    profiles = {}
    tolerance = 0.0
    for name, curve in curves.items():
        spec = itf.InterferometerSpec(
            curve,
            icfg["phi_in"],
            icfg["phi_out"],
            icfg["n_steps"],
            icfg["include_dynamical_phase"],
            icfg["k"],
            tuple(cfg["extra_field"]) if cfg.get("extra_field") else None,
        )
        G = itf.conductance_sweep(spec, grid)
        # discretisation tolerance: step-doubling gap on a few junction positions
        probe = grid[:: max(1, len(grid) // 4)]
        G2 = itf.conductance_sweep(
            replace(spec, n_steps=2 * spec.n_steps), probe
        )
        tolerance = max(tolerance, float(np.max(np.abs(G2 - G[:: max(1, len(grid) // 4)]))), 1e-12)
        profiles[name] = G
    names = list(profiles)
    rows = [tuple([grid[i]] + [profiles[n][i] for n in names]) for i in range(len(grid))]
    summary = {
        "profiles": {
            n: {"min": float(g.min()), "max": float(g.max()), "mean": float(g.mean()),
                "amplitude": float(g.max() - g.min())}
            for n, g in profiles.items()
        },
        "numerical_tolerance": tolerance,
    }
    warnings = []
    if len(names) == 2:
        diff = float(np.max(np.abs(profiles[names[0]] - profiles[names[1]])))
        summary["max_pointwise_difference"] = diff
        summary["profiles_distinct"] = diff > 10 * tolerance
        if not summary["profiles_distinct"]:
            warnings.append(
                "cylinder and sphere profiles coincide within 10x numerical tolerance: with symmetric "
                "splitters and no dynamical phase G depends only on the loop holonomy trace"
            )
    for n, g in profiles.items():
        if g.max() - g.min() < 10 * tolerance:
            warnings.append(f"{n} is flat in phi_out within numerical tolerance")
    out = {
        "conductance.csv": csv_bytes(("phi_out", *names), rows),
        "sweep_summary.json": json_bytes(summary),
    }
    return out, warnings, None


def run_conventions(cfg):
    params = cfg.get("curve", {}).get("params", {})
    params = {k: params[k] for k in ("rho", "c", "f") if k in params}
    rep = conv.convention_report(params=params, n=cfg["grid"]["n"])
    warnings = [f"{d['curve']}: {d['quantity']} ({d['kind']})" for d in rep["discrepancies"]]
    out = {"conventions.json": json_bytes(rep), "conventions.txt": conv.report_text(rep).encode("utf-8")}
    return out, warnings, None


HANDLERS = {
    "describe": run_describe,
    "frames": run_frames,
    "fermi-check": run_fermi,
    "texture": run_texture,
    "wilson": run_wilson,
    "flux": run_flux,
    "conductance": run_conductance,
    "convention-report": run_conventions,
}


def run_scenario(subcommand, raw_cfg, out_dir):
    """Run one scenario and write its files; returns the exit status."""
    if raw_cfg.get("run", subcommand) != subcommand:
        raise ConfigInvalid(f"config declares run '{raw_cfg['run']}' but '{subcommand}' was invoked", key="run")
    worker_count()  # validates DSPIN_THREADS early
    cfg = cfgmod.resolve(raw_cfg)
    outputs, warnings, failure = HANDLERS[subcommand](cfg)
    for name, data in outputs.items():
        write_atomic(os.path.join(out_dir, name), data)
    manifest = {
        "subcommand": subcommand,
        "config_sha256": cfgmod.config_hash(raw_cfg),
        "config": raw_cfg,
        "engine_version": __version__,
        "kernel_backend": kernels.BACKEND,
        "conventions": conv.CONVENTIONS,
        "warnings": warnings,
        "tolerance_failure": failure,
        "outputs": {name: hashlib.sha256(data).hexdigest() for name, data in sorted(outputs.items())},
    }
    write_atomic(os.path.join(out_dir, "manifest.json"), json_bytes(manifest))
    if failure:
        raise ToleranceFailure(failure)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="dspin", description="Spin transport along curves on curved surfaces.")
    p.add_argument("--version", action="version", version=f"dspin {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="scenario JSON file")
        sp.add_argument("--out", default="dspin-out", help="output directory (default: dspin-out)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = cfgmod.load(args.config)
        return run_scenario(args.subcommand, cfg, args.out)
    except ConfigInvalid as exc:
        print(f"dspin: config error [{exc.key}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except DspinError as exc:
        print(f"dspin: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
