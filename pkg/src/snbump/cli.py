"""``snbump`` command-line entry point.

Exit status: 0 success, 2 configuration error, 3 numerical failure, 4 I/O
error.  Every artifact gets a JSON sidecar embedding the parsed config and
the code version; ``run.log`` in the output directory records library
versions and timings.
"""
from __future__ import annotations

import argparse
import logging
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .asymptotics import (
    PotentialParams, degenerate_regime, energy_expansion, fit_interaction_constant, optimal_radius,
    ring_sum, ring_sum_bounds, spacing_is_decreasing, target_radius_amplitude,
)
from .config import RunConfig, load_config
from .exceptions import ArtifactIOError, ConfigError, NumericalFailure, ResidualTooLarge, SNBumpError
from .fields import set_workers
from .io import (
    load_ground_state, read_field, read_json, save_ground_state, write_field, write_json, write_table,
)
from .radial import GroundState, compute_ground_state
from .reduction import certificate_residual, residual_tolerance, scan_and_build
from .ringcell import RingCell
from .spectra import nondegeneracy_report

__all__ = ["main", "build_parser", "run"]

log = logging.getLogger("snbump")

VERIFY_TOL = 1e-12
RING_SUM_S = (100, 1000, 10000, 1000000)
DEGENERATE_S = (1000, 10000, 100000)


def _s_list(text: str) -> tuple:
    try:
        vals = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty s list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI configuration file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--s", type=_s_list, help="number(s) of bumps, comma separated")
    common.add_argument("--m", type=float, help="potential decay exponent")
    common.add_argument("--a", type=float, help="potential amplitude (overrides the target-radius rule)")
    common.add_argument("--target-radius", type=float, help="closed-form radius that fixes a")
    common.add_argument("--grid-h", type=float,
                        help="grid step: radial step for ground-state/nondegeneracy/asymptotics, "
                             "cell step for scan-f/solve")
    common.add_argument("--tol", type=float, help="solver tolerance")
    common.add_argument("--threads", type=int, help="FFT worker threads")
    common.add_argument("--seed", type=int, help="seed for randomized checks")

    p = argparse.ArgumentParser(prog="snbump", description="Multi-bump Schrödinger–Newton experiments")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("ground-state", parents=[common], help="radial ground state and its constants")
    sub.add_parser("nondegeneracy", parents=[common], help="spectra of the linearized operator per sector")
    pa = sub.add_parser("asymptotics", parents=[common], help="ring sums, energy expansion, radius windows")
    pa.add_argument("--fit-interaction-constant", action="store_true",
                    help="fit the interaction constant and report which candidate it matches")
    sub.add_parser("scan-f", parents=[common], help="sample the reduced energy over the radius window")
    sub.add_parser("solve", parents=[common], help="scan, refine and certify u_s; dump the field")
    pv = sub.add_parser("verify", parents=[common], help="recompute a certificate's residual from its dump")
    pv.add_argument("certificate", type=Path, help="certificate JSON written by solve")
    return p


def _config_from_args(args) -> RunConfig:
    field_cmd = args.command in ("scan-f", "solve")
    over = {
        "command": args.command, "out": args.out, "s": args.s, "m": args.m, "a": args.a,
        "target_radius": args.target_radius, "tol": args.tol, "threads": args.threads, "seed": args.seed,
    }
    if args.grid_h is not None:
        over["h" if field_cmd else "radial_h"] = args.grid_h
    return load_config(args.config, **over)


def _setup_logging(out: Path) -> logging.Handler:
    out.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(out / "run.log", mode="a")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    return handler


def _meta(cfg: RunConfig, **extra) -> dict:
    return {"config": cfg.to_dict(), "code_version": __version__, **extra}


def _params(cfg: RunConfig, gs: GroundState) -> PotentialParams:
    a = cfg.a
    if a is None:
        a = target_radius_amplitude(gs, cfg.target_s, cfg.target_radius, cfg.m, cfg.convention)
    return PotentialParams(V0=cfg.V0, a=a, m=cfg.m, theta=cfg.theta)


def _cache_file(cfg: RunConfig) -> Path:
    return Path(cfg.cache_dir) / f"ground_state_h{cfg.radial_h:g}_R{cfg.R_rad:g}.csv"


def ground_state(cfg: RunConfig, *, refresh: bool = False) -> GroundState:
    """Cached ground state for the configured radial grid."""
    path = _cache_file(cfg)
    if path.exists() and not refresh:
        gs = load_ground_state(path, max_h=cfg.radial_h)
        log.info("loaded ground state from %s", path)
        return gs
    t0 = time.perf_counter()
    gs = compute_ground_state(cfg.radial_h, cfg.R_rad)
    log.info("computed ground state h=%g R=%g in %.2fs", cfg.radial_h, cfg.R_rad, time.perf_counter() - t0)
    try:
        save_ground_state(gs, path, metadata=_meta(cfg))
    except ArtifactIOError as exc:
        log.warning("could not write cache: %s", exc)
    return gs


# commands -------------------------------------------------------------------
def cmd_ground_state(cfg: RunConfig, args) -> int:
    out = Path(cfg.out)
    gs = ground_state(cfg, refresh=True)
    arr = np.column_stack([gs.rho, gs.U, gs.dU, gs.Psi, gs.dPsi])
    rows = ({"rho": r[0], "U": r[1], "dU": r[2], "Psi": r[3], "dPsi": r[4]} for r in arr)
    write_table(out / "ground_state.csv", rows, ["rho", "U", "dU", "Psi", "dPsi"], metadata=_meta(cfg))
    write_json(out / "ground_state_constants.json", {**gs.constants(), **_meta(cfg)})
    print(f"A1 = {gs.A1:.12g}  A2 = {gs.A2:.12g}  lambda1 = {gs.lambda1:.12g}  "
          f"8 pi lambda1 / A1 = {8 * math.pi * gs.lambda1 / gs.A1:.10f}")
    return 0


def cmd_nondegeneracy(cfg: RunConfig, args) -> int:
    out = Path(cfg.out)
    gs = ground_state(cfg)
    rep = nondegeneracy_report(gs, h=cfg.spectral_h, R=cfg.spectral_R, strict=False)
    rows = []
    for sec in rep.sectors:
        for j, (mu, res) in enumerate(zip(sec.eigenvalues, sec.residuals)):
            rows.append({"l": sec.ell, "index": j, "mu": mu, "residual": res,
                         "near_zero": abs(mu) <= rep.tol,
                         "overlap": "" if sec.kernel_overlap is None else sec.kernel_overlap})
    write_table(out / "nondegeneracy.csv", rows, metadata=_meta(cfg, zero_tolerance=rep.tol))
    write_json(out / "nondegeneracy.json", {"passed": rep.passed, "zero_tolerance": rep.tol,
                                            "sectors": rep.to_json(), "truncation": rep.truncation,
                                            **_meta(cfg)})
    print(f"nondegeneracy {'passed' if rep.passed else 'FAILED'} (zero tolerance {rep.tol:.3e})")
    if not rep.passed:
        raise rep.failures[0]
    return 0


def cmd_asymptotics(cfg: RunConfig, args) -> int:
    out = Path(cfg.out)
    gs = ground_state(cfg)
    params = _params(cfg, gs)
    rs_rows = []
    for s in RING_SUM_S:
        rs = ring_sum(s, 1.0)
        row = {"s": s, "sum_exact": rs.value, "asymptotic": rs.asymptotic, "ratio": rs.ratio}
        if s <= 10000:
            lo, hi = ring_sum_bounds(s, 1.0)
            row.update(lower=lo, upper=hi, within=lo <= rs.value <= hi)
        else:
            row.update(lower="", upper="", within="")
        rs_rows.append(row)
    write_table(out / "ring_sums.csv", rs_rows, metadata=_meta(cfg, r=1.0))

    if cfg.m >= 0.5:
        en_rows = []
        for s in cfg.s:
            if s < 3:
                continue
            opt = optimal_radius(gs, params, s, convention=cfg.convention, alpha=None)
            ex = energy_expansion(gs, params, s, opt.r_closed, cfg.convention)
            en_rows.append({**ex.row(), "J_pred_exact_sum": ex.J_pred_exact_sum, "r_numeric": opt.r_numeric,
                            "window_lower": opt.window.lower, "window_upper": opt.window.upper,
                            "stationarity_gap": opt.stationarity_gap})
        write_table(out / "energy_expansion.csv", en_rows,
                    metadata=_meta(cfg, a=params.a, convention=cfg.convention))
    else:
        rows = degenerate_regime(gs, params, DEGENERATE_S, convention=cfg.convention)
        flag = f"spacing decreasing: {str(spacing_is_decreasing(rows)).lower()}"
        write_table(out / "degenerate_regime.csv", rows, metadata=_meta(cfg, a=params.a), footer=[flag])
        print(flag)

    if args.fit_interaction_constant:
        fit = fit_interaction_constant(gs)
        rows = [{**r, "ratio_to_c": r["fitted_c"] / fit.c} for r in fit.rows]
        write_table(out / "interaction_constant.csv", rows,
                    metadata=_meta(cfg, c=fit.c, c_least_squares=fit.c_least_squares, match=fit.match,
                                   deviations=fit.deviations),
                    footer=[fit.flag_line()])
        print(fit.flag_line())
    return 0


def _solve_all(cfg: RunConfig, dump: bool) -> int:
    out = Path(cfg.out)
    gs = ground_state(cfg)
    params = _params(cfg, gs)
    log.info("potential V0=%g a=%.12g m=%g", params.V0, params.a, params.m)
    summary = []
    for s in cfg.s:
        t0 = time.perf_counter()
        cert = scan_and_build(gs, params, s, cfg.n_r, h=cfg.h, W=cfg.W, alpha_relative=cfg.alpha_relative,
                              tol=cfg.tol, inner_rtol=cfg.inner_rtol, max_iter=cfg.max_iter, log=log.info)
        dt = time.perf_counter() - t0
        log.info("s=%d finished in %.1fs", s, dt)
        write_table(out / f"scan_s{s}.csv", cert.scan, ["r", "F", "w_norm", "iters"],
                    metadata=_meta(cfg, s=s, a=params.a))
        row = {"s": s, "r_numeric": cert.r_numeric, "r_closed_form": cert.r_closed_form,
               "ratio": cert.r_numeric / cert.r_closed_form, "w_norm": cert.w_norm,
               "residual_inf": cert.residual_inf, "residual_tolerance": cert.residual_tolerance,
               "min_u": cert.min_u, "zeta": cert.zeta_estimate, "kappa_max": max(cert.kappa_history, default=0.0),
               "seconds": dt}
        summary.append(row)
        if dump:
            field_name = f"u_s{s}.bin"
            write_field(out / field_name, cert._u, {**cert._space.metadata(), **_meta(cfg)})
            payload = cert.to_json()
            payload.update(field=field_name, scan=cert.scan, potential={"V0": params.V0, "a": params.a,
                                                                          "m": params.m, "theta": params.theta},
                           **_meta(cfg))
            write_json(out / f"certificate_s{s}.json", payload)
        print(f"s={s}: r={cert.r_numeric:.6g} (closed form {cert.r_closed_form:.6g}) |w|={cert.w_norm:.3e} "
              f"residual={cert.residual_inf:.3e} <= {cert.residual_tolerance:.3e}  {dt:.0f}s")
    write_table(out / ("solve_summary.csv" if dump else "scan_summary.csv"), summary, metadata=_meta(cfg))
    return 0


def cmd_scan_f(cfg: RunConfig, args) -> int:
    return _solve_all(cfg, dump=False)


def cmd_solve(cfg: RunConfig, args) -> int:
    return _solve_all(cfg, dump=True)


def verify_certificate(path) -> dict:
    """Rebuild the cell from a certificate's field dump and recompute its residual."""
    path = Path(path)
    cert = read_json(path)
    try:
        u, meta = read_field(path.parent / cert["field"])
        pot = cert["potential"]
        params = PotentialParams(V0=pot["V0"], a=pot["a"], m=pot["m"], theta=pot["theta"])
        if meta.get("kind") != "ringcell":
            raise ConfigError(f"cannot rebuild a {meta.get('kind')!r} space")
        sp = RingCell(int(meta["symmetry_s"]), float(meta["r"]), params, h=float(meta["h1"]), W=float(meta["W"]),
                      singular=meta["singular"], profile=meta.get("profile", "discrete"))
    except KeyError as exc:
        raise ArtifactIOError(f"{path}: missing entry {exc}") from None
    if sp.shape != u.shape:
        raise ArtifactIOError(f"rebuilt cell {sp.shape} does not match the dump {u.shape}")
    rinf, rl2 = certificate_residual(sp, u)
    return {"residual_inf": rinf, "residual_l2": rl2, "residual_tolerance": residual_tolerance(sp, u),
            "diff_inf": abs(rinf - cert["residual_inf"]), "diff_l2": abs(rl2 - cert["residual_l2"]),
            "min_u": float(np.min(u))}


def cmd_verify(cfg: RunConfig, args) -> int:
    res = verify_certificate(args.certificate)
    ok_match = res["diff_inf"] <= VERIFY_TOL and res["diff_l2"] <= VERIFY_TOL
    ok_tol = res["residual_inf"] <= res["residual_tolerance"]
    write_json(Path(cfg.out) / "verify.json", {**res, "certificate": str(args.certificate),
                                                "matches": ok_match, **_meta(cfg)})
    print(f"residual {res['residual_inf']:.6e} (difference {res['diff_inf']:.1e}); "
          f"tolerance {res['residual_tolerance']:.3e}")
    if not ok_match:
        raise NumericalFailure(f"recomputed residual differs from the certificate by {res['diff_inf']:.3e}")
    if not ok_tol:
        raise ResidualTooLarge("stored field does not meet the residual tolerance")
    return 0


COMMANDS = {
    "ground-state": cmd_ground_state, "nondegeneracy": cmd_nondegeneracy, "asymptotics": cmd_asymptotics,
    "scan-f": cmd_scan_f, "solve": cmd_solve, "verify": cmd_verify,
}


def run(args) -> int:
    cfg = _config_from_args(args)
    set_workers(cfg.threads)
    handler = _setup_logging(Path(cfg.out))
    try:
        log.info("snbump %s command=%s python %s numpy %s scipy %s", __version__, cfg.command,
                 platform.python_version(), np.__version__, scipy.__version__)
        log.info("config %s", cfg.to_dict())
        t0 = time.perf_counter()
        status = COMMANDS[cfg.command](cfg, args)
        log.info("%s done in %.2fs", cfg.command, time.perf_counter() - t0)
        return status
    except SNBumpError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        raise
    finally:
        log.removeHandler(handler)
        handler.close()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except SNBumpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ArtifactIOError.exit_code


if __name__ == "__main__":
    sys.exit(main())
