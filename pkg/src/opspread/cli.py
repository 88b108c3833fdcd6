"""Experiment driver: tempmap / evolve / backflow / sweep / verify subcommands.

Every CSV starts with a comment line carrying the code version and the hash
of the resolved configuration, and all floats are written with shortest
round-trip repr, so identical configs produce identical bytes.
"""

import argparse
import math
import multiprocessing
import os
import sys

import numpy as np

from . import __version__, analysis, oracle, thermo
from .config import RunConfig, load_config
from .errors import (
    ConfigError,
    InvalidInputError,
    NumericalFailureError,
    ProtocolIncompleteError,
    ResourceLimitError,
)
from .evolution import EvolutionConfig, QuenchParams, build_trotter_layer, step
from .kernels import active_backend
from .mps import (
    expectation,
    load_checkpoint,
    local_operator_mps,
    product_state_mps,
    save_checkpoint,
)
from .pauli import FRAME_PARALLEL, XYZ_LABELS, BlochAngles, frame_rotation, parallel_basis

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_RESOURCE = 4


def _fmt(x):
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def _open_csv(path, header, cfg_hash, resume_keep=None):
    """Create a CSV with comment + header, or keep rows <= a resume time."""
    comment = f"# opspread={__version__} config={cfg_hash}\n"
    if resume_keep is not None and os.path.exists(path):
        with open(path) as f:
            lines = f.readlines()
        kept = []
        for line in lines:
            if line.startswith("#") or line.strip() == header:
                kept.append(line)
                continue
            try:
                t = float(line.split(",", 1)[0])
            except ValueError:
                continue
            if t <= resume_keep + 1e-12:
                kept.append(line)
        with open(path, "w") as f:
            f.writelines(kept)
        return open(path, "a")
    f = open(path, "w")
    f.write(comment)
    f.write(header + "\n")
    return f


def _initial_operator(cfg, rotation):
    comps = rotation @ np.eye(4)[XYZ_LABELS.index(cfg.operator)]
    return local_operator_mps(None, cfg.site, cfg.model.L,
                              frame=FRAME_PARALLEL, components=comps)


def cmd_tempmap(cfg, out_dir):
    points = thermo.bloch_map(cfg.dtheta_deg, cfg.dphi_deg, cfg.model)
    path = os.path.join(out_dir, "tempmap.csv")
    with _open_csv(path, "theta_deg,phi_deg,beta_J,T_J,energy_per_site",
                   cfg.config_hash()) as f:
        for pt in points:
            f.write(
                f"{_fmt(math.degrees(pt.angles.theta))},"
                f"{_fmt(math.degrees(pt.angles.phi))},"
                f"{_fmt(pt.beta)},{_fmt(pt.temperature)},{_fmt(pt.energy_density)}\n"
            )
    print(f"tempmap: {len(points)} grid points -> {path}")
    return EXIT_OK


def _record_rows(files, cfg, t, state, rho, basis):
    dens_f, contrib_f, owe_f = files
    rho_c, rho_nc = analysis.densities(state, basis, cfg.omega_max)
    contribs = analysis.direct_contributions(state, rho, cfg.omega_max)
    exact = expectation(rho, state)
    for w in range(cfg.omega_max + 1):
        dens_f.write(f"{_fmt(t)},c,{w},{_fmt(rho_c[w])}\n")
    for w in range(cfg.omega_max + 1):
        dens_f.write(f"{_fmt(t)},nc,{w},{_fmt(rho_nc[w])}\n")
    for w in range(cfg.omega_max + 1):
        contrib_f.write(f"{_fmt(t)},{w},{_fmt(contribs[w])}\n")
    max_ws = max(cfg.omega_star)
    for ws in cfg.omega_star:
        series = analysis.owe(
            [t], {w: [contribs.get(w, 0.0)] for w in range(ws + 1)}, [exact], ws
        )
        probs = [_fmt(p) for p in series.probabilities[0]]
        probs += [""] * (max_ws - ws)
        owe_f.write(f"{_fmt(t)},{ws},{_fmt(series.owe[0])},{','.join(probs)}\n")


def cmd_evolve(cfg, out_dir, resume=False):
    angles = cfg.angles()
    basis = parallel_basis(angles)
    rot = frame_rotation(basis)
    layer = build_trotter_layer(cfg.model, cfg.evolution.dt, rotation=rot)
    rho = product_state_mps(angles, cfg.model.L, frame=FRAME_PARALLEL)
    ckpt_path = os.path.join(out_dir, "evolve.ckpt")
    cfg_hash = cfg.config_hash()

    start_step = 0
    if resume:
        if not os.path.exists(ckpt_path):
            raise ConfigError(f"--resume requested but {ckpt_path} is missing")
        state, meta = load_checkpoint(ckpt_path)
        if meta.get("resume") != cfg.resume_hash():
            raise ConfigError("checkpoint was produced by a different configuration")
        start_step = int(meta["step"])
    else:
        state = _initial_operator(cfg, rot)

    n_steps = int(round(cfg.evolution.t_max / cfg.evolution.dt))
    resume_keep = start_step * cfg.evolution.dt if resume else None
    max_ws = max(cfg.omega_star)
    owe_header = "t,omega_star,owe," + ",".join(f"p{i}" for i in range(1, max_ws + 1))
    dens_f = _open_csv(os.path.join(out_dir, "densities.csv"),
                       "t,kind,omega,value", cfg_hash, resume_keep)
    contrib_f = _open_csv(os.path.join(out_dir, "contributions.csv"),
                          "t,omega,value", cfg_hash, resume_keep)
    owe_f = _open_csv(os.path.join(out_dir, "owe.csv"), owe_header, cfg_hash,
                      resume_keep)
    files = (dens_f, contrib_f, owe_f)
    try:
        if start_step == 0:
            _record_rows(files, cfg, 0.0, state, rho, basis)
        for n in range(start_step + 1, n_steps + 1):
            t = n * cfg.evolution.dt
            step(state, layer, cfg.evolution.chi_max,
                 cfg.evolution.lambda2_cutoff, time=t)
            if n % cfg.record_stride == 0:
                _record_rows(files, cfg, t, state, rho, basis)
            if n % cfg.checkpoint_every == 0 or n == n_steps:
                save_checkpoint(state, ckpt_path,
                                {"step": n, "t": t, "config": cfg_hash,
                                 "resume": cfg.resume_hash()})
    finally:
        for f in files:
            f.close()
    print(f"evolve: {n_steps - start_step} steps (L={cfg.model.L}, "
          f"chi_max={cfg.evolution.chi_max}, kernel={active_backend()}) -> {out_dir}")
    return EXIT_OK


def cmd_backflow(cfg, out_dir):
    path = os.path.join(out_dir, "backflow.csv")
    angles = cfg.angles()
    with _open_csv(path, "omega_perp,t0,t,overlap_abs,osee", cfg.config_hash()) as f:
        for w in cfg.omega_perp:
            try:
                rec = analysis.backflow(
                    cfg.operator, cfg.site, angles, cfg.model, cfg.evolution, w,
                    monitor_stride=cfg.backflow_monitor_stride,
                    record_stride=cfg.record_stride,
                )
            except ProtocolIncompleteError as exc:
                print(f"backflow omega_perp={w}: {exc}", file=sys.stderr)
                f.write(f"{w},,,,\n")
                continue
            for t, ov, se in zip(rec.times, rec.overlaps, rec.osee_trace):
                f.write(f"{w},{_fmt(rec.t0)},{_fmt(t)},{_fmt(ov)},{_fmt(se)}\n")
    print(f"backflow: omega_perp={cfg.omega_perp} -> {path}")
    return EXIT_OK


def _sweep_point(args):
    (theta_deg, phi_deg, op, cfg_dict, evals) = args
    cfg = RunConfig(**cfg_dict)
    angles = BlochAngles.from_degrees(theta_deg, phi_deg)
    try:
        beta = thermo.solve_beta(angles, cfg.model, evals=np.asarray(evals)).beta
        basis = parallel_basis(angles)
        rot = frame_rotation(basis)
        layer = build_trotter_layer(cfg.model, cfg.evolution.dt, rotation=rot)
        comps = rot @ np.eye(4)[XYZ_LABELS.index(op)]
        state = local_operator_mps(None, cfg.site, cfg.model.L,
                                   frame=FRAME_PARALLEL, components=comps)
        rho = product_state_mps(angles, cfg.model.L, frame=FRAME_PARALLEL)
        n_steps = int(round(cfg.evolution.t_max / cfg.evolution.dt))
        times, exact = [0.0], [expectation(rho, state)]
        first = analysis.direct_contributions(state, rho, cfg.omega_max)
        contribs = {w: [first[w]] for w in range(cfg.omega_max + 1)}
        for n in range(1, n_steps + 1):
            t = n * cfg.evolution.dt
            step(state, layer, cfg.evolution.chi_max,
                 cfg.evolution.lambda2_cutoff, time=t)
            if n % cfg.record_stride == 0:
                c = analysis.direct_contributions(state, rho, cfg.omega_max)
                times.append(t)
                exact.append(expectation(rho, state))
                for w in range(cfg.omega_max + 1):
                    contribs[w].append(c[w])
        table = analysis.WeightSeries(times, contribs, "contribution")
        rows = []
        for ws in cfg.omega_star:
            series = analysis.owe(table.times, table.channels, exact, ws)
            val, t_at = analysis.max_owe(series, cfg.t_window)
            rows.append((theta_deg, phi_deg, op, ws, beta, val, t_at))
        return rows, None
    except Exception as exc:  # per-point failures must not kill the sweep
        return None, f"{theta_deg},{phi_deg},{op}: {type(exc).__name__}: {exc}"


SWEEP_DEFAULT_PHI_CUTS = [0.0, 45.0, 90.0, 135.0, 180.0]


def cmd_sweep(cfg, out_dir):
    if not cfg.phi_explicit:
        cfg.phi_deg = list(SWEEP_DEFAULT_PHI_CUTS)
    evals = thermo.spectrum(cfg.model)
    cfg_dict = {k: getattr(cfg, k) for k in (
        "model", "evolution", "theta_deg", "phi_deg", "operator", "operators",
        "site", "omega_max", "omega_star", "t_window", "record_stride",
        "omega_perp", "backflow_monitor_stride", "out_dir", "checkpoint_every",
        "dtheta_deg", "dphi_deg", "jobs")}
    tasks = [
        (t, f, op, cfg_dict, evals)
        for t in cfg.theta_deg for f in cfg.phi_deg for op in cfg.operators
    ]
    if cfg.jobs > 1:
        with multiprocessing.Pool(cfg.jobs) as pool:
            results = pool.map(_sweep_point, tasks)
    else:
        results = [_sweep_point(t) for t in tasks]
    path = os.path.join(out_dir, "sweep.csv")
    errors = []
    with _open_csv(path, "theta_deg,phi_deg,operator,omega_star,beta_J,max_owe,t_of_max",
                   cfg.config_hash()) as f:
        for rows, err in results:
            if err is not None:
                errors.append(err)
                continue
            for (td, fd, op, ws, beta, val, t_at) in rows:
                f.write(f"{_fmt(td)},{_fmt(fd)},{op},{ws},{_fmt(beta)},"
                        f"{_fmt(val)},{_fmt(t_at)}\n")
    if errors:
        err_path = os.path.join(out_dir, "sweep_errors.log")
        with open(err_path, "w") as f:
            f.write("\n".join(errors) + "\n")
        print(f"sweep: {len(errors)} point(s) failed, see {err_path}", file=sys.stderr)
    print(f"sweep: {len(tasks)} tasks -> {path}")
    return EXIT_OK


def cmd_verify(cfg, out_dir):
    """Fast oracle-equivalence spot checks; exits nonzero on any failure."""
    failures = 0

    def report(name, ok, detail=""):
        nonlocal failures
        print(f"verify {name}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())
        failures += 0 if ok else 1

    L = 4
    p = QuenchParams(L=L)
    angles = BlochAngles.from_degrees(30.0, 45.0)
    basis = parallel_basis(angles)
    rot = frame_rotation(basis)

    rng = np.random.default_rng(7)
    from .mpo import mpo_to_dense
    from .projectors import weight_projector

    dense_ok = True
    for w in range(L + 1):
        proj = mpo_to_dense(weight_projector(w, L).mpo)
        mask = oracle.sector_mask(L, w, "weight").astype(float)
        v = rng.standard_normal(4**L)
        dense_ok &= bool(np.abs(proj @ v - mask * v).max() < 1e-12)
    report("projector-enumeration", dense_ok)

    ev = EvolutionConfig(dt=0.01, chi_max=None, lambda2_cutoff=0.0, t_max=0.5)
    layer = build_trotter_layer(p, ev.dt, rotation=rot)
    comps = rot @ np.array([0.0, 1.0, 0.0, 0.0])
    state = local_operator_mps(None, L // 2, L, frame=FRAME_PARALLEL, components=comps)
    rho = product_state_mps(angles, L, frame=FRAME_PARALLEL)
    for n in range(1, int(round(ev.t_max / ev.dt)) + 1):
        step(state, layer, ev.chi_max, ev.lambda2_cutoff, time=n * ev.dt)
    tebd_val = expectation(rho, state)
    op0 = oracle.dense_local_operator("x", L // 2, L)
    vec = oracle.exact_heisenberg(op0, p, ev.t_max)
    rho_d = oracle.dense_product_state(angles, L)
    exact_val = oracle.exact_expectation(rho_d, vec)
    err = abs(tebd_val - exact_val)
    report("tebd-vs-oracle", err < 2e-5, f"(|dO|={err:.2e})")

    from .mps import inner
    nrm = inner(state, state)
    report("norm-conservation", abs(nrm - 1.0) < 1e-10, f"(|1-n|={abs(nrm-1):.2e})")
    return EXIT_OK if failures == 0 else EXIT_NUMERICAL


def build_parser():
    parser = argparse.ArgumentParser(
        prog="opspread",
        description="Heisenberg-picture operator spreading on the mixed-field "
                    "Ising chain",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("tempmap", "evolve", "backflow", "sweep", "verify"):
        s = sub.add_parser(name)
        s.add_argument("--config", type=str, default=None)
        s.add_argument("--out", type=str, default=None)
        s.add_argument("--jobs", type=int, default=None)
        s.add_argument("--theta", type=float, default=None, help="degrees")
        s.add_argument("--phi", type=float, default=None, help="degrees")
        s.add_argument("--operator", choices=("x", "y", "z"), default=None)
        s.add_argument("--site", type=int, default=None)
        s.add_argument("--chi", type=int, default=None)
        s.add_argument("--dt", type=float, default=None)
        s.add_argument("--tmax", type=float, default=None)
        s.add_argument("--omega-max", dest="omega_max", type=int, default=None)
        s.add_argument("--omega-star", dest="omega_star", type=int,
                       action="append", default=None)
        s.add_argument("--dtheta", type=float, default=None)
        s.add_argument("--dphi", type=float, default=None)
        s.add_argument("-L", "--length", dest="L", type=int, default=None)
        if name == "evolve":
            s.add_argument("--resume", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {
        k: getattr(args, k, None)
        for k in ("out", "jobs", "theta", "phi", "operator", "site", "chi",
                  "dt", "tmax", "omega_max", "omega_star", "dtheta", "dphi", "L")
    }
    try:
        cfg = load_config(args.config, overrides)
        out_dir = cfg.out_dir
        os.makedirs(out_dir, exist_ok=True)
        if args.command == "tempmap":
            return cmd_tempmap(cfg, out_dir)
        if args.command == "evolve":
            return cmd_evolve(cfg, out_dir, resume=getattr(args, "resume", False))
        if args.command == "backflow":
            return cmd_backflow(cfg, out_dir)
        if args.command == "sweep":
            return cmd_sweep(cfg, out_dir)
        if args.command == "verify":
            return cmd_verify(cfg, out_dir)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, InvalidInputError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
