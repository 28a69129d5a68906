"""Command-line entry point ``viscostab``.

Subcommands: ``audit``, ``steady``, ``simulate``, ``decay-fit``, ``report``.
Exit codes: 0 when every assertion passes, 1 on an assertion failure,
2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import audit as au
from . import config as cf
from . import constitutive as cm
from . import decay as dc
from . import io
from . import sim
from .steady_state import SteadyStateError, solve_steady_heat

log = logging.getLogger("viscostab")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
BUDGET_RTOL = 0.05
DIV_RTOL = 1e-10
ZETA_FLOOR = -1e-12
RUN_FILES = ("config.txt", "trajectory.csv", "decay.txt")

# the audit matrix: one representative per parameter value
AUDIT_MATRIX = (
    ("oldroyd-b", {}),
    ("giesekus", {"alpha": 0.1}),
    ("giesekus", {"alpha": 0.5}),
    ("giesekus", {"alpha": 0.9}),
    ("fene-p", {"b": 4.0}),
    ("fene-p", {"b": 10.0}),
    ("fene-p", {"b": 100.0}),
    ("johnson-segalman", {"a": 0.5}),
    ("ptt-exp", {"p": 0.01}),
    ("ptt-exp", {"p": 0.1}),
    ("ptt-exp", {"p": 1.0}),
)


class UsageError(Exception):
    pass


def _model_from_args(args) -> list[cm.ModelSpec]:
    if args.model == "all":
        return [cm.ModelSpec(kind=k, **kw) for k, kw in AUDIT_MATRIX]
    kw = {k: getattr(args, k) for k in ("alpha", "b", "p", "a") if getattr(args, k) is not None}
    return [cm.ModelSpec(kind=args.model, **kw)]


def cmd_audit(args) -> int:
    if not (0 < args.eig_lo <= args.eig_hi):
        raise UsageError("--eig-lo must be positive and not exceed --eig-hi")
    ok = True
    lines = []
    for m in _model_from_args(args):
        rep = au.audit_model(m, n_samples=args.samples, eig_range=(args.eig_lo, args.eig_hi), seed=args.seed)
        ok &= rep.passed
        lines.append(f"[{m.label}]")
        lines += [f"{k} = {v}" for k, v in rep.to_kv().items()]
        if args.out:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            stem = m.label.replace("(", "_").replace(")", "").replace("=", "").replace(",", "_")
            io.write_kv(out / f"audit_{stem}.txt", rep.to_kv().items())
            io.write_table(out / f"audit_{stem}_worst.csv", ["check", "margin", "xx", "yy", "zz", "xy", "xz", "yz"], rep.worst_rows())
    print("\n".join(lines))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_steady(args) -> int:
    cfg = cf.parse_config(args.config)
    try:
        st = solve_steady_heat(cfg.grid, cfg.boundary, cfg.thermal.kappa, tol=args.tol)
    except SteadyStateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    lo, hi = cfg.boundary.extrema(cfg.grid)
    ok = bool(st.theta.min() >= lo and st.theta.max() <= hi)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        io.write_raster(out / "theta_hat.csv", st.theta, cfg.grid)
    print(io.write_kv(None, [
        ("residual_inf", io.fmt(st.residual_inf)),
        ("iterations", st.iterations),
        ("min_theta", io.fmt(st.theta.min())),
        ("max_theta", io.fmt(st.theta.max())),
        ("maximum_principle", str(ok).lower()),
    ]), end="")
    return EXIT_OK if ok else EXIT_FAIL


def _snapshots(out: Path, state: sim.SimState, grid) -> None:
    uc = 0.5 * (state.u[:-1] + state.u[1:])
    vc = 0.5 * (state.v[:, :-1] + state.v[:, 1:])
    fields = {"theta": state.theta, "p": state.p, "u_center": uc, "v_center": vc}
    names = ("xx", "yy", "zz", "xy", "xz", "yz")
    idx = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))
    for n, (i, j) in zip(names, idx):
        fields[f"B_{n}"] = state.B[..., i, j]
    for name, f in fields.items():
        io.write_raster(out / f"{name}.csv", f, grid)


def run_checks(traj: sim.Trajectory) -> list[tuple[str, bool, str]]:
    """Per-run invariant checks as ``(name, passed, detail)``."""
    s = traj.series
    _, rel = traj.budget()
    checks = [
        ("divergence", bool(np.max(s["div_rel"]) <= DIV_RTOL), f"max relative divergence {np.max(s['div_rel']):.3e}"),
        ("spd", bool(np.min(s["min_eig_B"]) > 0), f"min eigenvalue {np.min(s['min_eig_B']):.6g}"),
        ("zeta_nonneg", bool(np.min(s["min_zeta"]) >= ZETA_FLOOR), f"min zeta {np.min(s['min_zeta']):.3e}"),
        ("theta_positive", bool(np.min(s["min_theta"]) > 0), f"min theta {np.min(s['min_theta']):.6g}"),
        ("budget", bool(np.max(rel) <= BUDGET_RTOL), f"max relative budget residual {np.max(rel):.3e}"),
        ("v_mech_nonincreasing", bool(np.all(np.diff(traj.column("v_mech")) <= 0)), ""),
        ("certifying", traj.certifying, "" if traj.certifying else "eigenvalue clipping was applied"),
    ]
    return checks


def cmd_simulate(args) -> int:
    cfg = cf.parse_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cf.write_config(cfg, out / "config.txt")
    try:
        traj = sim.run(cfg, progress=lambda n, tot: log.info("step %d / %d", n, tot))
    except sim.SimulationAborted as exc:
        _snapshots(out, exc.snapshot, cfg.grid)
        io.write_kv(out / "abort.txt", [("reason", exc.reason), ("t", io.fmt(exc.t)), ("message", str(exc))])
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_FAIL
    io.write_trajectory(out / "trajectory.csv", traj)
    _snapshots(out, traj.final, cfg.grid)
    rep = dc.verify_trajectory(traj)
    io.write_kv(out / "decay.txt", rep.to_kv())
    au_rep = au.audit_model(cfg.model, n_samples=args.audit_samples, seed=0)
    io.write_kv(out / "audit.txt", au_rep.to_kv().items())
    checks = run_checks(traj)
    io.write_kv(out / "checks.txt", [(n, f"{str(p).lower()}  # {d}" if d else str(p).lower()) for n, p, d in checks])
    for n, p, d in checks:
        print(f"{'PASS' if p else 'FAIL'}  {n}  {d}")
    print(f"{'PASS' if rep.passed else 'FAIL'}  decay  c_mech={rep.c_mech:.6g} fitted={rep.fitted_rate:.6g}")
    ok = all(p for _, p, _ in checks) and rep.passed and au_rep.passed
    return EXIT_OK if ok else EXIT_FAIL


def _decay_from_table(tab: dict, c_mech_value: float, slack: float, rho: float, c_p: float) -> dc.DecayReport:
    ycols = [k for k in tab if k.startswith("y_th_mn[")]
    return dc.verify_decay(
        tab["t"], tab["v_mech"], c_mech_value, slack,
        kinetic_sq=tab.get("kinetic_sq"), psi_int=tab.get("psi_int"), rho=rho,
        y=tab[ycols[0]] if ycols else None, c_p=c_p,
    )


def cmd_decay_fit(args) -> int:
    path = Path(args.trajectory)
    tab = io.read_table(path, required=("t", "v_mech"))
    rho, c_p = 1.0, math.nan
    cfg_path = Path(args.config) if args.config else path.parent / "config.txt"
    cfg = cf.parse_config(cfg_path) if cfg_path.exists() else None
    if cfg is not None:
        rho = cfg.model.rho
        c_p = dc.poincare_constant(cfg.grid.lx, cfg.grid.ly)
    if args.cmech == "auto":
        if cfg is None:
            raise UsageError(f"--cmech auto needs the run configuration ({cfg_path} not found; pass --config)")
        value = dc.c_mech(cfg.model, c_p)
    else:
        try:
            value = float(args.cmech)
        except ValueError:
            raise UsageError("--cmech must be 'auto' or a number") from None
    rep = _decay_from_table(tab, value, args.slack, rho, c_p)
    print(io.write_kv(args.out, rep.to_kv()), end="")
    return EXIT_OK if rep.passed else EXIT_FAIL


SUMMARY_HEADER = [
    "run", "model", "audit_passed", "audit_min_margin", "cf", "c_mech", "fitted_rate",
    "bound_passed", "bound_margin", "y_ratio", "budget_max_rel", "passed",
]


def report(directory: str | Path) -> tuple[str, list[list]]:
    """Summarise every run directory below ``directory``.

    A run directory holds ``config.txt``, ``trajectory.csv`` and
    ``decay.txt`` (``audit.txt`` optional), as written by ``simulate``.

    Raises
    ------
    FileNotFoundError
        When no run directory is found, listing the expected files.
    io.FormatError
        On a corrupted CSV row (with its line number).
    """
    root = Path(directory)
    if not root.is_dir():
        raise FileNotFoundError(f"{root} is not a directory")
    runs = sorted({p.parent for p in root.rglob("trajectory.csv")})
    if not runs:
        raise FileNotFoundError(f"no runs found in {root}; each run needs {', '.join(RUN_FILES)}")
    rows = []
    for run in runs:
        missing = [f for f in RUN_FILES if not (run / f).exists()]
        if missing:
            raise FileNotFoundError(f"{run}: missing {', '.join(missing)}")
        cfg = cf.parse_config(run / "config.txt")
        tab = io.read_table(run / "trajectory.csv", required=("t", "v_mech"))
        dk = io.read_kv(run / "decay.txt")
        audit_passed, audit_margin = "n/a", math.nan
        if (run / "audit.txt").exists():
            ak = io.read_kv(run / "audit.txt")
            audit_passed = ak.get("passed", "n/a")
            margins = [float(v) for k, v in ak.items() if k.endswith(".margin")]
            audit_margin = min(margins) if margins else math.nan
        cp = dc.poincare_constant(cfg.grid.lx, cfg.grid.ly)
        cm_val = dc.c_mech(cfg.model, cp)
        rep = _decay_from_table(tab, cm_val, 0.05, cfg.model.rho, cp)
        budget = float(np.max(tab["budget_rel"])) if "budget_rel" in tab else math.nan
        passed = rep.passed and (audit_passed in ("true", "n/a")) and not budget > BUDGET_RTOL
        rows.append([
            str(run.relative_to(root)) if run != root else ".", cfg.model.label, audit_passed, audit_margin,
            float(cm.cf_model(cfg.model)), cm_val, rep.fitted_rate, str(all(b.passed for b in rep.bounds)).lower(),
            rep.margin, rep.y_ratio if rep.y_ratio is not None else math.nan, budget, str(passed).lower(),
        ])
        if dk.get("passed") not in (None, str(rep.passed).lower()):
            log.warning("%s: stored decay verdict differs from recomputed one", run)
    widths = [max(len(SUMMARY_HEADER[j]), *(len(_cell(r[j])) for r in rows)) for j in range(len(SUMMARY_HEADER))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(SUMMARY_HEADER, widths))]
    lines += ["  ".join(_cell(c).ljust(w) for c, w in zip(r, widths)) for r in rows]
    return "\n".join(lines) + "\n", rows


def _cell(x) -> str:
    return x if isinstance(x, str) else f"{x:.6g}"


def cmd_report(args) -> int:
    text, rows = report(args.directory)
    root = Path(args.directory)
    (root / "summary.txt").write_text(text)
    io.write_table(root / "summary.csv", SUMMARY_HEADER, rows)
    print(text, end="")
    return EXIT_OK if all(r[-1] == "true" for r in rows) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="viscostab", description="Stability checks for viscoelastic rate-type fluids.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("audit", help="sample the free-energy and relaxation assumptions")
    a.add_argument("--model", required=True, help="model name or 'all'")
    a.add_argument("--samples", type=int, default=10_000)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--eig-lo", type=float, default=1e-3)
    a.add_argument("--eig-hi", type=float, default=50.0)
    a.add_argument("--alpha", type=float)
    a.add_argument("--b", type=float)
    a.add_argument("--p", type=float)
    a.add_argument("--a", type=float)
    a.add_argument("--out", help="directory for key-value and worst-case CSV files")
    a.set_defaults(func=cmd_audit)

    s = sub.add_parser("steady", help="solve the steady heat problem")
    s.add_argument("--config", required=True)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--out")
    s.set_defaults(func=cmd_steady)

    r = sub.add_parser("simulate", help="run a perturbed simulation")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--audit-samples", type=int, default=10_000)
    r.set_defaults(func=cmd_simulate)

    d = sub.add_parser("decay-fit", help="check exponential bounds on a trajectory CSV")
    d.add_argument("--trajectory", required=True)
    d.add_argument("--cmech", default="auto")
    d.add_argument("--slack", type=float, default=0.05)
    d.add_argument("--config", help="run configuration (default: config.txt next to the trajectory)")
    d.add_argument("--out", help="write the report here as well")
    d.set_defaults(func=cmd_decay_fit)

    rp = sub.add_parser("report", help="summarise run directories")
    rp.add_argument("directory")
    rp.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (UsageError, cm.ConfigError, FileNotFoundError, io.FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
