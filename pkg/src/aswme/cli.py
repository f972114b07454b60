"""Command-line front end: ``aswme {eigen,region,simulate,converge}``.

Every option may also be given in an INI-style config file (``--config``),
in a section named after the command; keys in ``[common]`` apply to every
command that accepts them.  Keys use the long flag name (dashes or underscores).  Flags on
the command line override the file.

Exit status: 0 success, 1 numerical failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .model import ModelConfig, Variant, state_from_primitives, system_matrix
from .scenarios import (
    ReferenceSpec,
    convergence_study,
    dam_break_scenario,
    initial_state,
    reference_solution,
    smooth_scenario,
    write_convergence_csv,
)
from .solver import SolverError, SolverParams, run, write_snapshot_csv
from .spectral import (
    EigenSolverError,
    char_poly_roots_factored,
    classify_hyperbolic,
    haswme_eigenvalues,
    scan_region,
    write_region_csv,
    write_region_pgm,
)

log = logging.getLogger("aswme")

OUTPUT_ENV = "ASWME_OUTPUT_DIR"
SCENARIOS = {"dam_break": dam_break_scenario, "smooth": smooth_scenario}


class ConfigError(ValueError):
    pass


# -- argument types ---------------------------------------------------------


def _orders(text: str) -> tuple[int, int]:
    try:
        parts = [int(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"orders must look like '2,0', got {text!r}") from None
    if len(parts) != 2 or min(parts) < 0:
        raise argparse.ArgumentTypeError(f"orders must be two non-negative integers, got {text!r}")
    return parts[0], parts[1]


def _floats(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 0:
        raise argparse.ArgumentTypeError("need at least one non-negative integer")
    return vals


def _range(text: str) -> tuple[float, float, int]:
    parts = text.split(",")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except (ValueError, IndexError):
        raise argparse.ArgumentTypeError(f"range must look like 'lo,hi,n', got {text!r}") from None
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"range must look like 'lo,hi,n', got {text!r}")
    return lo, hi, n


def _models(text: str) -> tuple[Variant, ...]:
    try:
        return tuple(Variant(p.strip().lower()) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"models must be aswme and/or haswme, got {text!r}") from None


def _model(text: str) -> Variant:
    try:
        return Variant(text.strip().lower())
    except ValueError:
        raise argparse.ArgumentTypeError(f"model must be aswme or haswme, got {text!r}") from None


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aswme", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI file with a section per command")
    common.add_argument("--out", type=Path, help=f"output directory (default: ${OUTPUT_ENV} or ./aswme_output)")
    common.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eigen", parents=[common], help="spectrum of the system matrix at one state")
    p.add_argument("--model", type=_model, default="aswme")
    p.add_argument("--orders", type=_orders, default="2,0")
    p.add_argument("--g", type=float, default=1.0)
    p.add_argument("--h", type=float, default=1.0)
    p.add_argument("--vrm", type=float, default=0.0)
    p.add_argument("--alpha1", type=float, default=0.0)
    p.add_argument("--alpha2", type=float, default=0.0)
    p.add_argument("--alpha", type=_floats, default="", help="all radial moments; overrides alpha1/alpha2")
    p.add_argument("--vthm", type=float, default=0.0)
    p.add_argument("--gamma", type=_floats, default="", help="angular moments")

    p = sub.add_parser("region", parents=[common], help="hyperbolicity map over (alpha1, alpha2)")
    p.add_argument("--system", type=_orders, default="2,0")
    p.add_argument("--model", type=_model, default="aswme")
    p.add_argument("--alpha1-range", type=_range, default="-3,3,601")
    p.add_argument("--alpha2-range", type=_range, default="-3,3,601")
    p.add_argument("--tol-imag", type=float, default=1e-9)

    for name, helptext in (("simulate", "run a scenario"), ("converge", "model-order error study")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--scenario", choices=sorted(SCENARIOS), default="dam_break" if name == "simulate" else "smooth")
        p.add_argument("--n-cells", type=int)
        p.add_argument("--r-min", type=float)
        p.add_argument("--r-max", type=float)
        p.add_argument("--t-end", type=float)
        p.add_argument("--cfl", type=float)
        p.add_argument("--g", type=float)
        p.add_argument("--nu", type=float)
        p.add_argument("--slip", type=float)
        if name == "simulate":
            p.add_argument("--model", type=_model)
            p.add_argument("--orders", type=_orders)
            p.add_argument("--times", type=_floats, default="", help="extra snapshot times")
        else:
            p.add_argument("--orders", type=_ints, default="0,1,2,3", help="moment orders N, run as (N,N)")
            p.add_argument("--models", type=_models, default="aswme,haswme")
            p.add_argument("--ref-orders", type=_orders, default="4,4")
            p.add_argument("--ref-model", type=_model, default="haswme")
            p.add_argument("--refine", type=int, default=4)
    return parser


def _subparser(parser: argparse.ArgumentParser, command: str) -> argparse.ArgumentParser:
    for action in parser._subparsers._group_actions:
        if command in action.choices:
            return action.choices[command]
    raise KeyError(command)


def _apply_config(parser, command: str, path: Path) -> None:
    """Install config-file values as string defaults (argparse converts them)."""
    cp = configparser.ConfigParser(default_section="__none__")
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    sp = _subparser(parser, command)
    dests = {a.dest for a in sp._actions} - {"config", "help", "version"}
    defaults = {}
    # [common] keys apply where the command understands them
    if cp.has_section("common"):
        defaults.update({k.replace("-", "_"): v for k, v in cp.items("common") if k.replace("-", "_") in dests})
    if cp.has_section(command):
        for key, val in cp.items(command):
            dest = key.replace("-", "_")
            if dest not in dests:
                raise ConfigError(f"unknown key {key!r} in [{command}] of {path}")
            defaults[dest] = val
    sp.set_defaults(**defaults)


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path)
    known, _ = pre.parse_known_args(argv)
    command = next((a for a in argv if a in ("eigen", "region", "simulate", "converge")), None)
    if known.config is not None and command is not None:
        try:
            _apply_config(parser, command, known.config)
        except ConfigError as exc:
            parser.error(str(exc))
    return parser.parse_args(argv)


# -- helpers ----------------------------------------------------------------


def _jsonable(v):
    if isinstance(v, Variant):
        return v.value
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    return v


def resolved_config(args: argparse.Namespace) -> dict:
    skip = {"config", "out", "log_level"}
    return {k: _jsonable(v) for k, v in sorted(vars(args).items()) if k not in skip}


def config_hash(args: argparse.Namespace) -> str:
    blob = json.dumps(resolved_config(args), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def header(args: argparse.Namespace) -> str:
    return f"aswme {__version__} command={args.command} config-sha256={config_hash(args)}"


def output_dir(args: argparse.Namespace) -> Path:
    out = args.out or Path(os.environ.get(OUTPUT_ENV, "aswme_output"))
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from None
    return out


def _fmt(x) -> str:
    return "nan" if x is None else f"{x:.17g}"


# -- commands ---------------------------------------------------------------


def cmd_eigen(args) -> int:
    n_r, n_t = args.orders
    cfg = ModelConfig(n_r, n_t, g=args.g, variant=args.model)
    alpha = np.zeros(n_r)
    if args.alpha:
        if len(args.alpha) != n_r:
            raise ConfigError(f"--alpha needs {n_r} values, got {len(args.alpha)}")
        alpha[:] = args.alpha
    else:
        if n_r >= 1:
            alpha[0] = args.alpha1
        if n_r >= 2:
            alpha[1] = args.alpha2
        elif args.alpha2:
            raise ConfigError("--alpha2 needs n_r >= 2")
    gamma = np.zeros(n_t)
    if args.gamma:
        if len(args.gamma) != n_t:
            raise ConfigError(f"--gamma needs {n_t} values, got {len(args.gamma)}")
        gamma[:] = args.gamma
    if not args.h > 0:
        raise ConfigError("--h must be positive")
    state = state_from_primitives(cfg, args.h, args.vrm, alpha, args.vthm, gamma)
    M = system_matrix(state, cfg)
    at_rest = not np.any(alpha) and not np.any(gamma)
    report = classify_hyperbolic(M, check_diagonalizable=True, exempt=args.vrm if at_rest else None)
    dense = report.eigenvalues

    closed = None
    if cfg.variant is Variant.HASWME:
        closed = haswme_eigenvalues(cfg, args.h, args.vrm, alpha[0] if n_r else 0.0)
    factored = None
    if (
        cfg.variant is Variant.ASWME
        and (n_r, n_t) in ((2, 0), (2, 2))
        and args.vthm == 0
        and not np.any(gamma)
        and not ((n_r, n_t) == (2, 2) and alpha[1] != 0)
    ):
        c = np.sqrt(cfg.g * args.h)
        factored = args.vrm + c * char_poly_roots_factored((n_r, n_t), alpha[0] / c, alpha[1] / c)

    def delta(other):
        if other is None:
            return None
        o = np.asarray(other, dtype=complex)
        o = o[np.lexsort((o.imag, o.real))]
        return float(np.max(np.abs(o - dense)))

    print(f"model {cfg.variant.value} orders ({n_r},{n_t})  state h={args.h} v_rm={args.vrm} alpha={alpha.tolist()} v_thm={args.vthm} gamma={gamma.tolist()}")
    print("eigenvalues (dense):      " + ", ".join(f"{z.real:.12g}{z.imag:+.3g}j" for z in dense))
    if closed is not None:
        print("eigenvalues (closed form):" + ", ".join(f" {x:.12g}" for x in closed))
        print(f"max |dense - closed form| = {delta(closed):.3e}")
    if factored is not None:
        print("roots (factored polynomial):" + ", ".join(f" {z.real:.12g}{z.imag:+.3g}j" for z in factored))
        print(f"max |dense - polynomial|  = {delta(factored):.3e}")
    print(f"max |Im| = {report.max_abs_imag:.3e}; diagonalizable: {report.diagonalizable}")
    print("verdict: " + ("hyperbolic" if report.hyperbolic else "NOT hyperbolic"))

    path = output_dir(args) / f"eigen_{cfg.variant.value}_{n_r}_{n_t}.csv"
    with path.open("w", newline="\n") as fh:
        fh.write(f"# {header(args)}\n")
        fh.write("index,dense_re,dense_im,closed_form,factored_re,factored_im\n")
        for i, z in enumerate(dense):
            cf = None if closed is None else closed[i]
            pr = None if factored is None else factored[i]
            fh.write(
                f"{i},{_fmt(z.real)},{_fmt(z.imag)},{_fmt(cf)},"
                f"{_fmt(None if pr is None else pr.real)},{_fmt(None if pr is None else pr.imag)}\n"
            )
    print(f"wrote {path}")
    return 0


def cmd_region(args) -> int:
    n_r, n_t = args.system
    cfg = ModelConfig(n_r, n_t, g=1.0, variant=args.model)
    a1, a2, grid = scan_region(cfg, args.alpha1_range, args.alpha2_range, tol_imag=args.tol_imag)
    out = output_dir(args)
    stem = f"region_{cfg.variant.value}_{n_r}_{n_t}"
    hdr = header(args)
    try:
        csv = write_region_csv(out / f"{stem}.csv", a1, a2, grid, hdr)
        pgm = write_region_pgm(out / f"{stem}.pgm", grid, hdr)
    except OSError as exc:
        raise ConfigError(f"cannot write region output in {out}: {exc}") from None
    print(f"system ({n_r},{n_t}) {cfg.variant.value}: hyperbolic fraction {grid.mean():.6f} on {grid.shape[0]}x{grid.shape[1]}")
    print(f"wrote {csv}\nwrote {pgm}")
    return 0


def _scenario(args):
    overrides = {}
    for key in ("n_cells", "t_end", "cfl", "g", "nu", "slip"):
        val = getattr(args, key, None)
        if val is not None:
            overrides[key] = val
    if getattr(args, "model", None) is not None:
        overrides["variant"] = args.model
    if getattr(args, "orders", None) is not None and args.command == "simulate":
        overrides["n_r"], overrides["n_theta"] = args.orders
    sc = SCENARIOS[args.scenario](**overrides)
    if args.r_min is not None or args.r_max is not None:
        grid = replace(
            sc.grid,
            r_min=sc.grid.r_min if args.r_min is None else args.r_min,
            r_max=sc.grid.r_max if args.r_max is None else args.r_max,
        )
        sc = sc.with_(grid=grid)
    return sc


def cmd_simulate(args) -> int:
    sc = _scenario(args)
    times = tuple(sorted(set(args.times) | {sc.t_end}))
    t_end = max(times)
    if min(times) < 0:
        raise ConfigError("snapshot times must be non-negative")
    params = SolverParams(cfl=sc.cfl, t_end=t_end, snapshot_times=times)
    out = output_dir(args)
    cfg = sc.cfg
    t0 = time.perf_counter()
    res = run(initial_state(sc), sc.grid, cfg, params)
    wall = time.perf_counter() - t0
    hdr = header(args)
    stem = f"{sc.name}_{cfg.variant.value}_{cfg.n_r}_{cfg.n_theta}"
    files = []
    for t, U in sorted(res.snapshots.items()):
        path = write_snapshot_csv(out / f"{stem}_t{t:.6g}.csv", U, sc.grid, cfg, f"{hdr} t={t:.17g}")
        files.append(str(path.name))
        print(f"wrote {path}")
    manifest = {
        "version": __version__,
        "config_sha256": config_hash(args),
        "config": resolved_config(args),
        "scenario": sc.name,
        "variant": cfg.variant.value,
        "orders": [cfg.n_r, cfg.n_theta],
        "g": cfg.g,
        "nu": cfg.nu,
        "slip": cfg.slip,
        "grid": {"r_min": sc.grid.r_min, "r_max": sc.grid.r_max, "n_cells": sc.grid.n_cells},
        "cfl": sc.cfl,
        "t_end": res.time,
        "n_steps": res.n_steps,
        "dt_min": res.dt_min if res.n_steps else None,
        "dt_max": res.dt_max if res.n_steps else None,
        "wall_time_s": wall,
        "snapshots": files,
    }
    mpath = out / f"{stem}_manifest.json"
    mpath.write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {mpath}")
    return 0


def cmd_converge(args) -> int:
    sc = _scenario(args)
    if args.refine < 1:
        raise ConfigError("--refine must be >= 1")
    spec = ReferenceSpec(args.ref_orders[0], args.ref_orders[1], args.ref_model, args.refine)
    ref = reference_solution(sc, spec)
    orders = [(n, n) for n in args.orders]
    rows = []
    for variant in args.models:
        rows += convergence_study(sc, orders, variant, reference_states=ref)
    path = write_convergence_csv(output_dir(args) / f"converge_{sc.name}.csv", rows, header(args))
    print("variant  N   error_h        error_vrm      error_vthm")
    for row in rows:
        e = row.errors
        extra = "" if row.failure is None else f"  FAILED: {row.failure}"
        print(f"{row.variant:7s} {row.order[0]:2d}   {e['h']:.6e}  {e['v_rm']:.6e}  {e['v_thm']:.6e}{extra}")
    print(f"wrote {path}")
    return 1 if any(r.failure for r in rows) else 0


COMMANDS = {"eigen": cmd_eigen, "region": cmd_region, "simulate": cmd_simulate, "converge": cmd_converge}


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ValueError) as exc:
        print(f"aswme {args.command}: configuration error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, EigenSolverError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"aswme {args.command}: numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
