"""Command-line interface.

    kacwild [--config FILE] [--output-dir DIR] [--threads N] COMMAND [options]

Commands: simulate, solve, tree-stats, bounds, rate-study, verify.

Options resolve in three layers: built-in defaults, then the JSON config
file, then flags given on the command line.  A config may carry a
``"command"`` key, in which case the command name can be left off; the
``config`` block of any manifest is such a file, so every run can be
repeated from its manifest alone.

Artifacts go to --output-dir, else $KACWILD_OUTPUT_DIR, else the current
directory.  Each artifact is written atomically and gets a
``<name>.manifest.json`` beside it.

Exit codes
----------
    0  success
    1  unexpected internal error
    2  bad arguments, config or sizes
    3  invalid initial law
    4  outside a bound's validity regime (e.g. t < t0)
    5  collision count above the cap
    6  numerical instability in the ODE solver
    7  verify ran and at least one check failed

Failures print a JSON object with keys error, message, exit_code on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from ._io import atomic_write
from .errors import ArgumentError, KacError

EXIT_VERIFY_FAILED = 7

DEFAULTS = {
    "simulate": {"law": "rademacher:1", "t": 1.0, "size": 10_000, "seed": None, "format": "csv",
                 "chunks": None, "nu_cap": 10_000_000, "out": None},
    "solve": {"law": "rademacher:1", "t": 1.0, "method": "both", "N": 40, "step": 0.02,
              "xi_max": None, "n_points": 1025, "n_theta": 256, "out": None, "plot": False},
    "tree-stats": {"n": 5, "x": [0.375, 0.5, 1.0], "enumerate": False, "size": 0, "seed": None,
                   "out": None},
    "bounds": {"kind": "alpha", "law": "rademacher:1", "t": 1.0, "x": 0.5, "p": 3.0,
               "delta": 1.0, "C": None, "a": 0.5, "c": None},
    "rate-study": {"law": "rademacher:1", "t_grid": [2.0, 4.0, 6.0, 8.0], "size": 100_000,
                   "seed": None, "sigma": None, "beta": 0.01, "a": 0.5, "p": 3.0, "c": None,
                   "out": None, "plot": True},
    "verify": {"out": None},
}
SEEDED = {"simulate", "rate-study"}
BOUND_KINDS = ("alpha", "lemma1", "general", "berry-esseen", "depth-moment", "m", "t0")


def _floats(text):
    return [float(v) for v in str(text).replace(" ", "").split(",") if v]


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    # global options are accepted before or after the command name
    common = argparse.ArgumentParser(add_help=False, argument_default=S)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--output-dir", dest="output_dir",
                        help="artifact directory (default $KACWILD_OUTPUT_DIR or .)")
    common.add_argument("--threads", type=int, help="worker cap; results do not depend on it")
    top = argparse.ArgumentParser(prog="kacwild", description="Kac equation: Wild sums, McKean trees, CLT rates.",
                                  argument_default=S, parents=[common])
    top.add_argument("--version", action="version", version=f"kacwild {__version__}")
    sub = top.add_subparsers(dest="command", metavar="COMMAND")
    _sub = sub.add_parser

    def add_parser(name, **kw):
        return _sub(name, parents=[common], **kw)

    sub.add_parser = add_parser

    p = sub.add_parser("simulate", help="draw V_t samples", argument_default=S)
    p.add_argument("--law")
    p.add_argument("--t", type=float)
    p.add_argument("--size", type=int)
    p.add_argument("--seed", type=int, help="required")
    p.add_argument("--format", choices=["csv", "bin"])
    p.add_argument("--chunks", type=int)
    p.add_argument("--nu-cap", dest="nu_cap", type=int)
    p.add_argument("--out")

    p = sub.add_parser("solve", help="Fourier-side solution on a grid", argument_default=S)
    p.add_argument("--law")
    p.add_argument("--t", type=float)
    p.add_argument("--method", choices=["wild", "ode", "both"])
    p.add_argument("--N", type=int, help="Wild series terms")
    p.add_argument("--step", type=float, help="RK4 step")
    p.add_argument("--xi-max", dest="xi_max", type=float)
    p.add_argument("--n-points", dest="n_points", type=int)
    p.add_argument("--n-theta", dest="n_theta", type=int)
    p.add_argument("--out")
    p.add_argument("--plot", action="store_true")

    p = sub.add_parser("tree-stats", help="Catalan counts, depth moments, enumeration",
                       argument_default=S)
    p.add_argument("--n", type=int)
    p.add_argument("--x", type=_floats, help="comma-separated x values")
    p.add_argument("--enumerate", action="store_true", help="write the enumeration CSV (n <= 10)")
    p.add_argument("--size", type=int, help="Monte Carlo trees (0 = none)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    p = sub.add_parser("bounds", help="bound calculators", argument_default=S)
    p.add_argument("kind", choices=BOUND_KINDS)
    p.add_argument("--law")
    p.add_argument("--t", type=float)
    p.add_argument("--x", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--C", type=float, help="Berry-Esseen constant")
    p.add_argument("--a", type=float)
    p.add_argument("--c", type=float)

    p = sub.add_parser("rate-study", help="distance to the Maxwellian along a t grid",
                       argument_default=S)
    p.add_argument("--law")
    p.add_argument("--t-grid", dest="t_grid", type=_floats)
    p.add_argument("--size", type=int)
    p.add_argument("--seed", type=int, help="required")
    p.add_argument("--sigma", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--out")
    p.add_argument("--no-plot", dest="plot", action="store_false")

    p = sub.add_parser("verify", help="run the invariant suite", argument_default=S)
    p.add_argument("--out")
    return top


def resolve(argv) -> dict:
    """Merge defaults, config file and flags into one flat config dict."""
    parser = build_parser()
    pre_cfg = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre_cfg.add_argument("--config")
    known, _ = pre_cfg.parse_known_args(argv)
    file_cfg = {}
    if known.config:
        try:
            with open(known.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, ValueError) as exc:
            raise ArgumentError(f"cannot read config {known.config}: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise ArgumentError("config must be a JSON object")
        if file_cfg.get("tool") == "kacwild" and "config" in file_cfg:
            file_cfg = file_cfg["config"]  # a manifest
    argv = list(argv)
    commands = set(DEFAULTS)
    if not any(a in commands for a in argv) and "command" in file_cfg:
        argv.append(file_cfg["command"])
    ns = vars(parser.parse_args(argv))
    command = ns.pop("command", None)
    if command is None:
        parser.print_usage(sys.stderr)
        raise ArgumentError("no command given")
    if file_cfg.get("command", command) != command:
        raise ArgumentError(f"config is for {file_cfg['command']!r}, not {command!r}")
    cfg = {"command": command, "threads": 1, "output_dir": None}
    cfg.update(DEFAULTS[command])
    unknown = set(file_cfg) - set(cfg) - {"config", "version", "tool"}
    if unknown:
        raise ArgumentError(f"unknown config keys for {command}: {sorted(unknown)}")
    cfg.update({k: v for k, v in file_cfg.items() if k in cfg})
    ns.pop("config", None)
    cfg.update(ns)
    if cfg["output_dir"] is None:
        cfg["output_dir"] = os.environ.get("KACWILD_OUTPUT_DIR", ".")
    if cfg["threads"] is None or int(cfg["threads"]) < 1:
        raise ArgumentError("--threads must be >= 1")
    if command in SEEDED and cfg.get("seed") is None:
        raise ArgumentError(f"{command} needs --seed (no implicit entropy)")
    if isinstance(cfg.get("law"), dict):
        from .laws import parse_law
        cfg["law"] = parse_law(cfg["law"]).spec
    return cfg


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(type(obj).__name__)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, default=_jsonable, allow_nan=True) + "\n"


def write_manifest(artifact: Path, cfg: dict, artifacts, extra=None) -> Path:
    manifest = {"tool": "kacwild", "version": __version__, "command": cfg["command"],
                "config": cfg, "artifacts": [str(a) for a in artifacts]}
    if extra:
        manifest["result"] = extra
    path = Path(f"{artifact}.manifest.json")
    atomic_write(path, _dumps(manifest))
    return path


def _outdir(cfg) -> Path:
    return Path(cfg["output_dir"])


def _tag(v) -> str:
    return f"{v:g}".replace(".", "p")


# commands ---------------------------------------------------------------

def cmd_simulate(cfg, out):
    from .simulator import moment_diagnostics, simulate_batch

    chunks = cfg["chunks"] or cfg["threads"]
    batch = simulate_batch(cfg["t"], cfg["law"], cfg["size"], cfg["seed"], chunks=chunks,
                           threads=cfg["threads"], nu_cap=cfg["nu_cap"])
    ext = "csv" if cfg["format"] == "csv" else "kacv"
    path = Path(cfg["out"]) if cfg["out"] else \
        _outdir(cfg) / f"samples-t{_tag(cfg['t'])}-seed{cfg['seed']}.{ext}"
    atomic_write(path, batch.to_csv() if ext == "csv" else batch.to_bytes())
    summary = {"artifact": str(path), "size": batch.size, "wall_clock_s": batch.meta["wall_clock_s"],
               "moments": moment_diagnostics(batch, cfg["law"])}
    write_manifest(path, cfg, [path], summary)
    out(_dumps(summary))
    return 0


def cmd_solve(cfg, out):
    from .fourier import CharGrid, integrate_ode, wild_series_eval, wild_terms
    from .plots import emit_plot_data

    phi0 = CharGrid.from_law(cfg["law"], xi_max=cfg["xi_max"], n_points=cfg["n_points"])
    cfg["xi_max"] = phi0.xi_max
    grids, summary = {}, {"t": cfg["t"], "xi_max": phi0.xi_max, "n_points": phi0.n_points}
    if cfg["method"] in ("wild", "both"):
        grids["wild"] = wild_series_eval(wild_terms(phi0, cfg["N"], cfg["n_theta"]), cfg["t"])
        summary["truncation_bound"] = grids["wild"].meta["truncation_bound"]
    if cfg["method"] in ("ode", "both"):
        grids["ode"] = integrate_ode(phi0, cfg["t"], step=cfg["step"], n_theta=cfg["n_theta"])
    if len(grids) == 2:
        summary["sup_discrepancy"] = grids["wild"].sup_distance(grids["ode"])
    base = Path(cfg["out"]) if cfg["out"] else _outdir(cfg) / f"solution-t{_tag(cfg['t'])}"
    written = []
    for name, grid in grids.items():
        path = Path(f"{base}-{name}.csv")
        atomic_write(path, grid.to_csv())
        written.append(path)
        if cfg["plot"]:
            written += emit_plot_data(grid, f"{base}-{name}")
    summary["artifacts"] = [str(p) for p in written]
    write_manifest(written[0], cfg, written, summary)
    out(_dumps(summary))
    return 0


def cmd_tree_stats(cfg, out):
    from .trees import catalan, depth_moment_exact, enumeration_csv, sample_depth_power_sums

    n = cfg["n"]
    xs = [float(x) for x in cfg["x"]]
    summary = {"n": n, "catalan": catalan(n),
               "depth_moment_exact": {repr(x): depth_moment_exact(x, n) for x in xs}}
    if cfg["size"]:
        if cfg["seed"] is None:
            raise ArgumentError("Monte Carlo tree statistics need --seed")
        sums = sample_depth_power_sums(n, xs, cfg["size"], np.random.default_rng(cfg["seed"]))
        summary["depth_moment_mc"] = {repr(x): {"mean": float(sums[:, k].mean()),
                                                "se": float(sums[:, k].std(ddof=1) / math.sqrt(cfg["size"]))}
                                      for k, x in enumerate(xs)}
    base = Path(cfg["out"]) if cfg["out"] else _outdir(cfg) / f"trees-n{n}"
    written = []
    if cfg["enumerate"]:
        path = Path(f"{base}.csv")
        atomic_write(path, enumeration_csv(n))
        written.append(path)
    path = Path(f"{base}.json")
    atomic_write(path, _dumps(summary))
    written.append(path)
    write_manifest(path, cfg, written, summary)
    out(_dumps(summary))
    return 0


def _params(cfg):
    from .stats import Theorem2Params

    return Theorem2Params(a=cfg["a"], p=cfg["p"], c=cfg["c"])


def cmd_bounds(cfg, out):
    from . import coefficients as co
    from . import stats as st

    kind = cfg["kind"]
    if kind == "alpha":
        res = {"p": cfg["p"], "alpha_p": co.alpha_p(cfg["p"]), "closed_form": co.alpha_p_closed_form(cfg["p"])}
    elif kind == "lemma1":
        res = {"bound": co.lemma1_bound(cfg["x"], cfg["p"], cfg["t"])}
    elif kind == "depth-moment":
        res = {"value": st.depth_moment_time(cfg["x"], cfg["t"])}
    elif kind == "berry-esseen":
        res = {"bound": st.theorem2_bound_berry_esseen(cfg["t"], cfg["law"], cfg["delta"], cfg["C"])}
    else:
        params = _params(cfg)
        t0 = st.threshold_t0(cfg["law"], params)
        res = {"t0": t0, "B1": params.B1, "B2": params.B2, "c": params.c}
        if kind == "m":
            res["M"] = st.m_of_t(cfg["t"], cfg["law"], params)
        elif kind == "general":
            from .laws import parse_law
            res["M"] = st.m_of_t(cfg["t"], cfg["law"], params)
            res["A"] = st.constant_A(parse_law(cfg["law"]).sigma)
            res["bound"] = st.theorem2_bound_general(cfg["t"], cfg["law"], params)
    res["kind"] = kind
    path = _outdir(cfg) / f"bounds-{kind}.json"
    atomic_write(path, _dumps(res))
    write_manifest(path, cfg, [path], res)
    out(_dumps(res))
    return 0


def cmd_rate_study(cfg, out):
    from .plots import emit_plot_data
    from .stats import rate_study

    params = _params(cfg)
    rep = rate_study(cfg["law"], cfg["t_grid"], cfg["size"], cfg["seed"], sigma=cfg["sigma"],
                     beta=cfg["beta"], threads=cfg["threads"], params=params)
    base = Path(cfg["out"]) if cfg["out"] else _outdir(cfg) / f"rate-{rep.law.replace(':', '-').replace(',', '_')}"
    written = [Path(f"{base}.csv"), Path(f"{base}.json")]
    atomic_write(written[0], rep.to_csv())
    atomic_write(written[1], rep.to_json())
    if cfg["plot"]:
        written += emit_plot_data(rep, base)
    summary = json.loads(rep.to_json())
    write_manifest(written[0], cfg, written, summary)
    out(_dumps(summary))
    return 0


def cmd_verify(cfg, out):
    from dataclasses import asdict

    from .checks import run_verify

    start = time.perf_counter()
    results = run_verify(out=lambda line: out(line + "\n"))
    passed = all(r.passed for r in results)
    out(f"{'ALL PASS' if passed else 'FAILURES'}  ({time.perf_counter() - start:.1f}s)\n")
    path = Path(cfg["out"]) if cfg["out"] else _outdir(cfg) / "verify.json"
    report = {"passed": passed, "checks": [asdict(r) for r in results]}
    atomic_write(path, _dumps(report))
    write_manifest(path, cfg, [path], {"passed": passed})
    return 0 if passed else EXIT_VERIFY_FAILED


COMMANDS = {"simulate": cmd_simulate, "solve": cmd_solve, "tree-stats": cmd_tree_stats,
            "bounds": cmd_bounds, "rate-study": cmd_rate_study, "verify": cmd_verify}


def _error(exc, code):
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    info = getattr(exc, "info", None)
    if info:
        payload["info"] = info
    sys.stderr.write(json.dumps(payload, default=_jsonable) + "\n")
    return code


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = resolve(argv)
        return COMMANDS[cfg["command"]](cfg, sys.stdout.write)
    except KacError as exc:
        return _error(exc, exc.exit_code)
    except SystemExit as exc:  # argparse
        return exc.code if isinstance(exc.code, int) else 2
    except Exception as exc:  # noqa: BLE001
        return _error(exc, 1)


if __name__ == "__main__":
    sys.exit(main())
