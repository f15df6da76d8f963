"""Command-line front end.

Subcommands: spectrum | solve | nodal | partition | verify | list.  Settings
come from an optional YAML ``--config`` file and are overridden by flags.
Every command that writes files also writes ``manifest.json`` (paths and
SHA-256 checksums) into ``--out-dir``.

Exit codes: 0 success / all claims pass, 1 some claim failed, 2 usage
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import io
from .catalog import PI2, annulus_spectrum_round, cylinder_spectrum, spectrum_rows, annulus_rows
from .discretization import ANNULUS, assemble, build_grid
from .eigensolver import lowest_eigenpairs
from .errors import InvalidArgument, NumericalFailure, StructuralError
from .nodal import courant_sharp_check, neighbor_graph, nodal_domains
from .partition import INITS, StructuralWarning, compare_with_theory, iterate
from .scenarios import SCENARIOS, list_scenarios, run_scenario

EXIT_OK, EXIT_CLAIM, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

# flag name -> config key
_FLAGS = ("kind", "b", "k", "ntheta", "nt", "restarts", "seed", "tol", "degree", "count",
          "index", "max_sweeps", "jobs")


def _common(p, *names):
    adders = {
        "kind": lambda: p.add_argument("--kind", choices=("strip", "annulus")),
        "b": lambda: p.add_argument("--b", type=float, help="strip / annulus width"),
        "k": lambda: p.add_argument("--k", type=int, help="number of parts"),
        "ntheta": lambda: p.add_argument("--ntheta", type=int, help="angular cells"),
        "nt": lambda: p.add_argument("--nt", type=int, help="transverse cells"),
        "restarts": lambda: p.add_argument("--restarts", type=int, help="random restarts"),
        "seed": lambda: p.add_argument("--seed", type=int),
        "tol": lambda: p.add_argument("--tol", type=float, help="eigen residual tolerance"),
        "degree": lambda: p.add_argument("--degree", type=int, choices=(1, 2),
                                         help="2 for the double covering"),
        "bc": lambda: p.add_argument("--bc", help="two letters from N/D, bottom then top"),
        "count": lambda: p.add_argument("--count", type=int, help="number of eigenvalues"),
        "index": lambda: p.add_argument("--index", type=int, help="1-based eigenvalue index"),
        "max_sweeps": lambda: p.add_argument("--max-sweeps", dest="max_sweeps", type=int),
        "jobs": lambda: p.add_argument("--jobs", type=int, help="parallel restarts"),
    }
    p.add_argument("--config", type=Path, help="YAML config file")
    p.add_argument("--out-dir", type=Path, default=Path("out"))
    for n in names:
        adders[n]()


def build_parser():
    parser = argparse.ArgumentParser(prog="thinpart", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="analytic spectrum of a strip or round annulus")
    _common(p, "kind", "b", "degree", "bc", "count")

    p = sub.add_parser("solve", help="lowest eigenpairs of the discretized domain")
    _common(p, "kind", "b", "degree", "bc", "ntheta", "nt", "count", "tol", "seed")

    p = sub.add_parser("nodal", help="nodal domains and Courant check for eigenvalue --index")
    _common(p, "kind", "b", "degree", "bc", "ntheta", "nt", "index", "tol", "seed")

    p = sub.add_parser("partition", help="search for a spectral minimal k-partition")
    _common(p, "kind", "b", "degree", "bc", "ntheta", "nt", "k", "restarts", "seed",
            "max_sweeps", "jobs")
    p.add_argument("--init", action="append", choices=INITS,
                   help="initial partition (repeatable); default equal-sectors")

    p = sub.add_parser("verify", help="run named verification scenarios")
    p.add_argument("scenarios", nargs="*", help="scenario ids (default: all)")
    _common(p, "b", "k", "ntheta", "nt", "restarts", "seed", "tol", "max_sweeps", "jobs")

    sub.add_parser("list", help="list verification scenarios")
    return parser


def _settings(args):
    cfg = io.load_config(args.config) if getattr(args, "config", None) else {}
    for name in _FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            cfg[name] = value
    bc = getattr(args, "bc", None)
    if bc is not None:
        if len(bc) != 2:
            raise InvalidArgument(f"--bc needs two letters, got {bc!r}")
        cfg["bc_bottom"], cfg["bc_top"] = bc[0].upper(), bc[1].upper()
    if getattr(args, "init", None):
        cfg["init"] = args.init
    return cfg


def _grid(cfg):
    domain = io.domain_from_config(cfg)
    return build_grid(domain, int(cfg.get("ntheta", 256)), int(cfg.get("nt", 32)))


def _finish(out_dir, paths):
    manifest = io.write_manifest(out_dir, paths)
    print(f"wrote {len(paths)} artifacts; manifest {manifest}")


def cmd_spectrum(cfg, out):
    domain = io.domain_from_config(cfg)
    count = int(cfg.get("count", 10))
    if domain.kind == ANNULUS:
        if not domain.is_round:
            raise InvalidArgument("analytic spectra exist only for round annuli")
        r_in, r_out = 1 + domain.b * domain.h1[0], 1 + domain.b * domain.h2[0]
        modes = annulus_spectrum_round(r_in, r_out, domain.bc, count, domain.degree)
        rows = annulus_rows(modes)
    else:
        rows = spectrum_rows(cylinder_spectrum(domain.b, domain.degree, domain.bc, count))
    for r in rows:
        print(",".join(map(str, r)))
    return [io.write_rows_csv(out / "spectrum.csv", rows)]


def cmd_solve(cfg, out):
    grid = _grid(cfg)
    op = assemble(grid)
    pairs = lowest_eigenpairs(op, int(cfg.get("count", 6)), tol=float(cfg.get("tol", 1e-8)),
                              seed=int(cfg.get("seed", 0)))
    rows = [["index", "value", "value_over_pi2", "residual"]]
    paths = []
    for j, p in enumerate(pairs, start=1):
        rows.append([j, repr(p.value), repr(p.value / PI2), f"{p.residual:.3e}"])
        print(f"{j:3d}  {p.value:.10g}  ({p.value / PI2:.8g} pi^2)  res {p.residual:.1e}")
        paths += io.export_plot_data(op.to_grid(p.vector), out / f"eigvec_{j}.csv")
    paths.append(io.write_rows_csv(out / "eigenvalues.csv", rows))
    return paths


def cmd_nodal(cfg, out):
    grid = _grid(cfg)
    op = assemble(grid)
    k = int(cfg.get("index", 2))
    cc = courant_sharp_check(op, k, tol=float(cfg.get("tol", 1e-8)), seed=int(cfg.get("seed", 0)))
    pairs = lowest_eigenpairs(op, min(k + 3, op.dimension), tol=float(cfg.get("tol", 1e-8)),
                              seed=int(cfg.get("seed", 0)))
    u = op.to_grid(pairs[k - 1].vector)
    res = nodal_domains(u)
    print(f"lambda_{k} = {pairs[k - 1].value:.10g}; cluster {cc.cluster}; "
          f"nodal domains of basis vector {res.count}")
    print(f"Courant-sharp witness: {'yes' if cc.witness else 'no'} "
          f"(max count {cc.max_count}{', ambiguous cluster' if cc.ambiguous else ''})")
    paths = io.export_plot_data(u, out / f"eigvec_{k}.csv")
    paths += io.export_plot_data(res.labels, out / f"nodal_{k}.csv")
    paths.append(io.write_edge_list(out / f"nodal_{k}_graph.txt",
                                    neighbor_graph(res.labels, k=res.count)))
    if cc.witness_vector is not None:
        paths += io.export_plot_data(nodal_domains(cc.witness_vector).labels,
                                     out / f"witness_{k}.csv")
    return paths


def cmd_partition(cfg, out):
    grid = _grid(cfg)
    k = int(cfg.get("k", 3))
    init = cfg.get("init", ["equal-sectors"])
    state = iterate(grid, k, init=init, restarts=int(cfg.get("restarts", 0)),
                    seed=int(cfg.get("seed", 0)), max_sweeps=int(cfg.get("max_sweeps", 200)),
                    jobs=int(cfg.get("jobs", 1)))
    report = compare_with_theory(state, grid)
    report["runs"] = [list(r) for r in state.runs]
    print(f"Lambda = {state.Lambda:.10g} ({state.Lambda / PI2:.6f} pi^2) from {state.init}"
          + (f" seed {state.seed}" if state.seed is not None else ""))
    paths = io.export_plot_data(np.asarray(state.labels), out / "labels.csv")
    paths.append(io.write_edge_list(out / "graph.txt", neighbor_graph(state.labels, k=k)))
    rows = [["step", "Lambda", "moved", "phase"]] + [list(h) for h in state.history]
    paths.append(io.write_rows_csv(out / "history.csv", rows))
    path = out / "report.json"
    path.write_text(json.dumps(io.to_jsonable(report), indent=2, sort_keys=True) + "\n")
    paths.append(path)
    return paths


def cmd_verify(args, cfg, out):
    ids = args.scenarios or list(SCENARIOS)
    unknown = [s for s in ids if s not in SCENARIOS]
    if unknown:
        raise InvalidArgument(f"unknown scenario(s) {unknown}; see 'thinpart list'")
    overrides = {k: v for k, v in cfg.items() if k in _FLAGS}
    paths, ok = [], True
    for sid in ids:
        rep = run_scenario(sid, overrides, out_dir=out)
        print(rep.summary())
        paths += rep.artifacts
        ok &= rep.passed
    return paths, ok


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "list":
        for sid, desc, anchor in list_scenarios():
            print(f"{sid:18s} {desc}  [{anchor}]")
        return EXIT_OK
    warnings.simplefilter("ignore", StructuralWarning)
    try:
        cfg = _settings(args)
        out = args.out_dir
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "verify":
            paths, ok = cmd_verify(args, cfg, out)
            _finish(out, paths)
            return EXIT_OK if ok else EXIT_CLAIM
        handler = {"spectrum": cmd_spectrum, "solve": cmd_solve, "nodal": cmd_nodal,
                   "partition": cmd_partition}[args.command]
        _finish(out, handler(cfg, out))
        return EXIT_OK
    except InvalidArgument as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalFailure, StructuralError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        details = getattr(exc, "details", None)
        if details:
            print(json.dumps(io.to_jsonable(details), default=str)[:2000], file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
