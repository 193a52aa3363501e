"""The ``lab`` command line: scenario runs, convergence tables, mesh export.

Exit codes: 0 all checks pass (hypothesis failures are reported but not
fatal), 1 at least one check failed its inequality, 2 configuration error.
Report files separate a deterministic ``data`` section from a ``meta``
section holding wall time, so repeated runs are byte-comparable on data.
"""

import argparse
import csv
import importlib.resources
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

from .errors import ConfigError, LabError
from .scenarios import build_geometry, fitted_order, parse_config, run_scenario


def _resolve_config(path):
    if os.path.exists(path):
        return path
    bundled = importlib.resources.files("wmlab") / "suites" / path
    if bundled.is_file():
        return str(bundled)
    raise ConfigError(f"config file {path!r} not found (and not a bundled suite)")


def _load(path):
    return parse_config(_resolve_config(path))


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _run_one(sc, out_dir, dump_operators):
    start = time.perf_counter()
    result = run_scenario(sc)
    wall = time.perf_counter() - start
    payload = {"data": result, "meta": {"wall_time_s": wall}}
    _write_json(os.path.join(out_dir, f"{sc.name}.json"), payload)
    if dump_operators:
        _dump_operators(sc, out_dir)
    return result


def _dump_operators(sc, out_dir):
    from .ops import assemble

    bundle = build_geometry(sc, sc.refinement_levels - 1)
    if bundle.mesh is None:
        return
    field = bundle.fields.f_val if bundle.fields is not None else bundle.density
    pack = assemble(bundle.mesh, field)
    pack.export_matrix_market(os.path.join(out_dir, sc.name))


def cmd_run(args):
    scenarios = _load(args.config)
    os.makedirs(args.out, exist_ok=True)
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(
                lambda sc: _run_one(sc, args.out, args.dump_operators), scenarios))
    else:
        results = [_run_one(sc, args.out, args.dump_operators) for sc in scenarios]

    rows = []
    failed = False
    for res in results:
        for cid, rep in sorted(res["checks"].items()):
            rows.append({
                "scenario": res["name"],
                "check": cid,
                "status": rep["status"],
                "lhs": rep["lhs"],
                "rhs": rep["rhs"],
                "gap": rep["gap"],
                "relative_gap": rep["relative_gap"],
                "equality": rep["equality_flag"],
            })
            if rep["status"] == "fail":
                failed = True
            line = (f"{res['name']}::{cid}: {rep['status']}"
                    f" (gap {rep['gap']:.3e}"
                    f"{', equality' if rep['equality_flag'] else ''})")
            print(line)
    with open(os.path.join(args.out, "summary.csv"), "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]) if rows else ["scenario"])
        writer.writeheader()
        writer.writerows(rows)
    return 1 if failed else 0


def cmd_convergence(args):
    scenarios = _load(args.config)
    os.makedirs(args.out, exist_ok=True)
    rows = []
    for sc in scenarios:
        result = run_scenario(sc)
        for cid, rep in sorted(result["checks"].items()):
            order = fitted_order(rep["history"])
            for rec in rep["history"]:
                rows.append({
                    "scenario": sc.name,
                    "check": cid,
                    "level": rec["level"],
                    "h": rec["h"],
                    "lhs": rec["lhs"],
                    "rhs": rec["rhs"],
                    "gap": rec["gap"],
                    "order": "n/a" if order is None else f"{order:.3f}",
                })
            tag = "n/a" if order is None else f"{order:.3f}"
            print(f"{sc.name}::{cid}: fitted order {tag}")
    path = os.path.join(args.out, "convergence.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["scenario", "check", "level", "h", "lhs", "rhs", "gap", "order"])
        writer.writeheader()
        writer.writerows(rows)
    return 0


def cmd_mesh_gen(args):
    from .meshfiles import save_mesh
    from .scenarios import Scenario

    spec = json.loads(args.spec if args.spec.lstrip().startswith("{")
                      else open(args.spec).read())
    sc = Scenario(name="mesh", geometry=spec, ambient=spec.pop("ambient", {"delta": 0.0, "dim": 2}),
                  density={"kind": "constant", "c": 0.0}, m="inf",
                  checks=[], refinement_levels=1)
    bundle = build_geometry(sc, 0)
    if bundle.mesh is None:
        raise ConfigError("geometry kind has no mesh to export")
    save_mesh(bundle.mesh, args.out)
    print(f"wrote {args.out} ({len(bundle.mesh.vertices)} vertices, "
          f"{len(bundle.mesh.cells)} cells)")
    return 0


def make_parser():
    parser = argparse.ArgumentParser(
        prog="lab",
        description="Numerical checks for isoperimetric and eigenvalue "
                    "inequalities on weighted manifolds.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default="reports")
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.add_argument("--dump-operators", action="store_true")
    p_run.set_defaults(func=cmd_run)

    p_conv = sub.add_parser("convergence", help="refinement-ladder order table")
    p_conv.add_argument("config")
    p_conv.add_argument("--out", default="reports")
    p_conv.set_defaults(func=cmd_convergence)

    p_mesh = sub.add_parser("mesh", help="mesh utilities")
    mesh_sub = p_mesh.add_subparsers(dest="mesh_command", required=True)
    p_gen = mesh_sub.add_parser("gen", help="generate a mesh file")
    p_gen.add_argument("spec", help="geometry JSON (inline or a file path)")
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=cmd_mesh_gen)

    return parser


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except LabError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
