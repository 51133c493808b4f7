"""``gnncompat`` command line.

Every subcommand prints one JSON report on stdout, writes it (plus any other
outputs) under the output directory, and records a run manifest there.
Exit codes: 0 success / compatible, 2 definitive incompatibility or
impossibility witness, 1 usage or runtime error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .compat import (
    Tolerance,
    check_feature_only,
    check_full,
    check_reduced,
    check_uniform_invariant,
    necessary_falsifier,
    sample_graphs,
)
from .generators import FAMILIES, GenSpec, generate_batch, generate_with_meta
from .gnn import (
    EXTENDED_PROGRAMS,
    check_equivariance,
    convert_extended_to_gnn,
    degree_program,
    orbit_equality_demo,
    random_program,
    run_extended,
    run_gnn,
    zero_program,
)
from .graph import FLOAT, RATIONAL, Graph, enumerate_sn, node_orbits, scalar_to_json
from .mef import COMPLEX_TENSOR, IDENTITY, SCALAR_POWER, MefEncoder, verify_mef_property
from .oracles import ADJACENCY, EdgeSemantics, shortest_paths_from
from .synth import (
    BasisFunction,
    CompatibilityViolation,
    fit_rho,
    intermediate_state_audit,
    permuted_closure,
    synthesize_gnn,
)
from .zoo import catalog, lookup

EXIT_OK, EXIT_ERROR, EXIT_WITNESS = 0, 1, 2
OUT_DIR_ENV = "GNNCOMPAT_OUT_DIR"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _read_graph(path: str) -> Graph:
    return Graph.from_json(json.loads(Path(path).read_text()))


def _rows_json(rows) -> list:
    return [[v if isinstance(v, float) else scalar_to_json(v) for v in row] for row in rows]


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


# --- subcommands: each returns (report dict, exit code, extra files) ------------

def cmd_gen(args):
    spec = GenSpec(args.family, args.n, args.p, args.d, args.init, args.seed, args.scalar)
    batch = generate_batch(spec, args.count) if args.count > 1 else [generate_with_meta(spec)]
    files = {}
    entries = []
    for k, item in enumerate(batch):
        name = f"graph-{k:04d}.json"
        files[name] = _dump(item.graph.to_json())
        entries.append({"file": name, "meta": item.meta})
    return {"family": args.family, "count": len(batch), "graphs": entries}, EXIT_OK, files


def cmd_oracle(args):
    g = _read_graph(args.graph)
    if args.fn in ("sp", "sp1") or args.source is not None:
        semantics = EdgeSemantics(Fraction(args.sentinel) if args.sentinel else None,
                                  args.zero_absent)
        out = [(v,) for v in shortest_paths_from(g, args.source or 0, semantics)]
        name = "sp1" if not args.source else f"sp{args.source + 1}"
    else:
        out = lookup(args.fn)(g)
        name = args.fn
    return {"function": name, "n": g.n, "output": _rows_json(out)}, EXIT_OK, {}


def _graphs_for(args):
    if args.graph:
        return [_read_graph(p) for p in args.graph]
    return sample_graphs(args.n, args.d, args.samples, args.seed, args.scalar)


def _tolerance(args, graphs):
    if args.tol is None:
        return Tolerance.for_graphs(graphs)
    return Tolerance(rel=args.tol, abs_floor=min(args.tol, 1e-12))


def cmd_check(args):
    graphs = _graphs_for(args)
    f = lookup(args.fn, graphs[0].n, graphs[0].d)
    tol = _tolerance(args, graphs)
    if args.mode == "full":
        report = check_full(f, graphs, tol)
    elif args.mode == "reduced":
        report = check_reduced(f, graphs, args.i0, tol)
    elif args.mode == "feature":
        report = check_feature_only(f, graphs, tol, args.i0, args.seed)
    elif args.mode == "uniform":
        report = check_uniform_invariant(f, graphs, tol)
    else:
        report = necessary_falsifier(f, graphs, tol, seed=args.seed)
    print(f"{f.name:>10} | {args.mode:>8} | {report.verdict:<21} | "
          f"{report.constraints_checked} constraints on {report.graphs_sampled} graphs",
          file=sys.stderr)
    if report.witness is not None:
        w = report.witness
        print(f"  witness: perm {w.perm.one_based()}, node {w.node + 1}: "
              f"{list(map(str, w.lhs))} != {list(map(str, w.rhs))}", file=sys.stderr)
    return report.to_json(), (EXIT_OK if report.compatible else EXIT_WITNESS), {}


def cmd_mef_verify(args):
    m = 1 if args.kind == SCALAR_POWER else args.m
    enc = MefEncoder(args.kind, m, args.n)
    report = verify_mef_property(enc, args.trials, args.seed)
    return report.to_json(), (EXIT_OK if report.passed else EXIT_WITNESS), {}


def cmd_synth(args):
    f = lookup(args.fn, args.n, args.d)
    bf = BasisFunction.standard(args.n, args.d)
    perms = list(enumerate_sn(args.n))
    # relabelled copies make an incompatible F collide on some basis value
    calibration = permuted_closure(sample_graphs(args.n, args.d, args.calib_count, args.seed),
                                   perms)
    try:
        rho = fit_rho(f, bf, calibration)
    except CompatibilityViolation as exc:
        first, second = exc.first, exc.second
        report = {"function": f.name, "status": "compatibility-violation", "message": str(exc),
                  "first": {"graph": first["graph_json"], "node": first["node"] + 1,
                            "target": _rows_json([first["target"]])[0]},
                  "second": {"graph": second["graph_json"], "node": second["node"] + 1,
                             "target": _rows_json([second["target"]])[0]}}
        return report, EXIT_WITNESS, {}
    prog = synthesize_gnn(f, bf, rho)
    checks = {}
    wanted = {"oracle", "equivariance", "audit"} if args.verify == "all" else {args.verify}
    if "oracle" in wanted:
        checks["oracle"] = all(run_gnn(prog, g) == f(g) for g in calibration)
    if "equivariance" in wanted:
        checks["equivariance"] = all(check_equivariance(prog, g, perms).passed
                                     for g in calibration[::len(perms)])
    if "audit" in wanted:
        checks["audit"] = all(intermediate_state_audit(prog, bf, g).passed for g in calibration)
    files = {}
    if args.rho_out:
        files[args.rho_out] = json.dumps(rho.to_json(), sort_keys=True)
    report = {"function": f.name, "n": args.n, "d": args.d, "status": "synthesized",
              "calibration_graphs": len(calibration), "rho_entries": len(rho), "layer_dims": prog.dims(), "checks": checks,
              "passed": all(checks.values())}
    return report, (EXIT_OK if report["passed"] else EXIT_ERROR), files


def cmd_demo(args):
    if args.graph:
        g = _read_graph(args.graph)
        semantics, source, meta = EdgeSemantics(zero_is_absent=args.zero_absent), 0, {}
    else:
        item = generate_with_meta(GenSpec(args.family, args.n, args.p, args.d, args.init,
                                          args.seed))
        g, meta, semantics = item.graph, item.meta, ADJACENCY
        # the twins always share an orbit; distance to one twin separates them
        source = meta["twins"][0] if args.family == "ERGS" else 0
    targets = shortest_paths_from(g, source, semantics)
    orbits = node_orbits(g)
    runs = []
    for s in range(args.programs):
        prog = random_program(int(args.seed) * 1000 + s, (g.d, 3, 1))
        runs.append(orbit_equality_demo(prog, g, targets, orbits))
    first = runs[0]
    report = {
        "graph": g.to_json(),
        "meta": meta,
        "target": f"distance to node {source + 1}",
        "targets": [scalar_to_json(v) for v in targets],
        "orbits": [[k + 1 for k in o] for o in first.orbits],
        "forced_errors": first.forced_errors,
        "programs": args.programs,
        "all_constant_on_orbits": all(r.constant_on_orbits for r in runs),
        "programs_matching_target": sum(1 for r in runs if r.mismatches == 0),
        "impossible": first.impossible,
    }
    print(f"orbits {report['orbits']}; targets {report['targets']}; "
          f"every program constant on orbits: {report['all_constant_on_orbits']}; "
          f"forced misclassifications: {first.forced_errors}", file=sys.stderr)
    return report, (EXIT_WITNESS if first.impossible else EXIT_OK), {}


def cmd_run_gnn(args):
    g = _read_graph(args.graph)
    if args.program == "degree":
        prog = degree_program(g.d)
    elif args.program == "zero":
        prog = zero_program(g.d)
    else:
        dims = [g.d] + [int(v) for v in args.dims.split(",")] if args.dims else [g.d, 3, 2]
        prog = random_program(args.program_seed, dims)
    history = run_gnn(prog, g, all_layers=args.all_layers)
    out = {"program": prog.name, "dims": prog.dims()}
    if args.all_layers:
        out["layers"] = [_rows_json(h) for h in history]
    else:
        out["output"] = _rows_json(history)
    return out, EXIT_OK, {}


def cmd_convert(args):
    src = EXTENDED_PROGRAMS[args.program](args.d)
    calibration = sample_graphs(args.n, args.d, args.calib_count, args.seed)
    conv = convert_extended_to_gnn(src, args.n, args.d, calibration)
    layers_ok = []
    for g in calibration:
        a = run_extended(src, g, all_layers=True)
        b = run_gnn(conv.program, g, all_layers=True)
        layers_ok.append(all(a[r] == b[2 * r] for r in range(len(a))))
    report = {"program": src.name, "n": args.n, "d": args.d, "graphs": len(calibration),
              "gnn_layers": conv.program.k_max, "gnn_dims": conv.program.dims(),
              "table_sizes": conv.table_sizes, "even_layers_match": all(layers_ok)}
    return report, (EXIT_OK if all(layers_ok) else EXIT_ERROR), {}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gnncompat",
                     description="Permutation-compatibility checks and exact GNN synthesis.")
    parser.add_argument("--out-dir", default=None,
                        help=f"where reports and the manifest go (default ${OUT_DIR_ENV} "
                             "or ./gnncompat-runs)")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    fn_names = sorted(catalog())

    p = sub.add_parser("gen", help="generate benchmark graphs")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--init", choices=("identical", "random"), default="identical")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--scalar", choices=(RATIONAL, FLOAT), default=RATIONAL)
    p.set_defaults(run=cmd_gen)

    p = sub.add_parser("oracle", help="evaluate a graph function on a graph file")
    p.add_argument("--graph", required=True)
    p.add_argument("--fn", choices=fn_names + ["sp"], required=True)
    p.add_argument("--source", type=int, default=None, help="0-based source for sp")
    p.add_argument("--sentinel", default=None, help="non-edge weight for path problems")
    p.add_argument("--zero-absent", action="store_true")
    p.set_defaults(run=cmd_oracle)

    p = sub.add_parser("check", help="test permutation-compatibility on sampled graphs")
    p.add_argument("--fn", choices=fn_names, required=True)
    p.add_argument("--mode", choices=("full", "reduced", "feature", "uniform", "falsify"),
                   default="full")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scalar", choices=(RATIONAL, FLOAT), default=RATIONAL)
    p.add_argument("--tol", type=float, default=None, help="relative tolerance (float mode)")
    p.add_argument("--i0", type=int, default=0)
    p.add_argument("--graph", action="append", help="check these graph files instead")
    p.set_defaults(run=cmd_check)

    p = sub.add_parser("mef-verify", help="randomized MEF iff-property check")
    p.add_argument("--kind", choices=(SCALAR_POWER, COMPLEX_TENSOR, IDENTITY),
                   default=SCALAR_POWER)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(run=cmd_mef_verify)

    p = sub.add_parser("synth", help="synthesize and verify the three-layer GNN")
    p.add_argument("--fn", choices=fn_names, required=True)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--calib-count", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--verify", choices=("oracle", "equivariance", "audit", "all"),
                   default="all")
    p.add_argument("--rho-out", default=None, help="file name for the serialized rho table")
    p.set_defaults(run=cmd_synth)

    p = sub.add_parser("demo-impossible", help="orbit-forced misclassification demo")
    p.add_argument("--graph", default=None)
    p.add_argument("--family", choices=FAMILIES, default="ERGS")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--init", choices=("identical", "random"), default="identical")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--programs", type=int, default=20)
    p.add_argument("--zero-absent", action="store_true")
    p.set_defaults(run=cmd_demo)

    p = sub.add_parser("run-gnn", help="run a built-in GNN program on a graph file")
    p.add_argument("--graph", required=True)
    p.add_argument("--program", choices=("degree", "zero", "random"), default="random")
    p.add_argument("--program-seed", type=int, default=0)
    p.add_argument("--dims", default=None, help="comma-separated layer output dims")
    p.add_argument("--all-layers", action="store_true")
    p.set_defaults(run=cmd_run_gnn)

    p = sub.add_parser("convert-extended", help="convert an Extended-GNN and verify it")
    p.add_argument("--program", choices=sorted(EXTENDED_PROGRAMS), default="sum")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--calib-count", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(run=cmd_convert)

    # --out-dir is accepted after the subcommand as well
    for sp in sub.choices.values():
        sp.add_argument("--out-dir", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    return parser


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = _now()
    try:
        report, code, files = args.run(args)
    except (ValueError, TypeError, KeyError, OSError) as exc:
        print(f"gnncompat {args.command}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    text = _dump(report)
    print(text)
    out_dir = Path(args.out_dir or os.environ.get(OUT_DIR_ENV) or "gnncompat-runs")
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        written = {f"{args.command}-report.json": text + "\n", **files}
        for name, body in written.items():
            (out_dir / name).write_text(body)
        flags = {k: v for k, v in sorted(vars(args).items()) if k not in ("run", "out_dir")}
        manifest = {
            "subcommand": args.command,
            "flags": flags,
            "seed": flags.get("seed"),
            "scalar": flags.get("scalar", RATIONAL),
            "tool_version": __version__,
            "started": started,
            "finished": _now(),
            "outputs": sorted(written),
            "exit_code": code,
        }
        (out_dir / f"{args.command}-manifest.json").write_text(_dump(manifest) + "\n")
    except OSError as exc:
        print(f"gnncompat {args.command}: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return code


if __name__ == "__main__":
    sys.exit(main())
