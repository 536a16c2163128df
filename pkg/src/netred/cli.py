"""``netred`` command-line interface.

Exit codes: 0 success, 2 usage (including unwritable output paths), 3 validation or assumption failure,
4 solver infeasibility, 5 numerical failure. Edge and vertex labels in all
output are 1-based.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis, netfile
from .errors import NetredError
from .graph import factorize
from .gramsolve import edge_gramians, generalized_edge_gramians, verify_gramian_bounds, BOUND_RTOL
from .reduction import ReduceOptions, rank_edges, reduce_to, TIE_RTOL
from .sysmodel import edge_system

EXIT_USAGE = 2


def _fmt(x: float) -> str:
    return f"{x: .6e}"


def _edge_label(edges, k: int) -> str:
    i, j = edges[k]
    return f"{k + 1} ({min(i, j) + 1}-{max(i, j) + 1})"


def _block(vertices) -> str:
    return "{" + ",".join(str(v + 1) for v in vertices) + "}"


def _ranking_rows(ranking, edges):
    return [
        {
            "rank": r + 1,
            "edge": e.edge + 1,
            "vertices": [min(edges[e.edge]) + 1, max(edges[e.edge]) + 1],
            "pi_c": e.pi_c,
            "pi_o": e.pi_o,
            "product": e.product,
        }
        for r, e in enumerate(ranking.entries)
    ]


def _has_ties(ranking) -> bool:
    p = [e.product for e in ranking.entries]
    return any(abs(a - b) <= TIE_RTOL * max(abs(a), abs(b), 1e-300) for a, b in zip(p, p[1:]))


def cmd_analyze(args, out) -> dict:
    nf = netfile.parse_network(args.file)
    net = nf.network()
    fact = factorize(nf.topology)
    spectrum = np.sort_complex(np.linalg.eigvals(fact.laplacian))
    gen = generalized_edge_gramians(fact, nf.topology.g, nf.topology.h)
    ranking = rank_edges(gen)
    rows = _ranking_rows(ranking, fact.edges)
    bounds = None
    if fact.n_edges:
        gram = edge_gramians(edge_system(net, fact, "edge"), edge_system(net, fact, "dual"))
        bounds = verify_gramian_bounds(gram, gen, nf.subsystem)
    sync = analysis.sync_check(nf.subsystem, fact, simulate=True, seed=args.seed)

    print(f"network: {nf.topology.n_vertices} vertices, {fact.n_edges} edges, subsystem order {nf.subsystem.n}", file=out)
    print("Laplacian spectrum:", file=out)
    for lam in spectrum:
        print(f"  {lam.real: .10e}{'' if lam.imag == 0 else f' {lam.imag:+.3e}j'}", file=out)
    print("edge ranking (most to least important):", file=out)
    print(f"  {'rank':>4}  {'edge':<10} {'pi_c':>14} {'pi_o':>14} {'pi_c*pi_o':>14}", file=out)
    for r in rows:
        label = f"{r['edge']} ({r['vertices'][0]}-{r['vertices'][1]})"
        print(f"  {r['rank']:>4}  {label:<10} {_fmt(r['pi_c']):>14} {_fmt(r['pi_o']):>14} {_fmt(r['product']):>14}", file=out)
    if fact.n_edges:
        cand = ranking.least_important()
        print(f"clustering candidate: edge {_edge_label(fact.edges, cand)}", file=out)
        if _has_ties(ranking):
            print("note: equal products present; ties ordered by ascending edge id", file=out)
    print(f"Gramian LMI margins: controllability {_fmt(gen.feas_c)} [{gen.status_c}], "
          f"observability {_fmt(gen.feas_o)} [{gen.status_o}]", file=out)
    if bounds is not None:
        tol = BOUND_RTOL * args.tol_scale
        ok = bounds.min_eig_c >= -tol * bounds.scale_c and bounds.min_eig_o >= -tol * bounds.scale_o
        print(f"Gramian bound margins: controllability {_fmt(bounds.min_eig_c)}, observability "
              f"{_fmt(bounds.min_eig_o)} -> {'PASS' if ok else 'FAIL'}", file=out)
    _print_sync(sync, out)
    return {
        "command": "analyze",
        "file": str(args.file),
        "laplacian_spectrum": [[float(z.real), float(z.imag)] for z in spectrum],
        "ranking": rows,
        "margins": {"controllability": gen.feas_c, "observability": gen.feas_o},
        "bounds": None if bounds is None else {"controllability": bounds.min_eig_c, "observability": bounds.min_eig_o},
        "sync": _sync_dict(sync),
    }


def _sync_dict(sync) -> dict:
    d = {"spectral_ok": sync.spectral_ok, "max_real_part": sync.max_real_part}
    if sync.certificate is not None:
        d["certificate_min_eig_K"] = sync.certificate.min_eig_k
    if sync.simulation is not None:
        d["simulation_decay"] = sync.simulation.ratio
        d["simulation_horizon"] = sync.simulation.horizon
    return d


def _print_sync(sync, out) -> None:
    print(f"synchronization: spectral abscissa {_fmt(sync.max_real_part)} -> "
          f"{'OK' if sync.spectral_ok else 'NOT SYNCHRONIZING'}", file=out)
    if sync.certificate is not None:
        print(f"  certificate: min eig K {_fmt(sync.certificate.min_eig_k)}", file=out)
    if sync.simulation is not None:
        print(f"  simulation: disagreement ratio {_fmt(sync.simulation.ratio)} "
              f"after {sync.simulation.horizon:.6g} s", file=out)


def cmd_reduce(args, out) -> dict:
    nf = netfile.parse_network(args.file)
    n = nf.topology.n_vertices
    if not 1 <= args.order <= n:
        raise _Usage(f"--order must lie in 1..{n}, got {args.order}")
    net = nf.network()
    options = ReduceOptions(recompute_each_step=args.recompute_each_step, tol_scale=args.tol_scale)
    reduced, cmap = reduce_to(net, args.order, options)
    base = nf.clusters or tuple((v,) for v in range(n))
    blocks = [tuple(sorted(v for p in block for v in base[p])) for block in cmap.blocks]
    dest = Path(args.out) if args.out else Path(args.file).with_name(f"{Path(args.file).stem}_order{args.order}.json")
    netfile.emit(dest, reduced.subsystem, reduced.topology, blocks)

    steps = []
    current = list(base)
    for k, log in enumerate(cmap.steps, 1):
        i, j = log.step.pair
        parts = (current[i], current[j])
        merged = sorted(parts[0] + parts[1])
        current[i] = tuple(merged)
        del current[j]
        schur_ok = log.schur.passed_at(args.tol_scale)
        steps.append({
            "step": k,
            "edge": log.step.edge + 1,
            "merged_vertices": [i + 1, j + 1],
            "cluster": [v + 1 for v in merged],
            "products": [e.product for e in sorted(log.ranking.entries, key=lambda e: e.edge)],
            "margin_c": log.margin_c,
            "margin_o": log.margin_o,
            "schur_ok": schur_ok,
            "sync_ok": log.sync_ok,
            "sync_abscissa": log.sync_abscissa,
        })
        print(f"step {k}: cluster edge {log.step.edge + 1} (current vertices {i + 1}-{j + 1}): "
              f"{_block(parts[0])} + {_block(parts[1])} -> {_block(merged)}", file=out)
        print(f"  inherited margins {_fmt(log.margin_c)} {_fmt(log.margin_o)}; "
              f"Schur {'PASS' if schur_ok else 'FAIL'}; sync "
              f"{'OK' if log.sync_ok else 'FAIL'} (abscissa {_fmt(log.sync_abscissa)})", file=out)
    if not cmap.steps:
        print("target order equals network order: nothing to reduce", file=out)
    print("clusters: " + " ".join(_block(b) for b in blocks), file=out)
    print(f"reduced network written to {dest}", file=out)
    return {
        "command": "reduce",
        "file": str(args.file),
        "order": args.order,
        "steps": steps,
        "clusters": [[v + 1 for v in b] for b in blocks],
        "output": str(dest),
    }


def cmd_frf(args, out) -> dict:
    if not 0 < args.fmin < args.fmax:
        raise _Usage(f"need 0 < --fmin < --fmax, got {args.fmin} and {args.fmax}")
    if args.points < 2:
        raise _Usage("--points must be at least 2")
    full = netfile.parse_network(args.full).network()
    red = netfile.parse_network(args.reduced).network()
    omega = analysis.per_hour_to_rad_per_s(analysis.log_grid(args.fmin, args.fmax, args.points))
    rf = analysis.frequency_response(full, omega)
    rr = analysis.frequency_response(red, omega)
    cmp_ = analysis.compare_responses(rf, rr)
    dest = Path(args.out)
    analysis.write_frf_csv(dest, rf, rr, cmp_)
    print(f"{args.points} points in [{args.fmin:g}, {args.fmax:g}] 1/hr", file=out)
    print(f"relative error: max {_fmt(cmp_.max_err)}, rms {_fmt(cmp_.rms_err)}", file=out)
    print(f"CSV written to {dest}", file=out)
    return {"command": "frf", "max_rel_err": cmp_.max_err, "rms_rel_err": cmp_.rms_err, "output": str(dest)}


def cmd_example(args, out) -> dict:
    nf = netfile.example(args.name)
    dest = Path(args.out) if args.out else Path(f"{args.name}.json")
    netfile.emit(dest, nf.subsystem, nf.topology)
    print(f"example '{args.name}' written to {dest}", file=out)
    return {"command": "example", "name": args.name, "output": str(dest)}


class _Usage(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="netred", description="Clustering-based reduction of networked passive systems.")
    p.add_argument("--seed", type=int, default=42, help="seed for simulated initial states (default 42)")
    p.add_argument("--tol-scale", type=float, default=1.0, help="multiply check tolerances by this factor")
    p.add_argument("--report", help="also write the run report as JSON to this path")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="spectrum, edge ranking, Gramian and synchronization checks")
    a.add_argument("file")
    a.set_defaults(func=cmd_analyze)

    r = sub.add_parser("reduce", help="cluster the network down to a target order")
    r.add_argument("file")
    r.add_argument("--order", type=int, required=True)
    r.add_argument("--recompute-each-step", action="store_true", help="re-solve the LMIs after every step")
    r.add_argument("--out", help="reduced network path (default <file>_order<K>.json)")
    r.set_defaults(func=cmd_reduce)

    f = sub.add_parser("frf", help="compare frequency responses of two networks")
    f.add_argument("full")
    f.add_argument("reduced")
    f.add_argument("--fmin", type=float, default=1e-3, help="lowest frequency in 1/hr")
    f.add_argument("--fmax", type=float, default=1e1, help="highest frequency in 1/hr")
    f.add_argument("--points", type=int, default=200)
    f.add_argument("--out", default="frf.csv")
    f.set_defaults(func=cmd_frf)

    e = sub.add_parser("example", help="write a built-in example network")
    e.add_argument("name")
    e.add_argument("--out")
    e.set_defaults(func=cmd_example)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not args.tol_scale > 0:
        print("netred: error: --tol-scale must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        report = args.func(args, out)
    except _Usage as exc:
        print(f"netred {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NetredError as exc:
        print(f"netred: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        # unwritable output path given on the command line
        print(f"netred {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=2) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
