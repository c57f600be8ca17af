"""Batch front-end: color / verify / gen / report / demo-recover.

Exit codes: 0 success, 1 verification failure, 2 not delta-colorable,
3 pipeline failure after retries, 4 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from streamcolor.field import (
    Measurement,
    canonical_prime,
    random_check_apply,
    recover_sparse,
    safe_recover,
    vandermonde_sum,
)
from streamcolor.generators import GeneratorSpecError, generate_instance, parse_generator_spec
from streamcolor.pipeline import (
    NOT_COLORABLE,
    PIPELINE_FAILED,
    RunConfig,
    color_run,
    decompose_run,
    verify_coloring,
)
from streamcolor.stream import ParseError

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_NOT_COLORABLE = 2
EXIT_PIPELINE = 3
EXIT_USAGE = 4


def write_coloring(path: str, colors: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v, c in enumerate(colors):
            fh.write(f"{v} {int(c)}\n")


def read_coloring(path: str) -> dict[int, int]:
    out: dict[int, int] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(f"expected 'vertex color', got {line!r}", lineno)
            out[int(parts[0])] = int(parts[1])
    return out


def write_edge_list(path: str, n: int, edges: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{n}\n")
        for u, v in edges:
            fh.write(f"{int(u)} {int(v)}\n")


def cmd_color(args) -> int:
    source = args.gen if args.gen else args.input
    cfg = RunConfig(
        source=source,
        mode=args.mode,
        seed=args.seed,
        retries=args.retries,
        delta=args.delta,
        no_shadow=args.no_shadow,
        budget=args.budget,
    )
    result = color_run(cfg)
    report_path = args.out + ".report.json"
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(result.report, fh, indent=2, default=int)
    if result.status == NOT_COLORABLE:
        for comp in result.report["components"]:
            kind = "clique" if comp["verdict"] == "CliqueComponent" else "odd cycle"
            vs = comp["vertices"]
            print(
                f"not delta-colorable: component {{{vs[0]}..}} of size "
                f"{comp['size']} is a {kind}",
                file=sys.stderr,
            )
        return EXIT_NOT_COLORABLE
    if result.status == PIPELINE_FAILED:
        fails = result.report.get("failures", [])
        last = fails[-1] if fails else {}
        print(
            f"pipeline failed after {len(fails)} attempt(s); "
            f"last failure: {last.get('phase')}: {last.get('detail')}",
            file=sys.stderr,
        )
        return EXIT_PIPELINE
    write_coloring(args.out, result.colors)
    rep = result.report
    print(
        f"colored n={rep['n']} m={rep['m']} delta={rep['delta']} "
        f"attempts={rep.get('attempts')} passes={rep.get('passes')} -> {args.out}"
    )
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        colors = read_coloring(args.coloring)
    except (ParseError, ValueError) as e:
        print(f"cannot parse coloring: {e}", file=sys.stderr)
        return EXIT_USAGE
    ok, msg = verify_coloring(args.graph, colors, args.delta, seed=args.seed)
    if ok:
        print("coloring verified: proper, total, within range")
        return EXIT_OK
    print(f"verification failed: {msg}", file=sys.stderr)
    return EXIT_VERIFY


def cmd_gen(args) -> int:
    family, params = parse_generator_spec(args.spec)
    if "delta" not in params:
        raise GeneratorSpecError("spec must set delta")
    inst = generate_instance(
        family,
        params["delta"],
        count=params.get("count", 1),
        seed=params.get("seed", args.seed),
        n=params.get("n"),
        t=params.get("t"),
    )
    write_edge_list(args.out, inst.n, inst.edges)
    print(f"wrote {inst.n} vertices, {inst.edges.shape[0]} edges -> {args.out}")
    return EXIT_OK


def cmd_decompose(args) -> int:
    source = args.gen if args.gen else args.input
    dec, report = decompose_run(
        source, seed=args.seed, mode=args.mode, no_shadow=args.no_shadow
    )
    print(f"sparse vertices: {len(dec.v_sparse)}")
    for i, k in enumerate(dec.cliques):
        head = k.vertices[:10]
        tail = "..." if len(k) > 10 else ""
        print(
            f"clique {i}: size={len(k)} {k.size_class} non_edges={k.non_edges} "
            f"holey={k.holey} {k.kind}"
            + (f" witness={k.witness}" if k.witness is not None else "")
            + f" vertices={head}{tail}"
        )
    if report is None:
        print("verification: skipped (no shadow copy)")
        return EXIT_OK
    if report.ok:
        print("verification: OK (0 violations)")
        return EXIT_OK
    print(f"verification: {len(report.violations)} violation(s)")
    for v in report.violations[:10]:
        print(f"  {v}")
    return EXIT_VERIFY


def cmd_report(args) -> int:
    with open(args.run, "r", encoding="utf-8") as fh:
        rep = json.load(fh)
    print(f"run: n={rep.get('n')} m={rep.get('m')} delta={rep.get('delta')} "
          f"status={rep.get('status')} pipeline={rep.get('pipeline')}")
    space = rep.get("space")
    if space:
        parts = ["palette_bits", "h_bits", "sample_bits", "sketch_bits", "hplus_bits"]
        total = sum(space[k] for k in parts)
        for k in parts:
            print(f"  {k:13} {space[k]:>12}")
        print(f"  {'total_bits':13} {space['total_bits']:>12} "
              f"(components {'sum to total' if total == space['total_bits'] else 'DO NOT SUM'})")
        print(f"  shadow structures excluded: {space.get('shadow_excluded')}")
        if total != space["total_bits"]:
            return EXIT_VERIFY
    for c in rep.get("cliques", []):
        print(
            f"  clique {c['index']:3} size={c['size']:3} {c['size_class']:8} "
            f"holey={str(c['holey']):5} {c['kind']:8} "
            f"responsible=phase{c['responsible_phase']} colored_by=phase{c['colored_by']}"
        )
    return EXIT_OK


def cmd_demo_recover(args) -> int:
    n = args.n
    p = args.p if args.p else canonical_prime(n)
    r = args.r if args.r else args.k
    rng = np.random.default_rng(args.seed)
    x = np.zeros(n, dtype=np.int64)
    if args.k:
        supp = rng.choice(n, size=args.k, replace=False)
        x[supp] = rng.integers(1, p, size=args.k)
    vec = np.zeros(2 * r, dtype=np.int64)
    for j in np.flatnonzero(x):
        col = vandermonde_sum(r, p, [int(j)])
        vec = (vec + int(x[j]) * col) % p
    check = random_check_apply(args.seed, r, x, 8, p)
    print(f"n={n} p={p} true sparsity k={args.k} recovery bound r={r}")
    print(f"support: {np.flatnonzero(x).tolist()} values: {x[np.flatnonzero(x)].tolist()}")
    got = safe_recover(Measurement(r=r, vec=vec, check=check), p, n, args.seed, 8)
    if got is None:
        print("safe recovery: fail (refused; measurement not r-sparse or check mismatch)")
        raw = recover_sparse(vec, r, p, n)
        print(f"unverified decode said: {'no sparse preimage' if raw is None else 'candidate ' + str(np.flatnonzero(raw).tolist())}")
        return EXIT_OK
    exact = bool(np.array_equal(got, x))
    print(f"recovered support {np.flatnonzero(got).tolist()} exact={exact}")
    return EXIT_OK if exact else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="streamcolor",
        description="Single-pass streaming max-degree graph coloring",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("color", help="color a graph from a file or generator spec")
    g = c.add_mutually_exclusive_group(required=True)
    g.add_argument("--input", help="edge-list file (header n, then 'u v' lines)")
    g.add_argument("--gen", help="generator spec, e.g. 'clique-pairs:delta=16,count=4'")
    c.add_argument("--delta", type=int, default=None, help="assert this max degree")
    c.add_argument("--mode", choices=("desk", "paper"), default="desk")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--retries", type=int, default=2)
    c.add_argument("--out", default="coloring.txt")
    c.add_argument("--no-shadow", action="store_true",
                   help="heuristic decomposition; skip verification")
    c.add_argument("--budget", type=int, default=None,
                   help="bytes; solve offline when the raw graph fits")
    c.set_defaults(fn=cmd_color)

    v = sub.add_parser("verify", help="check a coloring file against a graph")
    v.add_argument("--graph", required=True)
    v.add_argument("--coloring", required=True)
    v.add_argument("--delta", type=int, required=True)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(fn=cmd_verify)

    ge = sub.add_parser("gen", help="write a generated instance to an edge-list file")
    ge.add_argument("--spec", required=True)
    ge.add_argument("--out", required=True)
    ge.add_argument("--seed", type=int, default=0)
    ge.set_defaults(fn=cmd_gen)

    de = sub.add_parser("decompose", help="print the sparse-dense partition and its verification")
    gd = de.add_mutually_exclusive_group(required=True)
    gd.add_argument("--input")
    gd.add_argument("--gen")
    de.add_argument("--seed", type=int, default=0)
    de.add_argument("--mode", choices=("desk", "paper"), default="desk")
    de.add_argument("--no-shadow", action="store_true")
    de.set_defaults(fn=cmd_decompose)

    r = sub.add_parser("report", help="pretty-print a run report")
    r.add_argument("--run", required=True, help="path to the .report.json file")
    r.set_defaults(fn=cmd_report)

    d = sub.add_parser("demo-recover", help="sparse-recovery round trip demo")
    d.add_argument("--n", type=int, default=32)
    d.add_argument("--k", type=int, default=3)
    d.add_argument("--p", type=int, default=None)
    d.add_argument("--r", type=int, default=None, help="recovery bound (default k)")
    d.add_argument("--seed", type=int, default=0)
    d.set_defaults(fn=cmd_demo_recover)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (ParseError, GeneratorSpecError, ValueError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
