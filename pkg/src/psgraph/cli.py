"""Command-line driver.

Subcommands: ``run`` builds the similarity graph from a FASTA file,
``cc`` prints connected components of a graph file, ``eval`` scores a
graph against family labels.  The edge list is a TSV sorted by sequence
id, byte-identical across grid sizes and repeated runs; ``--report``
additionally writes text/JSON summaries and PNG charts next to it.
"""

from __future__ import annotations

import argparse
import sys

from .align import SimilarityEdge
from .graph import SimilarityGraph, connected_components, evaluate_against_labels, read_labels
from .grid import GridConfig, run_grid
from .pipeline import PipelineConfig
from .seqstore import DEFAULT_OVERLAP, parse_fasta_file
from .subkmer import ScoringMatrix, blosum62

GRAPH_HEADER = "name_i\tname_j\tscore\tani\tns\tcov_short\tpassed"


def write_graph(graph: SimilarityGraph, names: list[str], path) -> None:
    """Edge list TSV, one row per edge, sorted by (i, j)."""
    lines = [GRAPH_HEADER]
    for e in graph.edges:
        lines.append(
            f"{names[e.i]}\t{names[e.j]}\t{e.score}\t{e.ani:.2f}\t{e.ns:.4f}"
            f"\t{e.cov_short:.2f}\t{int(e.passed)}"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_graph_edges(path) -> list[tuple[str, str]]:
    """Name pairs from a graph TSV (header tolerated)."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if lineno == 1 and parts[0] == "name_i":
                continue
            if len(parts) < 2:
                raise ValueError(f"{path}:{lineno}: expected at least 2 columns")
            out.append((parts[0], parts[1]))
    return out


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="psgraph", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="build a protein similarity graph from FASTA")
    run.add_argument("--input", required=True, help="FASTA file of amino-acid sequences")
    run.add_argument("--out", required=True, help="output edge-list TSV")
    run.add_argument("-k", type=int, default=6, help="k-mer length (default 6)")
    run.add_argument("--subs", type=int, default=0, metavar="M",
                     help="substitute k-mers per k-mer; 0 = exact matching (default)")
    run.add_argument("--ckthr", type=int, default=None, metavar="T",
                     help="drop pairs sharing <= T k-mers (default 1 exact, 3 substitute)")
    run.add_argument("--align", choices=("sw", "xd"), default="xd", help="alignment mode")
    run.add_argument("--xdrop", type=int, default=49, help="x-drop value (default 49)")
    run.add_argument("--gap-open", type=int, default=11, help="gap opening cost (default 11)")
    run.add_argument("--gap-ext", type=int, default=1, help="gap extension cost (default 1)")
    run.add_argument("--matrix", default="blosum62",
                     help="'blosum62' or a path to an NCBI-style scoring matrix file")
    run.add_argument("--weight", choices=("ani", "ns"), default="ani",
                     help="edge weight mode; ANI filters, NS keeps all aligned pairs")
    run.add_argument("--ani-min", type=float, default=30.0, help="minimum ANI %% (default 30)")
    run.add_argument("--cov-min", type=float, default=70.0,
                     help="minimum shorter-sequence coverage %% (default 70)")
    run.add_argument("--grid", type=int, default=1, metavar="Q",
                     help="virtual process grid side; runs Q*Q workers (default 1)")
    run.add_argument("--threads", type=int, default=1, help="alignment threads per worker")
    run.add_argument("--skip-ambiguous", action="store_true",
                     help="drop k-mers containing X, B, Z or *")
    run.add_argument("--overlap-bytes", type=int, default=DEFAULT_OVERLAP,
                     help="parser chunk overlap in bytes (default 1 MiB)")
    run.add_argument("--report", metavar="PREFIX",
                     help="write PREFIX.txt/.json and PNG charts for the run")
    run.add_argument("--ledger", metavar="CSV",
                     help="write the per-worker message ledger as CSV")

    cc = sub.add_parser("cc", help="connected components of a graph file")
    cc.add_argument("--graph", required=True, help="edge-list TSV from 'run'")
    cc.add_argument("--out", help="write 'name<TAB>component' instead of printing a summary")

    ev = sub.add_parser("eval", help="precision/recall of components vs family labels")
    ev.add_argument("--graph", required=True, help="edge-list TSV from 'run'")
    ev.add_argument("--labels", required=True, help="TSV 'sequence_name<TAB>family_id'")
    return ap


def _cmd_run(args) -> int:
    if args.matrix == "blosum62":
        scoring = blosum62()
    else:
        scoring = ScoringMatrix.from_file(args.matrix)
    cfg = PipelineConfig(
        k=args.k,
        subs=args.subs,
        ck_threshold=args.ckthr,
        align_mode=args.align,
        xdrop=args.xdrop,
        gap_open=args.gap_open,
        gap_extend=args.gap_ext,
        weight=args.weight,
        ani_min=args.ani_min,
        cov_min=args.cov_min,
        scoring=scoring,
        skip_ambiguous=args.skip_ambiguous,
        threads=args.threads,
    )
    store = parse_fasta_file(args.input, workers=1, overlap=args.overlap_bytes)
    result = run_grid(store, GridConfig(args.grid), cfg)
    write_graph(result.graph, store.names, args.out)
    print(f"wrote {len(result.graph.edges)} edges for {len(store)} sequences to {args.out}")
    if args.ledger:
        result.ledger.write_csv(args.ledger)
        print(f"wrote message ledger to {args.ledger}")
    result.report.config = {
        "k": cfg.k, "subs": cfg.subs, "ckthr": cfg.ck_threshold, "align": cfg.align_mode,
        "xdrop": cfg.xdrop, "gap_open": cfg.gap_open, "gap_ext": cfg.gap_extend,
        "matrix": scoring.name, "weight": cfg.weight, "ani_min": cfg.ani_min,
        "cov_min": cfg.cov_min, "grid": args.grid,
    }
    if args.report:
        paths = result.report.save(args.report)
        print("wrote report: " + ", ".join(str(p) for p in paths))
    else:
        sys.stdout.write(result.report.to_text())
    return 0


def _component_map(path) -> tuple[list[str], list[int]]:
    edges = read_graph_edges(path)
    names = sorted({n for e in edges for n in e})
    index = {n: i for i, n in enumerate(names)}
    dedup = {}
    for a, b in edges:
        i, j = index[a], index[b]
        if i == j:
            continue
        if i > j:
            i, j = j, i
        dedup[(i, j)] = SimilarityEdge(i, j, 0, 0.0, 0.0, 0.0, True)
    graph = SimilarityGraph(len(names), sorted(dedup.values(), key=lambda e: (e.i, e.j)), "ani")
    return names, connected_components(graph)


def _cmd_cc(args) -> int:
    names, comps = _component_map(args.graph)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            for name, comp in zip(names, comps):
                fh.write(f"{name}\t{comp}\n")
        print(f"wrote {len(set(comps))} components over {len(names)} vertices to {args.out}")
    else:
        print(f"components\t{len(set(comps))}")
        print(f"vertices\t{len(names)}")
    return 0


def _cmd_eval(args) -> int:
    labels = read_labels(args.labels)
    edges = read_graph_edges(args.graph)
    precision, recall, ncomp = evaluate_against_labels(edges, labels)
    print(f"components\t{ncomp}")
    print(f"precision\t{precision:.4f}")
    print(f"recall\t{recall:.4f}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "cc":
            return _cmd_cc(args)
        return _cmd_eval(args)
    except (OSError, ValueError) as exc:
        print(f"psgraph: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
