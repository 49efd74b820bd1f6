"""Similarity-graph assembly, connected components, and weighted
precision/recall against known family labels."""

from __future__ import annotations

from dataclasses import dataclass, field

from .align import SimilarityEdge


@dataclass
class SimilarityGraph:
    """Vertices are sequence ids 0..n-1; edges are canonical (i < j),
    deduplicated, and already filtered per the weight mode (ANI mode keeps
    passing edges only; NS mode keeps every aligned edge)."""

    n: int
    edges: list[SimilarityEdge] = field(default_factory=list)
    weight_mode: str = "ani"

    def __post_init__(self):
        seen = set()
        for e in self.edges:
            if e.i == e.j:
                raise ValueError(f"self loop at vertex {e.i}")
            if not (0 <= e.i < e.j < self.n):
                raise ValueError(f"edge ({e.i},{e.j}) not canonical for n={self.n}")
            if (e.i, e.j) in seen:
                raise ValueError(f"duplicate edge ({e.i},{e.j})")
            seen.add((e.i, e.j))

    def weight(self, e: SimilarityEdge) -> float:
        return e.ani if self.weight_mode == "ani" else e.ns


def assemble_graph(n: int, edges: list[SimilarityEdge], weight_mode: str) -> SimilarityGraph:
    if weight_mode == "ani":
        kept = [e for e in edges if e.passed]
    else:
        kept = list(edges)
    kept.sort(key=lambda e: (e.i, e.j))
    return SimilarityGraph(n, kept, weight_mode)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, u: int) -> int:
        root = u
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[u] != root:
            self.parent[u], u = root, self.parent[u]
        return root

    def union(self, u: int, v: int) -> None:
        ru, rv = self.find(u), self.find(v)
        if ru == rv:
            return
        if self.rank[ru] < self.rank[rv]:
            ru, rv = rv, ru
        self.parent[rv] = ru
        if self.rank[ru] == self.rank[rv]:
            self.rank[ru] += 1


def connected_components(graph: SimilarityGraph) -> list[int]:
    """Cluster id per vertex; ids are dense, numbered by each component's
    smallest member.  Isolated vertices form singleton clusters."""
    uf = _UnionFind(graph.n)
    for e in graph.edges:
        uf.union(e.i, e.j)
    label: dict[int, int] = {}
    out = []
    for v in range(graph.n):
        root = uf.find(v)
        if root not in label:
            label[root] = len(label)
        out.append(label[root])
    return out


def weighted_precision_recall(clusters: list[int], labels: list[int]) -> tuple[float, float]:
    """Size-weighted clustering quality over N labeled vertices.

    precision = sum over clusters of its largest single-family overlap / N
    (mixed clusters are penalized); recall = sum over families of its
    largest single-cluster overlap / N (split families are penalized).
    """
    if len(clusters) != len(labels):
        raise ValueError("clusters and labels must cover the same vertices")
    n = len(labels)
    if n == 0:
        raise ValueError("no labeled vertices")
    overlap: dict[tuple[int, int], int] = {}
    for c, f in zip(clusters, labels):
        overlap[(c, f)] = overlap.get((c, f), 0) + 1
    best_by_cluster: dict[int, int] = {}
    best_by_family: dict[int, int] = {}
    for (c, f), cnt in overlap.items():
        if cnt > best_by_cluster.get(c, 0):
            best_by_cluster[c] = cnt
        if cnt > best_by_family.get(f, 0):
            best_by_family[f] = cnt
    precision = sum(best_by_cluster.values()) / n
    recall = sum(best_by_family.values()) / n
    return precision, recall


def read_labels(path) -> dict[str, str]:
    """Two-column TSV ``sequence_name<TAB>family_id``."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 tab-separated columns")
            out[parts[0]] = parts[1]
    return out


def write_labels(path, labels: dict[str, str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for name in labels:
            fh.write(f"{name}\t{labels[name]}\n")


def evaluate_against_labels(
    edge_names: list[tuple[str, str]],
    labels: dict[str, str],
) -> tuple[float, float, int]:
    """Precision/recall of connected components versus family labels.

    The vertex set is every labeled sequence, so label-only sequences
    count as singleton clusters; an edge endpoint missing from the labels
    is an error.
    """
    names = sorted(labels)
    index = {name: i for i, name in enumerate(names)}
    for a, b in edge_names:
        for name in (a, b):
            if name not in index:
                raise ValueError(f"vertex {name!r} has no family label")
    fam_ids: dict[str, int] = {}
    vertex_labels = []
    for name in names:
        fam = labels[name]
        if fam not in fam_ids:
            fam_ids[fam] = len(fam_ids)
        vertex_labels.append(fam_ids[fam])
    edges = []
    for a, b in edge_names:
        i, j = index[a], index[b]
        if i == j:
            continue
        if i > j:
            i, j = j, i
        edges.append(SimilarityEdge(i, j, 0, 0.0, 0.0, 0.0, True))
    dedup: dict[tuple[int, int], SimilarityEdge] = {(e.i, e.j): e for e in edges}
    graph = SimilarityGraph(len(names), sorted(dedup.values(), key=lambda e: (e.i, e.j)), "ani")
    clusters = connected_components(graph)
    precision, recall = weighted_precision_recall(clusters, vertex_labels)
    return precision, recall, len(set(clusters))
