"""Virtual q x q process grid for the distributed overlap pipeline.

Workers are threads that share no mutable sequence data and talk only
through typed point-to-point messages, mirroring a square MPI grid:

* sequences are parsed (held) in byte-balanced linear ranges, then each
  worker eagerly requests the full row+column ranges of its 2D block so
  the exchange overlaps the matrix phases and a completion barrier before
  alignment stands in for a wait-all;
* A (and S in substitute mode) are assembled by routing k-mer triplets
  to their 2D block owners, and B is computed with a staged, SUMMA-style
  blocked SpGEMM: at stage s the holders of panel column s broadcast
  along grid rows and the holders of panel row s along grid columns;
* alignment work follows the data: each worker handles the strictly
  upper-triangular cells of its own B block, plus its block diagonal
  when the worker sits on or above the grid diagonal, so every pair is
  aligned exactly once.

Stages consume inner-dimension panels in ascending order, which makes
every accumulator see partial products in the same order as a single
worker would; outputs are therefore identical for any q.
"""

from __future__ import annotations

import queue
import threading
import time
from collections import defaultdict
from dataclasses import dataclass, field

from . import kmers
from .align import SimilarityEdge, align_batch
from .graph import SimilarityGraph, assemble_graph
from .pipeline import PipelineConfig
from .report import RunReport
from .seqstore import SequenceStore, prefix_counts
from .spmat import (
    DcscMatrix,
    Triplets,
    _merge_directions,
    closest_kmer_semiring,
    emit_spgemm,
    exact_match_semiring,
    spgemm_accumulate,
)
from .subkmer import build_expense, find_sub_kmers

_RECV_TIMEOUT = 600.0


class GridError(RuntimeError):
    pass


@dataclass(frozen=True)
class GridConfig:
    """Grid side q; the harness runs p = q*q workers."""

    q: int

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("grid side must be >= 1")

    @property
    def p(self) -> int:
        return self.q * self.q


def _partition(n: int, q: int) -> list[int]:
    return [b * n // q for b in range(q + 1)]


@dataclass(frozen=True)
class BlockOwnership:
    """2D block ranges: cell (r, c) owns B rows bounds[r]:bounds[r+1] and
    columns bounds[c]:bounds[c+1] (row and column partitions coincide)."""

    n: int
    q: int
    bounds: tuple[int, ...]

    def row_range(self, r: int) -> range:
        return range(self.bounds[r], self.bounds[r + 1])

    def col_range(self, c: int) -> range:
        return range(self.bounds[c], self.bounds[c + 1])

    def block_of(self, gid: int) -> int:
        lo, hi = 0, self.q - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.bounds[mid] <= gid:
                lo = mid
            else:
                hi = mid - 1
        return lo


def plan_blocks(n: int, q: int) -> BlockOwnership:
    """Contiguous near-equal sequence ranges along both grid dimensions."""
    if q < 1:
        raise ValueError("grid side must be >= 1")
    if q * q > n:
        raise ValueError(f"grid of {q * q} workers is degenerate for {n} sequences")
    return BlockOwnership(n, q, tuple(_partition(n, q)))


@dataclass(frozen=True)
class RequestPlan:
    """Per worker: ranges to fetch from peers and ranges to serve them,
    plus the sequence count it ends up holding (row+column union)."""

    requests: tuple[tuple[tuple[int, range], ...], ...]
    serves: tuple[tuple[tuple[int, range], ...], ...]
    held: tuple[int, ...]


def _ranges_overlap(a: range, b: range) -> range:
    lo, hi = max(a.start, b.start), min(a.stop, b.stop)
    return range(lo, max(lo, hi))


def _needed_ranges(own: BlockOwnership, w: int) -> list[range]:
    r, c = divmod(w, own.q)
    rr, cr = own.row_range(r), own.col_range(c)
    if rr == cr:
        return [rr]
    return sorted((rr, cr), key=lambda x: x.start)


def plan_requests(ownership: BlockOwnership, holdings: list[range]) -> RequestPlan:
    """Eager full-range exchange plan.

    Every worker requests the entirety of its row and column ranges up
    front (not the post-overlap subset), so transfers can run in the
    background of matrix construction; serves mirror requests exactly.
    """
    p = ownership.q * ownership.q
    if len(holdings) != p:
        raise ValueError(f"expected {p} linear holdings, got {len(holdings)}")
    requests: list[list[tuple[int, range]]] = [[] for _ in range(p)]
    serves: list[list[tuple[int, range]]] = [[] for _ in range(p)]
    held: list[int] = []
    for w in range(p):
        needed = _needed_ranges(ownership, w)
        held.append(sum(len(rng) for rng in needed))
        for rng in needed:
            for peer, holding in enumerate(holdings):
                if peer == w:
                    continue
                sub = _ranges_overlap(rng, holding)
                if len(sub):
                    requests[w].append((peer, sub))
                    serves[peer].append((w, sub))
    for w in range(p):
        requests[w].sort(key=lambda pr: (pr[0], pr[1].start))
        serves[w].sort(key=lambda pr: (pr[0], pr[1].start))
    return RequestPlan(
        tuple(tuple(x) for x in requests),
        tuple(tuple(x) for x in serves),
        tuple(held),
    )


@dataclass(frozen=True)
class WorkAssignment:
    """Pair duty of one grid cell over its B block."""

    r: int
    c: int
    row_range: range
    col_range: range

    def takes_cell(self, i: int, j: int) -> bool:
        """Whether this cell aligns B cell (i, j) of its block."""
        if i == j:
            return False
        li, lj = i - self.row_range.start, j - self.col_range.start
        if li < lj:
            return True
        return li == lj and self.r <= self.c

    def pairs(self):
        """All unordered pairs this cell is responsible for (B-independent)."""
        for i in self.row_range:
            for j in self.col_range:
                if self.takes_cell(i, j):
                    yield (i, j) if i < j else (j, i)


def assign_work(ownership: BlockOwnership) -> list[WorkAssignment]:
    """Computation-to-data assignment for all q*q cells.

    Each cell takes the strictly upper triangle of its local block;
    local block-diagonal pairs go to the cell on or above the grid
    diagonal, so together with its transpose partner every global pair
    (i < j) is covered exactly once.
    """
    out = []
    for w in range(ownership.q * ownership.q):
        r, c = divmod(w, ownership.q)
        out.append(WorkAssignment(r, c, ownership.row_range(r), ownership.col_range(c)))
    return out


# -- message plumbing -------------------------------------------------------


@dataclass(frozen=True)
class Message:
    src: int
    dst: int
    tag: str
    payload: object
    nbytes: int


@dataclass(frozen=True)
class LedgerEvent:
    worker: int
    peer: int
    kind: str  # request | send | recv | mark
    phase: str
    nbytes: int
    clock: int


@dataclass
class CommLedger:
    """Per-worker logical clocks and message accounting."""

    events: list[LedgerEvent] = field(default_factory=list)

    def by_worker(self, w: int) -> list[LedgerEvent]:
        return [e for e in self.events if e.worker == w]

    def total_bytes(self, kind: str) -> int:
        return sum(e.nbytes for e in self.events if e.kind == kind)

    def to_csv(self) -> str:
        lines = ["worker,peer,bytes,phase,kind,clock"]
        for e in sorted(self.events, key=lambda e: (e.worker, e.clock)):
            lines.append(f"{e.worker},{e.peer},{e.nbytes},{e.phase},{e.kind},{e.clock}")
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_csv())


class _Fabric:
    """Point-to-point mailboxes keyed by (destination, tag, source).

    Sends never block; receives block until the exact (tag, source)
    message arrives, so delivery order between peers is irrelevant.
    A failing worker poisons the fabric and unblocks everyone.
    """

    def __init__(self, p: int):
        self.p = p
        self._boxes: dict[tuple[int, str, int], queue.Queue] = defaultdict(queue.Queue)
        self._lock = threading.Lock()
        self._poisoned = threading.Event()

    def _box(self, dst: int, tag: str, src: int) -> queue.Queue:
        with self._lock:
            return self._boxes[(dst, tag, src)]

    def poison(self) -> None:
        self._poisoned.set()

    def send(self, msg: Message) -> None:
        self._box(msg.dst, msg.tag, msg.src).put(msg)

    def recv(self, dst: int, tag: str, src: int) -> Message:
        box = self._box(dst, tag, src)
        deadline = time.monotonic() + _RECV_TIMEOUT
        while True:
            if self._poisoned.is_set():
                raise GridError(f"worker {dst} aborted: a peer failed")
            try:
                return box.get(timeout=0.05)
            except queue.Empty:
                if time.monotonic() > deadline:
                    raise GridError(f"worker {dst} timed out waiting for {tag!r} from {src}") from None


class _WorkerCtx:
    """One worker's view: records it parsed, the fabric, and its ledger."""

    def __init__(self, w: int, fabric: _Fabric, grid: GridConfig, cfg: PipelineConfig):
        self.w = w
        self.fabric = fabric
        self.grid = grid
        self.cfg = cfg
        self.clock = 0
        self.events: list[LedgerEvent] = []
        self.stage_seconds: dict[str, float] = {}

    def tick(self) -> int:
        self.clock += 1
        return self.clock

    def log(self, kind: str, peer: int, phase: str, nbytes: int = 0) -> None:
        self.events.append(LedgerEvent(self.w, peer, kind, phase, nbytes, self.tick()))

    def send(self, dst: int, tag: str, payload, nbytes: int, phase: str) -> None:
        self.fabric.send(Message(self.w, dst, tag, payload, nbytes))
        self.log("send", dst, phase, nbytes)

    def recv(self, tag: str, src: int, phase: str) -> object:
        msg = self.fabric.recv(self.w, tag, src)
        self.log("recv", src, phase, msg.nbytes)
        return msg.payload


def _triplet_bytes(count: int) -> int:
    return 24 * count  # three 8-byte words per routed entry


def _seq_bytes(names: list[str], residues: list[bytes]) -> int:
    return sum(len(n) for n in names) + sum(len(r) for r in residues)


@dataclass
class GridResult:
    graph: SimilarityGraph
    ledger: CommLedger
    report: RunReport
    plan: RequestPlan
    ownership: BlockOwnership


def run_grid(store: SequenceStore, grid_cfg: GridConfig, cfg: PipelineConfig) -> GridResult:
    """Run the full pipeline on a virtual grid; the resulting graph is
    bit-identical to the single-worker run for any q."""
    n = len(store)
    q = grid_cfg.q
    p = grid_cfg.p
    ownership = plan_blocks(n, q)
    holdings = store.byte_balanced_holdings(p)
    plan = plan_requests(ownership, holdings)
    kpanel = _partition(kmers.kmer_space(cfg.k), q)

    fabric = _Fabric(p)
    ctxs = [_WorkerCtx(w, fabric, grid_cfg, cfg) for w in range(p)]
    results: list[list[SimilarityEdge] | None] = [None] * p
    counters: list[dict | None] = [None] * p
    errors: list[BaseException | None] = [None] * p

    def worker(w: int) -> None:
        try:
            edges, counts = _worker_main(
                ctxs[w], store, holdings, ownership, plan, kpanel, cfg
            )
            results[w] = edges
            counters[w] = counts
        except BaseException as exc:  # surfaced as whole-run failure
            errors[w] = exc
            fabric.poison()

    threads = [threading.Thread(target=worker, args=(w,), name=f"grid-worker-{w}") for w in range(p)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    for w, exc in enumerate(errors):
        if exc is not None:
            raise GridError(f"worker {w} failed: {exc}") from exc

    ledger = CommLedger([e for ctx in ctxs for e in ctx.events])
    edges = sorted((e for r in results for e in r), key=lambda e: (e.i, e.j))
    for a, b in zip(edges, edges[1:]):
        if (a.i, a.j) == (b.i, b.j):
            raise GridError(f"pair ({a.i},{a.j}) aligned more than once")
    graph = assemble_graph(n, edges, cfg.weight)

    report = RunReport(n_sequences=n, grid_q=q)
    stage_names: list[str] = []
    for ctx in ctxs:
        for s in ctx.stage_seconds:
            if s not in stage_names:
                stage_names.append(s)
    for s in stage_names:
        # slowest worker defines each stage, as a barrier would
        report.stage_seconds[s] = max(ctx.stage_seconds.get(s, 0.0) for ctx in ctxs)
    for key in ("nnz_a", "nnz_s", "nnz_b", "pairs_before", "pairs_after", "alignments"):
        setattr(report, key, sum(c[key] for c in counters))
    report.edges_kept = len(graph.edges)
    return GridResult(graph, ledger, report, plan, ownership)


def _worker_main(ctx, store, holdings, ownership, plan, kpanel, cfg):
    w, q, p = ctx.w, ctx.grid.q, ctx.grid.p
    r, c = divmod(w, q)
    holding = holdings[w]
    my_names = [store.name(g) for g in holding]
    my_res = [store.residues(g) for g in holding]

    # Count all-gather: ids come from a prefix sum over worker order.
    t0 = time.perf_counter()
    for peer in range(p):
        if peer != w:
            ctx.send(peer, "counts", len(holding), 8, "prefix")
    counts = [0] * p
    counts[w] = len(holding)
    for peer in range(p):
        if peer != w:
            counts[peer] = ctx.recv("counts", peer, "prefix")
    offsets = prefix_counts(counts)
    assert offsets[w] == holding.start, "holding ranges must match prefix ids"
    ctx.stage_seconds["prefix"] = time.perf_counter() - t0

    # Eager sequence exchange: post requests, push owed ranges, keep going.
    t0 = time.perf_counter()
    for peer, rng in plan.requests[w]:
        ctx.log("request", peer, "exchange")
    for peer, rng in plan.serves[w]:
        names = [store.name(g) for g in rng]
        residues = [store.residues(g) for g in rng]
        ctx.send(peer, "seq", (rng.start, names, residues), _seq_bytes(names, residues), "exchange")
    ctx.stage_seconds["exchange"] = time.perf_counter() - t0

    # A assembly: route k-mer triplets of locally held sequences to the
    # 2D owners of their (sequence row, k-mer panel) block.
    t0 = time.perf_counter()
    outbound: list[list[tuple[int, int, int]]] = [[] for _ in range(p)]
    for idx, gid in enumerate(holding):
        row_block = ownership.block_of(gid)
        for kid, pos in sorted(kmers.first_kmer_positions(my_res[idx], cfg.k, cfg.skip_ambiguous).items()):
            col_block = _panel_of(kpanel, kid)
            outbound[row_block * q + col_block].append((gid, kid, pos))
    my_a = _exchange_triplets(ctx, outbound, "atrip", "assembly", len(store), kmers.kmer_space(cfg.k))
    ctx.stage_seconds["build_a"] = time.perf_counter() - t0

    # S assembly (substitute mode): every worker expands the roots present
    # in its own A block; owners deduplicate identical rows.
    my_s = None
    if cfg.subs > 0:
        t0 = time.perf_counter()
        expenses = build_expense(cfg.scoring)
        outbound = [[] for _ in range(p)]
        for root in sorted(int(col) for col in my_a.jc):
            dest_row = _panel_of(kpanel, root)
            entries = [(root, root, 0)]
            entries += [(root, sk.kmer, sk.dist) for sk in find_sub_kmers(root, expenses, cfg.subs, cfg.k)]
            for rt, sk, dist in entries:
                outbound[dest_row * q + _panel_of(kpanel, sk)].append((rt, sk, dist))
        space = kmers.kmer_space(cfg.k)
        my_s = _exchange_triplets(ctx, outbound, "strip", "sform", space, space, dedupe=True)
        ctx.stage_seconds["build_s"] = time.perf_counter() - t0

    # Distributed transpose: block (r, c) transposed belongs to (c, r).
    t0 = time.perf_counter()
    mine_t = [(int(cc), int(rr), v) for rr, cc, v in my_a.cells()]
    if (c, r) != (r, c):
        ctx.send(c * q + r, "tblk", mine_t, _triplet_bytes(len(mine_t)), "transpose")
        theirs = ctx.recv("tblk", c * q + r, "transpose")
    else:
        theirs = mine_t
    tt = Triplets(kmers.kmer_space(cfg.k), len(store))
    for rr, cc, v in theirs:
        tt.add(rr, cc, v)
    my_t = DcscMatrix.from_triplets(tt)
    ctx.stage_seconds["transpose"] = time.perf_counter() - t0

    # Blocked SpGEMM, SUMMA stages over ascending inner panels.
    t0 = time.perf_counter()
    if my_s is not None:
        as_block = _summa(ctx, my_a, my_s, closest_kmer_semiring(), "as", len(store), kpanel[-1])
        bprime = _summa(ctx, as_block, my_t, exact_match_semiring(), "b", len(store), len(store))
        my_b = _symmetrize_block(ctx, bprime, r, c, q)
    else:
        my_b = _summa(ctx, my_a, my_t, exact_match_semiring(), "b", len(store), len(store))
    ctx.stage_seconds["spgemm"] = time.perf_counter() - t0

    # Threshold + work assignment over the local block.
    t0 = time.perf_counter()
    duty = WorkAssignment(r, c, ownership.row_range(r), ownership.col_range(c))
    pairs_before = sum(1 for i, j, _v in my_b.cells() if duty.takes_cell(i, j))
    tasks_meta = []
    for i, j, v in my_b.cells():
        if duty.takes_cell(i, j) and v.count > cfg.ck_threshold:
            if i < j:
                tasks_meta.append((i, j, v))
            else:
                tasks_meta.append((j, i, v.mirrored()))
    ctx.stage_seconds["extract"] = time.perf_counter() - t0

    # Wait-all: consume the sequence payloads posted during the exchange.
    t0 = time.perf_counter()
    local_seq: dict[int, bytes] = {g: store.residues(g) for g in holding}
    for peer, rng in plan.requests[w]:
        start, _names, residues = ctx.recv("seq", peer, "waitall")
        for off, res in enumerate(residues):
            local_seq[start + off] = res
    ctx.log("mark", -1, "waitall")
    ctx.stage_seconds["wait"] = time.perf_counter() - t0

    # Alignment of assigned pairs from locally held residues only.
    t0 = time.perf_counter()
    tasks = [(i, j, local_seq[i], local_seq[j], v) for i, j, v in tasks_meta]
    edges = align_batch(tasks, cfg, cfg.threads)
    ctx.stage_seconds["align"] = time.perf_counter() - t0

    counts = {
        "nnz_a": my_a.nnz,
        "nnz_s": my_s.nnz if my_s is not None else 0,
        "nnz_b": my_b.nnz,
        "pairs_before": pairs_before,
        "pairs_after": len(tasks),
        "alignments": len(tasks),
    }
    return edges, counts


def _panel_of(kpanel: list[int], kid: int) -> int:
    lo, hi = 0, len(kpanel) - 2
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if kpanel[mid] <= kid:
            lo = mid
        else:
            hi = mid - 1
    return lo


def _exchange_triplets(ctx, outbound, tag, phase, nrows, ncols, dedupe=False):
    """All-to-all triplet routing; every worker sends to every peer (empty
    batches included) and assembles its block from what it receives."""
    p = ctx.grid.p
    for peer in range(p):
        if peer != ctx.w:
            batch = outbound[peer]
            ctx.send(peer, tag, batch, _triplet_bytes(len(batch)), phase)
    gathered = list(outbound[ctx.w])
    for peer in range(p):
        if peer != ctx.w:
            gathered.extend(ctx.recv(tag, peer, phase))
    gathered.sort()
    t = Triplets(nrows, ncols)
    for row, col, v in gathered:
        t.add(row, col, v)
    combine = None
    if dedupe:
        combine = _assert_equal_combine
    return DcscMatrix.from_triplets(t, combine=combine)


def _assert_equal_combine(a, b):
    if a != b:
        raise GridError(f"conflicting duplicate triplet values {a!r} vs {b!r}")
    return a


def _summa(ctx, a_block, b_block, semiring, label, out_rows, out_cols) -> DcscMatrix:
    """One SUMMA product: q stages of row/column panel broadcasts with a
    persistent accumulator, emitted once after the last stage."""
    q, w = ctx.grid.q, ctx.w
    r, c = divmod(w, q)
    acc: dict = {}
    for s in range(q):
        if c == s:
            tri = [(int(i), int(j), v) for i, j, v in a_block.cells()]
            for peer_c in range(q):
                if peer_c != c:
                    ctx.send(r * q + peer_c, f"summa_{label}_a{s}", tri, _triplet_bytes(len(tri)), "spgemm")
        if r == s:
            tri = [(int(i), int(j), v) for i, j, v in b_block.cells()]
            for peer_r in range(q):
                if peer_r != r:
                    ctx.send(peer_r * q + c, f"summa_{label}_b{s}", tri, _triplet_bytes(len(tri)), "spgemm")
        a_panel = a_block if c == s else _block_from(ctx.recv(f"summa_{label}_a{s}", r * q + s, "spgemm"), a_block.nrows, a_block.ncols)
        b_panel = b_block if r == s else _block_from(ctx.recv(f"summa_{label}_b{s}", s * q + c, "spgemm"), b_block.nrows, b_block.ncols)
        spgemm_accumulate(acc, a_panel, b_panel, semiring)
    return emit_spgemm(acc, out_rows, out_cols, semiring)


def _block_from(tri, nrows, ncols) -> DcscMatrix:
    t = Triplets(nrows, ncols)
    for i, j, v in tri:
        t.add(i, j, v)
    return DcscMatrix.from_triplets(t)


def _symmetrize_block(ctx, bprime, r, c, q) -> DcscMatrix:
    """Symmetrize the distributed overlap matrix: transpose partners swap
    blocks and each merges its own cells with the mirrored counterpart."""
    mine = {(i, j): v for i, j, v in bprime.cells()}
    if r != c:
        tri = [(i, j, v) for (i, j), v in sorted(mine.items())]
        ctx.send(c * q + r, "symm", tri, _triplet_bytes(len(tri)), "symm")
        theirs = {(i, j): v for i, j, v in ctx.recv("symm", c * q + r, "symm")}
    else:
        theirs = mine
    keys = set(mine) | {(j, i) for (i, j) in theirs}
    t = Triplets(bprime.nrows, bprime.ncols)
    for i, j in sorted(keys, key=lambda ij: (ij[1], ij[0])):
        fwd = mine.get((i, j))
        rev = theirs.get((j, i))
        if i <= j:
            merged = _merge_directions(fwd, rev)
        else:
            merged = _merge_directions(rev, fwd).mirrored()
        t.add(i, j, merged)
    return DcscMatrix.from_triplets(t)
