"""Pairwise alignment: Smith-Waterman and x-drop seed-and-extend.

Affine gap convention: a gap of length L costs ``gap_open + L * gap_extend``
(the first gap residue pays both the opening and one extension).  Both
aligners, and the similarity filter downstream, share this convention.

Smith-Waterman runs the full Gotoh dynamic program, vectorized along
anti-diagonals; cell scores never go below zero and the seed that
nominated the pair is ignored.  X-drop extends left and right from each
stored seed, abandoning cells whose score falls more than x below the
best seen so far, and keeps the better-scoring of the (at most two)
seed extensions.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .kmers import base_index
from .spmat import CommonKmers
from .subkmer import ScoringMatrix

NEG = -(1 << 40)


@dataclass(frozen=True)
class AlignmentResult:
    """One local alignment: score, half-open residue spans on both
    sequences, identity count, column count, and the per-column operations
    ('M' match, 'X' mismatch, 'I' gap in the row sequence, 'D' gap in the
    column sequence)."""

    raw_score: int
    span_i: tuple[int, int]
    span_j: tuple[int, int]
    matches: int
    align_len: int
    ops: str = ""


@dataclass(frozen=True)
class SimilarityEdge:
    """Aligned pair with its similarity metrics and filter verdict."""

    i: int
    j: int
    score: int
    ani: float
    ns: float
    cov_short: float
    passed: bool


def _indices(residues: bytes) -> np.ndarray:
    out = np.empty(len(residues), dtype=np.int64)
    for pos, b in enumerate(residues):
        d = base_index(b)
        if d < 0:
            raise ValueError(f"residue {bytes([b])!r} not in alphabet")
        out[pos] = d
    return out


def _ops_stats(ops: str, si: bytes, sj: bytes, bi: int, bj: int) -> tuple[int, int]:
    """(matches, alignment length) of an ops string starting at (bi, bj)."""
    matches = 0
    i, j = bi, bj
    for op in ops:
        if op in "MX":
            if si[i] == sj[j]:
                matches += 1
            i += 1
            j += 1
        elif op == "D":
            i += 1
        else:
            j += 1
    return matches, len(ops)


def smith_waterman(
    s_i: bytes,
    s_j: bytes,
    scoring: ScoringMatrix,
    gap_open: int = 11,
    gap_extend: int = 1,
) -> AlignmentResult:
    """Optimal affine-gap local alignment with traceback.

    Ties are broken deterministically: the best cell with the smallest
    (i, j) wins and traceback prefers diagonal over a gap in the column
    sequence over a gap in the row sequence.
    """
    if not s_i or not s_j:
        raise ValueError("sequences must be non-empty")
    ai, bj = _indices(s_i), _indices(s_j)
    n, m = len(ai), len(bj)
    sub = np.asarray(scoring.scores, dtype=np.int64)
    pair = sub[ai[:, None], bj[None, :]]

    oe = gap_open + gap_extend
    H = np.zeros((n + 1, m + 1), dtype=np.int64)
    E = np.full((n + 1, m + 1), NEG, dtype=np.int64)  # gap in s_i (consumes s_j)
    F = np.full((n + 1, m + 1), NEG, dtype=np.int64)  # gap in s_j (consumes s_i)

    for d in range(2, n + m + 1):
        lo = max(1, d - m)
        hi = min(n, d - 1)
        if lo > hi:
            continue
        i = np.arange(lo, hi + 1)
        j = d - i
        E[i, j] = np.maximum(H[i, j - 1] - oe, E[i, j - 1] - gap_extend)
        F[i, j] = np.maximum(H[i - 1, j] - oe, F[i - 1, j] - gap_extend)
        diag = H[i - 1, j - 1] + pair[i - 1, j - 1]
        H[i, j] = np.maximum(0, np.maximum(diag, np.maximum(E[i, j], F[i, j])))

    best = int(H.max())
    if best <= 0:
        return AlignmentResult(0, (0, 0), (0, 0), 0, 0, "")
    flat = int(np.argmax(H))
    ei, ej = divmod(flat, m + 1)

    ops: list[str] = []
    i, j = ei, ej
    state = "H"
    while True:
        if state == "H":
            h = H[i, j]
            if h == 0:
                break
            if i > 0 and j > 0 and h == H[i - 1, j - 1] + pair[i - 1, j - 1]:
                ops.append("M" if ai[i - 1] == bj[j - 1] else "X")
                i -= 1
                j -= 1
            elif h == E[i, j]:
                state = "E"
            else:
                state = "F"
        elif state == "E":
            ops.append("I")
            if E[i, j] == H[i, j - 1] - oe:
                state = "H"
            j -= 1
        else:
            ops.append("D")
            if F[i, j] == H[i - 1, j] - oe:
                state = "H"
            i -= 1
    ops.reverse()
    ops_str = "".join(ops)
    matches, align_len = _ops_stats(ops_str, s_i, s_j, i, j)
    return AlignmentResult(best, (i, ei), (j, ej), matches, align_len, ops_str)


def _trace_half(ptr: dict, cell: tuple[int, int]) -> str:
    ops = []
    i, j = cell
    while (i, j) != (0, 0):
        op = ptr[(i, j)]
        ops.append(op)
        if op in "MX":
            i, j = i - 1, j - 1
        elif op == "I":
            j -= 1
        else:
            i -= 1
    ops.reverse()
    return "".join(ops)


def xdrop_extend(
    s_i: bytes,
    s_j: bytes,
    common: CommonKmers,
    k: int,
    x: int,
    scoring: ScoringMatrix,
    gap_open: int = 11,
    gap_extend: int = 1,
) -> AlignmentResult:
    """Seed-and-extend alignment from each stored seed pair, keeping the
    best-scoring extension.

    Each seed contributes its gapless k-column block plus gapped x-drop
    extensions to the left and right.  Seed positions outside the
    sequences indicate a corrupt overlap cell and raise ValueError.
    """
    if not common.seeds:
        raise ValueError("no seed pairs to extend")
    for seq in (s_i, s_j):
        for b in seq:
            if base_index(b) < 0:
                raise ValueError(f"residue {bytes([b])!r} not in alphabet")
    table = scoring.byte_table()
    best_res: AlignmentResult | None = None
    for pi, pj in common.seeds:
        if not (0 <= pi and pi + k <= len(s_i) and 0 <= pj and pj + k <= len(s_j)):
            raise ValueError(f"seed ({pi},{pj}) out of bounds for k={k}")
        res = _extend_one(s_i, s_j, pi, pj, k, x, table, gap_open, gap_extend)
        if best_res is None or res.raw_score > best_res.raw_score:
            best_res = res
    return best_res


def _extend_one(s_i, s_j, pi, pj, k, x, table, gap_open, gap_extend) -> AlignmentResult:
    seed_ops = []
    seed_score = 0
    for t in range(k):
        seed_score += table[s_i[pi + t]][s_j[pj + t]]
        seed_ops.append("M" if s_i[pi + t] == s_j[pj + t] else "X")

    right_score, right_ops, ri, rj = _xdrop_extend_dir(
        s_i[pi + k :], s_j[pj + k :], x, table, gap_open, gap_extend
    )
    left_score, left_ops_rev, li, lj = _xdrop_extend_dir(
        s_i[:pi][::-1], s_j[:pj][::-1], x, table, gap_open, gap_extend
    )
    ops = left_ops_rev[::-1] + "".join(seed_ops) + right_ops
    bi, bj = pi - li, pj - lj
    ei, ej = pi + k + ri, pj + k + rj
    matches, align_len = _ops_stats(ops, s_i, s_j, bi, bj)
    return AlignmentResult(seed_score + left_score + right_score, (bi, ei), (bj, ej), matches, align_len, ops)


def _xdrop_extend_dir(sa: bytes, sb: bytes, x: int, table, gap_open: int, gap_extend: int):
    """Gapped x-drop DP over prefixes of sa/sb anchored at (0, 0).

    Anti-diagonal wavefront over a live band: the pruning floor of each
    anti-diagonal is the best score seen on earlier ones minus x, so the
    band (and the result) does not depend on within-diagonal visit order.
    Live H/E/F values are kept per diagonal, keyed by row index.
    Returns (score, ops, end_i, end_j); the empty extension scores 0.
    """
    oe = gap_open + gap_extend
    prune = NEG // 2
    la, lb = len(sa), len(sb)
    ptr: dict[tuple[int, int], str] = {}
    h_prev: dict[int, int] = {0: 0}  # live cells on diagonal d-1
    e_prev: dict[int, int] = {}
    f_prev: dict[int, int] = {}
    h_prev2: dict[int, int] = {}  # live cells on diagonal d-2
    best, best_cell = 0, (0, 0)
    d = 0
    while h_prev or h_prev2:
        d += 1
        floor = best - x
        cand: set[int] = set()
        for i in h_prev:
            if i < la:
                cand.add(i + 1)  # gap consuming sa
            if d - 1 - i < lb:
                cand.add(i)  # gap consuming sb
        for i in h_prev2:
            if i < la and d - 2 - i < lb:
                cand.add(i + 1)  # diagonal step
        h_cur: dict[int, int] = {}
        e_cur: dict[int, int] = {}
        f_cur: dict[int, int] = {}
        for i in sorted(cand):
            j = d - i
            if not (0 <= i <= la and 0 <= j <= lb):
                continue
            e = f = h = NEG
            op = ""
            if j >= 1:
                e = h_prev.get(i, NEG) - oe
                e2 = e_prev.get(i, NEG) - gap_extend
                if e2 > e:
                    e = e2
            if i >= 1:
                f = h_prev.get(i - 1, NEG) - oe
                f2 = f_prev.get(i - 1, NEG) - gap_extend
                if f2 > f:
                    f = f2
            if i >= 1 and j >= 1:
                hd = h_prev2.get(i - 1, NEG)
                if hd > NEG:
                    ca, cb = sa[i - 1], sb[j - 1]
                    h = hd + table[ca][cb]
                    op = "M" if ca == cb else "X"
            if e > h:
                h, op = e, "I"
            if f > h:
                h, op = f, "D"
            if h < floor or h <= prune:
                continue
            h_cur[i] = h
            if e > prune:
                e_cur[i] = e
            if f > prune:
                f_cur[i] = f
            ptr[(i, j)] = op
            if h > best:
                best, best_cell = h, (i, j)
        h_prev2 = h_prev
        h_prev, e_prev, f_prev = h_cur, e_cur, f_cur
    ops = _trace_half(ptr, best_cell)
    return best, ops, best_cell[0], best_cell[1]


def score_edge(
    i: int,
    j: int,
    len_i: int,
    len_j: int,
    result: AlignmentResult,
    ani_min: float = 30.0,
    cov_min: float = 70.0,
) -> SimilarityEdge:
    """Similarity metrics and the inclusive-threshold filter verdict.

    ANI is identities over alignment columns (gap columns included in the
    denominator); coverage is the aligned span of the shorter sequence over
    its length.  A pair passes when ani >= ani_min and coverage >= cov_min:
    the veto is strictly "less than".
    """
    if result.align_len > 0:
        ani = 100.0 * result.matches / result.align_len
    else:
        ani = 0.0
    short = min(len_i, len_j)
    if len_i <= len_j:
        span = result.span_i[1] - result.span_i[0]
    else:
        span = result.span_j[1] - result.span_j[0]
    cov = 100.0 * span / short if short else 0.0
    ns = result.raw_score / short if short else 0.0
    passed = ani >= ani_min and cov >= cov_min
    return SimilarityEdge(i, j, result.raw_score, ani, ns, cov, passed)


def align_pair(s_i, s_j, common: CommonKmers, cfg) -> AlignmentResult:
    """Dispatch on the configured alignment mode ('sw' or 'xd')."""
    if cfg.align_mode == "sw":
        return smith_waterman(s_i, s_j, cfg.scoring, cfg.gap_open, cfg.gap_extend)
    return xdrop_extend(s_i, s_j, common, cfg.k, cfg.xdrop, cfg.scoring, cfg.gap_open, cfg.gap_extend)


def align_batch(tasks, cfg, threads: int = 1) -> list[SimilarityEdge]:
    """Align (i, j, s_i, s_j, common) tasks and score the edges.

    Tasks are independent; results are returned in (i, j) order regardless
    of completion order.
    """

    def run(task):
        i, j, s_i, s_j, common = task
        res = align_pair(s_i, s_j, common, cfg)
        return score_edge(i, j, len(s_i), len(s_j), res, cfg.ani_min, cfg.cov_min)

    tasks = sorted(tasks, key=lambda t: (t[0], t[1]))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, tasks))
    return [run(t) for t in tasks]
