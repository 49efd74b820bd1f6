"""Overlap pipeline: A and S construction, B = A*A^T (or A*S*A^T), and
candidate-pair extraction with the common-k-mer threshold."""

from __future__ import annotations

from dataclasses import dataclass, field

from . import kmers
from .seqstore import SequenceStore
from .spmat import (
    CommonKmers,
    DcscMatrix,
    Triplets,
    closest_kmer_semiring,
    exact_match_semiring,
    spgemm,
    symmetrize_overlap,
    transpose,
)
from .subkmer import ExpenseMatrix, ScoringMatrix, blosum62, build_expense, find_sub_kmers


@dataclass
class PipelineConfig:
    """Run parameters; defaults follow the tool's standard protein setup:
    k=6, BLOSUM62, gap open 11 / extend 1, x-drop 49, ANI >= 30 and
    shorter-sequence coverage >= 70, common-k-mer threshold 1 in exact
    mode and 3 with substitute k-mers."""

    k: int = 6
    subs: int = 0  # substitute k-mers per root; 0 = exact mode
    ck_threshold: int | None = None  # pairs sharing <= t k-mers are dropped
    align_mode: str = "xd"  # "sw" | "xd"
    xdrop: int = 49
    gap_open: int = 11
    gap_extend: int = 1
    weight: str = "ani"  # "ani" | "ns"
    ani_min: float = 30.0
    cov_min: float = 70.0
    scoring: ScoringMatrix = field(default_factory=blosum62)
    skip_ambiguous: bool = False
    threads: int = 1

    def __post_init__(self):
        if not 1 <= self.k <= kmers.MAX_K:
            raise ValueError(f"k must be in 1..{kmers.MAX_K}")
        if self.subs < 0:
            raise ValueError("subs must be >= 0")
        if self.ck_threshold is None:
            self.ck_threshold = 1 if self.subs == 0 else 3
        if self.ck_threshold < 0:
            raise ValueError("ck threshold must be >= 0")
        if self.align_mode not in ("sw", "xd"):
            raise ValueError("align mode must be 'sw' or 'xd'")
        if self.weight not in ("ani", "ns"):
            raise ValueError("weight must be 'ani' or 'ns'")
        for pct in (self.ani_min, self.cov_min):
            if not 0 <= pct <= 100:
                raise ValueError("percent thresholds must be in [0, 100]")
        if self.xdrop < 0 or self.gap_open < 0 or self.gap_extend < 0:
            raise ValueError("xdrop and gap costs must be >= 0")


@dataclass(frozen=True)
class CandidatePair:
    """Upper-triangular overlap cell that survived the threshold."""

    i: int
    j: int
    common: CommonKmers


def build_A(store: SequenceStore, k: int, skip_ambiguous: bool = False) -> DcscMatrix:
    """Sequence-by-k-mer position matrix: row i has one entry per distinct
    k-mer of sequence i, valued with its first start position."""
    t = Triplets(len(store), kmers.kmer_space(k))
    for gid in range(len(store)):
        for kid, pos in sorted(kmers.first_kmer_positions(store.residues(gid), k, skip_ambiguous).items()):
            t.add(gid, kid, pos)
    return DcscMatrix.from_triplets(t)


def present_kmers(a: DcscMatrix) -> list[int]:
    """Distinct k-mer ids present in any sequence (A's non-empty columns)."""
    return [int(c) for c in a.jc]


def build_S(
    present: list[int],
    expenses: ExpenseMatrix,
    m: int,
    k: int,
) -> DcscMatrix:
    """K-mer substitution matrix: row r of a present k-mer holds its m
    nearest substitutes (valued with the substitution distance) plus a
    distance-0 self entry so exact matches survive substitute mode."""
    if m < 1:
        raise ValueError("substitute mode needs m >= 1")
    space = kmers.kmer_space(k)
    t = Triplets(space, space)
    for root in sorted(present):
        t.add(root, root, 0)
        for sk in find_sub_kmers(root, expenses, m, k):
            t.add(root, sk.kmer, sk.dist)
    return DcscMatrix.from_triplets(t)


def compute_B(a: DcscMatrix, s: DcscMatrix | None = None) -> DcscMatrix:
    """Symmetric overlap matrix of CommonKmers.

    Exact mode is A*A^T.  Substitute mode computes (A*S)*A^T, where the
    A*S semiring records, per substitute k-mer, the position of the
    closest original k-mer; the product is then symmetrized because the
    substitute relation itself is not symmetric.
    """
    at = transpose(a)
    if s is None:
        return spgemm(a, at, exact_match_semiring())
    if s.nrows != a.ncols or s.ncols != a.ncols:
        raise ValueError("S dimensions must match A's k-mer space")
    a_s = spgemm(a, s, closest_kmer_semiring())
    b = spgemm(a_s, at, exact_match_semiring())
    return symmetrize_overlap(b)


def extract_pairs(b: DcscMatrix, t: int) -> list[CandidatePair]:
    """Strictly-upper-triangular cells sharing more than t k-mers, sorted
    by (i, j).  The diagonal (self pairs) is ignored."""
    if t < 0:
        raise ValueError("threshold must be >= 0")
    out = []
    for i, j, v in b.cells():
        if i < j and v.count > t:
            out.append(CandidatePair(i, j, v))
    out.sort(key=lambda p: (p.i, p.j))
    return out


def overlap_candidates(store: SequenceStore, cfg: PipelineConfig):
    """A, optional S, B and the thresholded candidate pairs for a store."""
    a = build_A(store, cfg.k, cfg.skip_ambiguous)
    s = None
    if cfg.subs > 0:
        expenses = build_expense(cfg.scoring)
        s = build_S(present_kmers(a), expenses, cfg.subs, cfg.k)
    b = compute_B(a, s)
    pairs = extract_pairs(b, cfg.ck_threshold)
    return a, s, b, pairs
