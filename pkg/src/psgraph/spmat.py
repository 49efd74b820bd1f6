"""Hypersparse matrices and semiring-parameterized SpGEMM.

Matrices are stored doubly-compressed by column (DCSC): only non-empty
columns get a column id and pointer, so storage is O(nnz + nzc) and a
matrix with 24**6 columns costs the same as one compacted to its
occupied columns.  Values are arbitrary payloads; multiplication is
parameterized by a :class:`Semiring` supplying multiply/add/identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Iterator

import numpy as np


class Triplets:
    """COO builder; duplicates survive until an explicit combine step."""

    def __init__(self, nrows: int, ncols: int):
        self.nrows = nrows
        self.ncols = ncols
        self.rows: list[int] = []
        self.cols: list[int] = []
        self.values: list[Any] = []

    def add(self, row: int, col: int, value: Any) -> None:
        if not (0 <= row < self.nrows and 0 <= col < self.ncols):
            raise IndexError(f"triplet ({row},{col}) outside {self.nrows}x{self.ncols}")
        self.rows.append(row)
        self.cols.append(col)
        self.values.append(value)

    def __len__(self) -> int:
        return len(self.rows)


class DcscMatrix:
    """Doubly compressed sparse column matrix.

    ``jc`` lists the non-empty column ids ascending, ``cp`` the pointer
    range of each, ``ir`` the row ids (strictly ascending within a
    column) and ``values`` the payloads, parallel to ``ir``.
    """

    def __init__(self, nrows, ncols, jc, cp, ir, values):
        self.nrows = int(nrows)
        self.ncols = int(ncols)
        self.jc = np.asarray(jc, dtype=np.int64)
        self.cp = np.asarray(cp, dtype=np.int64)
        self.ir = np.asarray(ir, dtype=np.int64)
        self.values = list(values)
        self._col_slot: dict[int, int] | None = None
        if len(self.cp) != len(self.jc) + 1:
            raise ValueError("cp must have len(jc)+1 entries")
        if len(self.ir) != len(self.values):
            raise ValueError("ir and values length mismatch")

    # -- construction -----------------------------------------------------

    @classmethod
    def empty(cls, nrows: int, ncols: int) -> "DcscMatrix":
        return cls(nrows, ncols, [], [0], [], [])

    @classmethod
    def from_triplets(cls, t: Triplets, combine: Callable[[Any, Any], Any] | None = None) -> "DcscMatrix":
        """Build from triplets.  Duplicate (row, col) entries are an error
        unless ``combine`` folds them (applied in insertion order)."""
        if len(t) == 0:
            return cls.empty(t.nrows, t.ncols)
        rows = np.asarray(t.rows, dtype=np.int64)
        cols = np.asarray(t.cols, dtype=np.int64)
        order = np.lexsort((np.arange(len(rows)), rows, cols))
        jc: list[int] = []
        cp: list[int] = [0]
        ir: list[int] = []
        values: list[Any] = []
        last_col = -1
        for idx in order:
            r, c, v = int(rows[idx]), int(cols[idx]), t.values[idx]
            if c != last_col:
                if last_col >= 0:
                    cp.append(len(ir))
                jc.append(c)
                last_col = c
            if ir and cp[-1] < len(ir) and ir[-1] == r and jc[-1] == c:
                if combine is None:
                    raise ValueError(f"duplicate entry at ({r},{c}) with no combine step")
                values[-1] = combine(values[-1], v)
            else:
                ir.append(r)
                values.append(v)
        cp.append(len(ir))
        return cls(t.nrows, t.ncols, jc, cp, ir, values)

    # -- accessors --------------------------------------------------------

    @property
    def nnz(self) -> int:
        return len(self.ir)

    @property
    def nzc(self) -> int:
        """Count of non-empty columns."""
        return len(self.jc)

    def storage_counts(self) -> dict[str, int]:
        """Element counts of each storage array; independent of ncols."""
        return {"jc": len(self.jc), "cp": len(self.cp), "ir": len(self.ir), "values": len(self.values)}

    def columns(self) -> Iterator[tuple[int, np.ndarray, list]]:
        """Yield (col_id, row_ids, values) per non-empty column, ascending."""
        for s in range(len(self.jc)):
            lo, hi = int(self.cp[s]), int(self.cp[s + 1])
            yield int(self.jc[s]), self.ir[lo:hi], self.values[lo:hi]

    def column(self, col: int) -> tuple[np.ndarray, list]:
        """Row ids and values of one column (empty arrays if absent)."""
        if self._col_slot is None:
            self._col_slot = {int(c): s for s, c in enumerate(self.jc)}
        s = self._col_slot.get(col)
        if s is None:
            return self.ir[:0], []
        lo, hi = int(self.cp[s]), int(self.cp[s + 1])
        return self.ir[lo:hi], self.values[lo:hi]

    def to_triplets(self) -> Triplets:
        t = Triplets(self.nrows, self.ncols)
        for c, rows, vals in self.columns():
            for r, v in zip(rows, vals):
                t.add(int(r), c, v)
        return t

    def cells(self) -> Iterator[tuple[int, int, Any]]:
        """All (row, col, value), ordered by (col, row)."""
        for c, rows, vals in self.columns():
            for r, v in zip(rows, vals):
                yield int(r), c, v

    def to_dense_bool(self) -> np.ndarray:
        out = np.zeros((self.nrows, self.ncols), dtype=bool)
        for r, c, _ in self.cells():
            out[r, c] = True
        return out

    def dump_lines(self, summarize: Callable[[Any], str] = str) -> list[str]:
        """Matrix-Market-style triples (row, col, payload summary)."""
        lines = [f"%psgraph dcsc {self.nrows} {self.ncols} {self.nnz}"]
        for r, c, v in self.cells():
            lines.append(f"{r} {c} {summarize(v)}")
        return lines

    def structurally_equal(self, other: "DcscMatrix") -> bool:
        return (
            self.nrows == other.nrows
            and self.ncols == other.ncols
            and np.array_equal(self.jc, other.jc)
            and np.array_equal(self.cp, other.cp)
            and np.array_equal(self.ir, other.ir)
        )

    def equal(self, other: "DcscMatrix") -> bool:
        return self.structurally_equal(other) and self.values == other.values


def transpose(a: DcscMatrix) -> DcscMatrix:
    """Swap rows and columns; DCSC invariants restored by rebuilding."""
    t = Triplets(a.ncols, a.nrows)
    for r, c, v in a.cells():
        t.add(c, r, v)
    return DcscMatrix.from_triplets(t)


@dataclass
class Semiring:
    """Add/multiply pair for SpGEMM over custom payloads.

    ``multiply(a_value, b_value, row, col, inner)`` forms a partial
    product; ``add(accumulator, partial)`` folds it (the accumulator
    starts as ``identity``).  ``finalize`` maps the finished accumulator
    to the stored cell payload.  Neither callback may mutate its inputs
    other than the accumulator it returns.
    """

    multiply: Callable[[Any, Any, int, int, int], Any]
    add: Callable[[Any, Any], Any]
    identity: Any = None
    finalize: Callable[[Any], Any] | None = None


def spgemm_accumulate(acc: dict, a: DcscMatrix, b: DcscMatrix, semiring: Semiring) -> None:
    """Fold A*B into ``acc`` (keyed (row, col)) without finalizing.

    Partial products for a cell are added in ascending inner-index order,
    which staged/blocked callers must preserve across calls.
    """
    if a.ncols != b.nrows:
        raise ValueError(f"dimension mismatch: {a.nrows}x{a.ncols} times {b.nrows}x{b.ncols}")
    mul, add, ident = semiring.multiply, semiring.add, semiring.identity
    for j, b_rows, b_vals in b.columns():
        for t, bv in zip(b_rows, b_vals):
            a_rows, a_vals = a.column(int(t))
            for i, av in zip(a_rows, a_vals):
                key = (int(i), j)
                part = mul(av, bv, int(i), j, int(t))
                acc[key] = add(acc.get(key, ident), part)


def emit_spgemm(acc: dict, nrows: int, ncols: int, semiring: Semiring) -> DcscMatrix:
    """Finalize an accumulator dict into a DCSC matrix, dropping cells whose
    accumulator equals the additive identity."""
    ident, fin = semiring.identity, semiring.finalize
    t = Triplets(nrows, ncols)
    for (i, j) in sorted(acc, key=lambda ij: (ij[1], ij[0])):
        v = acc[(i, j)]
        if v == ident:
            continue
        t.add(i, j, fin(v) if fin is not None else v)
    return DcscMatrix.from_triplets(t)


def spgemm(a: DcscMatrix, b: DcscMatrix, semiring: Semiring) -> DcscMatrix:
    """C = A*B under a semiring; cells with no surviving product are absent."""
    acc: dict = {}
    spgemm_accumulate(acc, a, b, semiring)
    return emit_spgemm(acc, a.nrows, b.ncols, semiring)


# -- overlap-detection payloads and semirings ------------------------------


@dataclass
class CommonKmers:
    """Shared-seed payload of an overlap cell: how many k-mers two
    sequences share and up to two (row position, col position) seed pairs,
    those of the two smallest shared k-mer ids."""

    count: int = 0
    seeds: list[tuple[int, int]] = field(default_factory=list)

    def mirrored(self) -> "CommonKmers":
        return CommonKmers(self.count, [(b, a) for a, b in self.seeds])


MAX_SEEDS = 2


def exact_match_semiring() -> Semiring:
    """Semiring for B = A * A^T where values are k-mer start positions.

    Multiplication pairs the positions of one shared k-mer; addition
    counts shared k-mers and keeps the seed pairs of the first two in
    ascending inner (k-mer id) order.
    """

    def mul(pos_row, pos_col, _i, _j, _inner):
        return (int(pos_row), int(pos_col))

    def add(acc, pair):
        if acc is None:
            acc = CommonKmers()
        acc.count += 1
        if len(acc.seeds) < MAX_SEEDS:
            acc.seeds.append(pair)
        return acc

    return Semiring(multiply=mul, add=add, identity=None)


def closest_kmer_semiring() -> Semiring:
    """Semiring for A * S: when several k-mers of one sequence map to the
    same substitute k-mer, the recorded position is that of the k-mer with
    the smallest distance, ties broken by the smaller original k-mer id."""

    def mul(pos, dist, _i, _j, inner):
        return (int(dist), inner, int(pos))

    def add(acc, cand):
        if acc is None or cand[:2] < acc[:2]:
            return cand
        return acc

    return Semiring(multiply=mul, add=add, identity=None, finalize=lambda acc: acc[2])


def boolean_semiring() -> Semiring:
    """Plain boolean (or, and) semiring for structural tests."""
    return Semiring(
        multiply=lambda a, b, _i, _j, _t: bool(a) and bool(b),
        add=lambda acc, p: acc or p,
        identity=False,
    )


def arithmetic_semiring() -> Semiring:
    """Standard (+, *) semiring over numbers."""
    return Semiring(
        multiply=lambda a, b, _i, _j, _t: a * b,
        add=lambda acc, p: acc + p,
        identity=0,
    )


def _merge_directions(fwd: CommonKmers | None, rev: CommonKmers | None) -> CommonKmers:
    """Merge a cell with the mirror of its transpose-mate.

    The count is the larger of the two directions.  When one direction's
    seed set contains the other's, its seed list is kept verbatim (so an
    already-symmetric matrix round-trips bit-exactly); otherwise the union
    is re-sorted by position pair and truncated to two.
    """
    pairs_fwd = list(fwd.seeds) if fwd is not None else []
    pairs_rev = [(b_, a_) for a_, b_ in rev.seeds] if rev is not None else []
    set_fwd, set_rev = set(pairs_fwd), set(pairs_rev)
    if set_rev <= set_fwd:
        seeds = pairs_fwd[:MAX_SEEDS]
    elif set_fwd <= set_rev:
        seeds = pairs_rev[:MAX_SEEDS]
    else:
        seeds = sorted(set_fwd | set_rev)[:MAX_SEEDS]
    count = max(fwd.count if fwd is not None else 0, rev.count if rev is not None else 0)
    return CommonKmers(count, seeds)


def symmetrize_overlap(b: DcscMatrix) -> DcscMatrix:
    """Make an overlap matrix of CommonKmers symmetric.

    Each unordered pair is merged on its upper-triangle orientation via
    :func:`_merge_directions` and the mirrored payload is placed at the
    transposed cell, so cell (i, j) always equals cell (j, i) under
    seed-pair mirroring.  With a symmetric input this is the identity.
    """
    cells: dict[tuple[int, int], CommonKmers] = {(r, c): v for r, c, v in b.cells()}
    t = Triplets(b.nrows, b.ncols)
    for i, j in sorted({(min(i, j), max(i, j)) for i, j in cells}):
        merged = _merge_directions(cells.get((i, j)), cells.get((j, i)))
        t.add(i, j, merged)
        if i != j:
            t.add(j, i, merged.mirrored())
    return DcscMatrix.from_triplets(t)
