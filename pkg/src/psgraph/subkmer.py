"""Nearest substitute k-mers under a substitution-score expense metric.

For a scoring matrix C the expense of replacing base a with base b is
``C[a][a] - C[a][b]``: the score lost relative to an exact match.  The
m nearest substitute k-mers of a root are found with a best-first search
over an implicit substitution tree, bounded by a min-max heap of size m
(find-min and find-max in O(1)).  Candidates are ordered by
``(total_expense, kmer_id)`` so results are deterministic.

Expenses of real substitutions are clamped to a minimum of 1.  The raw
formula can go to zero or below for the ambiguity rows of BLOSUM62
(B, Z, X), which would make "distance zero" ambiguous and break the
best-first pruning; clamping keeps self-substitution as the unique
zero-expense entry of every row.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .kmers import ALPHABET, ALPHABET_SIZE, decode_digits, encode_digits, kmer_space

# NCBI-format BLOSUM62 over the ARNDCQEGHILKMFPSTWYVBZX* alphabet.
BLOSUM62_TEXT = """\
   A  R  N  D  C  Q  E  G  H  I  L  K  M  F  P  S  T  W  Y  V  B  Z  X  *
A  4 -1 -2 -2  0 -1 -1  0 -2 -1 -1 -1 -1 -2 -1  1  0 -3 -2  0 -2 -1  0 -4
R -1  5  0 -2 -3  1  0 -2  0 -3 -2  2 -1 -3 -2 -1 -1 -3 -2 -3 -1  0 -1 -4
N -2  0  6  1 -3  0  0  0  1 -3 -3  0 -2 -3 -2  1  0 -4 -2 -3  3  0 -1 -4
D -2 -2  1  6 -3  0  2 -1 -1 -3 -4 -1 -3 -3 -1  0 -1 -4 -3 -3  4  1 -1 -4
C  0 -3 -3 -3  9 -3 -4 -3 -3 -1 -1 -3 -1 -2 -3 -1 -1 -2 -2 -1 -3 -3 -2 -4
Q -1  1  0  0 -3  5  2 -2  0 -3 -2  1  0 -3 -1  0 -1 -2 -1 -2  0  3 -1 -4
E -1  0  0  2 -4  2  5 -2  0 -3 -3  1 -2 -3 -1  0 -1 -3 -2 -2  1  4 -1 -4
G  0 -2  0 -1 -3 -2 -2  6 -2 -4 -4 -2 -3 -3 -2  0 -2 -2 -3 -3 -1 -2 -1 -4
H -2  0  1 -1 -3  0  0 -2  8 -3 -3 -1 -2 -1 -2 -1 -2 -2  2 -3  0  0 -1 -4
I -1 -3 -3 -3 -1 -3 -3 -4 -3  4  2 -3  1  0 -3 -2 -1 -3 -1  3 -3 -3 -1 -4
L -1 -2 -3 -4 -1 -2 -3 -4 -3  2  4 -2  2  0 -3 -2 -1 -2 -1  1 -4 -3 -1 -4
K -1  2  0 -1 -3  1  1 -2 -1 -3 -2  5 -1 -3 -1  0 -1 -3 -2 -2  0  1 -1 -4
M -1 -1 -2 -3 -1  0 -2 -3 -2  1  2 -1  5  0 -2 -1 -1 -1 -1  1 -3 -1 -1 -4
F -2 -3 -3 -3 -2 -3 -3 -3 -1  0  0 -3  0  6 -4 -2 -2  1  3 -1 -3 -3 -1 -4
P -1 -2 -2 -1 -3 -1 -1 -2 -2 -3 -3 -1 -2 -4  7 -1 -1 -4 -3 -2 -2 -1 -2 -4
S  1 -1  1  0 -1  0  0  0 -1 -2 -2  0 -1 -2 -1  4  1 -3 -2 -2  0  0  0 -4
T  0 -1  0 -1 -1 -1 -1 -2 -2 -1 -1 -1 -1 -2 -1  1  5 -2 -2  0 -1 -1  0 -4
W -3 -3 -4 -4 -2 -2 -3 -2 -2 -3 -2 -3 -1  1 -4 -3 -2 11  2 -3 -4 -3 -2 -4
Y -2 -2 -2 -3 -2 -1 -2 -3  2 -1 -1 -2 -1  3 -3 -2 -2  2  7 -1 -3 -2 -1 -4
V  0 -3 -3 -3 -1 -2 -2 -3 -3  3  1 -2  1 -1 -2 -2  0 -3 -1  4 -3 -2 -1 -4
B -2 -1  3  4 -3  0  1 -1  0 -3 -4  0 -3 -3 -2  0 -1 -4 -3 -3  4  1 -1 -4
Z -1  0  0  1 -3  3  4 -2  0 -3 -3  1 -1 -3 -1  0 -1 -3 -2 -2  1  4 -1 -4
X  0 -1 -1 -1 -2 -1 -1 -1 -1 -1 -1 -1 -1 -1 -2  0  0 -2 -1 -1 -1 -1 -1 -4
* -4 -4 -4 -4 -4 -4 -4 -4 -4 -4 -4 -4 -4 -4 -4 -4 -4 -4 -4 -4 -4 -4 -4  1
"""


class ScoringMatrix:
    """Symmetric 24x24 substitution score table in alphabet order."""

    def __init__(self, scores: list[list[int]], name: str = "custom"):
        if len(scores) != ALPHABET_SIZE or any(len(r) != ALPHABET_SIZE for r in scores):
            raise ValueError("scoring matrix must be 24x24")
        for a in range(ALPHABET_SIZE):
            for b in range(a + 1, ALPHABET_SIZE):
                if scores[a][b] != scores[b][a]:
                    sa, sb = chr(ALPHABET[a]), chr(ALPHABET[b])
                    raise ValueError(f"scoring matrix asymmetric at ({sa},{sb})")
        self.scores = scores
        self.name = name
        self._byte_table: list[list[int]] | None = None

    def score(self, a: int, b: int) -> int:
        return self.scores[a][b]

    def byte_table(self) -> list[list[int]]:
        """256x256 score lookup indexed by residue byte values.

        Entries for bytes outside the alphabet are 0; callers must
        validate sequences before using the table.
        """
        if self._byte_table is None:
            table = [[0] * 256 for _ in range(256)]
            for ai, ab in enumerate(ALPHABET):
                row = table[ab]
                for bi, bb in enumerate(ALPHABET):
                    row[bb] = self.scores[ai][bi]
            self._byte_table = table
        return self._byte_table

    @classmethod
    def from_text(cls, text: str, name: str = "custom") -> "ScoringMatrix":
        """Parse an NCBI-style square matrix: header row of symbols, one
        labelled row per symbol, ``#`` comment lines ignored."""
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not lines:
            raise ValueError("empty scoring matrix text")
        header = lines[0].split()
        col_of: dict[str, int] = {}
        for j, sym in enumerate(header):
            if len(sym) != 1:
                raise ValueError(f"bad matrix header symbol {sym!r}")
            col_of[sym] = j
        missing = [chr(b) for b in ALPHABET if chr(b) not in col_of]
        if missing:
            raise ValueError(f"matrix header missing symbols: {''.join(missing)}")
        rows: dict[str, list[int]] = {}
        for ln in lines[1:]:
            parts = ln.split()
            sym, vals = parts[0], parts[1:]
            if len(sym) != 1:
                raise ValueError(f"bad matrix row label {sym!r}")
            if len(vals) != len(header):
                raise ValueError(f"row {sym!r} has {len(vals)} values, expected {len(header)}")
            rows[sym] = [int(v) for v in vals]
        missing = [chr(b) for b in ALPHABET if chr(b) not in rows]
        if missing:
            raise ValueError(f"matrix missing rows: {''.join(missing)}")
        scores = [
            [rows[chr(a)][col_of[chr(b)]] for b in ALPHABET]
            for a in ALPHABET
        ]
        return cls(scores, name=name)

    @classmethod
    def from_file(cls, path) -> "ScoringMatrix":
        with open(path, "r", encoding="ascii") as fh:
            return cls.from_text(fh.read(), name=str(path))


_BLOSUM62: ScoringMatrix | None = None


def blosum62() -> ScoringMatrix:
    """The embedded BLOSUM62 matrix (parsed once)."""
    global _BLOSUM62
    if _BLOSUM62 is None:
        _BLOSUM62 = ScoringMatrix.from_text(BLOSUM62_TEXT, name="blosum62")
    return _BLOSUM62


class ExpenseMatrix:
    """Per-base substitution expenses, each row sorted ascending.

    Row a holds 24 ``(expense, base)`` entries: ``(0, a)`` first, then every
    substitution at ``max(1, C[a][a] - C[a][b])``, ties broken by the
    alphabet index of the substituting base.
    """

    def __init__(self, scoring: ScoringMatrix):
        self.scoring = scoring
        self.rows: list[list[tuple[int, int]]] = []
        for a in range(ALPHABET_SIZE):
            diag = scoring.score(a, a)
            row = [(0, a)]
            for b in range(ALPHABET_SIZE):
                if b != a:
                    row.append((max(1, diag - scoring.score(a, b)), b))
            row.sort()
            self.rows.append(row)

    def row(self, base: int) -> list[tuple[int, int]]:
        return self.rows[base]

    def expense(self, a: int, b: int) -> int:
        """Expense of substituting base a with base b (0 when b == a)."""
        if a == b:
            return 0
        return max(1, self.scoring.score(a, a) - self.scoring.score(a, b))


def build_expense(scoring: ScoringMatrix) -> ExpenseMatrix:
    """Sorted expense matrix for a symmetric scoring matrix."""
    return ExpenseMatrix(scoring)


@dataclass(frozen=True)
class SubKmer:
    """A substitute k-mer with its total expense relative to the root."""

    kmer: int
    dist: int
    digits: tuple[int, ...] = field(repr=False)
    free_mask: int = field(repr=False)

    @property
    def key(self) -> tuple[int, int]:
        return (self.dist, self.kmer)

    def text(self) -> bytes:
        return bytes(ALPHABET[d] for d in self.digits)


class MinMaxHeap:
    """Double-ended priority queue (Atkinson-style min-max heap).

    Even tree levels are min-ordered, odd levels max-ordered, so the
    minimum sits at the root and the maximum at one of its children.
    find_min/find_max are O(1); push/pop_min/pop_max are O(log n).
    """

    def __init__(self):
        self._a: list = []

    def __len__(self) -> int:
        return len(self._a)

    @staticmethod
    def _is_min_level(i: int) -> bool:
        return (i + 1).bit_length() % 2 == 1

    def find_min(self):
        if not self._a:
            raise IndexError("empty heap")
        return self._a[0]

    def find_max(self):
        a = self._a
        if not a:
            raise IndexError("empty heap")
        if len(a) == 1:
            return a[0]
        if len(a) == 2:
            return a[1]
        return max(a[1], a[2])

    def push(self, item) -> None:
        a = self._a
        a.append(item)
        i = len(a) - 1
        if i == 0:
            return
        parent = (i - 1) // 2
        if self._is_min_level(i):
            if a[i] > a[parent]:
                a[i], a[parent] = a[parent], a[i]
                self._bubble_up(parent, min_level=False)
            else:
                self._bubble_up(i, min_level=True)
        else:
            if a[i] < a[parent]:
                a[i], a[parent] = a[parent], a[i]
                self._bubble_up(parent, min_level=True)
            else:
                self._bubble_up(i, min_level=False)

    def _bubble_up(self, i: int, min_level: bool) -> None:
        a = self._a
        while i >= 3:
            gp = ((i - 1) // 2 - 1) // 2
            if min_level:
                if a[i] < a[gp]:
                    a[i], a[gp] = a[gp], a[i]
                    i = gp
                else:
                    break
            else:
                if a[i] > a[gp]:
                    a[i], a[gp] = a[gp], a[i]
                    i = gp
                else:
                    break

    def pop_min(self):
        return self._pop_at(0)

    def pop_max(self):
        a = self._a
        if not a:
            raise IndexError("empty heap")
        if len(a) == 1:
            return a.pop()
        if len(a) == 2:
            return a.pop()
        i = 1 if a[1] > a[2] else 2
        return self._pop_at(i)

    def _pop_at(self, i: int):
        a = self._a
        if not a:
            raise IndexError("empty heap")
        item = a[i]
        last = a.pop()
        if i < len(a):
            a[i] = last
            self._trickle_down(i)
        return item

    def _trickle_down(self, i: int) -> None:
        if self._is_min_level(i):
            self._trickle(i, min_level=True)
        else:
            self._trickle(i, min_level=False)

    def _descendants(self, i: int):
        a = self._a
        n = len(a)
        out = []
        for c in (2 * i + 1, 2 * i + 2):
            if c < n:
                out.append((c, False))
                for g in (2 * c + 1, 2 * c + 2):
                    if g < n:
                        out.append((g, True))
        return out

    def _trickle(self, i: int, min_level: bool) -> None:
        a = self._a
        while True:
            desc = self._descendants(i)
            if not desc:
                return
            if min_level:
                m, is_gc = min(desc, key=lambda t: (a[t[0]], t[0]))
                if a[m] >= a[i]:
                    return
            else:
                m, is_gc = max(desc, key=lambda t: (a[t[0]], -t[0]))
                if a[m] <= a[i]:
                    return
            a[i], a[m] = a[m], a[i]
            if not is_gc:
                return
            parent = (m - 1) // 2
            if min_level:
                if a[m] > a[parent]:
                    a[m], a[parent] = a[parent], a[m]
            else:
                if a[m] < a[parent]:
                    a[m], a[parent] = a[parent], a[m]
            i = m


class _Search:
    """State shared by explore/make_new_sub_k during one root's search."""

    def __init__(self, root_digits: tuple[int, ...], expenses: ExpenseMatrix, m: int):
        self.root = root_digits
        self.k = len(root_digits)
        self.E = expenses
        self.m = m
        self.mmheap = MinMaxHeap()  # entries: (key, SubKmer)
        self.seen: set[int] = {encode_digits(root_digits)}

    def full(self) -> bool:
        return len(self.mmheap) >= self.m

    def max_entry(self):
        return self.mmheap.find_max()


def explore(p: SubKmer, search: _Search) -> None:
    """Push p's single-substitution children that can still rank among the
    m nearest.

    One lane per free index of p iterates that position's substitutions in
    increasing expense; a lane stops once the heap is full and its next
    candidate is farther than the current heap maximum.
    """
    E, mm = search.E, search.mmheap
    lanes: list[tuple[int, int, int]] = []  # (candidate dist, free index, rank)
    for fid in range(search.k):
        if not p.free_mask & (1 << fid):
            continue
        row = E.row(p.digits[fid])
        heapq.heappush(lanes, (p.dist + row[1][0], fid, 1))
    while lanes:
        msb = lanes[0][0]
        if search.full() and msb > search.max_entry()[0][0]:
            break
        make_new_sub_k(p, lanes, search)


def make_new_sub_k(p: SubKmer, lanes: list, search: _Search) -> None:
    """Materialize the cheapest pending substitution of p and re-queue the
    next rank of the same lane.

    The child replaces exactly one base and loses that free index.  With a
    full heap it is admitted only if it precedes the current maximum under
    (dist, kmer_id), evicting the maximum.
    """
    msb, fid, sid = heapq.heappop(lanes)
    row = search.E.row(p.digits[fid])
    _, new_base = row[sid]
    digits = list(p.digits)
    digits[fid] = new_base
    digits = tuple(digits)
    kid = encode_digits(digits)
    if kid not in search.seen:
        search.seen.add(kid)
        child = SubKmer(kid, msb, digits, p.free_mask & ~(1 << fid))
        mm = search.mmheap
        if not search.full():
            mm.push((child.key, child))
        elif child.key < search.max_entry()[0]:
            mm.pop_max()
            mm.push((child.key, child))
    if sid + 1 < len(row):
        heapq.heappush(lanes, (p.dist + row[sid + 1][0], fid, sid + 1))


def find_sub_kmers(root: int, expenses: ExpenseMatrix, m: int, k: int) -> list[SubKmer]:
    """The m nearest substitute k-mers of ``root`` (root itself excluded),
    sorted ascending by (dist, kmer_id).

    m == 0 returns an empty list; m >= 24**k exhausts the neighborhood and
    raises ValueError.
    """
    if m < 0:
        raise ValueError("m must be >= 0")
    if m == 0:
        return []
    if m >= kmer_space(k):
        raise ValueError(f"m={m} exhausts the 24^{k} k-mer space")
    digits = decode_digits(root, k)
    search = _Search(digits, expenses, m)
    start = SubKmer(root, 0, digits, (1 << k) - 1)
    explore(start, search)
    out: list[SubKmer] = []
    while len(out) < m:
        _, mink = search.mmheap.find_min()
        out.append(mink)
        explore(mink, search)
        search.mmheap.pop_min()
    out.sort(key=lambda s: s.key)
    return out


def find_sub_kmers_batch(roots, expenses: ExpenseMatrix, m: int, k: int) -> dict[int, list[SubKmer]]:
    """Neighborhoods for distinct roots; safe to fan out since each root's
    search is independent and the expense matrix is immutable."""
    return {r: find_sub_kmers(r, expenses, m, k) for r in roots}
