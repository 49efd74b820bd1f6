import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psgraph.seqstore import SequenceRecord, SequenceStore
from psgraph.pipeline import build_A
from psgraph.spmat import (
    CommonKmers,
    DcscMatrix,
    Triplets,
    arithmetic_semiring,
    boolean_semiring,
    exact_match_semiring,
    closest_kmer_semiring,
    spgemm,
    symmetrize_overlap,
    transpose,
)

from oracles import dense_product, smallest_shared_seeds


def random_triplets(rng, nrows, ncols, nnz):
    cells = rng.sample([(i, j) for i in range(nrows) for j in range(ncols)], nnz)
    t = Triplets(nrows, ncols)
    for i, j in sorted(cells):
        t.add(i, j, rng.randint(1, 99))
    return t


class TestDcsc:
    def test_empty_matrix(self):
        m = DcscMatrix.empty(5, 7)
        assert m.nnz == 0 and m.nzc == 0
        assert transpose(m).nnz == 0

    def test_single_nonzero_transpose(self):
        t = Triplets(3, 6)
        t.add(2, 5, 42)
        m = DcscMatrix.from_triplets(t)
        mt = transpose(m)
        assert list(mt.cells()) == [(5, 2, 42)]

    def test_round_trip_preserves_nonzeros(self, rng):
        t = random_triplets(rng, 10, 20, 55)
        m = DcscMatrix.from_triplets(t)
        back = m.to_triplets()
        assert sorted(zip(t.rows, t.cols, t.values)) == sorted(zip(back.rows, back.cols, back.values))

    def test_double_transpose_is_identity_hypersparse(self, rng):
        # 100 x 10**6: storage must not notice the huge column count
        t = Triplets(100, 10**6)
        for _ in range(500):
            t.add(rng.randrange(100), rng.randrange(10**6), rng.randint(1, 9))
        m = DcscMatrix.from_triplets(t, combine=lambda a, b: a)
        mtt = transpose(transpose(m))
        assert m.equal(mtt)

    def test_duplicates_require_explicit_combine(self):
        t = Triplets(2, 2)
        t.add(0, 0, 1)
        t.add(0, 0, 2)
        with pytest.raises(ValueError, match="duplicate"):
            DcscMatrix.from_triplets(t)
        m = DcscMatrix.from_triplets(t, combine=lambda a, b: a + b)
        assert list(m.cells()) == [(0, 0, 3)]

    def test_column_rows_strictly_ascending(self, rng):
        t = random_triplets(rng, 30, 8, 60)
        m = DcscMatrix.from_triplets(t)
        for _c, rows, _vals in m.columns():
            assert all(rows[i] < rows[i + 1] for i in range(len(rows) - 1))
        assert list(m.jc) == sorted(set(t.cols))

    def test_storage_counts_independent_of_ncols(self, rng):
        cells = [(rng.randrange(50), rng.randrange(1000), rng.randint(1, 9)) for _ in range(300)]
        cells = {(i, j): v for i, j, v in cells}
        wide = Triplets(50, 24**6)
        tight = Triplets(50, 1000)
        for (i, j), v in sorted(cells.items()):
            wide.add(i, j, v)
            tight.add(i, j, v)
        mw = DcscMatrix.from_triplets(wide)
        mt = DcscMatrix.from_triplets(tight)
        assert mw.storage_counts() == mt.storage_counts()

    def test_dump_lines_shape(self):
        t = Triplets(2, 3)
        t.add(0, 1, 7)
        m = DcscMatrix.from_triplets(t)
        lines = m.dump_lines()
        assert lines[0].startswith("%")
        assert lines[1] == "0 1 7"


class TestSpgemm:
    def test_dimension_mismatch(self):
        a = DcscMatrix.empty(3, 4)
        b = DcscMatrix.empty(5, 3)
        with pytest.raises(ValueError, match="dimension"):
            spgemm(a, b, boolean_semiring())

    def test_boolean_matches_dense_reference(self, rng):
        for _ in range(10):
            n, k, m = rng.randint(1, 20), rng.randint(1, 20), rng.randint(1, 20)
            ta, tb = Triplets(n, k), Triplets(k, m)
            dense_a = [[None] * k for _ in range(n)]
            dense_b = [[None] * m for _ in range(k)]
            for i in range(n):
                for j in range(k):
                    if rng.random() < 0.2:
                        ta.add(i, j, True)
                        dense_a[i][j] = True
            for i in range(k):
                for j in range(m):
                    if rng.random() < 0.2:
                        tb.add(i, j, True)
                        dense_b[i][j] = True
            sr = boolean_semiring()
            c = spgemm(DcscMatrix.from_triplets(ta), DcscMatrix.from_triplets(tb), sr)
            want, hit = dense_product(dense_a, dense_b, sr.multiply, sr.add, sr.identity)
            got = c.to_dense_bool()
            for i in range(n):
                for j in range(m):
                    assert got[i][j] == (hit[i][j] and want[i][j])

    def test_identity_product_preserves_structure(self, rng):
        t = random_triplets(rng, 12, 12, 40)
        a = DcscMatrix.from_triplets(t)
        ident = Triplets(12, 12)
        for i in range(12):
            ident.add(i, i, 1)
        c = spgemm(a, DcscMatrix.from_triplets(ident), arithmetic_semiring())
        assert a.equal(c)

    def test_identity_accumulator_cells_dropped(self):
        # +1 and -1 products cancel to the additive identity 0
        ta, tb = Triplets(1, 2), Triplets(2, 1)
        ta.add(0, 0, 1)
        ta.add(0, 1, -1)
        tb.add(0, 0, 1)
        tb.add(1, 0, 1)
        c = spgemm(DcscMatrix.from_triplets(ta), DcscMatrix.from_triplets(tb), arithmetic_semiring())
        assert c.nnz == 0


def store_of(seqs: list[bytes]) -> SequenceStore:
    return SequenceStore.from_records([SequenceRecord(f"s{i}", s) for i, s in enumerate(seqs)])


class TestOverlapSemirings:
    def test_fig_style_pair_counts_and_seed_positions(self):
        # the two sequences share exactly AVG (ids order AVG < DMI) and DMI
        seqs = [b"AVGWWDMI", b"YAVGYDMIY"]
        a = build_A(store_of(seqs), 3)
        b = spgemm(a, transpose(a), exact_match_semiring())
        cell = {(i, j): v for i, j, v in b.cells()}[(0, 1)]
        assert cell.count == 2
        assert cell.seeds == [(0, 1), (5, 5)]
        mirror = {(i, j): v for i, j, v in b.cells()}[(1, 0)]
        assert mirror.count == 2
        assert mirror.seeds == [(1, 0), (5, 5)]

    def test_single_shared_kmer(self):
        seqs = [b"AAAWWW", b"HHHAAA"]
        a = build_A(store_of(seqs), 3)
        b = spgemm(a, transpose(a), exact_match_semiring())
        cell = {(i, j): v for i, j, v in b.cells()}[(0, 1)]
        assert cell.count == 1
        assert cell.seeds == [(0, 3)]

    def test_many_shared_kmers_keep_two_smallest_ids(self, rng):
        for _ in range(20):
            length = rng.randint(20, 60)
            base = bytes(rng.choice(b"ARNDCQEGHILKMFPSTWYV") for _ in range(length))
            other = base[rng.randint(0, 5) :] + bytes(
                rng.choice(b"ARNDCQEGHILKMFPSTWYV") for _ in range(rng.randint(0, 10))
            )
            seqs = [base, other]
            a = build_A(store_of(seqs), 4)
            b = spgemm(a, transpose(a), exact_match_semiring())
            cells = {(i, j): v for i, j, v in b.cells()}
            if (0, 1) not in cells:
                continue
            cell = cells[(0, 1)]
            want_seeds, want_count = smallest_shared_seeds(seqs[0], seqs[1], 4)
            assert cell.count == want_count
            assert cell.seeds == want_seeds

    def test_b_symmetry_under_mirroring(self, rng):
        seqs = [bytes(rng.choice(b"ARND") for _ in range(rng.randint(8, 14))) for _ in range(6)]
        a = build_A(store_of(seqs), 2)
        b = spgemm(a, transpose(a), exact_match_semiring())
        cells = {(i, j): v for i, j, v in b.cells()}
        for (i, j), v in cells.items():
            m = cells[(j, i)]
            assert m.count == v.count
            assert m.seeds == [(q, p) for p, q in v.seeds]

    def test_closest_kmer_add_prefers_smaller_distance_then_id(self):
        sr = closest_kmer_semiring()
        acc = sr.add(sr.identity, sr.multiply(10, 4, 0, 0, 100))
        acc = sr.add(acc, sr.multiply(20, 2, 0, 0, 200))  # closer wins
        assert sr.finalize(acc) == 20
        acc = sr.add(acc, sr.multiply(30, 2, 0, 0, 150))  # tie: smaller kmer id wins
        assert sr.finalize(acc) == 30
        acc = sr.add(acc, sr.multiply(40, 2, 0, 0, 400))  # tie with larger id loses
        assert sr.finalize(acc) == 30


class TestSymmetrize:
    def test_symmetric_input_is_identity(self):
        seqs = [b"AVGWWDMI", b"YAVGYDMIY", b"AVGAVG"]
        a = build_A(store_of(seqs), 3)
        b = spgemm(a, transpose(a), exact_match_semiring())
        s = symmetrize_overlap(b)
        assert b.structurally_equal(s)
        assert [v for _, _, v in b.cells()] == [v for _, _, v in s.cells()]

    def test_one_sided_cell_gets_mirrored(self):
        t = Triplets(3, 3)
        t.add(0, 2, CommonKmers(3, [(4, 7)]))
        m = symmetrize_overlap(DcscMatrix.from_triplets(t))
        cells = {(i, j): v for i, j, v in m.cells()}
        assert cells[(0, 2)].count == 3 and cells[(0, 2)].seeds == [(4, 7)]
        assert cells[(2, 0)].count == 3 and cells[(2, 0)].seeds == [(7, 4)]

    def test_conflicting_directions_merge_deterministically(self):
        t = Triplets(2, 2)
        t.add(0, 1, CommonKmers(2, [(5, 9), (1, 3)]))
        t.add(1, 0, CommonKmers(3, [(2, 8), (9, 5)]))
        m = symmetrize_overlap(DcscMatrix.from_triplets(t))
        cells = {(i, j): v for i, j, v in m.cells()}
        up, down = cells[(0, 1)], cells[(1, 0)]
        assert up.count == down.count == 3
        assert up.seeds == sorted({(5, 9), (1, 3), (8, 2), (5, 9)})[:2]
        assert down.seeds == [(b, a) for a, b in up.seeds]


@given(
    st.lists(
        st.tuples(st.integers(0, 9), st.integers(0, 9), st.integers(1, 5)),
        min_size=0,
        max_size=40,
    )
)
@settings(max_examples=100)
def test_dcsc_round_trip_property(cells):
    dedup = {}
    for i, j, v in cells:
        dedup[(i, j)] = v
    t = Triplets(10, 10)
    for (i, j), v in sorted(dedup.items()):
        t.add(i, j, v)
    m = DcscMatrix.from_triplets(t)
    assert m.nnz == len(dedup)
    back = {(i, j): v for i, j, v in m.cells()}
    assert back == dedup
