import pytest

from psgraph.kmers import encode, kmer_space
from psgraph.pipeline import (
    PipelineConfig,
    build_A,
    build_S,
    compute_B,
    extract_pairs,
    present_kmers,
)
from psgraph.seqstore import SequenceRecord, SequenceStore
from psgraph.spmat import DcscMatrix, Triplets
from psgraph.subkmer import blosum62, build_expense, find_sub_kmers

from conftest import mutate, random_protein
from oracles import NeighborEnumerator, expanded_overlap_pairs, kmer_set, shared_kmer_pairs


def store_of(seqs):
    return SequenceStore.from_records([SequenceRecord(f"s{i}", s) for i, s in enumerate(seqs)])


class TestConfig:
    def test_threshold_defaults_follow_mode(self):
        assert PipelineConfig(subs=0).ck_threshold == 1
        assert PipelineConfig(subs=25).ck_threshold == 3
        assert PipelineConfig(subs=25, ck_threshold=0).ck_threshold == 0

    def test_validation(self):
        with pytest.raises(ValueError):
            PipelineConfig(k=0)
        with pytest.raises(ValueError):
            PipelineConfig(k=14)
        with pytest.raises(ValueError):
            PipelineConfig(align_mode="blast")
        with pytest.raises(ValueError):
            PipelineConfig(ani_min=101)


class TestBuildA:
    def test_single_homopolymer_sequence(self):
        a = build_A(store_of([b"AAAAAA"]), 6)
        assert a.nrows == 1 and a.ncols == 24**6
        assert list(a.cells()) == [(0, 0, 0)]

    def test_short_sequences_leave_empty_rows(self):
        a = build_A(store_of([b"ARN", b"DC"]), 6)
        assert a.nrows == 2
        assert a.nnz == 0

    def test_nnz_is_sum_of_distinct_kmer_counts(self, rng):
        seqs = [random_protein(rng, rng.randint(3, 80)) for _ in range(100)]
        a = build_A(store_of(seqs), 6)
        assert a.nnz == sum(len(kmer_set(s, 6)) for s in seqs)

    def test_column_space_is_24_to_the_k(self):
        for k in (1, 3, 6):
            a = build_A(store_of([b"ARNDCQE"]), k)
            assert a.ncols == 24**k == kmer_space(k)
        assert kmer_space(6) == 191_102_976

    def test_values_are_first_positions(self):
        a = build_A(store_of([b"ARNARN"]), 3)
        cells = {j: v for _i, j, v in a.cells()}
        assert cells[encode(b"ARN")] == 0
        assert cells[encode(b"RNA")] == 1
        assert cells[encode(b"NAR")] == 2


class TestBuildS:
    def test_empty_present_set(self):
        E = build_expense(blosum62())
        s = build_S([], E, 3, 3)
        assert s.nnz == 0
        assert s.nrows == s.ncols == 24**3

    def test_rows_contain_self_and_m_nearest(self):
        E = build_expense(blosum62())
        root = encode(b"AAC")
        s = build_S([root], E, 1, 3)
        cells = sorted((i, j, v) for i, j, v in s.cells())
        want = find_sub_kmers(root, E, 1, 3)[0]
        assert (root, root, 0) in cells
        assert (root, want.kmer, want.dist) in cells
        assert s.nnz == 2

    def test_row_count_matches_present_kmers(self, rng):
        E = build_expense(blosum62())
        seqs = [random_protein(rng, 30) for _ in range(10)]
        a = build_A(store_of(seqs), 4)
        present = present_kmers(a)
        s = build_S(present, E, 5, 4)
        assert s.nnz == 6 * len(present)


class TestComputeB:
    def test_identical_pair_of_length8_shares_3_kmers(self):
        seq = b"ARNDCQEG"
        b = compute_B(build_A(store_of([seq, seq]), 6))
        cell = {(i, j): v for i, j, v in b.cells()}[(0, 1)]
        assert cell.count == 3
        assert cell.seeds is not None and len(cell.seeds) == 2

    def test_exact_mode_equals_identity_substitution(self, rng):
        seqs = [random_protein(rng, rng.randint(8, 30)) for _ in range(12)]
        a = build_A(store_of(seqs), 3)
        exact = compute_B(a)
        ident = Triplets(24**3, 24**3)
        for kid in present_kmers(a):
            ident.add(kid, kid, 0)
        via_s = compute_B(a, DcscMatrix.from_triplets(ident))
        assert exact.structurally_equal(via_s)
        assert [v for *_x, v in exact.cells()] == [v for *_x, v in via_s.cells()]

    def test_substitute_mode_is_symmetric(self, rng):
        E = build_expense(blosum62())
        seqs = [random_protein(rng, 25) for _ in range(8)]
        a = build_A(store_of(seqs), 3)
        s = build_S(present_kmers(a), E, 4, 3)
        b = compute_B(a, s)
        cells = {(i, j): v for i, j, v in b.cells()}
        for (i, j), v in cells.items():
            assert (j, i) in cells
            assert cells[(j, i)].count == v.count
            assert cells[(j, i)].seeds == [(q, p) for p, q in v.seeds]


class TestExtractPairs:
    def make_b(self, counts):
        from psgraph.spmat import CommonKmers

        n = max(max(i, j) for i, j in counts) + 1
        t = Triplets(n, n)
        for (i, j), c in sorted(counts.items(), key=lambda kv: (kv[0][1], kv[0][0])):
            t.add(i, j, CommonKmers(c, [(0, 0)]))
            t.add(j, i, CommonKmers(c, [(0, 0)]))
        return DcscMatrix.from_triplets(t)

    def test_threshold_zero_keeps_all_upper_cells(self):
        b = self.make_b({(0, 1): 1, (1, 2): 2, (0, 3): 5})
        pairs = extract_pairs(b, 0)
        assert [(p.i, p.j) for p in pairs] == [(0, 1), (0, 3), (1, 2)]

    def test_threshold_one_drops_single_sharers(self):
        b = self.make_b({(0, 1): 1, (1, 2): 2})
        pairs = extract_pairs(b, 1)
        assert [(p.i, p.j) for p in pairs] == [(1, 2)]

    def test_monotone_in_threshold(self, rng):
        counts = {}
        for _ in range(30):
            i, j = rng.randrange(20), rng.randrange(20)
            if i != j:
                counts[(min(i, j), max(i, j))] = rng.randint(1, 6)
        b = self.make_b(counts)
        sizes = [len(extract_pairs(b, t)) for t in (0, 1, 3)]
        assert sizes[0] >= sizes[1] >= sizes[2]

    def test_no_self_pairs(self, rng):
        seqs = [random_protein(rng, 20)] * 3
        b = compute_B(build_A(store_of(seqs), 4))
        pairs = extract_pairs(b, 0)
        assert all(p.i < p.j for p in pairs)


class TestPairSetOracles:
    def test_exact_mode_matches_brute_force(self, rng):
        seqs = []
        for f in range(12):
            parent = random_protein(rng, rng.randint(40, 90))
            seqs.append(parent)
            seqs.append(mutate(rng, parent, 0.05))
        seqs += [random_protein(rng, rng.randint(30, 80)) for _ in range(20)]
        b = compute_B(build_A(store_of(seqs), 5))
        got = {(p.i, p.j) for p in extract_pairs(b, 0)}
        assert got == shared_kmer_pairs(seqs, 5)

    def test_substitute_mode_matches_expanded_neighborhoods(self, rng):
        E = build_expense(blosum62())
        m, k = 8, 3
        seqs = [random_protein(rng, rng.randint(10, 30)) for _ in range(25)]
        a = build_A(store_of(seqs), k)
        present = present_kmers(a)
        s = build_S(present, E, m, k)
        b = compute_B(a, s)
        got = {(p.i, p.j) for p in extract_pairs(b, 0)}
        enum = NeighborEnumerator(k, E)
        hoods = {kid: enum.neighborhood(kid, m) for kid in present}
        assert got == expanded_overlap_pairs(seqs, k, hoods)

    def test_substitute_closest_kmer_position_rule(self):
        # both kmers of sequence 0 map to the substitute "SAC"; AAC is
        # closer (dist 3) than CAC (dist 2? no: C->S costs 10).  Build an S
        # row by hand to pin the rule: k_p at dist 2, k_q at dist 4.
        from psgraph.spmat import closest_kmer_semiring, spgemm

        k_p, k_q, k_s = encode(b"AAC"), encode(b"RRR"), encode(b"SAC")
        a = Triplets(1, 24**3)
        a.add(0, k_p, 7)
        a.add(0, k_q, 2)
        s = Triplets(24**3, 24**3)
        s.add(k_p, k_s, 2)
        s.add(k_q, k_s, 4)
        prod = spgemm(
            DcscMatrix.from_triplets(a), DcscMatrix.from_triplets(s), closest_kmer_semiring()
        )
        assert list(prod.cells()) == [(0, k_s, 7)]  # position of the closer k_p
