import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psgraph.kmers import ALPHABET, encode
from psgraph.subkmer import (
    MinMaxHeap,
    ScoringMatrix,
    blosum62,
    build_expense,
    find_sub_kmers,
)

from oracles import NeighborEnumerator


def sym(ch):
    return ALPHABET.index(ch)


class TestScoringMatrix:
    def test_blosum62_anchor_values(self):
        m = blosum62()
        assert m.score(sym(b"A"[0]), sym(b"A"[0])) == 4
        assert m.score(sym(b"C"[0]), sym(b"C"[0])) == 9
        assert m.score(sym(b"W"[0]), sym(b"W"[0])) == 11
        assert m.score(sym(b"A"[0]), sym(b"S"[0])) == 1
        # exact AAC match scores 4+4+9 = 17; SAC vs AAC scores 1+4+9 = 14
        a, c, s = sym(b"A"[0]), sym(b"C"[0]), sym(b"S"[0])
        assert m.score(a, a) * 2 + m.score(c, c) == 17
        assert m.score(s, a) + m.score(a, a) + m.score(c, c) == 14

    def test_asymmetric_matrix_rejected(self):
        scores = [[0] * 24 for _ in range(24)]
        scores[0][1] = 5
        with pytest.raises(ValueError, match="asymmetric"):
            ScoringMatrix(scores)

    def test_round_trip_through_text_format(self):
        m = ScoringMatrix.from_text(
            "\n".join(
                " ".join([""] + [chr(b) for b in ALPHABET])
                for _ in range(1)
            )
            + "\n"
            + "\n".join(
                " ".join([chr(a)] + [str((ai + bi) % 7 - 3 if ai != bi else 5) for bi in range(24)])
                for ai, a in enumerate(ALPHABET)
            )
        )
        # header parse keeps alphabet order mapping
        assert m.score(0, 0) == 5
        assert m.score(2, 5) == m.score(5, 2)


class TestExpenseMatrix:
    def test_blosum62_row_a_prefix(self):
        E = build_expense(blosum62())
        row = E.row(0)
        assert row[0] == (0, 0)  # (0, A) itself
        assert row[1] == (3, sym(b"S"[0]))
        assert row[2] == (4, sym(b"C"[0]))
        assert row[3] == (4, sym(b"G"[0]))

    def test_identity_scoring_gives_unit_expenses(self):
        ident = ScoringMatrix([[1 if i == j else 0 for j in range(24)] for i in range(24)])
        E = build_expense(ident)
        for a in range(24):
            row = E.row(a)
            assert row[0] == (0, a)
            assert all(e == 1 for e, b in row[1:])

    def test_random_symmetric_matrix_rows_match_direct_recomputation(self):
        rng = random.Random(11)
        scores = [[0] * 24 for _ in range(24)]
        for i in range(24):
            for j in range(i, 24):
                scores[i][j] = scores[j][i] = rng.randint(-4, 11)
        E = build_expense(ScoringMatrix(scores))
        for a in range(24):
            direct = sorted(
                [(0, a)] + [(max(1, scores[a][a] - scores[a][b]), b) for b in range(24) if b != a]
            )
            assert E.row(a) == direct

    def test_rows_sorted_with_self_first_and_positive_rest(self):
        E = build_expense(blosum62())
        for a in range(24):
            row = E.row(a)
            assert row[0] == (0, a)
            assert all(row[i] <= row[i + 1] for i in range(23))
            assert all(e >= 1 for e, _ in row[1:])


class TestMinMaxHeap:
    def test_basic_double_ended_ops(self):
        h = MinMaxHeap()
        for v in [5, 1, 9, 3, 7]:
            h.push(v)
        assert h.find_min() == 1 and h.find_max() == 9
        assert h.pop_max() == 9
        assert h.pop_min() == 1
        assert h.find_min() == 3 and h.find_max() == 7

    @given(st.lists(st.integers(-50, 50), min_size=1, max_size=200))
    @settings(max_examples=200)
    def test_matches_sorted_model_under_random_interleaving(self, values):
        h = MinMaxHeap()
        model = []
        rng = random.Random(sum(values))
        for v in values:
            h.push(v)
            model.append(v)
            op = rng.random()
            if model and op < 0.3:
                model.sort()
                assert h.pop_min() == model.pop(0)
            elif model and op < 0.5:
                model.sort()
                assert h.pop_max() == model.pop()
            if model:
                model.sort()
                assert h.find_min() == model[0]
                assert h.find_max() == model[-1]
        model.sort()
        drained = [h.pop_min() for _ in range(len(h))]
        assert drained == model


class TestFindSubKmers:
    def test_known_neighbor_distances_of_aac(self):
        E = build_expense(blosum62())
        # m=300 comfortably covers every candidate within distance 8
        nbrs = find_sub_kmers(encode(b"AAC"), E, 300, 3)
        by_text = {n.text(): n.dist for n in nbrs}
        # single cheapest substitutions of A
        assert by_text[b"SAC"] == 3
        assert by_text[b"ASC"] == 3
        # two-substitution k-mers closer than any third-position change
        for x in b"TCG":
            for y in b"TCG":
                key = bytes([x, y]) + b"C"
                assert by_text[key] == 8
        third = [d for t, d in by_text.items() if t[:2] == b"AA" and t != b"AAC"]
        assert third and all(d >= 9 for d in third)

    def test_ssc_next_after_single_substitutions(self):
        E = build_expense(blosum62())
        nbrs = find_sub_kmers(encode(b"AAC"), E, 45, 3)
        dists = {n.text(): n.dist for n in nbrs}
        assert dists[b"SSC"] == 6  # 17 - 11

    def test_m_zero_and_exhaustion(self):
        E = build_expense(blosum62())
        assert find_sub_kmers(5, E, 0, 2) == []
        with pytest.raises(ValueError):
            find_sub_kmers(5, E, 24**2, 2)
        with pytest.raises(ValueError):
            find_sub_kmers(5, E, -1, 2)

    def test_output_sorted_distinct_and_root_free(self):
        E = build_expense(blosum62())
        rng = random.Random(2)
        for _ in range(20):
            root = rng.randrange(24**3)
            nbrs = find_sub_kmers(root, E, 40, 3)
            keys = [(n.dist, n.kmer) for n in nbrs]
            assert keys == sorted(keys)
            assert len({n.kmer for n in nbrs}) == len(nbrs) == 40
            assert root not in {n.kmer for n in nbrs}
            assert all(n.dist >= 1 for n in nbrs)

    def test_matches_exhaustive_enumeration_k3(self):
        E = build_expense(blosum62())
        enum = NeighborEnumerator(3, E)
        rng = random.Random(31337)
        for _ in range(40):
            root = rng.randrange(24**3)
            for m in (1, 5, 25, 50):
                got = [(n.dist, n.kmer) for n in find_sub_kmers(root, E, m, 3)]
                assert got == enum.nearest(root, m)

    def test_matches_exhaustive_enumeration_k4_m100(self):
        E = build_expense(blosum62())
        enum = NeighborEnumerator(4, E)
        rng = random.Random(404)
        for _ in range(12):
            root = rng.randrange(24**4)
            for m in (1, 100):
                got = [(n.dist, n.kmer) for n in find_sub_kmers(root, E, m, 4)]
                assert got == enum.nearest(root, m)

    def test_matches_enumeration_under_degenerate_scoring(self):
        # identity scoring creates maximal tie groups
        ident = ScoringMatrix([[2 if i == j else 0 for j in range(24)] for i in range(24)])
        E = build_expense(ident)
        enum = NeighborEnumerator(2, E)
        rng = random.Random(77)
        for _ in range(15):
            root = rng.randrange(24**2)
            for m in (1, 24, 199):
                got = [(n.dist, n.kmer) for n in find_sub_kmers(root, E, m, 2)]
                assert got == enum.nearest(root, m)

    def test_k1_exhausts_all_positions(self):
        # children of emitted k=1 neighbors have no free index left: the
        # search still terminates and returns every single substitution
        E = build_expense(blosum62())
        nbrs = find_sub_kmers(encode(b"A"), E, 23, 1)
        assert sorted(n.kmer for n in nbrs) == list(range(1, 24))
        assert all(n.free_mask == 0 for n in nbrs)

    def test_batch_over_distinct_roots(self):
        from psgraph.subkmer import find_sub_kmers_batch

        E = build_expense(blosum62())
        roots = [encode(b"AAC"), encode(b"RCQ"), encode(b"WWW")]
        batch = find_sub_kmers_batch(roots, E, 4, 3)
        for root in roots:
            assert [n.key for n in batch[root]] == [n.key for n in find_sub_kmers(root, E, 4, 3)]

    def test_free_indices_shrink_along_chains(self):
        E = build_expense(blosum62())
        nbrs = find_sub_kmers(encode(b"AAC"), E, 100, 3)
        root_mask = (1 << 3) - 1
        for n in nbrs:
            # a substituted position never reappears as free
            changed = [i for i in range(3) if n.digits[i] != (0, 0, 4)[i]]
            for pos in changed:
                assert not n.free_mask & (1 << pos)
            assert n.free_mask != root_mask
