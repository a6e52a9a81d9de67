import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wsbmpl.errors import InvalidInputError
from wsbmpl.metrics import (hungarian_match, misclassification_loss, mismatch_proportion,
                            overlap_table, relabel_to_reference)
from wsbmpl.model import Labeling


def brute_assignment(C):
    K = C.shape[0]
    best = min(itertools.permutations(range(K)), key=lambda p: (sum(C[i, p[i]] for i in range(K)), p))
    return list(best), sum(C[i, best[i]] for i in range(K))


def brute_loss(chat, c, K):
    n = len(c)
    return min(np.mean(chat != np.asarray(p)[c]) for p in itertools.permutations(range(K))) if n else 0.0


class TestHungarian:
    def test_two_by_two(self):
        perm, cost = hungarian_match(np.array([[0, 1], [1, 0]]))
        assert perm.tolist() == [0, 1] and cost == 0

    def test_identity(self):
        C = np.full((4, 4), 100.0)
        np.fill_diagonal(C, 0.0)
        assert hungarian_match(C)[0].tolist() == [0, 1, 2, 3]

    def test_three_by_three(self):
        perm, cost = hungarian_match(np.array([[4, 1, 3], [2, 0, 5], [3, 2, 2]]))
        assert cost == 5 and perm.tolist() == [1, 0, 2]

    def test_non_square(self):
        with pytest.raises(InvalidInputError):
            hungarian_match(np.zeros((2, 3)))

    def test_lexicographic_ties(self):
        perm, cost = hungarian_match(np.zeros((3, 3)))
        assert perm.tolist() == [0, 1, 2] and cost == 0

    @settings(max_examples=200, deadline=None)
    @given(K=st.integers(1, 5), seed=st.integers(0, 2**31))
    def test_matches_brute_force(self, K, seed):
        C = np.random.default_rng(seed).integers(-5, 6, (K, K))
        perm, cost = hungarian_match(C)
        bperm, bcost = brute_assignment(C)
        assert cost == bcost
        assert perm.tolist() == bperm

    def test_float_costs(self, rng):
        for _ in range(100):
            C = rng.normal(size=(4, 4))
            assert hungarian_match(C)[1] == pytest.approx(brute_assignment(C)[1], abs=1e-12)


class TestLoss:
    def test_identical(self):
        c = Labeling(np.array([1, 2, 3, 1]), 3)
        assert misclassification_loss(c, c) == 0.0

    def test_relabeled(self):
        c = Labeling(np.array([1, 2, 3, 1, 2]), 3)
        p = np.array([3, 1, 2])
        assert misclassification_loss(Labeling(p[c.index], 3), c) == 0.0

    def test_hand_example(self):
        c = Labeling(np.array([1, 1, 2, 2]), 2)
        chat = Labeling(np.array([1, 2, 1, 2]), 2)
        assert misclassification_loss(chat, c) == 0.5

    def test_length_mismatch(self):
        with pytest.raises(InvalidInputError):
            misclassification_loss(np.array([1, 2]), np.array([1, 2, 1]))

    def test_pads_unequal_k(self):
        c = Labeling(np.array([1, 1, 2, 2, 3, 3]), 3)
        chat = Labeling(np.array([1, 1, 2, 2, 2, 2]), 2)
        assert misclassification_loss(chat, c) == pytest.approx(2 / 6)

    @pytest.mark.parametrize("K", [2, 3, 4, 5])
    def test_constant_predictor(self, K):
        c = Labeling(np.repeat(np.arange(1, K + 1), 6), K)
        const = Labeling(np.ones(6 * K, dtype=int), K)
        # exactly (n - n/K) mismatches out of n
        assert misclassification_loss(const, c) == (6 * K - 6) / (6 * K)

    @settings(max_examples=100, deadline=None)
    @given(K=st.integers(1, 4), n=st.integers(4, 30), seed=st.integers(0, 2**31))
    def test_matches_brute_force_and_is_invariant(self, K, n, seed):
        rng = np.random.default_rng(seed)
        if n < K:
            return
        c = Labeling(rng.integers(1, K + 1, n), K)
        chat = Labeling(rng.integers(1, K + 1, n), K)
        loss = misclassification_loss(chat, c)
        assert loss == brute_loss(chat.index, c.index, K)
        p = rng.permutation(K)
        assert misclassification_loss(Labeling.from_index(p[chat.index], K), c) == loss
        assert misclassification_loss(chat, Labeling.from_index(p[c.index], K)) == loss
        assert mismatch_proportion(chat, c) == mismatch_proportion(c, chat)


class TestOverlap:
    def test_self(self):
        c = Labeling(np.array([1, 1, 2, 3, 3, 3]), 3)
        rows = overlap_table(c, c)
        assert [(r.est_community, r.best_ref_communities, r.overlap) for r in rows] == [
            (1, (1,), 1.0), (2, (2,), 1.0), (3, (3,), 1.0)]

    def test_contained_community(self):
        ref = Labeling(np.array([1, 1, 1, 2, 2, 2]), 2)
        est = Labeling(np.array([1, 1, 2, 2, 2, 2]), 2)
        assert overlap_table(est, ref)[0].overlap == 1.0

    def test_split_lists_ties(self):
        ref = Labeling(np.array([1] * 4 + [2] * 4 + [3] * 2 + [3] * 2), 3)
        est = Labeling(np.array([1] * 10 + [2] * 2), 2)
        row = overlap_table(est, ref)[0]
        assert row.best_ref_communities == (1, 2) and row.overlap == pytest.approx(0.4)

    def test_empty_community(self):
        ref = Labeling(np.array([1, 2, 1]), 2)
        est = Labeling(np.array([1, 1, 1]), 3)
        rows = overlap_table(est, ref)
        assert rows[1].overlap is None and not rows[1].defined

    def test_relabel_to_reference(self):
        ref = Labeling(np.array([1, 1, 2, 2, 3, 3]), 3)
        est = Labeling(np.array([3, 3, 1, 1, 2, 2]), 3)
        assert relabel_to_reference(est, ref) == ref
