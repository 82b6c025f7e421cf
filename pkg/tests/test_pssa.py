"""State ranking, occupancy matrices, key-state training and attribution."""

import numpy as np
import pytest

from gaitpass.pssa import (
    ProportionMatrix,
    SystemStateTable,
    build_proportion_matrix,
    build_state_table,
    classification_accuracy,
    classify_matrix,
    classify_segment,
    cluster_sigma,
    coverage_curve,
    model_from_text,
    model_to_text,
    segment_proportions,
    select_pss,
    sigma_to_tsv,
    split_alternating,
    state_label,
    train_key_pss,
)
from gaitpass.symbolic import StateVectorSequence
from oracles import segment_proportions_literal


def svs(rows):
    return StateVectorSequence(states=np.array(rows, dtype=np.uint8))


def random_svs(rng, n, d=3):
    return svs(rng.integers(1, 4, size=(n, d)))


def test_state_label():
    assert state_label((1, 2, 1)) == "121"
    assert state_label(np.array([3, 3], dtype=np.uint8)) == "33"


class TestStateTable:
    def test_ranking_by_count_then_lexicographic(self):
        # counts: (1,1) x3, (2,2) x3, (3,1) x1 -> tie broken lexicographically
        seq = svs([[1, 1], [2, 2], [1, 1], [2, 2], [3, 1], [1, 1], [2, 2]])
        table = build_state_table([seq])
        assert table.pool_size == 7
        assert [state_label(s) for s in table.states] == ["11", "22", "31"]
        assert table.frequencies.tolist() == [3, 3, 1]

    def test_pools_multiple_sequences(self):
        a = svs([[1, 1]] * 4)
        b = svs([[2, 2]] * 5)
        table = build_state_table([a, b])
        assert [state_label(s) for s in table.states] == ["22", "11"]
        assert table.pool_size == 9

    def test_errors(self):
        with pytest.raises(ValueError):
            build_state_table([])
        with pytest.raises(ValueError, match="dimension mismatch"):
            build_state_table([svs([[1, 1]]), svs([[1, 1, 1]])])

    def test_table_validation(self):
        with pytest.raises(ValueError, match="nonincreasing"):
            SystemStateTable(
                states=np.array([[1], [2]], dtype=np.uint8),
                frequencies=np.array([1, 5]),
                pool_size=6,
            )
        with pytest.raises(ValueError, match="pool size"):
            SystemStateTable(
                states=np.array([[1]], dtype=np.uint8),
                frequencies=np.array([3]),
                pool_size=4,
            )


class TestCoverageAndSelection:
    def table(self):
        seq = svs([[1, 1]] * 5 + [[2, 2]] * 3 + [[3, 3]] * 2)
        return build_state_table([seq])

    def test_pool_curve_ends_at_one(self):
        curve = coverage_curve(self.table())
        assert np.allclose(curve, [0.5, 0.8, 1.0])

    def test_distinct_denominator(self):
        curve = coverage_curve(self.table(), denominator="distinct")
        assert np.allclose(curve, [5 / 3, 8 / 3, 10 / 3])
        with pytest.raises(ValueError):
            coverage_curve(self.table(), denominator="?")

    def test_select_by_count(self):
        pss = select_pss(self.table(), n_states=2)
        assert [state_label(s) for s in pss] == ["11", "22"]
        # capped at the number of distinct states
        assert select_pss(self.table(), n_states=99).shape == (3, 2)

    def test_select_by_coverage(self):
        table = self.table()
        assert select_pss(table, coverage=0.5).shape[0] == 1
        assert select_pss(table, coverage=0.51).shape[0] == 2
        assert select_pss(table, coverage=0.8).shape[0] == 2
        assert select_pss(table, coverage=1.0).shape[0] == 3

    def test_select_argument_errors(self):
        table = self.table()
        with pytest.raises(ValueError):
            select_pss(table)
        with pytest.raises(ValueError):
            select_pss(table, n_states=2, coverage=0.5)
        with pytest.raises(ValueError):
            select_pss(table, coverage=0.0)
        with pytest.raises(ValueError):
            select_pss(table, n_states=0)


class TestSegmentProportions:
    def test_matches_literal_counting(self):
        rng = np.random.default_rng(40)
        seq = random_svs(rng, 120)
        table = build_state_table([seq])
        pss = select_pss(table, n_states=6)
        got = segment_proportions(seq, pss, 7)
        want = segment_proportions_literal(seq.states, pss, 7)
        assert np.allclose(got, np.array(want))
        assert got.shape == (17, 6)  # trailing 1-sample remainder dropped

    def test_unlisted_states_leave_mass_uncounted(self):
        seq = svs([[1, 1], [2, 2], [3, 3], [1, 1]])
        pss = np.array([[1, 1]], dtype=np.uint8)
        rows = segment_proportions(seq, pss, 4)
        assert rows.tolist() == [[0.5]]

    def test_errors(self):
        seq = svs([[1, 1]] * 5)
        pss = np.array([[1, 1]], dtype=np.uint8)
        with pytest.raises(ValueError, match="shorter"):
            segment_proportions(seq, pss, 6)
        with pytest.raises(ValueError):
            segment_proportions(seq, pss, 0)
        with pytest.raises(ValueError, match="matching"):
            segment_proportions(seq, np.array([[1, 1, 1]], dtype=np.uint8), 2)


def two_subject_sigma():
    pss = np.array([[1, 1], [3, 3]], dtype=np.uint8)
    return ProportionMatrix(
        proportions=np.array(
            [[0.8, 0.1], [0.7, 0.2], [0.1, 0.9], [0.2, 0.6]]
        ),
        subjects=("A", "A", "B", "B"),
        segment_indices=(0, 1, 0, 1),
        pss=pss,
        segment_length=10,
    )


class TestProportionMatrix:
    def test_build_from_dict(self):
        rng = np.random.default_rng(41)
        seqs = {"a": random_svs(rng, 30), "b": [random_svs(rng, 20), random_svs(rng, 25)]}
        pss = select_pss(build_state_table([seqs["a"]]), n_states=4)
        sigma = build_proportion_matrix(seqs, pss, 10)
        assert sigma.n_rows == 3 + 2 + 2
        assert sigma.subjects[:3] == ("a", "a", "a")
        # list entries keep one running segment counter per subject
        assert sigma.segment_indices == (0, 1, 2, 0, 1, 2, 3)
        assert sigma.subject_rows("b").shape == (4, 4)

    def test_split_alternating(self):
        sigma = two_subject_sigma()
        train, test = split_alternating(sigma)
        assert train.subjects == ("A", "B")
        assert test.subjects == ("A", "B")
        assert np.array_equal(train.proportions[0], sigma.proportions[0])
        assert np.array_equal(test.proportions[1], sigma.proportions[3])

    def test_split_needs_both_sides(self):
        sigma = ProportionMatrix(
            proportions=np.array([[0.5], [0.5]]),
            subjects=("A", "B"),
            segment_indices=(0, 0),
            pss=np.array([[1, 1]], dtype=np.uint8),
            segment_length=5,
        )
        with pytest.raises(ValueError, match="both sides"):
            split_alternating(sigma)

    def test_row_validation(self):
        with pytest.raises(ValueError, match="<= 1"):
            ProportionMatrix(
                proportions=np.array([[0.9, 0.9]]),
                subjects=("A",),
                segment_indices=(0,),
                pss=np.array([[1, 1], [2, 2]], dtype=np.uint8),
                segment_length=5,
            )


class TestTrainAndClassify:
    def test_hand_worked_model(self):
        model = train_key_pss(two_subject_sigma())
        assert model.subjects == ("A", "B")
        assert model.key_sets == {"A": (0,), "B": (1,)}
        assert model.thresholds["A"] == pytest.approx((0.7 + 0.2) / 2)
        assert model.thresholds["B"] == pytest.approx((0.6 + 0.2) / 2)
        assert model.margins["A"] == pytest.approx(0.5)
        assert model.margins["B"] == pytest.approx(0.4)
        assert model.training_accuracy == 1.0
        assert np.allclose(model.centroids["A"], [0.75, 0.15])

    def test_classify_firing_rule(self):
        model = train_key_pss(two_subject_sigma())
        result = classify_segment(model, np.array([0.75, 0.15]))
        assert result.subject_id == "A"
        assert not result.fallback
        assert result.scores["A"] > 0 > result.scores["B"]

    def test_classify_fallback_to_nearest_centroid(self):
        model = train_key_pss(two_subject_sigma())
        result = classify_segment(model, np.array([0.35, 0.3]))
        assert result.fallback
        assert result.subject_id == "A"

    def test_classify_row_length_checked(self):
        model = train_key_pss(two_subject_sigma())
        with pytest.raises(ValueError, match="states"):
            classify_segment(model, np.array([0.5, 0.5, 0.0]))

    def test_training_preconditions(self):
        sigma = two_subject_sigma()
        only_a = ProportionMatrix(
            proportions=sigma.proportions[:2],
            subjects=("A", "A"),
            segment_indices=(0, 1),
            pss=sigma.pss,
            segment_length=10,
        )
        with pytest.raises(ValueError, match="two subjects"):
            train_key_pss(only_a)
        thin = ProportionMatrix(
            proportions=sigma.proportions[:3],
            subjects=("A", "A", "B"),
            segment_indices=(0, 1, 0),
            pss=sigma.pss,
            segment_length=10,
        )
        with pytest.raises(ValueError, match="fewer than two"):
            train_key_pss(thin)

    def test_disjoint_inventories_classified_perfectly(self):
        rng = np.random.default_rng(42)
        pools = {
            "ann": [(1, 1, 1), (2, 2, 2)],
            "bob": [(3, 3, 3), (1, 3, 1)],
        }
        seqs = {}
        for name, pool in pools.items():
            picks = rng.integers(0, 2, size=600)
            seqs[name] = svs([pool[p] for p in picks])
        table = build_state_table(list(seqs.values()))
        pss = select_pss(table, n_states=4)
        sigma = build_proportion_matrix(seqs, pss, 50)
        train, test = split_alternating(sigma)
        model = train_key_pss(train)
        assert model.training_accuracy == 1.0
        assert classification_accuracy(model, test) == 1.0
        assert all(not r.fallback for r in classify_matrix(model, test))


class TestSigmaArtifacts:
    def test_cluster_sigma_returns_permutations(self):
        rng = np.random.default_rng(43)
        sigma = ProportionMatrix(
            proportions=rng.uniform(0, 0.2, size=(6, 4)),
            subjects=tuple("ABABAB"),
            segment_indices=(0, 0, 1, 1, 2, 2),
            pss=np.array([[1, 1], [2, 2], [3, 3], [1, 2]], dtype=np.uint8),
            segment_length=5,
        )
        rows, cols = cluster_sigma(sigma)
        assert sorted(rows.tolist()) == list(range(6))
        assert sorted(cols.tolist()) == list(range(4))
        with pytest.raises(ValueError):
            cluster_sigma(
                ProportionMatrix(
                    proportions=np.array([[0.1, 0.2]]),
                    subjects=("A",),
                    segment_indices=(0,),
                    pss=np.array([[1, 1], [2, 2]], dtype=np.uint8),
                    segment_length=5,
                )
            )

    def test_sigma_tsv_round_trips_floats(self):
        sigma = two_subject_sigma()
        text = sigma_to_tsv(sigma)
        lines = text.strip().splitlines()
        assert lines[0].split("\t") == ["subject", "segment", "11", "33"]
        parsed = lines[1].split("\t")
        assert parsed[0] == "A" and parsed[1] == "0"
        assert float(parsed[2]) == sigma.proportions[0, 0]

    def test_model_text_roundtrip(self):
        model = train_key_pss(two_subject_sigma())
        text = model_to_text(model)
        back = model_from_text(text)
        assert back.subjects == model.subjects
        assert back.key_sets == model.key_sets
        assert back.thresholds == model.thresholds
        assert back.margins == model.margins
        assert back.segment_length == model.segment_length
        assert back.training_accuracy == model.training_accuracy
        assert np.array_equal(back.pss, model.pss)
        for s in model.subjects:
            assert np.array_equal(back.centroids[s], model.centroids[s])
        assert model_to_text(back) == text

    def test_model_bad_magic(self):
        with pytest.raises(ValueError, match="gaitpass-keypss"):
            model_from_text("other\n")
