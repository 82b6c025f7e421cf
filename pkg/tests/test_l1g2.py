"""Local code books per subsystem and their coupled state sequences."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaitpass.complexity import SymbolSequence, couple_naive
from gaitpass.hca import assign_nearest
from gaitpass.ingest import AXES, TimeSeriesFrame
from gaitpass.l1g2 import (
    CoupledStateSequence,
    couple,
    encode_subsystem,
    fit_local_code,
    local_code_from_text,
    local_code_to_text,
    stack_lr,
)


def triplet_of(values, name="L"):
    values = np.asarray(values, dtype=float)
    frame = TimeSeriesFrame(
        values=values,
        channels=tuple((name, a) for a in AXES),
        sample_rate_hz=50.0,
        subject_id="t",
    )
    return frame.sensor(name)


def random_triplet(rng, n, name="L", shift=0.0):
    return triplet_of(rng.standard_normal((3, n)) + shift, name)


class TestStackLr:
    def test_concatenates_left_first(self):
        rng = np.random.default_rng(50)
        left = random_triplet(rng, 6, "L")
        right = random_triplet(rng, 6, "R", shift=3.0)
        stacked = stack_lr(left, right)
        assert stacked.shape == (3, 12)
        assert np.array_equal(stacked[:, :6], left.values)
        assert np.array_equal(stacked[:, 6:], right.values)

    def test_length_mismatch(self):
        rng = np.random.default_rng(51)
        with pytest.raises(ValueError, match="length mismatch"):
            stack_lr(random_triplet(rng, 5), random_triplet(rng, 6, "R"))


class TestFitLocalCode:
    def test_basic_fit(self):
        rng = np.random.default_rng(52)
        left = random_triplet(rng, 40, "L")
        right = random_triplet(rng, 40, "R", shift=4.0)
        code = fit_local_code(stack_lr(left, right), h=6,
                              source_sensors=("L", "R"))
        assert code.h == 6
        assert code.source_sensors == ("L", "R")
        assert code.window == (0, 40)
        assert not code.subsampled
        assert len(code.code_book_id) == 16

    def test_column_count_must_split_evenly(self):
        rng = np.random.default_rng(53)
        with pytest.raises(ValueError, match="equal sensor blocks"):
            fit_local_code(rng.standard_normal((3, 11)), h=2,
                           source_sensors=("L", "R"))

    def test_window_must_span_blocks(self):
        rng = np.random.default_rng(54)
        with pytest.raises(ValueError, match="window"):
            fit_local_code(rng.standard_normal((3, 20)), h=2,
                           source_sensors=("L", "R"), window=(0, 9))
        code = fit_local_code(rng.standard_normal((3, 20)), h=2,
                              source_sensors=("L", "R"), window=(100, 110))
        assert code.window == (100, 110)

    def test_subsample_over_budget(self):
        rng = np.random.default_rng(55)
        stacked = rng.standard_normal((3, 64))
        code = fit_local_code(stacked, h=4, source_sensors=("L", "R"),
                              max_fit_columns=20)
        assert code.subsampled
        # every fourth column fitted: ceil(64 / 20) = 4
        assert code.clustering.n_columns == 16

    def test_code_book_id_tracks_content(self):
        rng = np.random.default_rng(56)
        stacked = rng.standard_normal((3, 30))
        a = fit_local_code(stacked, h=5, source_sensors=("L", "R"))
        b = fit_local_code(stacked, h=5, source_sensors=("L", "R"))
        c = fit_local_code(stacked + 0.5, h=5, source_sensors=("L", "R"))
        assert a.code_book_id == b.code_book_id
        assert a.code_book_id != c.code_book_id


class TestEncodeSubsystem:
    def test_nearest_centroid_encoding(self):
        rng = np.random.default_rng(57)
        left = random_triplet(rng, 50, "L")
        right = random_triplet(rng, 50, "R", shift=4.0)
        code = fit_local_code(stack_lr(left, right), h=8)
        seq = encode_subsystem(code, left)
        assert isinstance(seq, SymbolSequence)
        assert seq.alphabet_size == 8
        assert seq.provenance == "hca-cluster"
        assert len(seq) == 50
        assert np.array_equal(
            seq.symbols, assign_nearest(code.clustering, left.values)
        )

    def test_well_separated_sides_use_disjoint_codes(self):
        rng = np.random.default_rng(58)
        left = random_triplet(rng, 60, "L")
        right = random_triplet(rng, 60, "R", shift=50.0)
        code = fit_local_code(stack_lr(left, right), h=6)
        sl = set(encode_subsystem(code, left).symbols.tolist())
        sr = set(encode_subsystem(code, right).symbols.tolist())
        assert not (sl & sr)


def seq_of(symbols, alphabet):
    return SymbolSequence(
        symbols=np.asarray(symbols, dtype=np.int64),
        alphabet_size=alphabet,
        provenance="hca-cluster",
    )


class TestCoupledStateSequence:
    def test_couple_and_projections(self):
        a = seq_of([0, 1, 2, 1], 3)
        b = seq_of([1, 0, 1, 1], 2)
        coupled = couple([a, b], labels=["L", "R"])
        assert coupled.n_samples == 4
        assert coupled.arity == 2
        assert coupled.subsystem_labels == ("L", "R")
        assert coupled.h_per_subsystem == (3, 2)
        assert coupled.state_at(2) == (2, 1)
        assert np.array_equal(coupled.project(0).symbols, a.symbols)
        assert np.array_equal(coupled.project(1).symbols, b.symbols)

    def test_as_product_matches_naive_coupling(self):
        rng = np.random.default_rng(59)
        a = seq_of(rng.integers(0, 5, 30), 5)
        b = seq_of(rng.integers(0, 3, 30), 3)
        coupled = couple([a, b], labels=["L", "R"])
        product = coupled.as_product()
        naive = couple_naive([a, b])
        assert np.array_equal(product.symbols, naive.symbols)
        assert product.alphabet_size == 15

    def test_validation(self):
        with pytest.raises(ValueError, match="length mismatch"):
            couple([seq_of([0], 2), seq_of([0, 1], 2)], labels=["L", "R"])
        with pytest.raises(ValueError, match="label"):
            couple([seq_of([0], 2)], labels=["L", "R"])
        with pytest.raises(ValueError, match="outside"):
            CoupledStateSequence(
                codes=np.array([[0, 5]]),
                subsystem_labels=("L", "R"),
                h_per_subsystem=(2, 3),
            )

    @settings(max_examples=40, deadline=None)
    @given(
        data=st.lists(
            st.tuples(
                st.integers(min_value=0, max_value=3),
                st.integers(min_value=0, max_value=2),
            ),
            min_size=1,
            max_size=50,
        )
    )
    def test_projection_roundtrip(self, data):
        a = seq_of([p[0] for p in data], 4)
        b = seq_of([p[1] for p in data], 3)
        coupled = couple([a, b], labels=["x", "y"])
        again = couple(
            [coupled.project(0), coupled.project(1)], labels=["x", "y"]
        )
        assert np.array_equal(again.codes, coupled.codes)


class TestPersistence:
    def test_roundtrip(self):
        rng = np.random.default_rng(60)
        left = random_triplet(rng, 30, "L")
        right = random_triplet(rng, 30, "R", shift=4.0)
        code = fit_local_code(stack_lr(left, right), h=5,
                              source_sensors=("L", "R"), window=(20, 50))
        text = local_code_to_text(code)
        back = local_code_from_text(text)
        assert back.source_sensors == code.source_sensors
        assert back.window == code.window
        assert back.subsampled == code.subsampled
        assert back.code_book_id == code.code_book_id
        assert local_code_to_text(back) == text
        assert np.array_equal(
            encode_subsystem(back, left).symbols,
            encode_subsystem(code, left).symbols,
        )

    def test_bad_magic(self):
        with pytest.raises(ValueError, match="gaitpass-localcode"):
            local_code_from_text("gaitpass-codebook v1\n")
