import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sentalign.corpus import Triple
from sentalign.errors import UnknownIdError, ValidationError
from sentalign.kgembed import (
    KgEmbedding,
    concat_triples,
    load_kg_embedding,
    save_kg_embedding,
    score_triple,
    train_transe,
)


def fixed_kg(vectors, relations, dim=2):
    return KgEmbedding(
        dim=dim,
        entity_vectors={k: np.asarray(v, dtype=np.float64) for k, v in vectors.items()},
        relation_vectors={k: np.asarray(v, dtype=np.float64) for k, v in relations.items()},
        seed=0,
        epochs=0,
        margin=1.0,
        learning_rate=0.01,
    )


class TestScoreTriple:
    def test_perfect_translation(self):
        kg = fixed_kg({"h": [1.0, 0.0], "t": [1.0, 1.0]}, {"r": [0.0, 1.0]})
        assert score_triple(kg, Triple("h", "r", "t"), "L2") == 0.0

    def test_three_four_five(self):
        kg = fixed_kg({"h": [0.0, 0.0], "t": [3.0, 4.0]}, {"r": [0.0, 0.0]})
        assert abs(score_triple(kg, Triple("h", "r", "t"), "L2") - (-5.0)) < 1e-12
        assert abs(score_triple(kg, Triple("h", "r", "t"), "L1") - (-7.0)) < 1e-12

    def test_unknown_entity(self):
        kg = fixed_kg({"h": [0.0, 0.0]}, {"r": [0.0, 0.0]})
        with pytest.raises(UnknownIdError, match="'nope'"):
            score_triple(kg, Triple("h", "r", "nope"), "L2")

    def test_bad_norm(self):
        kg = fixed_kg({"h": [0.0, 0.0], "t": [1.0, 1.0]}, {"r": [0.0, 0.0]})
        with pytest.raises(ValidationError):
            score_triple(kg, Triple("h", "r", "t"), "L3")

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2**31))
    def test_translation_consistency(self, seed):
        rng = np.random.default_rng(seed)
        h, t, r, delta = rng.standard_normal((4, 6))
        kg_a = fixed_kg({"h": h, "t": t}, {"r": r}, dim=6)
        kg_b = fixed_kg({"h": h + delta, "t": t + delta}, {"r": r}, dim=6)
        a = score_triple(kg_a, Triple("h", "r", "t"), "L2")
        b = score_triple(kg_b, Triple("h", "r", "t"), "L2")
        assert abs(a - b) < 1e-9


CHAIN = [Triple("a", "r", "b"), Triple("b", "r", "c")]


class TestTrainTransE:
    def test_chain_ranks_above_corruptions(self):
        # exhaustive corruption check; small margin so the loss can saturate
        kg = train_transe(
            CHAIN, dim=8, epochs=200, margin=0.2, learning_rate=0.02,
            negatives_per_positive=4, seed=1,
        )
        entities = ["a", "b", "c"]
        true_scores = [score_triple(kg, t, "L2") for t in CHAIN]
        corrupted = []
        for t in CHAIN:
            for e in entities:
                if e != t.h:
                    corrupted.append(Triple(e, t.r, t.t))
                if e != t.t:
                    corrupted.append(Triple(t.h, t.r, e))
        corrupted = [c for c in corrupted if c not in CHAIN]
        worst_true = min(true_scores)
        best_corrupt = max(score_triple(kg, c, "L2") for c in corrupted)
        assert worst_true > best_corrupt

    def test_bitwise_determinism(self):
        a = train_transe(CHAIN, dim=8, epochs=50, seed=9)
        b = train_transe(CHAIN, dim=8, epochs=50, seed=9)
        for key in a.entity_vectors:
            assert np.array_equal(a.entity_vectors[key], b.entity_vectors[key])
        for key in a.relation_vectors:
            assert np.array_equal(a.relation_vectors[key], b.relation_vectors[key])

    def test_reference_dimension(self):
        kg = train_transe(CHAIN, dim=300, epochs=1, seed=0)
        assert kg.entity_vectors["a"].shape == (300,)

    def test_empty_triples(self):
        with pytest.raises(ValidationError):
            train_transe([], dim=4, epochs=1)

    def test_entity_norms_unit(self):
        kg = train_transe(CHAIN, dim=8, epochs=30, seed=2)
        for vec in kg.entity_vectors.values():
            assert abs(np.linalg.norm(vec) - 1.0) <= 1e-6

    def test_probe_loss_decreases(self):
        kg = train_transe(
            CHAIN, dim=8, epochs=200, margin=0.2, learning_rate=0.02,
            negatives_per_positive=4, seed=1,
        )
        assert kg.probe_history[-1] < kg.probe_history[0]

    def test_probe_loss_windowed_monotone(self):
        kg = train_transe(
            CHAIN, dim=8, epochs=200, margin=0.2, learning_rate=0.02,
            negatives_per_positive=4, seed=1,
        )
        probe = kg.probe_history
        for i in range(len(probe) - 10):
            assert probe[i + 10] <= probe[i] + 1e-3

    def test_l1_training_runs(self):
        kg = train_transe(CHAIN, dim=8, epochs=30, norm="L1", seed=3)
        assert kg.norm == "L1"


class TestConcatTriples:
    def test_dimension(self):
        kg = train_transe(CHAIN, dim=6, epochs=1, seed=0)
        matrix = concat_triples(kg, CHAIN)
        assert matrix.dim == 18
        assert matrix.dim % 3 == 0

    def test_deduplication(self):
        kg = train_transe(CHAIN, dim=4, epochs=1, seed=0)
        matrix = concat_triples(kg, CHAIN + [CHAIN[0]])
        assert matrix.rows == 2

    def test_shared_relation_block(self):
        kg = train_transe(CHAIN, dim=4, epochs=1, seed=0)
        matrix = concat_triples(kg, CHAIN)
        assert np.array_equal(matrix.data[0][4:8], matrix.data[1][4:8])

    def test_keys_parse_back(self):
        kg = train_transe(CHAIN, dim=4, epochs=1, seed=0)
        matrix = concat_triples(kg, CHAIN)
        assert [Triple.from_key(k) for k in matrix.index] == CHAIN

    def test_unknown_id(self):
        kg = train_transe(CHAIN, dim=4, epochs=1, seed=0)
        with pytest.raises(UnknownIdError):
            concat_triples(kg, [Triple("a", "r", "unknown")])


class TestPersistence:
    def test_round_trip(self, tmp_path):
        kg = train_transe(CHAIN, dim=8, epochs=10, margin=2.0, learning_rate=0.02, seed=5)
        save_kg_embedding(kg, tmp_path / "kg")
        loaded = load_kg_embedding(tmp_path / "kg")
        assert loaded.dim == 8
        assert loaded.seed == 5
        assert loaded.epochs == 10
        assert loaded.margin == 2.0
        assert loaded.learning_rate == 0.02
        assert loaded.norm == "L2"
        assert set(loaded.entity_vectors) == {"a", "b", "c"}
        for key in kg.entity_vectors:
            assert np.allclose(loaded.entity_vectors[key], kg.entity_vectors[key], atol=1e-6)
