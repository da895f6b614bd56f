import math

import numpy as np
import pytest
import scipy.fft
from hypothesis import given, settings, strategies as st

from sentalign.compose import (
    _gem_word_weight,
    compose_dct,
    compose_gem,
    compose_mean,
    compose_random,
    ingest_external,
    principal_directions,
    remove_common_components,
)
from sentalign.corpus import WordVectorTable
from sentalign.errors import MatrixFormatError, ValidationError
from sentalign.matrix import EmbeddingMatrix, save_matrix

from conftest import make_sentence


class TestComposeMean:
    def test_two_tokens(self, tiny_table):
        m = compose_mean([make_sentence(0, ["a", "b"])], tiny_table)
        assert np.allclose(m.data[0], [0.5, 0.5])
        assert m.method == "glove-mean"
        assert m.index == ["0"]

    def test_single_token(self, tiny_table):
        m = compose_mean([make_sentence(0, ["a"])], tiny_table)
        assert np.allclose(m.data[0], [1.0, 0.0])

    def test_repeated_token(self, tiny_table):
        # hand arithmetic: (a + a + b) / 3
        m = compose_mean([make_sentence(0, ["a", "a", "b"])], tiny_table)
        assert np.allclose(m.data[0], [2.0 / 3.0, 1.0 / 3.0], atol=1e-12)

    def test_oov_token_skipped(self, tiny_table):
        m = compose_mean([make_sentence(0, ["a", "zzz"])], tiny_table)
        assert np.allclose(m.data[0], [1.0, 0.0])

    def test_all_oov_sentence_excluded(self, tiny_table):
        sentences = [make_sentence(0, ["zzz"]), make_sentence(1, ["a"])]
        m = compose_mean(sentences, tiny_table)
        assert m.index == ["1"]
        excluded = [str(s.id) for s in sentences if str(s.id) not in set(m.index)]
        assert excluded == ["0"]

    def test_order_invariance(self, tiny_table):
        fwd = compose_mean([make_sentence(0, ["a", "b", "c"])], tiny_table)
        rev = compose_mean([make_sentence(0, ["c", "b", "a"])], tiny_table)
        assert np.allclose(fwd.data, rev.data)


class TestComposeDct:
    def test_constant_column(self, tiny_table):
        # N=2, both words (1, 0): column c = [1, 1] gives coef0 = sqrt(2), coef1 = 0
        m = compose_dct([make_sentence(0, ["a", "a"])], tiny_table, k_max=1)
        assert m.dim == 4
        assert abs(m.data[0][0] - math.sqrt(2.0)) < 1e-9
        assert abs(m.data[0][2]) < 1e-9  # coefficient-1 block, first column

    def test_impulse_column(self, tiny_table):
        # column c = [1, 0]: coef0 = sqrt(1/2), coef1 = cos(pi/4)
        m = compose_dct([make_sentence(0, ["a", "b"])], tiny_table, k_max=1)
        assert abs(m.data[0][0] - math.sqrt(0.5)) < 1e-9
        assert abs(m.data[0][2] - math.cos(math.pi / 4.0)) < 1e-9

    def test_k0_is_scaled_mean(self, tiny_table):
        sentences = [make_sentence(0, ["a", "b", "c"]), make_sentence(1, ["a", "c"])]
        dct = compose_dct(sentences, tiny_table, k_max=0)
        mean = compose_mean(sentences, tiny_table)
        for row in range(2):
            n = len(sentences[row].tokens)
            assert np.allclose(dct.data[row], math.sqrt(n) * mean.data[row], atol=1e-9)

    def test_matches_reference_dct(self, tiny_table):
        # independent oracle: the orthonormal type-II transform from scipy
        rng = np.random.default_rng(5)
        table = WordVectorTable(
            dim=4, vectors={f"t{i}": rng.standard_normal(4) for i in range(9)}
        )
        tokens = [f"t{i}" for i in range(9)]
        m = compose_dct([make_sentence(0, tokens)], table, k_max=3)
        stacked = np.vstack([table[t] for t in tokens])
        expected = scipy.fft.dct(stacked, type=2, norm="ortho", axis=0)[:4]
        assert np.allclose(m.data[0], expected.reshape(-1), atol=1e-9)

    def test_zero_padding_beyond_length(self, tiny_table):
        m = compose_dct([make_sentence(0, ["a"])], tiny_table, k_max=2)
        assert m.dim == 6
        assert np.allclose(m.data[0][2:], 0.0)
        assert not np.allclose(m.data[0][:2], 0.0)

    def test_order_sensitivity(self, tiny_table):
        fwd = compose_dct([make_sentence(0, ["a", "b"])], tiny_table, k_max=1)
        rev = compose_dct([make_sentence(0, ["b", "a"])], tiny_table, k_max=1)
        assert not np.allclose(fwd.data, rev.data)

    def test_k_range_validation(self, tiny_table):
        with pytest.raises(ValidationError):
            compose_dct([make_sentence(0, ["a"])], tiny_table, k_max=7)
        with pytest.raises(ValidationError):
            compose_dct([make_sentence(0, ["a"])], tiny_table, k_max=-1)

    @settings(max_examples=25, deadline=None)
    @given(
        lengths=st.lists(st.integers(min_value=1, max_value=12), min_size=1, max_size=5),
        seed=st.integers(min_value=0, max_value=2**31),
    )
    def test_k0_identity_property(self, lengths, seed):
        rng = np.random.default_rng(seed)
        table = WordVectorTable(
            dim=3, vectors={f"t{i}": rng.standard_normal(3) for i in range(12)}
        )
        sentences = [
            make_sentence(i, [f"t{int(j)}" for j in rng.integers(0, 12, n)])
            for i, n in enumerate(lengths)
        ]
        dct = compose_dct(sentences, table, k_max=0)
        mean = compose_mean(sentences, table)
        for row, n in enumerate(lengths):
            assert np.allclose(dct.data[row], math.sqrt(n) * mean.data[row], atol=1e-9)


def gram_schmidt_last_column(window: np.ndarray) -> np.ndarray:
    """Scalar re-implementation: last column of R with a non-negative diagonal."""
    d, m = window.shape
    basis = []
    r_last = np.zeros(min(d, m))
    residual = window[:, -1].astype(float).copy()
    for i in range(m - 1):
        q = window[:, i].astype(float).copy()
        for b in basis:
            q -= (q @ b) * b
        norm = np.linalg.norm(q)
        if norm > 1e-12:
            q /= norm
        basis.append(q)
        if i < r_last.shape[0]:
            r_last[i] = window[:, -1] @ q
        residual -= (residual @ q) * q if norm > 1e-12 else 0.0
    r_last[-1] = np.linalg.norm(residual)
    return r_last


class TestComposeGem:
    def test_single_token_parallel(self, tiny_table):
        # scalar oracle: R = [||w||], so weight = ||w|| + ||w|| + exp(-||w||)
        m = compose_gem([make_sentence(0, ["c"])], tiny_table, window=3, top_components=0)
        w = tiny_table["c"]
        norm = np.linalg.norm(w)
        expected = (norm + norm + math.exp(-norm)) * w
        assert np.allclose(m.data[0], expected, atol=1e-9)
        cos = m.data[0] @ w / (np.linalg.norm(m.data[0]) * norm)
        assert abs(cos - 1.0) < 1e-12

    def test_weight_matches_gram_schmidt(self):
        rng = np.random.default_rng(11)
        for m_cols in (2, 3, 5):
            window = rng.standard_normal((8, m_cols))
            r_last = gram_schmidt_last_column(window)
            expected = (
                np.linalg.norm(r_last)
                + r_last[-1] / m_cols
                + math.exp(-np.linalg.norm(r_last) / m_cols)
            )
            assert abs(_gem_word_weight(window) - expected) < 1e-9

    def test_identical_sentences_identical_rows(self, tiny_table):
        sentences = [make_sentence(0, ["a", "b", "c"]), make_sentence(1, ["a", "b", "c"])]
        m = compose_gem(sentences, tiny_table, window=2, top_components=0)
        assert np.array_equal(m.data[0], m.data[1])

    def test_no_removal_equals_weighted_sum(self, tiny_table):
        tokens = ["a", "b", "c", "a"]
        m = compose_gem([make_sentence(0, tokens)], tiny_table, window=2, top_components=0)
        words = np.vstack([tiny_table[t] for t in tokens])
        expected = np.zeros(2)
        for n in range(len(tokens)):
            start = max(0, n - 2)
            expected += _gem_word_weight(words[start : n + 1].T) * words[n]
        assert np.allclose(m.data[0], expected, atol=1e-12)

    def test_row_order_invariance_without_removal(self, tiny_table):
        sentences = [
            make_sentence(0, ["a", "b"]),
            make_sentence(1, ["b", "c"]),
            make_sentence(2, ["c", "a"]),
        ]
        fwd = compose_gem(sentences, tiny_table, window=2, top_components=0)
        rev = compose_gem(sentences[::-1], tiny_table, window=2, top_components=0)
        for sid in ("0", "1", "2"):
            assert np.allclose(fwd.row_of(sid), rev.row_of(sid), atol=1e-9)

    def test_method_label(self, tiny_table):
        m = compose_gem([make_sentence(0, ["a", "b"])], tiny_table, top_components=0)
        assert m.method == "gem-glove"


class TestComposeRandom:
    def test_determinism(self):
        sentences = [make_sentence(i, ["x"]) for i in range(4)]
        a = compose_random(sentences, dim=8, seed=3)
        b = compose_random(sentences, dim=8, seed=3)
        assert np.array_equal(a.data, b.data)

    def test_seed_sensitivity(self):
        sentences = [make_sentence(i, ["x"]) for i in range(4)]
        a = compose_random(sentences, dim=8, seed=3)
        b = compose_random(sentences, dim=8, seed=4)
        assert not np.array_equal(a.data, b.data)

    def test_reference_dimensionality(self):
        sentences = [make_sentence(i, ["x"]) for i in range(10)]
        m = compose_random(sentences, dim=300, seed=0)
        assert m.data.shape == (10, 300)
        assert m.data.min() >= -1.0 and m.data.max() <= 1.0


class TestIngestExternal:
    def test_round_trip(self, tmp_path):
        matrix = EmbeddingMatrix(
            data=np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]),
            method="external",
            index=["x", "y"],
        )
        path = tmp_path / "ext.embx"
        save_matrix(matrix, path)
        assert ingest_external(path) == matrix

    def test_truncated(self, tmp_path):
        path = tmp_path / "ext.embx"
        matrix = EmbeddingMatrix(data=np.zeros((2, 3)), method="external", index=["x", "y"])
        save_matrix(matrix, path)
        path.write_bytes(path.read_bytes()[:-5])
        with pytest.raises(MatrixFormatError):
            ingest_external(path)

    def test_sentence_encoder_shape(self, tmp_path):
        path = tmp_path / "ext.embx"
        save_matrix(
            EmbeddingMatrix(data=np.zeros((3, 768)), method="sentbert", index=list("abc")), path
        )
        loaded = ingest_external(path)
        assert loaded.dim == 768
        assert loaded.method == "sentbert"


class TestRemoveCommonComponents:
    def test_k0_identity(self):
        m = EmbeddingMatrix(data=np.arange(6.0).reshape(3, 2), method="m", index=list("abc"))
        out = remove_common_components(m, 0)
        assert np.array_equal(out.data, m.data)

    def test_rank_one_collapses_to_mean(self):
        direction = np.array([1.0, 2.0]) / math.sqrt(5.0)
        data = np.outer([1.0, 2.0, 3.0], direction)
        m = EmbeddingMatrix(data=data, method="m", index=list("abc"))
        out = remove_common_components(m, 1)
        mean = data.mean(axis=0)
        assert np.allclose(out.data, np.tile(mean, (3, 1)), atol=1e-9)

    def test_removed_direction_has_no_mass(self):
        rng = np.random.default_rng(2)
        data = rng.standard_normal((20, 5))
        m = EmbeddingMatrix(data=data, method="m", index=[str(i) for i in range(20)])
        out = remove_common_components(m, 1)
        dirs, _ = principal_directions(data, 1)
        centered = out.data - out.data.mean(axis=0)
        assert np.abs(centered @ dirs).max() < 1e-9

    def test_k_too_large(self):
        m = EmbeddingMatrix(data=np.zeros((3, 2)), method="m", index=list("abc"))
        with pytest.raises(ValidationError):
            remove_common_components(m, 2)


class TestPrincipalDirections:
    def test_right_isoceles_eigenvalues(self):
        # hand-solved 2x2 eigenproblem for points (0,0), (1,0), (0,1), ddof=1
        data = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        _, eigvals = principal_directions(data, 2)
        assert np.allclose(eigvals, [0.5, 1.0 / 6.0], atol=1e-12)

    def test_sign_convention(self):
        data = np.array([[0.0, 0.0], [-1.0, -1.0], [-2.0, -2.0]])
        dirs, _ = principal_directions(data, 1)
        first_nonzero = dirs[np.abs(dirs[:, 0]) > 1e-12, 0][0]
        assert first_nonzero > 0

    def test_orthonormal_columns(self):
        rng = np.random.default_rng(0)
        dirs, _ = principal_directions(rng.standard_normal((30, 6)), 4)
        assert np.allclose(dirs.T @ dirs, np.eye(4), atol=1e-10)
