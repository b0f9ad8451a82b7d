"""Label tokenization, averaged embeddings, and cosine similarity."""

import numpy as np
import pytest

from headstart.embedsim import (
    EmbeddingTable,
    cosine,
    embed_label,
    read_embeddings,
    tokenize_label,
    word2vec_similarity_matrix,
    write_embeddings,
)
from headstart.matrixio import (
    FormatError,
    HeaderError,
    LabelEntry,
    LabelSet,
    NonFiniteError,
    ShapeError,
)


def table_from(words):
    rng = np.random.default_rng(7)
    dim = 5
    return EmbeddingTable(
        dim=dim, vectors={w: rng.normal(size=dim) for w in words}
    )


class TestTokenize:
    def test_comma_separated_label(self):
        assert tokenize_label("Anchor, ground tackle") == [
            "anchor",
            "ground",
            "tackle",
        ]

    def test_single_word(self):
        assert tokenize_label("Sundial") == ["sundial"]

    def test_hyphen_and_underscore(self):
        assert tokenize_label("hook-claw_device") == ["hook", "claw", "device"]

    def test_empty_and_separator_only(self):
        assert tokenize_label("") == []
        assert tokenize_label(" ,-_ ") == []

    def test_numbers_kept(self):
        assert tokenize_label("mk2 drone") == ["mk2", "drone"]


class TestEmbedLabel:
    def test_mean_of_known_tokens(self):
        t = table_from(["anchor", "ground", "tackle"])
        emb = embed_label(t, "Anchor, ground tackle")
        expected = (
            t.vectors["anchor"] + t.vectors["ground"] + t.vectors["tackle"]
        ) / 3.0
        np.testing.assert_allclose(emb.vector, expected, rtol=0, atol=1e-15)
        assert emb.covered_words == 3
        assert emb.total_words == 3

    def test_unknown_tokens_skipped(self):
        t = table_from(["anchor"])
        emb = embed_label(t, "Anchor, ground tackle")
        np.testing.assert_array_equal(emb.vector, t.vectors["anchor"])
        assert emb.covered_words == 1
        assert emb.total_words == 3

    def test_all_unknown_is_zero_vector(self):
        t = table_from(["anchor"])
        emb = embed_label(t, "ground tackle")
        np.testing.assert_array_equal(emb.vector, np.zeros(t.dim))
        assert emb.covered_words == 0
        assert emb.total_words == 2

    def test_repeated_token_counts_twice(self):
        t = table_from(["fish", "hook"])
        emb = embed_label(t, "fish fish hook")
        expected = (2.0 * t.vectors["fish"] + t.vectors["hook"]) / 3.0
        np.testing.assert_allclose(emb.vector, expected, rtol=0, atol=1e-15)

    def test_word_order_irrelevant(self):
        t = table_from(["red", "fox", "den"])
        a = embed_label(t, "red fox den").vector
        b = embed_label(t, "den red fox").vector
        np.testing.assert_array_equal(a, b)


class TestCosine:
    def test_parallel(self):
        assert cosine(np.array([1.0, 2.0]), np.array([2.0, 4.0])) == pytest.approx(
            1.0, abs=1e-12
        )

    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 3.0])) == 0.0

    def test_antiparallel(self):
        assert cosine(np.array([1.0, 1.0]), np.array([-1.0, -1.0])) == pytest.approx(
            -1.0, abs=1e-12
        )

    def test_zero_vector_gives_zero(self):
        assert cosine(np.zeros(4), np.ones(4)) == 0.0
        assert cosine(np.ones(4), np.zeros(4)) == 0.0

    def test_scale_invariance(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            u = rng.normal(size=8)
            v = rng.normal(size=8)
            c = float(rng.uniform(0.1, 100.0))
            assert cosine(c * u, v) == pytest.approx(cosine(u, v), abs=1e-12)

    def test_shape_mismatch_raises(self):
        with pytest.raises(ShapeError):
            cosine(np.ones(3), np.ones(4))
        with pytest.raises(ShapeError):
            cosine(np.ones((2, 2)), np.ones((2, 2)))

    def test_bounded(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            u = rng.normal(size=6)
            v = rng.normal(size=6)
            assert -1.0 - 1e-12 <= cosine(u, v) <= 1.0 + 1e-12


def label_set(labels):
    return LabelSet([LabelEntry(i, lbl) for i, lbl in enumerate(labels)])


class TestSimilarityMatrix:
    def test_shape_and_range(self):
        t = table_from(["a", "b", "c", "d"])
        sim = word2vec_similarity_matrix(
            t, label_set(["a b", "c", "d"]), label_set(["a", "b d"])
        )
        assert sim.shape == (2, 3)
        assert np.all(sim >= 0.0) and np.all(sim <= 1.0 + 1e-12)

    def test_negative_cosine_clamped(self):
        t = EmbeddingTable(
            dim=2, vectors={"up": np.array([0.0, 1.0]), "down": np.array([0.0, -1.0])}
        )
        sim = word2vec_similarity_matrix(t, label_set(["up"]), label_set(["down"]))
        assert sim[0, 0] == 0.0

    def test_identical_label_similarity_one(self):
        t = table_from(["anchor", "chain"])
        sim = word2vec_similarity_matrix(
            t, label_set(["anchor chain"]), label_set(["anchor chain"])
        )
        assert sim[0, 0] == pytest.approx(1.0, abs=1e-12)

    def test_oov_label_row_is_zero(self):
        t = table_from(["anchor"])
        sim = word2vec_similarity_matrix(
            t, label_set(["anchor", "anchor"]), label_set(["zzz qqq"])
        )
        np.testing.assert_array_equal(sim[0], np.zeros(2))

    def test_matches_scalar_cosine(self):
        t = table_from(["a", "b", "c", "d", "e"])
        srcs = ["a b", "c", "d e"]
        tgts = ["a", "b c d"]
        sim = word2vec_similarity_matrix(t, label_set(srcs), label_set(tgts))
        for i, tl in enumerate(tgts):
            for j, sl in enumerate(srcs):
                expect = max(
                    0.0,
                    cosine(embed_label(t, tl).vector, embed_label(t, sl).vector),
                )
                assert sim[i, j] == expect


class TestEmbeddingIO:
    def test_round_trip(self, tmp_path):
        t = table_from(["anchor", "ground", "tackle"])
        path = str(tmp_path / "emb.txt")
        write_embeddings(t, path)
        back = read_embeddings(path)
        assert back.dim == t.dim
        assert set(back.vectors) == set(t.vectors)
        for w in t.vectors:
            np.testing.assert_array_equal(back.vectors[w], t.vectors[w])

    def test_headerless_file(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("cat 1 0\ndog 0 1\n")
        t = read_embeddings(str(path))
        assert t.dim == 2
        np.testing.assert_array_equal(t.vectors["cat"], [1.0, 0.0])

    def test_header_word_count_checked(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("3 2\ncat 1 0\ndog 0 1\n")
        with pytest.raises(ShapeError):
            read_embeddings(str(path))

    def test_two_dim_headerless_not_mistaken_for_header(self, tmp_path):
        # 'cat 1' can't parse as two ints, so it's a data row with dim 1
        path = tmp_path / "emb.txt"
        path.write_text("cat 1\ndog 2\n")
        t = read_embeddings(str(path))
        assert t.dim == 1 and len(t) == 2

    def test_ragged_rows_raise(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("cat 1 0\ndog 0\n")
        with pytest.raises(ShapeError):
            read_embeddings(str(path))

    def test_duplicate_word_raises(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("cat 1 0\nCat 0 1\n")
        with pytest.raises(FormatError):
            read_embeddings(str(path))

    def test_non_finite_raises(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("cat nan 0\n")
        with pytest.raises(NonFiniteError):
            read_embeddings(str(path))

    def test_empty_raises(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("\n")
        with pytest.raises(HeaderError):
            read_embeddings(str(path))

    def test_words_lowercased_on_read(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("CAT 1 0\n")
        t = read_embeddings(str(path))
        assert "cat" in t and "CAT" not in t.vectors
