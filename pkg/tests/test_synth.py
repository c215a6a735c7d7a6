"""Synthetic corpus generation, the style transform, and the round-trip
translation surrogate."""

import random

import pytest

from ogstyle import synth as S
from ogstyle.corpus import STYLE_OG, STYLE_TR, StyledCorpus
from ogstyle.errors import DataError


def identity_transform():
    return S.StyleTransform(swap_table={}, filler_prob=0.0, connective_table={}, seed=0)


class TestStyleTransform:
    def test_swap_table_lookup(self):
        t = S.StyleTransform(swap_table={"good": "beneficial"}, filler_prob=0.0, seed=0)
        rng = random.Random(0)
        assert S.apply_transform(t, "this is good .", rng) == "this is beneficial ."

    def test_identity_transform_is_verbatim(self):
        rng = random.Random(0)
        assert S.apply_transform(identity_transform(), "a b c .", rng) == "a b c ."

    def test_inverse_recovers_source_without_fillers(self):
        t = S.default_style_transform(filler_prob=0.0, seed=1)
        rng = random.Random(1)
        src = "the old farmer repairs the wagon because the merchant observes the bridge ."
        out = S.apply_transform(t, src, rng)
        assert out != src
        assert S.invert_transform(t, out) == src

    def test_inverse_drops_fillers(self):
        t = S.default_style_transform(filler_prob=0.9, seed=1)
        rng = random.Random(1)
        src = "the old farmer repairs the wagon ."
        out = S.apply_transform(t, src, rng)
        assert len(out.split()) > len(src.split())
        assert S.invert_transform(t, out) == src

    def test_non_injective_tables_rejected(self):
        with pytest.raises(DataError):
            S.StyleTransform(swap_table={"a": "x", "b": "x"})

    def test_source_value_collision_rejected(self):
        with pytest.raises(DataError):
            S.StyleTransform(swap_table={"a": "b", "b": "c"})


class TestGenSynthetic:
    def test_identity_transform_copies_sources(self):
        og, tr, align = S.gen_synthetic(S.default_grammar(), 60, 40,
                                        identity_transform(), seed=3)
        assert og.style == STYLE_OG and tr.style == STYLE_TR
        for tr_idx, og_idx in align.tr_to_og.items():
            assert tr.sentences[tr_idx] == og.sentences[og_idx]

    def test_alignment_total_and_injective(self):
        _, tr, align = S.gen_synthetic(S.default_grammar(), 80, 50,
                                       S.default_style_transform(), seed=4)
        assert set(align.tr_to_og) == set(range(len(tr)))
        assert len(set(align.tr_to_og.values())) == len(tr)

    def test_inverse_transform_recovers_aligned_source(self):
        t = S.default_style_transform(filler_prob=0.0, seed=2)
        og, tr, align = S.gen_synthetic(S.default_grammar(), 70, 50, t, seed=5)
        for tr_idx, og_idx in align.tr_to_og.items():
            assert S.invert_transform(t, tr.sentences[tr_idx]) == og.sentences[og_idx]

    def test_regeneration_is_byte_identical(self):
        t = S.default_style_transform(seed=7)
        a = S.gen_synthetic(S.default_grammar(), 100, 100, t, seed=9)
        b = S.gen_synthetic(S.default_grammar(), 100, 100, t, seed=9)
        assert a[0].sentences == b[0].sentences
        assert a[1].sentences == b[1].sentences
        assert a[2].tr_to_og == b[2].tr_to_og

    def test_sentence_lengths_in_range(self):
        og, _, _ = S.gen_synthetic(S.default_grammar(), 200, 10,
                                   identity_transform(), seed=6)
        lengths = [len(s.split()) for s in og.sentences]
        assert min(lengths) >= 5 and max(lengths) <= 20

    def test_degenerate_grammar_rejected(self):
        with pytest.raises(DataError):
            S.Grammar(nouns=("a",), verbs=("v",), adjectives=("x",),
                      adverbs=("y",), connectives=("c",), templates=())

    def test_bad_counts_rejected(self):
        with pytest.raises(DataError):
            S.gen_synthetic(S.default_grammar(), 0, 5, identity_transform())

    def test_alignment_save_load(self, tmp_path):
        _, _, align = S.gen_synthetic(S.default_grammar(), 30, 20,
                                      identity_transform(), seed=1)
        align.save(tmp_path / "a.tsv")
        assert S.OracleAlignment.load(tmp_path / "a.tsv").tr_to_og == align.tr_to_og


class TestGenMtr:
    def test_zero_noise_identity_transform_copies(self):
        og = StyledCorpus(sentences=["a b c", "d e f"], style=STYLE_OG)
        out = S.gen_mtr(og, identity_transform(), noise=0.0)
        assert out.sentences == og.sentences
        assert out.provenance == "mtr-surrogate"
        assert out.style == STYLE_TR

    def test_zero_noise_applies_swap_table(self):
        og = StyledCorpus(sentences=["the good cat", "a good dog"], style=STYLE_OG)
        t = S.StyleTransform(swap_table={"good": "beneficial"}, filler_prob=0.0, seed=0)
        out = S.gen_mtr(og, t, noise=0.0)
        assert out.sentences == ["the beneficial cat", "a beneficial dog"]

    def test_noise_fraction_matches_rate(self):
        # counting oracle over >= 10^4 tokens with the identity transform
        words = [f"w{i}" for i in range(50)]
        rng = random.Random(0)
        sentences = [" ".join(rng.choices(words, k=20)) for _ in range(520)]
        og = StyledCorpus(sentences=sentences, style=STYLE_OG)
        out = S.gen_mtr(og, identity_transform(), noise=0.1, seed=13)
        total, perturbed = 0, 0
        for before, after in zip(og.sentences, out.sentences):
            b, a = before.split(), after.split()
            assert len(b) == len(a)
            total += len(b)
            perturbed += sum(1 for x, y in zip(b, a) if x != y)
        assert total >= 10_000
        assert abs(perturbed / total - 0.1) <= 0.02

    def test_alignment_is_order_preserving(self):
        og = StyledCorpus(sentences=["x y", "p q", "m n"], style=STYLE_OG)
        out = S.gen_mtr(og, identity_transform(), noise=0.0)
        assert len(out) == len(og)

    def test_noise_out_of_range(self):
        og = StyledCorpus(sentences=["x"], style=STYLE_OG)
        with pytest.raises(DataError):
            S.gen_mtr(og, identity_transform(), noise=1.5)


class TestStyleSignal:
    """A classifier must find no signal under the identity transform and
    strong signal under the marker transform."""

    def _split(self, corpus, n_train):
        train = StyledCorpus(sentences=corpus.sentences[:n_train], style=corpus.style)
        test = corpus.sentences[n_train:]
        return train, test

    def test_identity_transform_is_unlearnable(self):
        from ogstyle.evaluation import accuracy_full, train_classifier

        og, tr, _ = S.gen_synthetic(S.default_grammar(), 900, 900,
                                    identity_transform(), seed=21)
        og_train, og_test = self._split(og, 500)
        tr_train, tr_test = self._split(tr, 500)
        clf = train_classifier(og_train, tr_train, seed=0)
        assert accuracy_full(clf, og_test, tr_test) <= 55.0

    def test_marker_transform_is_learnable(self):
        from ogstyle.evaluation import accuracy_full, train_classifier

        og, tr, _ = S.gen_synthetic(S.default_grammar(), 900, 900,
                                    S.default_style_transform(seed=2), seed=22)
        og_train, og_test = self._split(og, 500)
        tr_train, tr_test = self._split(tr, 500)
        clf = train_classifier(og_train, tr_train, seed=0)
        assert accuracy_full(clf, og_test, tr_test) >= 90.0

    def test_swap_table_covers_enough_tokens(self):
        t = S.default_style_transform(seed=2)
        og, _, _ = S.gen_synthetic(S.default_grammar(), 500, 1,
                                   identity_transform(), seed=23)
        tokens = [w for s in og.sentences for w in s.split()]
        markable = set(t.swap_table) | set(t.connective_table)
        covered = sum(1 for w in tokens if w in markable)
        assert covered / len(tokens) >= 0.10
