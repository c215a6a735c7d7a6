"""Shared fixtures: tiny corpora, vocabulary and models sized for fast tests."""

import pytest

from ogstyle import corpus as C
from ogstyle import models as M
from ogstyle import synth as S


@pytest.fixture(scope="session")
def tiny_data():
    """Small synthetic OG/TR corpora with BPE and vocabulary."""
    grammar = S.default_grammar()
    transform = S.default_style_transform(filler_prob=0.15, seed=7)
    og, tr, alignment = S.gen_synthetic(grammar, 120, 100, transform, seed=11)
    bpe = C.learn_bpe([og, tr], 150)
    vocab = C.build_vocab([og, tr], bpe)
    og = C.encode_corpus(og, vocab, bpe)
    tr = C.encode_corpus(tr, vocab, bpe)
    return {"og": og, "tr": tr, "alignment": alignment, "bpe": bpe,
            "vocab": vocab, "transform": transform, "grammar": grammar}


@pytest.fixture(scope="session")
def tiny_model(tiny_data):
    cfg = M.ModelConfig(layers=2, heads=2, dim=32, ff_dim=64, max_len=48,
                        dropout=0.0, seed=5)
    return M.init_model(cfg, len(tiny_data["vocab"]))


@pytest.fixture(scope="session")
def tiny_lm(tiny_data):
    cfg = M.ModelConfig(layers=2, heads=2, dim=32, ff_dim=64, max_len=48,
                        dropout=0.0, seed=9)
    return M.init_lm(cfg, len(tiny_data["vocab"]))
