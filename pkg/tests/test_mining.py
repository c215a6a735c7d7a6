"""Sentence-pair extraction: representations, margin scoring, filters."""

import numpy as np
import pytest
import torch

from ogstyle import mining as SP
from ogstyle.corpus import StyledCorpus
from ogstyle.errors import DataError

from spe_oracle import exhaustive_extract


class TestRepresent:
    def test_single_token_word_sum_is_the_embedding_row(self, tiny_model):
        rep = SP.represent(tiny_model, [7], SP.KIND_WORD_SUM)
        row = tiny_model.embed_src.weight[7].detach().numpy()
        np.testing.assert_allclose(rep.vector, row, atol=1e-6)
        assert rep.kind == SP.KIND_WORD_SUM

    def test_word_sum_is_permutation_invariant(self, tiny_model):
        a = SP.represent(tiny_model, [7, 9, 11], SP.KIND_WORD_SUM).vector
        b = SP.represent(tiny_model, [11, 7, 9], SP.KIND_WORD_SUM).vector
        np.testing.assert_allclose(a, b, atol=1e-6)

    def test_two_token_word_sum_matches_addition_oracle(self, tiny_model):
        rep = SP.represent(tiny_model, [7, 9], SP.KIND_WORD_SUM).vector
        w = tiny_model.embed_src.weight.detach().numpy()
        np.testing.assert_allclose(rep, w[7] + w[9], atol=1e-6)

    def test_encoder_sum_matches_manual_forward(self, tiny_model):
        from ogstyle.corpus import EOS_ID
        seq = [7, 9, 11]
        rep = SP.represent(tiny_model, seq, SP.KIND_ENCODER_SUM).vector
        tiny_model.eval()
        with torch.no_grad():
            states = tiny_model.encode(torch.tensor([seq + [EOS_ID]]))
        np.testing.assert_allclose(rep, states[0].sum(dim=0).numpy(), atol=1e-5)

    def test_empty_sentence_rejected(self, tiny_model):
        with pytest.raises(DataError):
            SP.represent(tiny_model, [], SP.KIND_WORD_SUM)

    def test_unknown_kind_rejected(self, tiny_model):
        with pytest.raises(DataError):
            SP.represent(tiny_model, [7], "bogus")


class TestMarginScore:
    def test_hand_value_unit_ratio(self):
        # sim 0.8 against neighborhoods averaging 0.8 -> 0.8/(0.4+0.4) = 1.0
        assert SP.margin_score(0.8, np.array([0.8]), np.array([0.8])) == pytest.approx(1.0)

    def test_similarity_twice_the_neighborhood_mean_scores_two(self):
        nn = np.array([0.3, 0.5])  # mean 0.4
        assert SP.margin_score(0.8, nn, nn) == pytest.approx(2.0)

    def test_zero_denominator_raises(self):
        with pytest.raises(ZeroDivisionError):
            SP.margin_score(0.5, np.array([0.0, 0.0]), np.array([0.0, 0.0]))

    def test_fixed_neighborhoods_preserve_cosine_ranking(self):
        nn = np.array([0.4, 0.6])
        sims = [0.2, 0.5, 0.9, 0.7]
        margins = [SP.margin_score(s, nn, nn) for s in sims]
        assert np.argsort(margins).tolist() == np.argsort(sims).tolist()

    def test_mismatched_neighborhoods_rejected(self):
        with pytest.raises(DataError):
            SP.margin_score(0.5, np.array([0.1]), np.array([0.1, 0.2]))


def _planted_state(monkeypatch, w_og, e_og, w_tr, e_tr, cfg, model=None):
    """Route representation lookups to planted matrices; sentences are the
    singleton [row] so the fake can index by row id."""
    w_og, e_og = np.asarray(w_og, np.float32), np.asarray(e_og, np.float32)
    w_tr, e_tr = np.asarray(w_tr, np.float32), np.asarray(e_tr, np.float32)

    def fake_represent(model_, seqs, kind, batch_size=128):
        source = {SP.KIND_WORD_SUM: (w_og, w_tr), SP.KIND_ENCODER_SUM: (e_og, e_tr)}[kind]
        og_m, tr_m = source
        rows = []
        for seq in seqs:
            table, row = (og_m, seq[1]) if seq[0] == 0 else (tr_m, seq[1])
            rows.append(table[row])
        return np.asarray(rows, dtype=np.float32)

    monkeypatch.setattr(SP, "_represent_many", fake_represent)
    og_corpus = StyledCorpus(
        sentences=[f"og {i}" for i in range(len(w_og))], style="OG",
        encoded=[[0, i] for i in range(len(w_og))],
    )
    tr_items = [(i, [1, i]) for i in range(len(w_tr))]
    state = SP.build_spe_indexes(model, og_corpus, cfg, seed=0)
    return og_corpus, tr_items, state


def _structured_vectors(dim=8, n=5, spread=0.3):
    rng = np.random.default_rng(0)
    common = np.ones(dim) / np.sqrt(dim)
    basis = np.eye(dim)[:n]
    return basis + spread * common, rng


class TestExtractPairs:
    def _scenario(self, monkeypatch, mode, threshold=1.01):
        og, rng = _structured_vectors()
        # tr0: both kinds point at og0 -> mutual accept
        # tr1: word kind points at og1, encoder kind exactly og2 (margin >> 1)
        # tr2: word kind points at og3, encoder kind ambiguous between og4/og0
        w_tr = np.stack([og[0] + 0.02, og[1] + 0.01, og[3] + 0.01])
        mixed = (og[4] + og[0]) / 2.0
        e_tr = np.stack([og[0] + 0.01, og[2], mixed])
        cfg = SP.SpeConfig(k=2, retrieval_depth=4, threshold=threshold, mode=mode,
                           num_clusters=1, nprobe=1)
        og_corpus, tr_items, state = _planted_state(monkeypatch, og, og, w_tr, e_tr, cfg)
        pairs = SP.extract_pairs(None, tr_items, og_corpus, state, cfg)
        return {p.tr_id: p for p in pairs}

    def test_mutual_top1_accepted_under_filter_one(self, monkeypatch):
        got = self._scenario(monkeypatch, SP.MODE_NO_THRESHOLD)
        assert got[0].og_id == 0
        assert got[0].rule == SP.RULE_MUTUAL
        assert got[0].w_score > 0 and got[0].e_score > 0

    def test_split_vote_rejected_under_filter_one(self, monkeypatch):
        got = self._scenario(monkeypatch, SP.MODE_NO_THRESHOLD)
        assert 1 not in got

    def test_threshold_rescues_high_margin_encoder_pair(self, monkeypatch):
        got = self._scenario(monkeypatch, SP.MODE_WITH_THRESHOLD, threshold=1.01)
        assert got[1].og_id == 2
        assert got[1].rule == SP.RULE_THRESHOLD
        assert got[1].e_score > 1.01

    def test_large_threshold_rejects_the_same_pair(self, monkeypatch):
        got = self._scenario(monkeypatch, SP.MODE_WITH_THRESHOLD, threshold=50.0)
        assert 1 not in got

    def test_superset_law_over_randomized_trials(self, monkeypatch):
        rng = np.random.default_rng(7)
        for trial in range(50):
            n_og, n_tr, dim = 30, 20, 6
            w_og = rng.normal(size=(n_og, dim))
            e_og = rng.normal(size=(n_og, dim))
            w_tr = rng.normal(size=(n_tr, dim))
            e_tr = rng.normal(size=(n_tr, dim))
            threshold = float(rng.uniform(0.9, 1.2))
            accepted = {}
            for mode in (SP.MODE_NO_THRESHOLD, SP.MODE_WITH_THRESHOLD):
                cfg = SP.SpeConfig(k=3, retrieval_depth=5, threshold=threshold,
                                   mode=mode, num_clusters=4, nprobe=4)
                og_c, tr_items, state = _planted_state(
                    monkeypatch, w_og, e_og, w_tr, e_tr, cfg)
                pairs = SP.extract_pairs(None, tr_items, og_c, state, cfg)
                accepted[mode] = {(p.tr_id, p.og_id) for p in pairs}
            assert accepted[SP.MODE_NO_THRESHOLD] <= accepted[SP.MODE_WITH_THRESHOLD]

    def test_huge_threshold_collapses_to_filter_one(self, monkeypatch):
        rng = np.random.default_rng(9)
        n_og, n_tr, dim = 25, 15, 6
        mats = [rng.normal(size=(n, dim)) for n in (n_og, n_og, n_tr, n_tr)]
        accepted = {}
        for mode, threshold in ((SP.MODE_NO_THRESHOLD, 1.0), (SP.MODE_WITH_THRESHOLD, 1e9)):
            cfg = SP.SpeConfig(k=3, retrieval_depth=5, threshold=threshold,
                               mode=mode, num_clusters=3, nprobe=3)
            og_c, tr_items, state = _planted_state(monkeypatch, *mats, cfg)
            pairs = SP.extract_pairs(None, tr_items, og_c, state, cfg)
            accepted[mode] = {(p.tr_id, p.og_id, p.rule) for p in pairs}
        assert accepted[SP.MODE_NO_THRESHOLD] == accepted[SP.MODE_WITH_THRESHOLD]

    def test_matches_exhaustive_oracle_on_planted_reps(self, monkeypatch):
        rng = np.random.default_rng(11)
        n_og, n_tr, dim = 60, 40, 8
        w_og = rng.normal(size=(n_og, dim))
        e_og = rng.normal(size=(n_og, dim))
        w_tr = rng.normal(size=(n_tr, dim))
        e_tr = rng.normal(size=(n_tr, dim))
        for mode in (SP.MODE_NO_THRESHOLD, SP.MODE_WITH_THRESHOLD):
            cfg = SP.SpeConfig(k=4, retrieval_depth=8, threshold=1.01, mode=mode,
                               num_clusters=6, nprobe=6)
            og_c, tr_items, state = _planted_state(
                monkeypatch, w_og, e_og, w_tr, e_tr, cfg)
            pairs = SP.extract_pairs(None, tr_items, og_c, state, cfg)
            got = {(p.tr_id, p.og_id, p.rule) for p in pairs}
            want = exhaustive_extract(
                {SP.KIND_WORD_SUM: w_tr, SP.KIND_ENCODER_SUM: e_tr},
                {SP.KIND_WORD_SUM: w_og, SP.KIND_ENCODER_SUM: e_og},
                cfg,
            )
            assert got == want

    def test_matches_exhaustive_oracle_with_real_model(self, tiny_data, tiny_model):
        og, tr = tiny_data["og"], tiny_data["tr"]
        for mode in (SP.MODE_NO_THRESHOLD, SP.MODE_WITH_THRESHOLD):
            cfg = SP.SpeConfig(k=4, retrieval_depth=8, threshold=1.01, mode=mode,
                               num_clusters=8, nprobe=8)
            state = SP.build_spe_indexes(tiny_model, og, cfg, seed=0)
            pairs = SP.extract_pairs(tiny_model, list(enumerate(tr.encoded)),
                                     og, state, cfg)
            got = {(p.tr_id, p.og_id, p.rule) for p in pairs}
            tr_reps = {k: SP._represent_many(tiny_model, tr.encoded, k) for k in SP.KINDS}
            og_reps = {k: SP._represent_many(tiny_model, og.encoded, k) for k in SP.KINDS}
            want = exhaustive_extract(tr_reps, og_reps, cfg)
            assert got == want

    def test_empty_og_corpus_rejected(self, tiny_model):
        cfg = SP.SpeConfig()
        empty = StyledCorpus(sentences=[], style="OG", encoded=[])
        with pytest.raises(DataError):
            SP.build_spe_indexes(tiny_model, empty, cfg)


class TestPairLog:
    def test_tsv_layout(self, tmp_path):
        pairs = [SP.AcceptedPair(3, 1, 1.2, 1.3, SP.RULE_MUTUAL),
                 SP.AcceptedPair(1, 2, 1.0, 1.05, SP.RULE_THRESHOLD)]
        path = tmp_path / "pairs.tsv"
        SP.write_pairs_tsv(path, epoch=2, pairs=pairs)
        lines = path.read_text().splitlines()
        assert lines[0] == "epoch\ttr_id\tog_id\tw_score\te_score\trule"
        assert lines[1].startswith("2\t1\t2\t1.000000\t1.050000\tthreshold")
        assert lines[2].startswith("2\t3\t1\t")

    def test_append_mode_keeps_header_once(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        SP.write_pairs_tsv(path, 0, [SP.AcceptedPair(0, 0, 1.0, 1.0, SP.RULE_MUTUAL)])
        SP.write_pairs_tsv(path, 1, [SP.AcceptedPair(1, 1, 1.0, 1.0, SP.RULE_MUTUAL)],
                           append=True)
        lines = path.read_text().splitlines()
        assert len(lines) == 3
        assert sum(1 for l in lines if l.startswith("epoch")) == 1
