"""Walkthrough: the whole system on small corpora, library-only.

Generates data, pretrains, trains the original-style language model, runs
joint training with unsupervised checkpoint selection, transfers the test
half, and prints the evaluation row.  The CLI wraps exactly these calls; see
the README for the command version.

Run:  python demos/03_full_pipeline.py             (two to three minutes)
"""

from ogstyle import corpus as C
from ogstyle import evaluation as E
from ogstyle import mining as SP
from ogstyle import models as M
from ogstyle import synth as S
from ogstyle import training as T
from ogstyle.losses import LossWeights

# data: train / validation / test splits from one sentence pool
grammar = S.default_grammar()
transform = S.default_style_transform(filler_prob=0.15, seed=0)
pool = S.sample_sentences(grammar, 1500 + 200 + 300, seed=0)
og_train_s, og_val_s, og_test_s = pool[:1500], pool[1500:1700], pool[1700:]
tr_train, _ = S.transform_subset(og_train_s, 1500, transform, seed=1)
tr_val, _ = S.transform_subset(og_val_s, 200, transform, seed=2)
tr_test, _ = S.transform_subset(og_test_s, 300, transform, seed=3)
og_train = C.StyledCorpus(og_train_s, "OG")

bpe = C.learn_bpe([og_train, tr_train], 400)
vocab = C.build_vocab([og_train, tr_train], bpe)
og_train = C.encode_corpus(og_train, vocab, bpe)
tr_train = C.encode_corpus(tr_train, vocab, bpe)
tr_val = C.encode_corpus(tr_val, vocab, bpe)
print(f"data: {len(og_train)}+{len(tr_train)} train, vocabulary {len(vocab)}")

cfg = M.ModelConfig(layers=2, heads=2, dim=64, ff_dim=128, max_len=48,
                    dropout=0.1, seed=4)
model = M.init_model(cfg, len(vocab))
T.pretrain_dae(model, [og_train, tr_train],
               C.NoiseConfig(mask_prob=0.15, window=2, seed=5),
               steps=1000, learning_rate=1e-3, warmup_updates=100, seed=6)
frozen_ref = M.TransformerEncDec(cfg, len(vocab))
frozen_ref.load_state_dict(model.state_dict())
print("denoising pretraining done")

lm = M.init_lm(cfg, len(vocab))
T.train_lm(lm, og_train, steps=800, learning_rate=5e-3, warmup_updates=100, seed=7)
print("original-style language model done")

tcfg = T.TrainConfig(epochs=4, warm_start_steps=100, checkpoint_every=25,
                     sup_batch_size=32, unsup_batch_size=32,
                     weights=LossWeights(alpha=0.7, beta=1.0, gamma=1.0, tau=0.1),
                     spe=SP.SpeConfig(num_clusters=16, nprobe=16), seed=8)
result = T.train_joint(model, lm, og_train, tr_train, tr_val.encoded, tcfg, frozen_ref)
model.load_state_dict(result.best_state)
print(f"joint training: {result.steps} steps, pairs per epoch {result.pair_counts}, "
      f"best validation {result.best_score:.3f} at step {result.best_step}")

outputs = T.transfer_sentences(model, vocab, bpe, tr_test.sentences)
for i in range(3):
    print("  in :", tr_test.sentences[i])
    print("  out:", outputs[i])

clf = E.train_classifier(C.StyledCorpus(og_train.sentences, "OG"),
                         C.StyledCorpus(tr_train.sentences, "TR"), seed=9)
in_enc = [C.encode(vocab, bpe, s) for s in tr_test.sentences]
out_enc = [C.encode(vocab, bpe, s) for s in outputs]
row = E.EvalReport(
    setup="joint-demo",
    acc_full=E.accuracy_full(clf, og_test_s, outputs),
    acc_half=E.accuracy_half(clf, outputs),
    og_like_count=E.og_like(clf, outputs),
    content_f1=E.content_f1(frozen_ref, in_enc, out_enc),
    ppl_og=E.perplexity(lm, out_enc),
    ttr=E.ttr(outputs),
    ld=E.lexical_density(outputs, E.load_function_words()),
    n_identical=E.count_identical(tr_test.sentences, outputs),
)
print("\nreference: classifier on raw (tr_test, og_test) =",
      round(E.accuracy_full(clf, og_test_s, tr_test.sentences), 2))
print(E.report_tsv(E.build_report([row])))
