"""Command-line surface: configuration precedence, the full pipeline of
subcommands on tiny data, manifests, and exit codes."""

import json

import pytest

from ogstyle import cli
from ogstyle.errors import ConfigError

TINY = [
    "--set", "synth.n_og=60", "--set", "synth.n_tr=50",
    "--set", "synth.n_val=16", "--set", "synth.n_test=24",
    "--set", "corpus.merges=80",
    "--set", "model.layers=1", "--set", "model.dim=32", "--set", "model.ff_dim=64",
    "--set", "dae.steps=30", "--set", "lm.steps=30",
    "--set", "train.epochs=1", "--set", "train.warm_start_steps=2",
    "--set", "train.checkpoint_every=4", "--set", "train.sup_batch_size=8",
    "--set", "train.unsup_batch_size=8", "--set", "train.val_batch_size=50",
    "--set", "train.warmup_updates=10",
    "--set", "spe.num_clusters=4", "--set", "spe.nprobe=4",
    "--set", "eval.hash_dim=2048", "--set", "eval.classifier_max_iter=80",
]


class TestParseConfig:
    def test_defaults_carry_documented_values(self):
        cfg = cli.parse_config()
        assert cfg["weights.alpha"] == 0.7
        assert cfg["weights.beta"] == 1.0 and cfg["weights.gamma"] == 1.0
        assert cfg["weights.tau"] == 0.1
        assert cfg["train.learning_rate"] == pytest.approx(3e-4)
        assert cfg["spe.threshold"] == pytest.approx(1.01)
        assert cfg["train.warm_start_steps"] == 300
        assert cfg["train.epochs"] == 30 and cfg["train.patience"] == 15

    def test_flag_beats_file_beats_default(self, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps({"weights.tau": 0.5}))
        assert cli.parse_config(p)["weights.tau"] == 0.5
        assert cli.parse_config(p, ["weights.tau=0.2"])["weights.tau"] == 0.2

    def test_unknown_key_is_named_in_the_error(self, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps({"aplha": 0.5}))
        with pytest.raises(ConfigError, match="aplha"):
            cli.parse_config(p)
        with pytest.raises(ConfigError, match="aplha"):
            cli.parse_config(None, ["aplha=0.5"])

    def test_malformed_json_rejected(self, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text("{not json")
        with pytest.raises(ConfigError, match="malformed"):
            cli.parse_config(p)

    def test_out_of_range_value_is_a_config_error(self):
        with pytest.raises(ConfigError, match="out-of-range"):
            cli.parse_config(None, ["weights.alpha=1.5"])

    def test_type_mismatch_rejected(self):
        with pytest.raises(ConfigError, match="integer"):
            cli.parse_config(None, ["train.epochs=3.5"])

    def test_config_hash_is_stable_and_value_sensitive(self):
        a = cli.parse_config(None, ["seed=1"])
        b = cli.parse_config(None, ["seed=1"])
        c = cli.parse_config(None, ["seed=2"])
        assert a.config_hash() == b.config_hash() != c.config_hash()


@pytest.fixture(scope="session")
def pipeline(tmp_path_factory):
    """Run every subcommand once on tiny data; commands build on each other."""
    root = tmp_path_factory.mktemp("cli_pipeline")
    data, art, lm_dir = root / "data", root / "artifacts", root / "lm"
    mined, sup_dir, joint_dir = root / "mined", root / "selfsup", root / "joint"
    ev_dir, rep_dir = root / "eval", root / "report"

    def run(*argv):
        rc = cli.main([*argv, *TINY])
        assert rc == 0, f"command {argv[0]} failed with rc={rc}"

    run("synth", "--out", str(data))
    run("pretrain-dae", "--og", str(data / "og_train.txt"),
        "--tr", str(data / "tr_train.txt"), "--out", str(art))
    run("train-lm", "--og", str(data / "og_train.txt"),
        "--artifacts", str(art), "--out", str(lm_dir))
    run("mine-pairs", "--og", str(data / "og_train.txt"),
        "--tr", str(data / "tr_train.txt"), "--artifacts", str(art),
        "--out", str(mined))
    run("train", "selfsup", "--og", str(data / "og_train.txt"),
        "--tr", str(data / "tr_train.txt"), "--artifacts", str(art),
        "--val-src", str(data / "mtr_val.txt"), "--val-tgt", str(data / "og_val.txt"),
        "--out", str(sup_dir))
    run("train", "joint", "--og", str(data / "og_train.txt"),
        "--tr", str(data / "tr_train.txt"), "--artifacts", str(art),
        "--lm", str(lm_dir / "lm.ckpt"), "--val-tr", str(data / "tr_val.txt"),
        "--out", str(joint_dir))
    run("transfer", "--model", str(joint_dir / "best.ckpt"),
        "--artifacts", str(art), "--input", str(data / "tr_test.txt"),
        "--output", str(root / "transferred.txt"))
    run("evaluate", "--artifacts", str(art), "--lm", str(lm_dir / "lm.ckpt"),
        "--og-test", str(data / "og_test.txt"), "--inputs", str(data / "tr_test.txt"),
        "--outputs", str(root / "transferred.txt"),
        "--clf-og", str(data / "og_train.txt"), "--clf-tr", str(data / "tr_train.txt"),
        "--setup", "joint-tiny", "--out", str(ev_dir))
    run("report", "--reports", str(ev_dir / "report.json"),
        "--log", str(joint_dir / "training_log.jsonl"), "--out", str(rep_dir))
    return {"root": root, "data": data, "art": art, "lm": lm_dir, "mined": mined,
            "selfsup": sup_dir, "joint": joint_dir, "eval": ev_dir, "report": rep_dir}


class TestPipeline:
    def test_synth_writes_all_splits_and_manifest(self, pipeline):
        data = pipeline["data"]
        for name in ("og_train.txt", "tr_train.txt", "og_val.txt", "tr_val.txt",
                     "mtr_val.txt", "og_test.txt", "tr_test.txt",
                     "alignment_train.tsv", "alignment_test.tsv", "manifest.json"):
            assert (data / name).exists(), name
        manifest = json.loads((data / "manifest.json").read_text())
        assert manifest["command"] == "synth"
        assert {"seed", "config_hash", "version", "config"} <= set(manifest)

    def test_synth_rerun_is_byte_identical(self, pipeline, tmp_path):
        rc = cli.main(["synth", "--out", str(tmp_path / "again"), *TINY])
        assert rc == 0
        for name in ("og_train.txt", "tr_train.txt", "tr_test.txt"):
            assert (tmp_path / "again" / name).read_bytes() == \
                (pipeline["data"] / name).read_bytes()

    def test_dae_artifacts_present(self, pipeline):
        art = pipeline["art"]
        for name in ("bpe.txt", "vocab.txt", "dae.ckpt", "dae_log.jsonl"):
            assert (art / name).exists()

    def test_mine_pairs_writes_tsv_with_header(self, pipeline):
        lines = (pipeline["mined"] / "pairs.tsv").read_text().splitlines()
        assert lines[0].startswith("epoch\ttr_id\tog_id")

    def test_training_outputs(self, pipeline):
        for d in ("selfsup", "joint"):
            out = pipeline[d]
            assert (out / "best.ckpt").exists()
            assert (out / "training_log.jsonl").exists()
            manifest = json.loads((out / "manifest.json").read_text())
            assert "best_step" in manifest and "pair_counts" in manifest

    def test_transfer_preserves_line_count_and_order(self, pipeline):
        inputs = (pipeline["data"] / "tr_test.txt").read_text().splitlines()
        outputs = (pipeline["root"] / "transferred.txt").read_text().splitlines()
        assert len(outputs) == len(inputs)

    def test_evaluate_report_is_schema_valid(self, pipeline):
        from ogstyle.evaluation import load_report
        report = load_report(pipeline["eval"] / "report.json")
        assert report["rows"][0]["setup"] == "joint-tiny"
        tsv = (pipeline["eval"] / "report.tsv").read_text().splitlines()
        assert tsv[0].split("\t")[0] == "Setup"

    def test_report_merges_and_renders_plots(self, pipeline):
        rep = pipeline["report"]
        report = json.loads((rep / "report.json").read_text())
        assert len(report["rows"]) == 1
        svgs = list(rep.glob("*.svg"))
        assert {"loss_curves.svg", "validation_score.svg", "accepted_pairs.svg"} <= \
            {p.name for p in svgs}


class TestExitCodes:
    def test_config_error_is_two(self, tmp_path):
        assert cli.main(["synth", "--out", str(tmp_path / "x"),
                         "--set", "aplha=1"]) == 2

    def test_missing_artifact_is_three(self, tmp_path, pipeline):
        data = pipeline["data"]
        rc = cli.main(["train-lm", "--og", str(data / "og_train.txt"),
                       "--artifacts", str(tmp_path / "void"),
                       "--out", str(tmp_path / "o"), *TINY])
        assert rc == 3

    def test_train_joint_without_lm_is_three(self, tmp_path, pipeline):
        data, art = pipeline["data"], pipeline["art"]
        rc = cli.main(["train", "joint", "--og", str(data / "og_train.txt"),
                       "--tr", str(data / "tr_train.txt"), "--artifacts", str(art),
                       "--val-tr", str(data / "tr_val.txt"),
                       "--out", str(tmp_path / "o"), *TINY])
        assert rc == 3

    def test_missing_corpus_is_four(self, tmp_path):
        rc = cli.main(["pretrain-dae", "--og", str(tmp_path / "nope.txt"),
                       "--tr", str(tmp_path / "nope2.txt"),
                       "--out", str(tmp_path / "o"), *TINY])
        assert rc == 4

    def test_vocab_hash_mismatch_is_four(self, tmp_path, pipeline):
        # artifacts from a different vocabulary must be refused
        data = pipeline["data"]
        other = tmp_path / "other_art"
        rc = cli.main(["pretrain-dae", "--og", str(data / "og_val.txt"),
                       "--tr", str(data / "tr_val.txt"), "--out", str(other),
                       *TINY, "--set", "dae.steps=1", "--set", "corpus.merges=20"])
        assert rc == 0
        rc = cli.main(["transfer", "--model", str(pipeline["joint"] / "best.ckpt"),
                       "--artifacts", str(other),
                       "--input", str(data / "tr_test.txt"),
                       "--output", str(tmp_path / "t.txt"), *TINY])
        assert rc == 4

    def test_env_var_roots_relative_outputs(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.ENV_OUT_ROOT, str(tmp_path))
        rc = cli.main(["synth", "--out", "rooted", *TINY])
        assert rc == 0
        assert (tmp_path / "rooted" / "og_train.txt").exists()
