"""
Test script for the command pipeline: operations, controller and command line
"""

import json
import os

import pytest

from TermNMT.ctrl.config_manager import ConfigManager
from TermNMT.ctrl.pipeline_controller import PipelineController
from TermNMT.logger.logging_config import reset_logging
from TermNMT.nmt.checkpoint import load_checkpoint
from TermNMT.ops.pipeline_operations import PipelineOperations
from TermNMT.term_nmt_app import main

SMALL_RUN = [
    "synth.train_pairs=60",
    "synth.dev_pairs=10",
    "synth.test_pairs=6",
    "synth.nbest_size=3",
    "nmt.layers=1",
    "nmt.hidden_size=8",
    "nmt.minibatch=16",
    "nmt.epochs=1",
    "nmt.eval_every_batches=2",
    "decode.beam_size=2",
    "decode.max_len=20",
]


@pytest.fixture(autouse=True)
def isolated_logging():
    reset_logging()
    yield
    reset_logging()


def cli(tmp_path, *args, overrides=SMALL_RUN, seed=7):
    argv = ["--seed", str(seed), "--set", f"log_dir={tmp_path / 'logs'}"]
    for assignment in overrides:
        argv += ["--set", assignment]
    return main(argv + list(args))


def read_json(path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def test_synth_operation_writes_fixtures(tmp_path):
    """Synthesize through the operations backend"""
    progress = []
    ops = PipelineOperations(progress_callback=progress.append)
    config = ConfigManager({"synth": {"train_pairs": 20, "dev_pairs": 4, "test_pairs": 4}})
    success, message = ops.synth(str(tmp_path), config)
    assert success, message
    assert "20/4/4" in message
    names = sorted(os.path.basename(p) for p in ops.written_files)
    assert "phrase_table.txt" in names
    assert "test.nbest.txt" in names
    assert len((tmp_path / "test.ref.txt").read_text(encoding="utf-8").splitlines()) == 4
    assert progress[-1] == 100


def test_operation_failure_is_reported_not_raised(tmp_path):
    ops = PipelineOperations()
    success, message = ops.evaluate(
        str(tmp_path / "missing.txt"), str(tmp_path / "missing.txt"), str(tmp_path / "eval.json"), ConfigManager()
    )
    assert not success
    assert message.startswith("Evaluation failed:")


def test_preprocess_needs_phrase_table_for_terms(tmp_path):
    ops = PipelineOperations()
    assert ops.synth(str(tmp_path), ConfigManager({"synth": {"train_pairs": 5, "dev_pairs": 1, "test_pairs": 1}}))[0]
    success, message = ops.preprocess(str(tmp_path / "train.txt"), None, None, str(tmp_path / "prep"), ConfigManager())
    assert not success
    assert "phrase_table" in message


def test_synth_is_deterministic(tmp_path):
    out = tmp_path / "synth"
    assert cli(tmp_path, "--out-dir", str(out), "synth") == 0
    first = (out / "manifest.synth.json").read_text(encoding="utf-8")
    assert cli(tmp_path, "--out-dir", str(out), "synth") == 0
    second = (out / "manifest.synth.json").read_text(encoding="utf-8")
    assert first == second

    manifest = json.loads(first)
    assert manifest["command"] == "synth"
    assert manifest["seed"] == 7
    assert [o["path"] for o in manifest["outputs"]] == sorted(o["path"] for o in manifest["outputs"])
    assert "train.txt" in [o["path"] for o in manifest["outputs"]]
    assert set(manifest["versions"]) == {"TermNMT", "numpy", "scipy", "sacrebleu", "python"}


def test_different_seed_changes_corpus(tmp_path):
    assert cli(tmp_path, "--out-dir", str(tmp_path / "a"), "synth", seed=1) == 0
    assert cli(tmp_path, "--out-dir", str(tmp_path / "b"), "synth", seed=2) == 0
    assert (tmp_path / "a" / "train.txt").read_text(encoding="utf-8") != (tmp_path / "b" / "train.txt").read_text(
        encoding="utf-8"
    )


def test_evaluate_identical_files(tmp_path, capsys):
    text = tmp_path / "text.txt"
    text.write_text("the cat sat on the mat\na b c d e\n", encoding="utf-8")
    out = tmp_path / "eval"
    code = cli(tmp_path, "--out-dir", str(out), "evaluate", "--hypothesis", str(text), "--reference", str(text))
    assert code == 0
    assert "BLEU = 100.00" in capsys.readouterr().out
    report = read_json(out / "eval.json")
    assert report["bleu"] == pytest.approx(100.0)
    assert report["unknown_tokens"] == 0


def test_cli_errors(tmp_path, capsys):
    assert cli(tmp_path, "--out-dir", str(tmp_path), "evaluate") == 1
    assert "error: evaluate:" in capsys.readouterr().err
    assert cli(tmp_path, "--out-dir", str(tmp_path), "train", overrides=["nmt.bogus=1"]) == 1
    with pytest.raises(SystemExit) as info:
        main(["translate-everything"])
    assert info.value.code == 2


def test_controller_rejects_unknown_command(tmp_path):
    controller = PipelineController(ConfigManager({"paths": {"out_dir": str(tmp_path)}}))
    results = []
    controller.set_completion_callback(lambda success, message, output: results.append((success, output)))
    assert controller.run_command("compile") == (False, "Unknown command 'compile'")
    success, message = controller.run_command("train")
    assert not success
    assert "paths.data_dir" in message
    assert results == [(False, None)]


def test_full_pipeline_smoke(tmp_path):
    """synth -> extract-terms -> preprocess -> train -> translate -> rerank -> evaluate"""
    data = tmp_path / "data"
    assert cli(tmp_path, "--out-dir", str(data), "synth") == 0

    terms = tmp_path / "terms"
    assert cli(tmp_path, "--out-dir", str(terms), "extract-terms", "--corpus", str(data / "train.txt")) == 0
    first_line = (terms / "terms.txt").read_text(encoding="utf-8").splitlines()[0].split("\t")
    assert len(first_line) == 5
    assert cli(
        tmp_path, "--out-dir", str(terms), "extract-terms", "--monolingual", "--source", str(data / "test.src.txt")
    ) == 0

    prep = tmp_path / "prep"
    assert (
        cli(
            tmp_path,
            "--out-dir",
            str(prep),
            "preprocess",
            "--corpus",
            str(data / "train.txt"),
            "--dev-corpus",
            str(data / "dev.txt"),
            "--phrase-table",
            str(data / "phrase_table.txt"),
        )
        == 0
    )
    stats = read_json(prep / "term_stats.json")
    assert stats["training_pairs"] == 60
    assert stats["identified_by_word_alignment"] == 0
    assert stats["identified_by_phrase_table"] == stats["extracted_term_occurrences"]
    assert "TT_" in (prep / "train.tok.txt").read_text(encoding="utf-8")

    model_dir = tmp_path / "model"
    assert cli(tmp_path, "--out-dir", str(model_dir), "train", "--data-dir", str(prep)) == 0
    model, source_vocab, target_vocab = load_checkpoint(str(model_dir / "model.npz"))
    assert model.config.hidden_size == 8
    assert len(target_vocab) == model.config.target_vocab_size
    assert read_json(model_dir / "history.json")["batches"] == 4

    common = ["--checkpoint", str(model_dir / "model.npz"), "--phrase-table", str(data / "phrase_table.txt")]
    out = tmp_path / "out"
    assert cli(tmp_path, "--out-dir", str(out), "translate", *common, "--source", str(data / "test.src.txt")) == 0
    assert len((out / "translations.txt").read_text(encoding="utf-8").splitlines()) == 6
    assert "TT_" not in (out / "translations.txt").read_text(encoding="utf-8")
    diagnostics = read_json(out / "translations.diagnostics.json")
    assert diagnostics["totals"]["sentences"] == 6
    assert diagnostics["use_terms"] is True

    assert (
        cli(
            tmp_path,
            "--out-dir",
            str(out),
            "rerank",
            *common,
            "--source",
            str(data / "test.src.txt"),
            "--nbest",
            str(data / "test.nbest.txt"),
        )
        == 0
    )
    ranked = (out / "rerank.tsv").read_text(encoding="utf-8").splitlines()
    nbest_lines = (data / "test.nbest.txt").read_text(encoding="utf-8").splitlines()
    assert len(ranked) == 1 + len(nbest_lines)
    assert len((out / "rerank.best.txt").read_text(encoding="utf-8").splitlines()) == 6

    assert (
        cli(
            tmp_path,
            "--out-dir",
            str(out),
            "evaluate",
            "--hypothesis",
            str(out / "rerank.best.txt"),
            "--reference",
            str(data / "test.ref.txt"),
        )
        == 0
    )
    report = read_json(out / "eval.json")
    assert 0.0 <= report["bleu"] <= 100.0
    manifest = read_json(out / "manifest.evaluate.json")
    assert [o["path"] for o in manifest["outputs"]] == ["eval.json"]


def test_train_fifty_pairs_ten_epochs(tmp_path):
    data, prep, model_dir = tmp_path / "data", tmp_path / "prep", tmp_path / "model"
    overrides = [*SMALL_RUN, "synth.train_pairs=50", "nmt.epochs=10"]
    assert cli(tmp_path, "--out-dir", str(data), "synth", overrides=overrides) == 0
    table = ["--phrase-table", str(data / "phrase_table.txt")]
    corpus = ["--corpus", str(data / "train.txt"), "--dev-corpus", str(data / "dev.txt")]
    assert cli(tmp_path, "--out-dir", str(prep), "preprocess", *corpus, *table, overrides=overrides) == 0
    assert cli(tmp_path, "--out-dir", str(model_dir), "train", "--data-dir", str(prep), overrides=overrides) == 0
    history = read_json(model_dir / "history.json")
    assert len(history["epoch_losses"]) == 10
    model, _, _ = load_checkpoint(str(model_dir / "model.npz"))
    assert model.config.layers == 1


TINY_MODEL = [
    "nmt.layers=1",
    "nmt.hidden_size=16",
    "nmt.minibatch=2",
    "nmt.epochs=40",
    "nmt.eval_every_batches=1000",
    "nmt.lr0=1.0",
    "nmt.init_range=0.1",
    "decode.beam_size=3",
    "decode.max_len=5",
]


def write_lines(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return str(path)


@pytest.fixture(scope="module")
def single_term_run(tmp_path_factory):
    """Models trained on one seen term; the test sentence is one unseen term"""
    base = tmp_path_factory.mktemp("single_term")
    files = {
        "corpus": write_lines(base / "train.txt", ["c/noun d/noun\tR/noun S/noun"] * 10),
        "dev": write_lines(base / "dev.txt", ["c/noun d/noun\tR/noun S/noun"] * 2),
        "table": write_lines(base / "table.txt", ["c d ||| R S ||| 0.9", "a b ||| P Q ||| 0.8", "a b ||| P ||| 0.1"]),
        "source": write_lines(base / "source.txt", ["a/noun b/noun", "a/noun b/noun"]),
    }
    for name, extra in (("terms", []), ("baseline", ["--no-terms"])):
        prep, model = base / f"{name}_prep", base / f"{name}_model"
        corpus = ["--corpus", files["corpus"], "--dev-corpus", files["dev"], "--phrase-table", files["table"]]
        assert cli(base, "--out-dir", str(prep), "preprocess", *corpus, *extra, overrides=TINY_MODEL) == 0
        assert cli(base, "--out-dir", str(model), "train", "--data-dir", str(prep), overrides=TINY_MODEL) == 0
        files[f"{name}_checkpoint"] = str(model / "model.npz")
    reset_logging()
    return base, files


def translate_single_term(tmp_path, files, name, extra=()):
    out = tmp_path / name
    args = ["--checkpoint", files[f"{name}_checkpoint"], "--phrase-table", files["table"], "--source", files["source"]]
    assert cli(tmp_path, "--out-dir", str(out), "translate", *args, *extra, overrides=TINY_MODEL) == 0
    return out


def test_preprocess_alignment_only_corpus(tmp_path):
    corpus = write_lines(
        tmp_path / "train.txt",
        [
            "a/noun b/noun wa/particle z/verb\tX/noun Y/noun ga/particle Z/verb\t0-0 1-1 2-2 3-3",
            "c/noun no/particle d/noun\tD/noun de/particle C/noun\t0-2 1-1 2-0",
        ],
    )
    table = write_lines(tmp_path / "table.txt", [])
    out = tmp_path / "prep"
    assert cli(tmp_path, "--out-dir", str(out), "preprocess", "--corpus", corpus, "--phrase-table", table) == 0
    stats = read_json(out / "term_stats.json")
    assert stats["extracted_term_occurrences"] == 3
    assert stats["identified_by_word_alignment"] == 3
    assert stats["identified_by_phrase_table"] == 0
    assert stats["unmatched"] == 0
    lines = (out / "train.tok.txt").read_text(encoding="utf-8").splitlines()
    assert lines == ["TT_1 wa z\tTT_1 ga Z", "TT_1 no TT_2\tTT_2 de TT_1"]
    methods = {line.split("\t")[4] for line in (out / "term_pairs.txt").read_text(encoding="utf-8").splitlines()}
    assert methods == {"word_alignment"}


def test_translate_sentence_that_is_one_term(tmp_path, single_term_run):
    _, files = single_term_run
    out = translate_single_term(tmp_path, files, "terms")
    assert (out / "translations.txt").read_text(encoding="utf-8").splitlines() == ["P Q", "P Q"]
    sentence = read_json(out / "translations.diagnostics.json")["sentences"][0]
    assert sentence["source_tokens"] == ["TT_1"]


def test_term_tokens_reduce_unknown_tokens(tmp_path, single_term_run):
    _, files = single_term_run
    terms = read_json(translate_single_term(tmp_path, files, "terms") / "translations.diagnostics.json")
    baseline = read_json(
        translate_single_term(tmp_path, files, "baseline", ["--no-terms"]) / "translations.diagnostics.json"
    )
    assert baseline["totals"]["unknown_input"] == 4
    assert terms["totals"]["unknown_tokens"] < baseline["totals"]["unknown_tokens"]


def test_rerank_promotes_candidate_and_keeps_single_entry(tmp_path, single_term_run):
    _, files = single_term_run
    nbest = write_lines(
        tmp_path / "nbest.txt",
        [
            "0 ||| Z Z ||| LM0= -1.0 ||| -1.0",
            "0 ||| P Q Z ||| LM0= -1.5 ||| -1.5",
            "0 ||| P Q ||| LM0= -2.0 ||| -2.0",
            "1 ||| R S ||| LM0= -3.0 ||| -3.0",
        ],
    )
    out = tmp_path / "rerank"
    args = ["--checkpoint", files["terms_checkpoint"], "--phrase-table", files["table"], "--source", files["source"]]
    assert cli(tmp_path, "--out-dir", str(out), "rerank", *args, "--nbest", nbest, overrides=TINY_MODEL) == 0
    assert (out / "rerank.best.txt").read_text(encoding="utf-8").splitlines() == ["P Q", "R S"]
    records = [line.split("\t") for line in (out / "rerank.tsv").read_text(encoding="utf-8").splitlines()[1:]]
    assert (records[0][0], records[0][1], records[0][5]) == ("0", "1", "P Q")
    assert sorted(r[1] for r in records if r[0] == "0") == ["1", "2", "3"]
    assert (records[-1][0], records[-1][1], records[-1][5]) == ("1", "1", "R S")


def _run_variant(tmp_path, data, name, extra):
    overrides = [
        "nmt.layers=1",
        "nmt.hidden_size=64",
        "nmt.minibatch=32",
        "nmt.epochs=12",
        "nmt.eval_every_batches=60",
        "decode.beam_size=4",
    ]
    prep, model, out = (tmp_path / f"{name}_{step}" for step in ("prep", "model", "out"))
    table = ["--phrase-table", str(data / "phrase_table.txt")]
    assert (
        cli(
            tmp_path,
            "--out-dir",
            str(prep),
            "preprocess",
            "--corpus",
            str(data / "train.txt"),
            "--dev-corpus",
            str(data / "dev.txt"),
            *table,
            *extra,
            overrides=overrides,
        )
        == 0
    )
    assert cli(tmp_path, "--out-dir", str(model), "train", "--data-dir", str(prep), overrides=overrides) == 0
    checkpoint = ["--checkpoint", str(model / "model.npz")]
    source = ["--source", str(data / "test.src.txt")]
    translate = ["translate", *checkpoint, *table, *source, *extra]
    assert cli(tmp_path, "--out-dir", str(out), *translate, overrides=overrides) == 0
    assert (
        cli(
            tmp_path,
            "--out-dir",
            str(out),
            "evaluate",
            "--hypothesis",
            str(out / "translations.txt"),
            "--reference",
            str(data / "test.ref.txt"),
            overrides=overrides,
        )
        == 0
    )
    totals = read_json(out / "translations.diagnostics.json")["totals"]
    return read_json(out / "eval.json")["bleu"], totals["unknown_tokens"]


@pytest.mark.slow
def test_term_tokens_beat_baseline_on_unseen_terms(tmp_path):
    """Token substitution wins when test terms are missing from training data"""
    data = tmp_path / "data"
    synth = ["synth.train_pairs=2000", "synth.dev_pairs=200", "synth.test_pairs=200"]
    assert cli(tmp_path, "--out-dir", str(data), "synth", overrides=synth) == 0

    terms_bleu, terms_unknown = _run_variant(tmp_path, data, "terms", [])
    baseline_bleu, baseline_unknown = _run_variant(tmp_path, data, "baseline", ["--no-terms"])
    assert terms_bleu >= baseline_bleu + 10.0
    assert terms_unknown < baseline_unknown
