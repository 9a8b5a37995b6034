import json

import pytest

from metagrammar.cli import main
from metagrammar.problem import parse_problem
from metagrammar.rules import loads_metagrammar
from metagrammar.synthetic import write_synthetic_corpus

from conftest import DOUBLE, HANDWRITTEN


@pytest.fixture
def double_file(tmp_path):
    path = tmp_path / "double.sl"
    path.write_text(DOUBLE)
    return path


def test_parse_echoes_normal_form(double_file, capsys):
    assert main(["parse", str(double_file)]) == 0
    out = capsys.readouterr().out
    assert parse_problem(out) == parse_problem(DOUBLE)


def test_emit_attaches_grammar(double_file, capsys):
    assert main(["emit", str(double_file), "--metagrammar", "reduced"]) == 0
    out = capsys.readouterr().out
    assert parse_problem(out).attached_grammar is not None


def test_run_builtin(double_file, capsys):
    assert main(["run", str(double_file), "--solver", "builtin", "--timeout", "30"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["status"] == "solved" and rec["solution_text"]


def test_run_with_metagrammar_file(double_file, tmp_path, capsys):
    mg = tmp_path / "m.mg"
    mg.write_text("(metagrammar tiny (args arguments) (plus operators bvadd))\n")
    assert main(["run", str(double_file), "--metagrammar", str(mg), "--solver", "builtin"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert (rec["metagrammar_id"], rec["cost"], rec["solution_text"]) == ("tiny", 2, "(bvadd x x)")


def test_exit_codes(tmp_path, double_file, capsys):
    assert main(["parse", str(tmp_path / "missing.sl")]) == 1
    bad = tmp_path / "bad.sl"
    bad.write_text("(set-logic BV)(synth-fun")
    assert main(["parse", str(bad)]) == 1
    assert main(["emit", str(double_file), "--metagrammar", "no-such"]) == 1
    assert main(["run", str(double_file), "--solver", "cvc5 --no-placeholder"]) == 1
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == 1
    assert "usage" in capsys.readouterr().err


def test_internal_error_exit_code(double_file, monkeypatch):
    import metagrammar.cli as cli

    def boom(text):
        raise RuntimeError("boom")

    monkeypatch.setattr(cli, "parse_problem", boom)
    assert main(["parse", str(double_file)]) == 2


def test_sample_split(capsys):
    manifest = HANDWRITTEN / "manifest.csv"
    assert main(["sample", "--corpus", str(HANDWRITTEN), "--manifest", str(manifest), "--per-category", "2"]) == 0
    split = json.loads(capsys.readouterr().out)
    assert not {m["path"] for m in split["training"]} & {m["path"] for m in split["holdout"]}
    assert len(split["training"]) == 2 * len({m["category"] for m in split["training"]})


def test_train_eval_report(tmp_path, capsys):
    corpus = write_synthetic_corpus(tmp_path / "syn")
    common = ["--solver", "builtin", "--cost-mode", "deterministic_cost", "--max-term-size", "5",
              "--max-candidates", "5000", "--max-parallel", "1"]
    out = tmp_path / "out"
    assert main(["train", "--corpus", str(corpus), "--manifest", str(corpus / "manifest.csv"),
                 "--per-category", "2", "--out", str(out)] + common) == 0
    final = loads_metagrammar((out / "final.mg").read_text())
    assert len(final) < 9
    capsys.readouterr()
    cache = tmp_path / "cache.jsonl"
    args = ["--corpus", str(corpus), "--manifest", str(corpus / "manifest.csv"), "--metagrammar",
            str(out / "final.mg"), "--split", str(out / "split.json"), "--cache", str(cache)] + common
    assert main(["eval"] + args + ["--csv", str(tmp_path / "r.csv")]) == 0
    first = capsys.readouterr()
    assert "solver runs: 12" in first.err  # 6 holdout x (candidate, baseline)
    assert main(["report"] + args) == 0
    assert capsys.readouterr().out == first.out
    assert (tmp_path / "r.csv").read_text().startswith("category,")


def test_report_needs_cached_results(tmp_path, capsys):
    corpus = write_synthetic_corpus(tmp_path / "syn")
    rc = main(["report", "--corpus", str(corpus), "--metagrammar", "reduced", "--cache", str(tmp_path / "none.jsonl")])
    assert rc == 1 and "missing" in capsys.readouterr().err
