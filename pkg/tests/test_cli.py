import json

from strongmam.cli import main

ID_ID = r"(\x. x) (\y. y)"


def test_normalize_prints_normal_form(capsys):
    assert main(["normalize", ID_ID]) == 0
    assert capsys.readouterr().out.strip() == r"\y. y"


def test_normalize_engines_agree(capsys):
    src = r"(\f x. f (f x)) (\f x. f (f x))"
    outs = []
    for engine in ("mam", "lsc", "beta"):
        assert main(["normalize", src, "--engine", engine]) == 0
        outs.append(capsys.readouterr().out.strip())
    assert len(set(outs)) == 1


def test_normalize_from_file(tmp_path, capsys):
    p = tmp_path / "t.lam"
    p.write_text(ID_ID + "\n")
    assert main(["normalize", str(p)]) == 0
    assert capsys.readouterr().out.strip() == r"\y. y"


def test_normalize_budget(capsys):
    assert main(["normalize", r"(\x. x x) (\x. x x)", "--budget", "50"]) == 3


def test_trace_text(capsys):
    assert main(["trace", r"\x. x"]) == 0
    assert capsys.readouterr().out.split() == ["C2", "C3", "C4", "FINAL"]


def test_trace_json(capsys):
    assert main(["trace", ID_ID, "--format", "json", "--states"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["schema"] == 1
    assert [s["label"] for s in doc["steps"]] == ["c1", "m", "e", "c2", "c3", "c4"]
    assert doc["outcome"] == "final"
    assert doc["steps"][1]["state"]["env"][0].startswith("[x_")


def test_compare_corpus_exit_zero(capsys):
    assert main(["compare", "--corpus", "church:3", "--budget", "100000"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.strip().endswith("passed")


def test_compare_json(capsys):
    assert main(["compare", ID_ID, "--format", "json"]) == 0
    (rep,) = json.loads(capsys.readouterr().out)
    assert rep["counters"]["m"] == 1 and rep["strategy"] == {"m": 1, "e": 1}
    assert set(rep["checks"]) >= {"distill", "invariants", "bilinear"}


def test_check_passes(capsys):
    assert main(["check", ID_ID]) == 0


def test_stats_table(capsys):
    assert main(["stats", "--corpus", "ski:1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split() == ["term", "|t0|", "m", "e", "c-ev", "c-bt",
                                "ev_bound", "bt_bound", "total_bound"]
    assert len(lines) == 121


def test_parse_error_exit_code(capsys):
    assert main(["normalize", r"(\x. x"]) == 2
    assert "parse error" in capsys.readouterr().err


def test_open_term_exit_code(capsys):
    assert main(["trace", "x"]) == 2
