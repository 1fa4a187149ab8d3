import hashlib
import json

import pytest

from oracles import church_value, nameless
from strongmam.corpus import (
    CorpusSpec, church, gen_corpus, gen_named_corpus, split_normalizing,
)
from strongmam.harness import compare_corpus, run_and_compare
from strongmam.terms import parse, show

ID_ID = r"(\x. x) (\y. y)"
TWO = r"(\f x. f (f x))"


def test_report_identity():
    r = run_and_compare(parse(ID_ID))
    assert r.outcome == "normal-form"
    assert (r.counters["m"], r.counters["e"], r.commutative) == (1, 1, 4)
    assert r.strategy == {"m": 1, "e": 1}
    assert r.normal_form == r"\y. y"
    assert r.ok, r.failures


def test_report_church_two_two():
    r = run_and_compare(parse(f"{TWO} {TWO}"))
    assert r.ok, r.failures
    assert church_value(nameless(parse(r.normal_form))) == 4
    assert r.strategy == {"m": r.counters["m"], "e": r.counters["e"]}


def test_report_omega_diverges_cleanly():
    r = run_and_compare(parse(r"(\x. x x) (\x. x x)"), budget=200)
    assert r.outcome == "diverged-at-budget"
    assert r.length == 200
    assert r.ok, r.failures
    assert all(v >= 0 for v in r.margins.values())


def test_report_arithmetic():
    r = run_and_compare(parse(f"{TWO} {TWO}"))
    assert r.length == r.principal + r.commutative
    assert r.commutative == r.c_ev + r.c_bt
    d = r.to_json()
    json.dumps(d)
    assert set(d["checks"]) >= {"distill", "invariants", "bilinear"}
    assert set(d["margins"]) == {"ev_bound", "bt_bound", "total_bound"}


# -- corpora ----------------------------------------------------------------------

def test_church_corpus_contents():
    names = dict(gen_named_corpus(CorpusSpec.parse("church:3")))
    assert {"2+2", "2×3", "2^3"} <= set(names)
    assert church_value(nameless(parse(church(3)))) == 3


def test_combinator_corpus_contains_skki():
    names = {n for n, _ in gen_named_corpus(CorpusSpec.parse("ski:2"))}
    assert "S K K I" in names


def test_random_corpus_snapshot():
    e = gen_named_corpus(CorpusSpec("random-closed", size=20, seed=42, count=10))
    shown = [show(t) for _, t in e]
    assert shown[:3] == [r"\a. (\b. a) (a a)", r"\a e e. a", r"\e. e (\d. d) (\b. e e)"]
    digest = hashlib.sha256("\n".join(shown).encode()).hexdigest()
    assert digest == "490d84546702e582852d05a37d7a502858187d98ddde092dee70a263a82cb344"


def test_random_corpus_is_seeded():
    a = [show(t) for t in gen_corpus(CorpusSpec("random-closed", size=30, seed=7, count=20))]
    b = [show(t) for t in gen_corpus(CorpusSpec("random-closed", size=30, seed=7, count=20))]
    c = [show(t) for t in gen_corpus(CorpusSpec("random-closed", size=30, seed=8, count=20))]
    assert a == b and a != c


def test_corpus_spec_parsing():
    assert CorpusSpec.parse("random:40:seed=42:count=5") == \
        CorpusSpec("random-closed", size=40, seed=42, count=5)
    with pytest.raises(ValueError):
        CorpusSpec.parse("nope:3")


def test_file_corpus(tmp_path):
    p = tmp_path / "terms.txt"
    p.write_text("# comment\n" + ID_ID + "\n\n" + r"\x. x  # trailing" + "\n")
    e = gen_named_corpus(CorpusSpec.parse(f"file:{p}"))
    assert len(e) == 2


def test_split_normalizing_routes_divergent_terms():
    entries = [("id", parse(ID_ID)), ("omega", parse(r"(\x. x x) (\x. x x)"))]
    norm, div = split_normalizing(entries, 100)
    assert [n for n, _ in norm] == ["id"] and [n for n, _ in div] == ["omega"]


def test_compare_corpus_keeps_input_order():
    entries = gen_named_corpus(CorpusSpec.parse("church:1"))
    reports = compare_corpus(entries, workers=2)
    assert [r.name for r in reports] == [n for n, _ in entries]
    assert all(r.ok for r in reports)
