import random

import pytest
from hypothesis import given, settings

from oracles import (
    db_normalize, lo_key, naive_lo_redex, naive_redexes, nameless, unfold_nameless,
)
from strongmam.corpus import random_lsc
from strongmam.lsc import (
    E, HOLE, M, Context, contract, decompose, enumerate_redexes,
    find_lo_redex_by_order, find_lo_redex_ilo, is_lo_context, is_neutral,
    is_normal, lfv_context, lo_compare, lsc_size, es_count, normalize_lo, plug,
    step_lo, step_lo_detail, unfold,
)
from strategies import closed_terms, lsc_terms
from strongmam.terms import (
    Lam, Step, Sub, Var, alpha_eq, named, parse, parse_lsc, same, size,
)

L, AL, AR, SB, SA = Step.LAM_BODY, Step.APP_LEFT, Step.APP_RIGHT, Step.SUB_BODY, Step.SUB_ARG


def v(name):
    return Var(named(name))


def names(vs):
    return {x.name for x in vs}


# -- free and left-free variables --------------------------------------------

def test_lfv_right_application():
    assert names(lfv_context(Context(((AR, None, v("y")),)))) == {"y"}


def test_lfv_under_lambda_hole_body():
    assert lfv_context(Context(((L, named("x"), None),))) == set()


def test_lfv_substitution_argument():
    t = parse("x y")
    c = Context(((SA, named("x"), t),))
    assert names(lfv_context(c)) == {"y"}


def test_lfv_hole_is_empty():
    assert lfv_context(HOLE) == set()


# -- normal, neutral --------------------------------------------------------

@pytest.mark.parametrize("src,neutral", [
    ("x", True), (r"\x. x", False), (r"(\x. x)[y<-z]", False), ("x y", True),
])
def test_is_neutral_examples(src, neutral):
    assert is_neutral(parse_lsc(src)) is neutral


@pytest.mark.parametrize("src,normal", [
    (r"\x. x", True), ("x[x<-y]", False), ("y[x<-z]", True), (r"(\x. x) y", False),
])
def test_is_normal_examples(src, normal):
    assert is_normal(parse_lsc(src)) is normal


# -- redexes ------------------------------------------------------------------

def test_redex_enumeration_examples():
    rs = enumerate_redexes(parse_lsc(r"(\x. x) y"))
    assert [(r.position, r.kind) for r in rs] == [((), M)]
    rs = enumerate_redexes(parse_lsc("x[x<-y]"))
    assert [(r.position, r.kind) for r in rs] == [((SB,), E)]
    # the occurrence is bound by the λ, not by the ES
    assert enumerate_redexes(parse_lsc(r"(\x. x)[x<-y]")) == []


def test_redexes_inside_arguments_only_on_request():
    t = parse_lsc(r"z[z<-(\a. a) b]")
    assert [r.kind for r in enumerate_redexes(t)] == [E]
    full = enumerate_redexes(t, in_arguments=True)
    assert sorted(r.kind.value for r in full) == ["e", "m"]


@settings(max_examples=300)
@given(lsc_terms())
def test_redexes_match_naive_enumeration(t):
    got = sorted(((r.position, r.kind.value) for r in enumerate_redexes(t)),
                 key=lambda r: lo_key(r[0]))
    want = sorted(naive_redexes(t), key=lambda r: lo_key(r[0]))
    assert got == want


# -- LO order ------------------------------------------------------------------

def test_lo_order_prefix():
    assert lo_compare((AL, L), (AL, L, SB)) == -1


def test_lo_order_substitution_argument():
    assert lo_compare((SA,), (SA, AR)) == -1


def test_lo_order_left_to_right():
    assert lo_compare((AL,), (AR,)) == -1
    assert lo_compare((AR,), (AL,)) == 1
    assert lo_compare((SB, AR), (SA,)) == -1


def test_lo_compare_rejects_equal():
    with pytest.raises(ValueError):
        lo_compare((AL,), (AL,))


@given(lsc_terms())
def test_lo_compare_is_a_total_order_on_redexes(t):
    rs = enumerate_redexes(t, in_arguments=True)
    for a in rs:
        for b in rs:
            if a.position != b.position:
                ab = lo_compare(a.position, b.position)
                assert ab == -lo_compare(b.position, a.position)
                assert (ab < 0) == (lo_key(a.position) < lo_key(b.position))


# -- LO redex search -----------------------------------------------------------

@pytest.mark.parametrize("src,pos,kind", [
    (r"((\x. x) y) ((\z. z) w)", (AL,), M),
    ("x[x<-y] z", (AL, SB), E),
    (r"y ((\x. x) z)", (AR,), M),
    (r"(x w)[x<-\y. y]", (SB, AL), E),
])
def test_lo_redex_examples(src, pos, kind):
    t = parse_lsc(src)
    for finder in (find_lo_redex_ilo, find_lo_redex_by_order):
        r = finder(t)
        assert (r.position, r.kind) == (pos, kind)


def test_no_redex_in_normal_term():
    t = parse(r"\a. a")
    assert find_lo_redex_ilo(t) is None and find_lo_redex_by_order(t) is None


@settings(max_examples=500)
@given(lsc_terms())
def test_lo_search_agrees_with_naive_minimum(t):
    want = naive_lo_redex(t)
    for finder in (find_lo_redex_ilo, find_lo_redex_by_order):
        r = finder(t)
        assert (None if r is None else (r.position, r.kind.value)) == want


# -- LO contexts --------------------------------------------------------------

@pytest.mark.parametrize("ctx,expected", [
    (HOLE, True),
    (Context(((AR, None, v("y")),)), True),
    (Context(((AR, None, parse(r"\x. x")),)), False),
    (Context(((AL, None, v("u")), (L, named("x"), None))), False),
    (Context(((SA, named("x"), v("x")),)), False),
])
def test_is_lo_context_examples(ctx, expected):
    for method in ("ilo", "clauses"):
        for active in (True, False):
            assert is_lo_context(ctx, method, active) is expected


@settings(max_examples=300)
@given(lsc_terms())
def test_lo_redex_sits_in_lo_context(t):
    r = find_lo_redex_ilo(t)
    if r is None:
        return
    c, _ = decompose(t, r.position)
    assert is_lo_context(c, "ilo") and is_lo_context(c, "clauses")


@settings(max_examples=200)
@given(lsc_terms())
def test_non_lo_redexes_are_not_in_lo_contexts(t):
    r = find_lo_redex_ilo(t)
    for other in enumerate_redexes(t):
        if r is not None and other.position != r.position:
            c, _ = decompose(t, other.position)
            assert not is_lo_context(c, "clauses")


@given(lsc_terms())
def test_decompose_plug_roundtrip(t):
    for r in enumerate_redexes(t, in_arguments=True):
        c, s = decompose(t, r.position)
        assert same(plug(c, s), t)


# -- contraction ---------------------------------------------------------------

def test_multiplicative_under_substitution_context():
    t = parse_lsc(r"(\x. x)[y<-u] z")
    out, kind = step_lo(t)
    assert kind is M
    assert isinstance(out, Sub) and out.v == named("y")
    inner = out.body
    assert isinstance(inner, Sub) and inner.arg == v("z") and inner.body == Var(inner.v)


def test_exponential_renames_crossed_binder():
    t = parse_lsc(r"(\y. x y)[x<-y]")
    out, kind = step_lo(t)
    assert kind is E
    want = parse_lsc(r"(\z. y z)[x<-y]")
    assert alpha_eq(out, want)
    assert out.body.v != named("y")


def test_exponential_at_top():
    out, kind = step_lo(parse_lsc("x[x<-y]"))
    assert kind is E and alpha_eq(out, parse_lsc("y[x<-y]"))


def test_exponential_copy_is_fresh():
    t = parse_lsc(r"x[x<-\a. a]")
    res = step_lo_detail(t)
    assert res.copied is not None and alpha_eq(res.copied, parse(r"\a. a"))
    assert res.copied.v != named("a")


def test_es_binder_never_captures_its_argument():
    # λb.(λb.b)(b …): the new ES on b must not capture the outer b
    t = parse(r"\b. (\b. b) (b b)")
    nf, m, e, done = normalize_lo(t, 100)
    assert done and nameless(unfold(nf)) == nameless(parse(r"\b. b b"))


# -- unfolding and measures ------------------------------------------------------

def test_unfold_examples():
    assert alpha_eq(unfold(parse_lsc(r"(x y)[x<-\z. z]")), parse(r"(\z. z) y"))
    assert unfold(parse_lsc("x[x<-y][y<-z]")) == v("z")
    t = parse(r"\x. x")
    assert unfold(t) == t


@given(lsc_terms())
def test_unfold_matches_nameless_oracle(t):
    assert nameless(unfold(t)) == unfold_nameless(nameless(t))


def test_measures():
    t = parse_lsc("x[x<-y]")
    assert lsc_size(t) == 3 and es_count(t) == 1
    assert es_count(parse(r"\x. x")) == 0
    assert es_count(parse_lsc("x[x<-y][y<-z]")) == 2


# -- the strategy against the β oracle ----------------------------------------

@settings(max_examples=300)
@given(closed_terms(30))
def test_strategy_normal_form_and_m_count_match_beta(t):
    want = db_normalize(nameless(t), 300)
    nf, m, e, done = normalize_lo(t, 50_000)
    if want is None:
        assert not done or m > 300
        return
    assert done
    assert nameless(unfold(nf)) == want[0]
    assert m == want[1]


@settings(max_examples=200)
@given(lsc_terms(20))
def test_strategy_on_lsc_terms_unfolds_to_beta_normal_form(t):
    want = db_normalize(unfold_nameless(nameless(t)), 200)
    nf, _, _, done = normalize_lo(t, 5_000)
    if want is None or not done:
        return
    assert nameless(unfold(nf)) == want[0]


@given(closed_terms(20))
def test_subterm_property_of_copies(t):
    from strongmam.terms import is_subterm_upto_names
    cur = t
    for _ in range(200):
        res = step_lo_detail(cur)
        if res is None:
            break
        if res.kind is E:
            assert is_subterm_upto_names(res.copied, t)
        cur = res.term


def test_random_lsc_is_deterministic():
    a = random_lsc(random.Random(3), 15)
    b = random_lsc(random.Random(3), 15)
    assert size(a) == size(b) == 15
    assert nameless(a) == nameless(b)
