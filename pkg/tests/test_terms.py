import pytest
from hypothesis import given, settings

from oracles import church_value, count_nodes, db_normalize, nameless, subtree_shapes
from strategies import closed_terms, lsc_terms
from strongmam.terms import (
    App, BudgetExhausted, Lam, NormalForm, ParseError, Sub, Var, alpha_eq,
    beta_lo_step, beta_normalize, bound_vars, fv, is_subterm_upto_names,
    is_well_named, named, parse, parse_lsc, rename_fresh, show, size, skeleton,
    skeleton_key, substitute, well_name,
)

CHURCH2 = r"\f. \x. f (f x)"
OMEGA = r"(\x. x x) (\x. x x)"


# -- parsing and printing ----------------------------------------------------

def test_parse_identity():
    t = parse(r"\x. x")
    assert isinstance(t, Lam) and t.body == Var(t.v)


def test_parse_omega_shape():
    t = parse(OMEGA)
    assert isinstance(t, App)
    for half in (t.fun, t.arg):
        assert isinstance(half, Lam)
        assert half.body == App(Var(half.v), Var(half.v))


def test_parse_church_two():
    assert church_value(nameless(parse(CHURCH2))) == 2


def test_parse_multi_binder_and_unicode_lambda():
    assert alpha_eq(parse(r"\f x. f x"), parse("λf. λx. f x"))


def test_application_is_left_associative():
    t = parse("a b c")
    assert isinstance(t.fun, App) and t.fun.fun == Var(named("a"))


def test_lambda_extends_right():
    t = parse(r"a \x. x b")
    assert isinstance(t.arg, Lam) and isinstance(t.arg.body, App)


def test_es_suffix_wraps_chain_so_far():
    t = parse_lsc("f a[x<-y] b")
    assert isinstance(t, App) and isinstance(t.fun, Sub)
    assert t.fun.body == App(Var(named("f")), Var(named("a")))


def test_pure_parser_rejects_es():
    with pytest.raises(ParseError):
        parse("x[x<-y]")


@pytest.mark.parametrize("bad", ["", r"\x x", "(a b", "a)", r"\. x", "x[x<-]"])
def test_parse_errors_carry_offset(bad):
    with pytest.raises(ParseError) as ei:
        parse_lsc(bad)
    assert ei.value.offset >= 0


@given(closed_terms())
def test_show_parse_roundtrip_pure(t):
    assert nameless(parse(show(t))) == nameless(t)


@given(lsc_terms())
def test_show_parse_roundtrip_lsc(t):
    u = parse_lsc(show(t))
    # free variables are re-interned by name, so compare shapes and free names
    assert skeleton_key(u) == skeleton_key(t)
    assert {v.name for v in fv(u)} == {v.name for v in fv(t)}


def test_show_distinguishes_clashing_names():
    x1, x2 = named("x"), named("x").__class__(10_000_001, "x")
    s = show(App(Var(x1), Var(x2)))
    a, b = s.split()
    assert a != b


# -- size ----------------------------------------------------------------------

@pytest.mark.parametrize("src,n", [(r"\x. x", 2), (r"(\x. x) (\y. y)", 5), (OMEGA, 9)])
def test_size_examples(src, n):
    assert size(parse(src)) == n


def test_size_church_two_by_fold():
    # constructor count: two λ, two applications, three variables
    t = parse(CHURCH2)
    assert count_nodes(t) == 7
    assert size(t) == count_nodes(t)


@given(lsc_terms())
def test_size_matches_fold(t):
    assert size(t) == count_nodes(t)


# -- alpha, free variables, well-naming --------------------------------------

@pytest.mark.parametrize("a,b,eq", [
    (r"\x. x", r"\y. y", True),
    (r"\x. \y. x", r"\a. \b. b", False),
    (r"\x. x y", r"\z. z y", True),
    (r"\x. x y", r"\z. z w", False),
])
def test_alpha_eq_examples(a, b, eq):
    assert alpha_eq(parse(a), parse(b)) is eq


@given(lsc_terms())
def test_alpha_eq_agrees_with_nameless(t):
    u = rename_fresh(t)
    assert alpha_eq(t, u)
    assert nameless(t) == nameless(u)


def test_fv_lsc():
    assert {v.name for v in fv(parse_lsc("x[x<-y]"))} == {"y"}
    assert {v.name for v in fv(parse_lsc(r"(x y)[x<-\z. z]"))} == {"y"}


def test_well_name_shadowing():
    t = well_name(parse(r"\x. \x. x"))
    assert t.v != t.body.v and t.body.body == Var(t.body.v)
    assert is_well_named(t)


def test_well_name_idempotent_on_well_named():
    t = parse(r"\x. x")
    assert well_name(t) == t


def test_well_name_duplicates_across_subterms():
    t = well_name(parse(r"(\x. x) (\x. x)"))
    assert t.fun.v != t.arg.v
    assert alpha_eq(t, parse(r"(\x. x) (\y. y)"))


@given(closed_terms())
def test_well_name_property(t):
    u = well_name(t)
    assert is_well_named(u)
    assert nameless(u) == nameless(t)
    assert not (set(bound_vars(u)) & fv(u))


# -- renaming and skeletons ----------------------------------------------------

def test_rename_fresh_examples():
    t = parse(r"\y. y")
    u = rename_fresh(t)
    assert u.v != t.v and alpha_eq(t, u)
    x = Var(named("x"))
    assert rename_fresh(x) == x
    k = parse(r"\a. \b. a b")
    k2 = rename_fresh(k)
    assert skeleton_key(k2) == skeleton_key(k)
    assert not (set(bound_vars(k2)) & set(bound_vars(k)))


@pytest.mark.parametrize("src,shown", [
    (r"\x. x", r"\*. *"),
    ("x y", "* *"),
    (r"\x. \y. x", r"\* *. *"),
])
def test_skeleton_examples(src, shown):
    assert show(skeleton(parse(src))) == shown


@pytest.mark.parametrize("u,t,expected", [
    (r"\y. y", r"(\x. x) (\z. z z)", True),
    ("x x", r"\x. x", False),
    ("f (f x)", CHURCH2, True),
])
def test_is_subterm_upto_names_examples(u, t, expected):
    assert is_subterm_upto_names(parse(u), parse(t)) is expected


@given(closed_terms(20), closed_terms(8))
def test_is_subterm_upto_names_brute_force(t, u):
    shape_u = _erase(nameless(u))
    assert is_subterm_upto_names(u, t) == (shape_u in subtree_shapes(nameless(t)))


def _erase(u):
    if u[0] in ("bv", "fv"):
        return "*"
    if u[0] == "lam":
        return ("L", _erase(u[1]))
    return (u[0], _erase(u[1]), _erase(u[2]))


# -- substitution and the β oracle ------------------------------------------

def test_substitute_avoids_capture():
    t = parse(r"\y. x y")
    y = t.v
    out = substitute(t, named("x"), Var(y))
    # the free y must not be captured by the binder
    assert out.v != y and out.body == App(Var(y), Var(out.v))


def test_beta_examples():
    assert alpha_eq(beta_lo_step(parse(r"(\x. x) (\y. y)")), parse(r"\y. y"))
    assert alpha_eq(beta_lo_step(parse(r"\x. (\y. y) x")), parse(r"\x. x"))


def test_beta_k_combinator_renames():
    t = parse(r"(\x. \y. x) y w")
    mid = beta_lo_step(t)
    # (λy'.y) w: the binder is renamed away from the free y
    assert isinstance(mid.fun, Lam) and mid.fun.v != named("y")
    assert mid.fun.body == Var(named("y"))
    assert beta_lo_step(mid) == Var(named("y"))


def test_church_two_two_is_four():
    r = beta_normalize(parse(rf"({CHURCH2}) ({CHURCH2})"), 1000)
    assert isinstance(r, NormalForm)
    assert church_value(nameless(r.term)) == 4


def test_omega_exhausts_budget():
    assert isinstance(beta_normalize(parse(OMEGA), 1000), BudgetExhausted)


def test_identity_is_normal():
    r = beta_normalize(parse(r"\x. x"), 5)
    assert isinstance(r, NormalForm) and r.steps == 0


@settings(max_examples=200)
@given(closed_terms(25))
def test_beta_normalize_matches_nameless_oracle(t):
    r = beta_normalize(t, 300)
    want = db_normalize(nameless(t), 300)
    if want is None:
        assert isinstance(r, BudgetExhausted)
    else:
        assert isinstance(r, NormalForm)
        assert (nameless(r.term), r.steps) == want
