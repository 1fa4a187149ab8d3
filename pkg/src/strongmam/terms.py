"""Terms, names, concrete syntax and the naive leftmost-outermost beta oracle.

One class family serves both pure lambda-terms and terms with explicit
substitutions: a pure term is simply one without ``Sub`` nodes.  Every
traversal here is iterative so that deep terms (long ES chains, long
application spines) never hit the interpreter's recursion limit.
"""

from __future__ import annotations

import itertools
import re
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional, Union


# ---------------------------------------------------------------------------
# names

@dataclass(frozen=True)
class VarId:
    """A variable.  Identity is the integer id; the name is only a hint."""

    id: int
    name: str = field(default="x", compare=False)

    def __repr__(self) -> str:
        return f"{self.name}#{self.id}"


_counter = itertools.count(1)
_counter_lock = threading.Lock()
_interned: dict[str, VarId] = {}


def fresh(hint: str = "x") -> VarId:
    """Return a VarId that has never been issued before."""
    with _counter_lock:
        n = next(_counter)
    return VarId(n, _base_name(hint))


def named(name: str) -> VarId:
    """The interned VarId for a source-level name.

    Parsing the same name twice yields the same VarId, so free variables of
    separately parsed terms line up.
    """
    with _counter_lock:
        v = _interned.get(name)
        if v is None:
            v = VarId(next(_counter), name)
            _interned[name] = v
    return v


def _base_name(hint: str) -> str:
    base = hint.rstrip("'0123456789")
    return base or hint or "x"


# ---------------------------------------------------------------------------
# terms

@dataclass(frozen=True, eq=False)
class Var:
    v: VarId
    size: int = field(default=1, init=False, repr=False)


@dataclass(frozen=True, eq=False)
class Lam:
    v: VarId
    body: "Term"
    size: int = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "size", 1 + self.body.size)


@dataclass(frozen=True, eq=False)
class App:
    fun: "Term"
    arg: "Term"
    size: int = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "size", 1 + self.fun.size + self.arg.size)


@dataclass(frozen=True, eq=False)
class Sub:
    """``body[v <- arg]``: an explicit substitution, binding ``v`` in ``body``."""

    body: "Term"
    v: VarId
    arg: "Term"
    size: int = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "size", 1 + self.body.size + self.arg.size)


Term = Union[Var, Lam, App, Sub]
PureTerm = Term  # documentation alias: a Term with no Sub node


def _term_eq(self: Term, other: object) -> bool:
    if not isinstance(other, (Var, Lam, App, Sub)):
        return NotImplemented
    return same(self, other)


for _cls in (Var, Lam, App, Sub):
    _cls.__eq__ = _term_eq  # type: ignore[method-assign]
    _cls.__hash__ = None  # type: ignore[assignment]


def size(t: Term) -> int:
    """Constructor count: every Var, Lam, App and Sub node counts one."""
    return t.size


class Step(Enum):
    """One step of a hole path."""

    LAM_BODY = "lam"
    APP_LEFT = "app_l"
    APP_RIGHT = "app_r"
    SUB_BODY = "sub_l"
    SUB_ARG = "sub_r"


Path = tuple  # tuple[Step, ...]


def children(t: Term) -> tuple:
    """(step, child) pairs in left-to-right order."""
    if isinstance(t, Var):
        return ()
    if isinstance(t, Lam):
        return ((Step.LAM_BODY, t.body),)
    if isinstance(t, App):
        return ((Step.APP_LEFT, t.fun), (Step.APP_RIGHT, t.arg))
    return ((Step.SUB_BODY, t.body), (Step.SUB_ARG, t.arg))


def subterm_at(t: Term, path) -> Term:
    for st in path:
        if st is Step.LAM_BODY and isinstance(t, Lam):
            t = t.body
        elif st is Step.APP_LEFT and isinstance(t, App):
            t = t.fun
        elif st is Step.APP_RIGHT and isinstance(t, App):
            t = t.arg
        elif st is Step.SUB_BODY and isinstance(t, Sub):
            t = t.body
        elif st is Step.SUB_ARG and isinstance(t, Sub):
            t = t.arg
        else:
            raise ValueError(f"invalid path step {st} at {type(t).__name__}")
    return t


def replace_at(t: Term, path, new: Term) -> Term:
    """Rebuild ``t`` with the subterm at ``path`` replaced by ``new``."""
    spine = []
    cur = t
    for st in path:
        spine.append((cur, st))
        cur = subterm_at(cur, (st,))
    out = new
    for node, st in reversed(spine):
        out = rebuild(node, st, out)
    return out


def rebuild(node: Term, st: Step, child: Term) -> Term:
    if st is Step.LAM_BODY:
        return Lam(node.v, child)
    if st is Step.APP_LEFT:
        return App(child, node.arg)
    if st is Step.APP_RIGHT:
        return App(node.fun, child)
    if st is Step.SUB_BODY:
        return Sub(child, node.v, node.arg)
    return Sub(node.body, node.v, child)


def same(t: Term, u: Term) -> bool:
    """Syntactic identity (names compared by VarId, no alpha)."""
    todo = [(t, u)]
    while todo:
        a, b = todo.pop()
        if a is b:
            continue
        if type(a) is not type(b) or a.size != b.size:
            return False
        if isinstance(a, Var):
            if a.v != b.v:
                return False
        elif isinstance(a, Lam):
            if a.v != b.v:
                return False
            todo.append((a.body, b.body))
        elif isinstance(a, App):
            todo.append((a.fun, b.fun))
            todo.append((a.arg, b.arg))
        else:
            if a.v != b.v:
                return False
            todo.append((a.body, b.body))
            todo.append((a.arg, b.arg))
    return True


def is_pure(t: Term) -> bool:
    return not any(isinstance(n, Sub) for n in nodes(t))


def nodes(t: Term) -> Iterator[Term]:
    """Pre-order iteration over all nodes."""
    todo = [t]
    while todo:
        n = todo.pop()
        yield n
        if isinstance(n, Lam):
            todo.append(n.body)
        elif isinstance(n, App):
            todo.append(n.arg)
            todo.append(n.fun)
        elif isinstance(n, Sub):
            todo.append(n.arg)
            todo.append(n.body)


# ---------------------------------------------------------------------------
# free variables and alpha

_EXIT = object()


def fv(t: Term) -> set[VarId]:
    """Free variables; Lam and Sub bind in their first subterm only."""
    out: set[VarId] = set()
    bound: dict[VarId, int] = {}
    todo: list = [t]
    while todo:
        n = todo.pop()
        if type(n) is tuple:
            v = n[1]
            bound[v] -= 1
            continue
        if isinstance(n, Var):
            if not bound.get(n.v):
                out.add(n.v)
        elif isinstance(n, Lam):
            bound[n.v] = bound.get(n.v, 0) + 1
            todo.append((_EXIT, n.v))
            todo.append(n.body)
        elif isinstance(n, App):
            todo.append(n.arg)
            todo.append(n.fun)
        else:
            todo.append(n.arg)
            todo.append((_EXIT, n.v))
            bound[n.v] = bound.get(n.v, 0) + 1
            todo.append(n.body)
    return out


def _scoped_walk(t: Term):
    """Pre-order walk yielding (node, scope) where scope maps each bound
    variable to the number of its innermost binder (binders numbered in
    pre-order).  ``scope`` is mutated in place; consume it immediately."""
    scope: dict[VarId, list[int]] = {}
    counter = 0
    todo: list = [t]
    while todo:
        n = todo.pop()
        if type(n) is tuple:
            scope[n[1]].pop()
            continue
        yield n, scope, counter
        if isinstance(n, Lam):
            scope.setdefault(n.v, []).append(counter)
            counter += 1
            todo.append((_EXIT, n.v))
            todo.append(n.body)
        elif isinstance(n, App):
            todo.append(n.arg)
            todo.append(n.fun)
        elif isinstance(n, Sub):
            todo.append(n.arg)
            todo.append((_EXIT, n.v))
            scope.setdefault(n.v, []).append(counter)
            counter += 1
            todo.append(n.body)


def canonical(t: Term) -> tuple:
    """A flat token sequence equal for two terms iff they are alpha-equal.

    Binders are numbered in pre-order; a bound occurrence is replaced by its
    binder's number and a free occurrence keeps its VarId id.
    """
    out: list = []
    for n, scope, _ in _scoped_walk(t):
        if isinstance(n, Var):
            s = scope.get(n.v)
            if s:
                out.append(-1 - s[-1])
            else:
                out.append(n.v.id)
        elif isinstance(n, Lam):
            out.append("L")
        elif isinstance(n, App):
            out.append("A")
        else:
            out.append("S")
    return tuple(out)


def alpha_eq(t: Term, u: Term) -> bool:
    if t.size != u.size:
        return False
    return canonical(t) == canonical(u)


# ---------------------------------------------------------------------------
# renaming

def rename_binders(t: Term, pick) -> Term:
    """Rebuild ``t`` renaming each binder ``v`` to ``pick(v)``.

    ``pick`` returns either a VarId or None (keep the binder).  Bound
    occurrences follow their binder; free variables are untouched.
    """
    env: dict[VarId, list[VarId]] = {}
    # post-order rebuild with an explicit stack
    results: list[Term] = []
    todo: list = [("visit", t)]
    while todo:
        op, n = todo.pop()
        if op == "visit":
            if isinstance(n, Var):
                s = env.get(n.v)
                results.append(Var(s[-1]) if s else n)
            elif isinstance(n, Lam):
                nv = pick(n.v) or n.v
                env.setdefault(n.v, []).append(nv)
                todo.append(("lam", (n, nv)))
                todo.append(("visit", n.body))
            elif isinstance(n, App):
                todo.append(("app", n))
                todo.append(("visit", n.arg))
                todo.append(("visit", n.fun))
            else:
                nv = pick(n.v) or n.v
                todo.append(("sub", (n, nv)))
                todo.append(("visit", n.arg))
                todo.append(("popenv", n.v))
                todo.append(("visit", n.body))
                env.setdefault(n.v, []).append(nv)
        elif op == "popenv":
            env[n].pop()
        elif op == "lam":
            node, nv = n
            env[node.v].pop()
            body = results.pop()
            results.append(node if (nv is node.v and body is node.body) else Lam(nv, body))
        elif op == "app":
            a = results.pop()
            f = results.pop()
            results.append(n if (f is n.fun and a is n.arg) else App(f, a))
        else:
            node, nv = n
            a = results.pop()
            b = results.pop()
            if nv is node.v and b is node.body and a is node.arg:
                results.append(node)
            else:
                results.append(Sub(b, nv, a))
    return results[0]


def rename_fresh(t: Term) -> Term:
    """Rename every binder to a globally fresh VarId."""
    return rename_binders(t, lambda v: fresh(v.name))


def bound_vars(t: Term) -> list[VarId]:
    return [n.v for n in nodes(t) if isinstance(n, (Lam, Sub))]


def is_well_named(t: Term) -> bool:
    """Distinct binders bind distinct names, disjoint from the free ones."""
    bs = bound_vars(t)
    sb = set(bs)
    return len(sb) == len(bs) and not (sb & fv(t))


class NotClosed(ValueError):
    pass


def well_name(t: Term, closed: bool = True) -> Term:
    """An alpha-equivalent well-named copy of ``t``.

    Only binders that clash (with a free variable or with an earlier binder
    in pre-order) are freshened, so a well-named input comes back unchanged.
    """
    free = fv(t)
    if closed and free:
        raise NotClosed("not closed: free " + ", ".join(sorted(v.name for v in free)))
    used = set(free)

    def pick(v: VarId) -> Optional[VarId]:
        if v in used:
            nv = fresh(v.name)
            used.add(nv)
            return nv
        used.add(v)
        return None

    # rename_binders visits binders in pre-order, which is what pick needs
    return rename_binders(t, pick)


# ---------------------------------------------------------------------------
# skeletons

STAR = VarId(0, "*")


def skeleton_key(t: Term) -> tuple:
    """Pre-order constructor tokens; variables carry no name."""
    out = []
    for n in nodes(t):
        out.append(_TAG[type(n)])
    return tuple(out)


_TAG = {Var: "V", Lam: "L", App: "A", Sub: "S"}


def skeleton(t: Term) -> Term:
    """``t`` with every variable, bound or binding, replaced by ``*``."""
    return rename_binders(_erase_free(t), lambda v: STAR)


def _erase_free(t: Term) -> Term:
    return substitute_many(t, {v: Var(STAR) for v in fv(t)}, freshen=False)


def subterm_skeletons(t: Term) -> frozenset:
    """Skeleton keys of all subterms of ``t``.

    In a pre-order serialisation each subterm occupies a contiguous slice
    whose length is its size, so every key is a slice of ``t``'s own key.
    """
    seq = skeleton_key(t)
    sizes = [n.size for n in nodes(t)]
    return frozenset(seq[i:i + sizes[i]] for i in range(len(seq)))


def is_subterm_upto_names(u: Term, t: Term) -> bool:
    return skeleton_key(u) in subterm_skeletons(t)


# ---------------------------------------------------------------------------
# meta-level substitution and the beta oracle

def substitute_many(t: Term, sigma: dict, freshen: bool = True) -> Term:
    """Capture-avoiding simultaneous substitution of free variables.

    With ``freshen`` every binder crossed is renamed to a fresh VarId, which
    rules out capture without looking at free variables at all.
    """
    if not sigma:
        return t
    env: dict[VarId, list] = {}
    results: list[Term] = []
    todo: list = [("visit", t)]

    def bind(v):
        nv = fresh(v.name) if freshen else v
        env.setdefault(v, []).append(Var(nv))
        return nv

    while todo:
        op, n = todo.pop()
        if op == "visit":
            if isinstance(n, Var):
                s = env.get(n.v)
                if s:
                    results.append(s[-1])
                else:
                    results.append(sigma.get(n.v, n))
            elif isinstance(n, Lam):
                nv = bind(n.v)
                todo.append(("lam", (n, nv)))
                todo.append(("visit", n.body))
            elif isinstance(n, App):
                todo.append(("app", n))
                todo.append(("visit", n.arg))
                todo.append(("visit", n.fun))
            else:
                # the ES binder scopes over the body only
                cell = [n, None]
                todo.append(("sub", cell))
                todo.append(("visit", n.arg))
                todo.append(("popenv", n.v))
                todo.append(("visit", n.body))
                cell[1] = bind(n.v)
        elif op == "popenv":
            env[n].pop()
        elif op == "lam":
            node, nv = n
            env[node.v].pop()
            results.append(Lam(nv, results.pop()))
        elif op == "app":
            a = results.pop()
            f = results.pop()
            results.append(App(f, a))
        else:
            a = results.pop()
            b = results.pop()
            results.append(Sub(b, n[1], a))
    return results[0]


def substitute(t: Term, x: VarId, u: Term) -> Term:
    """``t{x := u}``, capture-avoiding."""
    return substitute_many(t, {x: u})


def _first_beta_redex(t: Term):
    """Path of the leftmost-outermost beta-redex (pre-order first)."""
    todo = [(t, ())]
    while todo:
        n, p = todo.pop()
        if isinstance(n, App):
            if isinstance(n.fun, Lam):
                return p
            todo.append((n.arg, p + (Step.APP_RIGHT,)))
            todo.append((n.fun, p + (Step.APP_LEFT,)))
        elif isinstance(n, Lam):
            todo.append((n.body, p + (Step.LAM_BODY,)))
        elif isinstance(n, Sub):
            raise TypeError("beta oracle expects a pure term")
    return None


def beta_redexes(t: Term) -> list:
    """All beta-redex paths, in no particular order."""
    out = []
    todo = [(t, ())]
    while todo:
        n, p = todo.pop()
        if isinstance(n, App):
            if isinstance(n.fun, Lam):
                out.append(p)
            todo.append((n.fun, p + (Step.APP_LEFT,)))
            todo.append((n.arg, p + (Step.APP_RIGHT,)))
        elif isinstance(n, Lam):
            todo.append((n.body, p + (Step.LAM_BODY,)))
    return out


def beta_lo_step(t: Term) -> Optional[Term]:
    """Contract the leftmost-outermost beta-redex; None if ``t`` is normal."""
    p = _first_beta_redex(t)
    if p is None:
        return None
    r = subterm_at(t, p)
    return replace_at(t, p, substitute(r.fun.body, r.fun.v, r.arg))


@dataclass(frozen=True)
class NormalForm:
    term: Term
    steps: int


@dataclass(frozen=True)
class BudgetExhausted:
    term: Term
    steps: int


def beta_normalize(t: Term, budget: int):
    assert budget >= 0
    for k in range(budget + 1):
        nxt = beta_lo_step(t)
        if nxt is None:
            return NormalForm(t, k)
        if k == budget:
            break
        t = nxt
    return BudgetExhausted(t, budget)


# ---------------------------------------------------------------------------
# concrete syntax

class ParseError(ValueError):
    def __init__(self, msg: str, offset: int):
        super().__init__(f"{msg} at offset {offset}")
        self.offset = offset


_TOKEN = re.compile(r"\s*(?:(?P<var>[A-Za-z_][A-Za-z0-9_']*)|(?P<arrow><-)|(?P<sym>[\\λ.()\[\]]))")


def _tokenize(text: str):
    toks = []
    pos = 0
    n = len(text)
    while True:
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", len(text[:pos].encode()))
        kind = m.lastgroup
        val = m.group(kind)
        start = m.start(kind)
        if val == "λ":
            val = "\\"
        toks.append((kind, val, len(text[:start].encode())))
        pos = m.end()
    toks.append(("eof", "", len(text.encode())))
    return toks


class _Parser:
    def __init__(self, text: str, allow_es: bool):
        self.toks = _tokenize(text)
        self.i = 0
        self.allow_es = allow_es

    def peek(self):
        return self.toks[self.i]

    def take(self, val=None, kind=None):
        tok = self.toks[self.i]
        if (val is not None and tok[1] != val) or (kind is not None and tok[0] != kind):
            want = val if val is not None else kind
            got = tok[1] or "end of input"
            raise ParseError(f"expected {want!r}, got {got!r}", tok[2])
        self.i += 1
        return tok

    # term ::= "\\" var+ "." term | chain
    # chain ::= atom (atom | "[" var "<-" term "]")*   left to right, so an
    # ES suffix wraps the whole application built so far.
    def term(self) -> Term:
        binders: list[VarId] = []
        while self.peek()[1] == "\\":
            self.take("\\")
            binders.append(named(self.take(kind="var")[1]))
            while self.peek()[0] == "var":
                binders.append(named(self.take(kind="var")[1]))
            self.take(".")
        t = self.chain()
        for v in reversed(binders):
            t = Lam(v, t)
        return t

    def chain(self) -> Term:
        t = self.atom()
        while True:
            tok = self.peek()
            if tok[0] == "var" or tok[1] == "(":
                t = App(t, self.atom())
            elif tok[1] == "\\":
                t = App(t, self.term())
            elif tok[1] == "[":
                self.take("[")
                if not self.allow_es:
                    raise ParseError("explicit substitution in a pure term", tok[2])
                v = named(self.take(kind="var")[1])
                self.take(kind="arrow")
                u = self.term()
                self.take("]")
                t = Sub(t, v, u)
            else:
                return t

    def atom(self) -> Term:
        tok = self.peek()
        if tok[0] == "var":
            self.take()
            return Var(named(tok[1]))
        if tok[1] == "(":
            self.take("(")
            t = self.term()
            self.take(")")
            return t
        raise ParseError(f"unexpected {tok[1] or 'end of input'!r}", tok[2])


def parse(text: str, lsc: bool = False) -> Term:
    """Parse concrete syntax.  ``lsc`` enables the ``t[x<-u]`` suffix.

    Equal source names map to the same VarId, free or bound; call
    ``well_name`` to separate shadowed binders.
    """
    p = _Parser(text, lsc)
    t = p.term()
    tok = p.peek()
    if tok[0] != "eof":
        raise ParseError(f"trailing input {tok[1]!r}", tok[2])
    return t


def parse_lsc(text: str) -> Term:
    return parse(text, lsc=True)


def _display_names(t: Term) -> dict[VarId, str]:
    """Give every distinct VarId in ``t`` its own printable name.

    Free variables keep their hint (disambiguated if two share one); bound
    variables get the hint plus primes/digits as needed.
    """
    names: dict[VarId, str] = {}
    taken: set[str] = set()

    def assign(v: VarId) -> None:
        if v in names:
            return
        if v is STAR or v == STAR:
            names[v] = "*"
            return
        base = v.name if v.name != "*" else "x"
        cand = base
        k = 0
        while cand in taken:
            k += 1
            cand = f"{base}{k}"
        names[v] = cand
        taken.add(cand)

    for v in sorted(fv(t), key=lambda v: v.id):
        assign(v)
    for n in nodes(t):
        if isinstance(n, (Lam, Sub)):
            assign(n.v)
    return names


def show(t: Term, names: Optional[dict] = None) -> str:
    """Print in the concrete syntax; ``parse_lsc(show(t))`` is alpha-equal to t."""
    if names is None:
        names = _display_names(t)
    out: list[str] = []
    # work items: a term with a precedence level, or a literal string
    # levels: 0 = full term, 1 = function position, 2 = argument position
    todo: list = [(t, 0)]
    while todo:
        item = todo.pop()
        if isinstance(item, str):
            out.append(item)
            continue
        n, lvl = item
        if isinstance(n, Var):
            out.append(names.get(n.v, n.v.name))
        elif isinstance(n, Lam):
            if lvl > 0:
                todo.append(")")
            # gather \x y z.
            vs = []
            body = n
            while isinstance(body, Lam):
                vs.append(names.get(body.v, body.v.name))
                body = body.body
            todo.append((body, 0))
            todo.append(("\\" + " ".join(vs) + ". "))
            if lvl > 0:
                todo.append("(")
        elif isinstance(n, App):
            if lvl == 2:
                todo.append(")")
            todo.append((n.arg, 2))
            todo.append(" ")
            todo.append((n.fun, 1))
            if lvl == 2:
                todo.append("(")
        else:
            if lvl == 2:
                todo.append(")")
            todo.append("]")
            todo.append((n.arg, 0))
            todo.append("[" + names.get(n.v, n.v.name) + "<-")
            todo.append((n.body, 1))
            if lvl == 2:
                todo.append("(")
    return "".join(out)
