"""Linear substitution calculus: contexts, redexes, the LO strategy, unfolding.

Redex positions never lie inside an ES argument.  A substitution argument is
only ever reduced after being copied, so its inner redexes are not part of
the leftmost-outermost strategy; "normal" and "neutral" are relative to this
notion of position.  ``enumerate_redexes(t, in_arguments=True)`` exposes
the unrestricted set for order-theoretic tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cmp_to_key
from typing import Optional

from .terms import (
    App, Lam, Step, Sub, Term, Var, VarId,
    rebuild, fresh, fv, nodes, rename_fresh, replace_at, subterm_at,
    substitute, substitute_many,
)


class RuleKind(Enum):
    MULTIPLICATIVE = "m"
    EXPONENTIAL = "e"


M = RuleKind.MULTIPLICATIVE
E = RuleKind.EXPONENTIAL


@dataclass(frozen=True)
class Redex:
    position: tuple
    kind: RuleKind
    binder: Optional[tuple] = None  # path of the binding Sub, exponential only


# ---------------------------------------------------------------------------
# contexts

@dataclass(frozen=True)
class Context:
    """A one-hole context as a tuple of layers, outermost first.

    A layer is ``(step, var, other)``: ``(LAM_BODY, x, None)`` for λx.C,
    ``(APP_LEFT, None, u)`` for C u, ``(APP_RIGHT, None, t)`` for t C,
    ``(SUB_BODY, x, u)`` for C[x<-u] and ``(SUB_ARG, x, t)`` for t[x<-C].
    """

    layers: tuple = ()

    @property
    def path(self) -> tuple:
        return tuple(l[0] for l in self.layers)

    def __len__(self) -> int:
        return len(self.layers)

    def compose(self, inner: "Context") -> "Context":
        return Context(self.layers + inner.layers)


HOLE = Context(())


def decompose(t: Term, path) -> tuple[Context, Term]:
    layers = []
    for st in path:
        if st is Step.LAM_BODY and isinstance(t, Lam):
            layers.append((st, t.v, None))
            t = t.body
        elif st is Step.APP_LEFT and isinstance(t, App):
            layers.append((st, None, t.arg))
            t = t.fun
        elif st is Step.APP_RIGHT and isinstance(t, App):
            layers.append((st, None, t.fun))
            t = t.arg
        elif st is Step.SUB_BODY and isinstance(t, Sub):
            layers.append((st, t.v, t.arg))
            t = t.body
        elif st is Step.SUB_ARG and isinstance(t, Sub):
            layers.append((st, t.v, t.body))
            t = t.arg
        else:
            raise ValueError(f"invalid path step {st} at {type(t).__name__}")
    return Context(tuple(layers)), t


def plug(c: Context, t: Term) -> Term:
    for st, x, o in reversed(c.layers):
        if st is Step.LAM_BODY:
            t = Lam(x, t)
        elif st is Step.APP_LEFT:
            t = App(t, o)
        elif st is Step.APP_RIGHT:
            t = App(o, t)
        elif st is Step.SUB_BODY:
            t = Sub(t, x, o)
        else:
            t = Sub(o, x, t)
    return t


# ---------------------------------------------------------------------------
# free variables

def fv_active(t: Term) -> set[VarId]:
    """Free variables with at least one occurrence outside every ES argument."""
    out: set[VarId] = set()
    bound: dict[VarId, int] = {}
    todo: list = [t]
    while todo:
        n = todo.pop()
        if type(n) is tuple:
            bound[n[1]] -= 1
            continue
        if isinstance(n, Var):
            if not bound.get(n.v):
                out.add(n.v)
        elif isinstance(n, Lam):
            bound[n.v] = bound.get(n.v, 0) + 1
            todo.append(("exit", n.v))
            todo.append(n.body)
        elif isinstance(n, App):
            todo.append(n.arg)
            todo.append(n.fun)
        else:
            bound[n.v] = bound.get(n.v, 0) + 1
            todo.append(("exit", n.v))
            todo.append(n.body)
    return out


def lfv_context(c: Context, active: bool = False) -> set[VarId]:
    """Left free variables of a context, by its six defining clauses.

    With ``active`` the free variables of left subterms only count
    occurrences outside ES arguments; this is the variant matching redex
    positions that never enter an ES argument.
    """
    free = fv_active if active else fv
    acc: set[VarId] = set()
    for st, x, o in reversed(c.layers):
        if st is Step.LAM_BODY or st is Step.SUB_BODY:
            acc.discard(x)
        elif st is Step.APP_RIGHT:
            acc |= free(o)
        elif st is Step.SUB_ARG:
            acc = (free(o) - {x}) | acc
        # APP_LEFT: lfv(C t) = lfv(C)
    return acc


def lfv(path, t: Term, active: bool = False) -> set[VarId]:
    return lfv_context(decompose(t, path)[0], active)


# ---------------------------------------------------------------------------
# redexes

def strip_subs(t: Term) -> Term:
    """Remove a leading substitution context: L<u> -> u."""
    while isinstance(t, Sub):
        t = t.body
    return t


def is_answer(t: Term) -> bool:
    """Whether t has the shape L<λx.u>."""
    return isinstance(strip_subs(t), Lam)


def _walk_redexes(t: Term, in_arguments: bool, first_only: bool):
    """Yield redexes in pre-order (left-to-right, outside-in)."""
    # scope: var -> stack of binder paths; None marks a λ binder
    scope: dict[VarId, list] = {}
    todo: list = [(t, ())]
    while todo:
        item = todo.pop()
        if item[0] is None:
            scope[item[1]].pop()
            continue
        n, p = item
        if isinstance(n, Var):
            s = scope.get(n.v)
            if s and s[-1] is not None:
                yield Redex(p, E, s[-1])
        elif isinstance(n, App):
            if is_answer(n.fun):
                yield Redex(p, M)
            todo.append((n.arg, p + (Step.APP_RIGHT,)))
            todo.append((n.fun, p + (Step.APP_LEFT,)))
        elif isinstance(n, Lam):
            scope.setdefault(n.v, []).append(None)
            todo.append((None, n.v))
            todo.append((n.body, p + (Step.LAM_BODY,)))
        else:
            if in_arguments:
                todo.append((n.arg, p + (Step.SUB_ARG,)))
            scope.setdefault(n.v, []).append(p)
            todo.append((None, n.v))
            todo.append((n.body, p + (Step.SUB_BODY,)))


def enumerate_redexes(t: Term, in_arguments: bool = False) -> list[Redex]:
    return list(_walk_redexes(t, in_arguments, False))


def is_normal(t: Term) -> bool:
    for _ in _walk_redexes(t, False, True):
        return False
    return True


def is_neutral(t: Term) -> bool:
    return not is_answer(t) and is_normal(t)


# ---------------------------------------------------------------------------
# the LO order

_RANK = {Step.APP_LEFT: 0, Step.APP_RIGHT: 1, Step.SUB_BODY: 0, Step.SUB_ARG: 1,
         Step.LAM_BODY: 0}


def lo_compare(p: tuple, q: tuple, t: Optional[Term] = None) -> int:
    """-1 if p precedes q in the LO order, 1 if q precedes p.

    Outside-in: a strict prefix comes first.  Left-to-right: at the first
    divergence the function side precedes the argument side and an ES body
    precedes its argument.
    """
    if p == q:
        raise ValueError("lo_compare on equal positions")
    if t is not None:
        subterm_at(t, p)
        subterm_at(t, q)
    for a, b in zip(p, q):
        if a is not b:
            ra, rb = _RANK[a], _RANK[b]
            pair = {a, b}
            if pair not in ({Step.APP_LEFT, Step.APP_RIGHT}, {Step.SUB_BODY, Step.SUB_ARG}):
                raise ValueError(f"paths diverge on incompatible steps {a}, {b}")
            return -1 if ra < rb else 1
    return -1 if len(p) < len(q) else 1


def find_lo_redex_by_order(t: Term) -> Optional[Redex]:
    rs = enumerate_redexes(t)
    if not rs:
        return None
    key = cmp_to_key(lambda a, b: lo_compare(a.position, b.position))
    return min(rs, key=key)


def find_lo_redex_ilo(t: Term) -> Optional[Redex]:
    """Search guided by the inductive LO-context rules.

    Layers are only added when their rule applies: a λ-body always; an
    application's function side unless the application is itself a
    multiplicative redex; its argument side once the function side is
    neutral and none of its left-free variables is bound by an enclosing
    ES; an ES body always, its argument never.  The first redex reached is
    returned.
    """
    scope: dict[VarId, list] = {}  # var -> binder paths, None for λ
    todo: list = [("visit", t, ())]
    while todo:
        op, n, p = todo.pop()
        if op == "exit":
            scope[n].pop()
            continue
        if op == "right":
            # reached only when the function side held no redex, so it is
            # normal; the @r rule also needs it not to be an answer, and the
            # ES rule of every enclosing ES needs its variable not left-free
            if is_answer(n.fun):
                return None
            for v in fv_active(n.fun):
                s = scope.get(v)
                if s and s[-1] is not None:
                    return None
            todo.append(("visit", n.arg, p + (Step.APP_RIGHT,)))
            continue
        if isinstance(n, Var):
            s = scope.get(n.v)
            if s and s[-1] is not None:
                return Redex(p, E, s[-1])
        elif isinstance(n, App):
            if is_answer(n.fun):
                return Redex(p, M)
            todo.append(("right", n, p))
            todo.append(("visit", n.fun, p + (Step.APP_LEFT,)))
        elif isinstance(n, Lam):
            scope.setdefault(n.v, []).append(None)
            todo.append(("exit", n.v, None))
            todo.append(("visit", n.body, p + (Step.LAM_BODY,)))
        else:
            scope.setdefault(n.v, []).append(p)
            todo.append(("exit", n.v, None))
            todo.append(("visit", n.body, p + (Step.SUB_BODY,)))
    return None


def is_lo_context(c: Context, method: str = "ilo", active: bool = True,
                  neutral=None) -> bool:
    """Whether c is a leftmost-outermost context.

    ``method="clauses"`` checks the right-application, left-application and
    substitution clauses at every decomposition point (plus: the hole is not
    inside an ES argument).  ``method="ilo"`` derives c with the inductive
    rules, inside out.  ``active`` selects the left-free-variable variant.
    ``neutral`` may replace the neutrality test (e.g. by a memoised one).
    """
    if method == "clauses":
        return _lo_by_clauses(c, active, neutral or is_neutral)
    if method == "ilo":
        return _lo_by_rules(c, active, neutral or is_neutral)
    raise ValueError(method)


def _lo_by_rules(c: Context, active: bool, is_neutral=is_neutral) -> bool:
    free = fv_active if active else fv
    left: set[VarId] = set()  # lfv of the context built so far
    answer = False  # whether the context built so far is L<λx.C'>
    for st, x, o in reversed(c.layers):
        if st is Step.LAM_BODY:
            left.discard(x)
            answer = True
        elif st is Step.APP_LEFT:
            if answer:
                return False
        elif st is Step.APP_RIGHT:
            if not is_neutral(o):
                return False
            left |= free(o)
            answer = False
        elif st is Step.SUB_BODY:
            if x in left:
                return False
            left.discard(x)
        else:
            return False
    return True


def _lo_by_clauses(c: Context, active: bool, is_neutral=is_neutral) -> bool:
    layers = c.layers
    for i, (st, x, o) in enumerate(layers):
        inner = Context(layers[i + 1:])
        if st is Step.SUB_ARG:
            return False
        if st is Step.APP_RIGHT and not is_neutral(o):
            return False
        if st is Step.APP_LEFT and _is_answer_context(inner):
            return False
        if st is Step.SUB_BODY and x in lfv_context(inner, active):
            return False
    return True


def _is_answer_context(c: Context) -> bool:
    for st, _, _ in c.layers:
        if st is Step.LAM_BODY:
            return True
        if st is not Step.SUB_BODY:
            return False
    return False


# ---------------------------------------------------------------------------
# reduction

@dataclass(frozen=True)
class StepResult:
    term: Term
    kind: RuleKind
    redex: Redex
    copied: Optional[Term] = None  # the fresh copy, exponential steps only


def _rename_binder(node: Term, nv: VarId) -> Term:
    """Rename the binder of a Lam or Sub node (and its bound occurrences)."""
    ren = {node.v: Var(nv)}
    if isinstance(node, Lam):
        return Lam(nv, substitute_many(node.body, ren, freshen=False))
    return Sub(substitute_many(node.body, ren, freshen=False), nv, node.arg)


def contract(t: Term, r: Redex) -> StepResult:
    """Fire redex r of t."""
    if r.kind is M:
        app = subterm_at(t, r.position)
        danger = fv(app.arg)
        # L<λx.s> u -> L<s[x<-u]>; first rename L-binders that would capture u
        fun = _rename_along(app.fun, [Step.SUB_BODY] * _sub_depth(app.fun), danger)
        spine = []
        cur = fun
        while isinstance(cur, Sub):
            spine.append(cur)
            cur = cur.body
        if cur.v in danger:
            # the new ES must not bind the argument's own free variables
            cur = _rename_binder(cur, fresh(cur.v.name))
        out: Term = Sub(cur.body, cur.v, app.arg)
        for s in reversed(spine):
            out = Sub(out, s.v, s.arg)
        return StepResult(replace_at(t, r.position, out), M, r)
    es = subterm_at(t, r.binder)
    if es.v in fv(es.arg):
        es = _rename_binder(es, fresh(es.v.name))
    copy = rename_fresh(es.arg)
    rel = r.position[len(r.binder):]
    assert rel and rel[0] is Step.SUB_BODY
    # binders between the ES and the occurrence must not capture the copy
    body = _rename_along(es.body, rel[1:], fv(copy))
    body = replace_at(body, rel[1:], copy)
    return StepResult(replace_at(t, r.binder, Sub(body, es.v, es.arg)), E, r, copy)


def _sub_depth(t: Term) -> int:
    k = 0
    while isinstance(t, Sub):
        k += 1
        t = t.body
    return k


def _rename_along(t: Term, path, danger: set) -> Term:
    """Freshen every binder crossed by ``path`` whose variable is in danger."""
    spine = []
    node = t
    for st in path:
        if ((st is Step.LAM_BODY or st is Step.SUB_BODY)
                and node.v in danger):
            node = _rename_binder(node, fresh(node.v.name))
        spine.append((node, st))
        node = subterm_at(node, (st,))
    for nd, st in reversed(spine):
        node = rebuild(nd, st, node)
    return node


def step_lo_detail(t: Term) -> Optional[StepResult]:
    r = find_lo_redex_ilo(t)
    if r is None:
        return None
    return contract(t, r)


def step_lo(t: Term) -> Optional[tuple[Term, RuleKind]]:
    res = step_lo_detail(t)
    return None if res is None else (res.term, res.kind)


def normalize_lo(t: Term, budget: int):
    """Iterate step_lo; returns (term, m, e, finished)."""
    m = e = 0
    for _ in range(budget):
        res = step_lo(t)
        if res is None:
            return t, m, e, True
        t, k = res
        if k is M:
            m += 1
        else:
            e += 1
    return t, m, e, is_normal(t)


# ---------------------------------------------------------------------------
# unfolding and measures

def unfold(t: Term) -> Term:
    """Execute every ES at the meta level."""
    results: list[Term] = []
    todo: list = [("visit", t)]
    while todo:
        op, n = todo.pop()
        if op == "visit":
            if isinstance(n, Var):
                results.append(n)
            elif isinstance(n, Lam):
                todo.append(("lam", n))
                todo.append(("visit", n.body))
            elif isinstance(n, App):
                todo.append(("app", n))
                todo.append(("visit", n.arg))
                todo.append(("visit", n.fun))
            else:
                todo.append(("sub", n))
                todo.append(("visit", n.arg))
                todo.append(("visit", n.body))
        elif op == "lam":
            results.append(Lam(n.v, results.pop()))
        elif op == "app":
            a = results.pop()
            results.append(App(results.pop(), a))
        else:
            a = results.pop()
            b = results.pop()
            results.append(substitute(b, n.v, a))
    return results[0]


def lsc_size(t: Term) -> int:
    return t.size


def es_count(t: Term) -> int:
    return sum(1 for n in nodes(t) if isinstance(n, Sub))
