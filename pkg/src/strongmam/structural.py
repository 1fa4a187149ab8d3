"""Structural equivalence: one-step axiom neighbourhoods and bounded search."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Iterable, Optional

from .lsc import step_lo_detail, unfold
from .terms import (
    App, Lam, Step, Sub, Term, Var, VarId,
    alpha_eq, canonical, fresh, fv, replace_at, substitute_many, subterm_at,
)


class AxiomKind(Enum):
    GC = "gc"
    COM = "com"
    COMPOSE = "compose"
    DUP = "dup"
    LAM = "lam"
    APP_L = "app_l"
    APP_R = "app_r"


@dataclass(frozen=True)
class Axiom:
    kind: AxiomKind
    forward: bool
    position: tuple

    def __str__(self) -> str:
        arrow = "->" if self.forward else "<-"
        return f"{self.kind.value}{arrow}@{'.'.join(s.value for s in self.position) or 'root'}"


@dataclass
class EquivConfig:
    dup_cap: int = 3          # occurrence subsets up to this size
    dup_all_but_one: bool = True


DEFAULT_CONFIG = EquivConfig()


# ---------------------------------------------------------------------------
# local rewrites at the root of a subterm

def _free_occurrences(t: Term, x: VarId) -> list[tuple]:
    """Relative paths of the free occurrences of x in t, left to right."""
    out = []
    bound = 0
    todo: list = [(t, ())]
    while todo:
        n, p = todo.pop()
        if n is None:
            bound -= 1
        elif isinstance(n, Var):
            if n.v == x and bound == 0:
                out.append(p)
        elif isinstance(n, Lam):
            if n.v == x:
                bound += 1
                todo.append((None, None))
            todo.append((n.body, p + (Step.LAM_BODY,)))
        elif isinstance(n, App):
            todo.append((n.arg, p + (Step.APP_RIGHT,)))
            todo.append((n.fun, p + (Step.APP_LEFT,)))
        else:
            todo.append((n.arg, p + (Step.SUB_ARG,)))
            if n.v == x:
                bound += 1
                todo.append((None, None))
            todo.append((n.body, p + (Step.SUB_BODY,)))
    return out


def _rename_occurrences(t: Term, occ: Iterable[tuple], y: VarId) -> Term:
    for p in occ:
        t = replace_at(t, p, Var(y))
    return t


def _captures_at(t: Term, y: VarId, x: VarId) -> bool:
    """Whether some free occurrence of y in t sits under a binder of x."""
    todo: list = [(t, False, False)]
    while todo:
        n, under_x, under_y = todo.pop()
        if isinstance(n, Var):
            if n.v == y and under_x and not under_y:
                return True
        elif isinstance(n, Lam):
            todo.append((n.body, under_x or n.v == x, under_y or n.v == y))
        elif isinstance(n, App):
            todo.append((n.fun, under_x, under_y))
            todo.append((n.arg, under_x, under_y))
        else:
            todo.append((n.body, under_x or n.v == x, under_y or n.v == y))
            todo.append((n.arg, under_x, under_y))
    return False


def local_neighbors(t: Term, cfg: EquivConfig = DEFAULT_CONFIG,
                    kinds: Optional[set] = None):
    """Yield (kind, forward, result) for axiom instances at the root of t."""
    dup = kinds is None or AxiomKind.DUP in kinds
    if isinstance(t, Sub):
        body, x, u = t.body, t.v, t.arg
        fu = None

        def fvu():
            nonlocal fu
            if fu is None:
                fu = fv(u)
            return fu

        fb = fv(body)
        # gc
        if x not in fb:
            yield AxiomKind.GC, True, body
        # (λy.s)[x<-u]  ->  λy.s[x<-u]
        if isinstance(body, Lam) and body.v != x and body.v not in fvu():
            yield AxiomKind.LAM, True, Lam(body.v, Sub(body.body, x, u))
        if isinstance(body, App):
            a, b = body.fun, body.arg
            if x not in fv(b):
                yield AxiomKind.APP_L, True, App(Sub(a, x, u), b)
            if x not in fv(a):
                yield AxiomKind.APP_R, True, App(a, Sub(b, x, u))
        if isinstance(body, Sub):
            s, y, w = body.body, body.v, body.arg
            # s[y<-w][x<-u] -> s[x<-u][y<-w]
            if x != y and x not in fv(w) and y not in fvu():
                yield AxiomKind.COM, True, Sub(Sub(s, x, u), y, w)
            # s[y<-w][x<-u] -> s[y<-w[x<-u]]
            if x not in fv(s):
                yield AxiomKind.COMPOSE, True, Sub(s, y, Sub(w, x, u))
        # s[y<-w[x'<-u']] <- ... : compose backward
        if isinstance(u, Sub):
            w, y, v = u.body, u.v, u.arg
            if y not in fb:
                yield AxiomKind.COMPOSE, False, Sub(Sub(body, x, w), y, v)
        # dup forward
        occ = _free_occurrences(body, x) if dup else ()
        if occ:
            subsets = set()
            k = len(occ)
            for r in range(0, min(cfg.dup_cap, k) + 1):
                subsets.update(combinations(range(k), r))
            if cfg.dup_all_but_one and k >= 2:
                subsets.update(combinations(range(k), k - 1))
            for sel in sorted(subsets, key=lambda c: (len(c), c)):
                y = fresh(x.name)
                split = _rename_occurrences(body, [occ[i] for i in sel], y)
                yield AxiomKind.DUP, True, Sub(Sub(split, x, u), y, u)
        # dup backward: s[x'<-u'][x<-u] with u' alpha-equal u
        if dup and isinstance(body, Sub):
            s, y, w = body.body, body.v, body.arg
            if y != x and alpha_eq(w, u) and x not in fvu() and not _captures_at(s, x, y):
                merged = substitute_many(s, {x: Var(y)}, freshen=False)
                yield AxiomKind.DUP, False, Sub(merged, y, w)
    if isinstance(t, Lam) and isinstance(t.body, Sub):
        y = t.v
        s, x, u = t.body.body, t.body.v, t.body.arg
        if y != x and y not in fv(u):
            yield AxiomKind.LAM, False, Sub(Lam(y, s), x, u)
    if isinstance(t, App):
        a, b = t.fun, t.arg
        if isinstance(a, Sub) and a.v not in fv(b):
            yield AxiomKind.APP_L, False, Sub(App(a.body, b), a.v, a.arg)
        if isinstance(b, Sub) and b.v not in fv(a):
            yield AxiomKind.APP_R, False, Sub(App(a, b.body), b.v, b.arg)


def axiom_neighbors(t: Term, cfg: EquivConfig = DEFAULT_CONFIG,
                    kinds: Optional[set] = None) -> list[tuple[Term, Axiom]]:
    """All one-step rewrites of t by an axiom, in either direction, anywhere.

    Backward gc is not enumerable (its argument is arbitrary) and is omitted.
    """
    out = []
    todo: list = [(t, ())]
    while todo:
        n, p = todo.pop()
        for kind, fwd, res in local_neighbors(n, cfg, kinds):
            if kinds is None or kind in kinds:
                out.append((replace_at(t, p, res), Axiom(kind, fwd, p)))
        if isinstance(n, Lam):
            todo.append((n.body, p + (Step.LAM_BODY,)))
        elif isinstance(n, App):
            todo.append((n.arg, p + (Step.APP_RIGHT,)))
            todo.append((n.fun, p + (Step.APP_LEFT,)))
        elif isinstance(n, Sub):
            todo.append((n.arg, p + (Step.SUB_ARG,)))
            todo.append((n.body, p + (Step.SUB_BODY,)))
    return out


def apply_axiom(t: Term, ax: Axiom, cfg: EquivConfig = DEFAULT_CONFIG) -> Term:
    """Apply a non-dup axiom instance at its position, checking side conditions."""
    sub = subterm_at(t, ax.position)
    for kind, fwd, res in local_neighbors(sub, cfg, {ax.kind}):
        if kind is ax.kind and fwd == ax.forward and kind is not AxiomKind.DUP:
            return replace_at(t, ax.position, res)
    raise ValueError(f"axiom {ax} does not apply")


# ---------------------------------------------------------------------------
# bounded search

@dataclass(frozen=True)
class Equivalent:
    chain: tuple  # ((Axiom, term), ...) from t to u, axioms as applied


@dataclass(frozen=True)
class NotWithinDepth:
    explored: int


def _sub_args(t: Term) -> dict:
    out = {}
    todo = [t]
    while todo:
        n = todo.pop()
        if isinstance(n, Sub):
            out.setdefault(canonical(n.arg), n.arg)
            todo.extend((n.body, n.arg))
        elif isinstance(n, Lam):
            todo.append(n.body)
        elif isinstance(n, App):
            todo.extend((n.fun, n.arg))
    return out


def gc_backward_neighbors(t: Term, seeds) -> list[tuple[Term, Axiom]]:
    """Backward gc at every position, with arguments drawn from ``seeds``."""
    out = []
    todo: list = [(t, ())]
    while todo:
        n, p = todo.pop()
        for w in seeds:
            out.append((replace_at(t, p, Sub(n, fresh("g"), w)), Axiom(AxiomKind.GC, False, p)))
        if isinstance(n, Lam):
            todo.append((n.body, p + (Step.LAM_BODY,)))
        elif isinstance(n, App):
            todo.append((n.arg, p + (Step.APP_RIGHT,)))
            todo.append((n.fun, p + (Step.APP_LEFT,)))
        elif isinstance(n, Sub):
            todo.append((n.arg, p + (Step.SUB_ARG,)))
            todo.append((n.body, p + (Step.SUB_BODY,)))
    return out


def equiv_bounded(t: Term, u: Term, depth: int, kinds: Optional[set] = None,
                  cfg: EquivConfig = DEFAULT_CONFIG, max_nodes: int = 2_000_000,
                  gc_seeds: bool = True):
    """Bidirectional breadth-first search for an axiom chain of length <= depth.

    Nodes are identified up to alpha.  Backward gc cannot be enumerated, so
    with ``gc_seeds`` it is tried with every ES argument occurring in t or
    u; otherwise a chain whose garbage is removed late can be missed from
    u's side.  The answer Equivalent is always backed by a concrete chain;
    NotWithinDepth says nothing.
    """
    kt, ku = canonical(t), canonical(u)
    if kt == ku:
        return Equivalent(())
    seeds = ()
    if gc_seeds and (kinds is None or AxiomKind.GC in kinds):
        seeds = tuple({**_sub_args(t), **_sub_args(u)}.values())
    # parents: key -> (parent key, axiom, term)
    seen = [{kt: (None, None, t)}, {ku: (None, None, u)}]
    frontier = [[t], [u]]
    levels = [0, 0]
    explored = 0
    while levels[0] + levels[1] < depth:
        side = 0 if len(frontier[0]) <= len(frontier[1]) else 1
        if not frontier[side]:
            side = 1 - side
            if not frontier[side]:
                break
        nxt = []
        mine, other = seen[side], seen[1 - side]
        for n in frontier[side]:
            kn = canonical(n)
            moves = axiom_neighbors(n, cfg, kinds)
            if seeds:
                moves += gc_backward_neighbors(n, seeds)
            for m, ax in moves:
                explored += 1
                km = canonical(m)
                if km in mine:
                    continue
                mine[km] = (kn, ax, m)
                if km in other:
                    return Equivalent(_chain(seen, km, side))
                nxt.append(m)
                if explored > max_nodes:
                    return NotWithinDepth(explored)
        frontier[side] = nxt
        levels[side] += 1
    return NotWithinDepth(explored)


def _chain(seen, meet, side) -> tuple:
    """Steps (axiom, resulting term) leading from t to u through ``meet``."""
    def walk(d, k):
        out = []
        while True:
            parent, ax, term = d[k]
            if parent is None:
                return out
            out.append((parent, ax, term))
            k = parent

    left = [(ax, term) for _, ax, term in reversed(walk(seen[0], meet))]
    # on u's side each recorded step went parent -> term; walking it from
    # the meeting point towards u uses the axiom the other way round
    right = [(Axiom(ax.kind, not ax.forward, ax.position), seen[1][parent][2])
             for parent, ax, _ in walk(seen[1], meet)]
    return tuple(left + right)


def equiv_unfold_check(t: Term, u: Term) -> bool:
    return alpha_eq(unfold(t), unfold(u))


# ---------------------------------------------------------------------------
# garbage collection only

def gc_reachable(t: Term, u: Term) -> bool:
    """Whether t rewrites to u by deleting garbage ES (names compared exactly).

    A Sub node of t is either kept (matching a Sub of u with the same
    binder) or deleted, which needs its variable absent from the free
    variables of what its body becomes.  A greedy pass keeps whenever it
    can; that choice is forced when binders are pairwise distinct, as on
    machine decodings.  If the greedy pass fails, an exact search over
    both choices decides.
    """
    fv_cache: dict[int, tuple] = {}

    def fv_of(n):
        hit = fv_cache.get(id(n))
        if hit is None:
            hit = (n, fv(n))
            fv_cache[id(n)] = hit
        return hit[1]

    if _gc_greedy(t, u, fv_of):
        return True
    return _gc_exact(t, u, fv_of)


def _gc_greedy(t, u, fv_of) -> bool:
    todo = [(t, u)]
    while todo:
        a, b = todo.pop()
        if a is b:
            continue
        if isinstance(a, Sub):
            if isinstance(b, Sub) and b.v == a.v:
                todo.append((a.body, b.body))
                todo.append((a.arg, b.arg))
                continue
            if a.v in fv_of(b):
                return False
            todo.append((a.body, b))
            continue
        if not _same_head(a, b):
            return False
        todo.extend(_child_pairs(a, b))
    return True


def _same_head(a, b) -> bool:
    if type(a) is not type(b):
        return False
    return not isinstance(a, (Var, Lam)) or a.v == b.v


def _child_pairs(a, b):
    if isinstance(a, Lam):
        return [(a.body, b.body)]
    if isinstance(a, App):
        return [(a.fun, b.fun), (a.arg, b.arg)]
    return []


def _gc_exact(t, u, fv_of) -> bool:
    import sys
    memo: dict = {}
    keep = []  # hold the nodes so ids stay valid

    def go(a, b) -> bool:
        if a is b:
            return True
        key = (id(a), id(b))
        if key in memo:
            return memo[key]
        keep.append((a, b))
        ok = False
        if isinstance(a, Sub):
            if isinstance(b, Sub) and b.v == a.v:
                ok = go(a.body, b.body) and go(a.arg, b.arg)
            if not ok and a.v not in fv_of(b):
                ok = go(a.body, b)
        elif _same_head(a, b):
            ok = all(go(x, y) for x, y in _child_pairs(a, b))
        memo[key] = ok
        return ok

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 4 * (t.size + u.size) + 1000))
    try:
        return go(t, u)
    finally:
        sys.setrecursionlimit(old)


# ---------------------------------------------------------------------------
# one-step bisimulation diagrams

@dataclass(frozen=True)
class Diagram:
    status: str        # "closed" | "both-normal" | "normality" | "kind" | "open"
    kind: Optional[str] = None
    chain: tuple = ()
    explored: int = 0

    @property
    def ok(self) -> bool:
        return self.status in ("closed", "both-normal")


def close_diagram(t: Term, u: Term, depth: int, kinds: Optional[set] = None,
                  cfg: EquivConfig = DEFAULT_CONFIG) -> Diagram:
    """Given t ≡ u, step both by the strategy and look for an axiom chain.

    A strong bisimulation needs the same rule on both sides and results
    related again; "open" only means no chain of length <= depth was found.
    """
    a, b = step_lo_detail(t), step_lo_detail(u)
    if a is None or b is None:
        return Diagram("both-normal" if a is None and b is None else "normality")
    if a.kind is not b.kind:
        return Diagram("kind", a.kind.value)
    r = equiv_bounded(a.term, b.term, depth, kinds, cfg)
    if isinstance(r, Equivalent):
        return Diagram("closed", a.kind.value, r.chain)
    return Diagram("open", a.kind.value, explored=r.explored)
