"""Runtime checks of the machine invariants and of the bilinear cost bounds.

``InvariantChecker`` is built for long runs.  The environment only grows
along a run, so its summary is extended entry by entry; frame and stack
cells are immutable, so their summaries are memoised per cell; codes are
summarised once.  ``check_invariants`` runs a fresh checker on one state,
additionally using the clause-based LO-context test.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Optional

from .lsc import Context, is_lo_context
from .machine import (
    Cons, EClose, EOpen, ESub, FPair, FVar, Label, Phase, State,
)
from .terms import App, Lam, Sub, Term, Var, skeleton_key, subterm_skeletons


@dataclass(frozen=True)
class Violation:
    clause: str
    detail: str

    def __str__(self) -> str:
        return f"{self.clause}: {self.detail}"


def _nm(v) -> str:
    return f"{v.name}_{v.id}"


# ---------------------------------------------------------------------------
# per-code summaries

class CodeInfo:
    __slots__ = ("term", "names", "lams", "inside", "fv", "normal", "neutral",
                 "has_sub", "skel")

    def __init__(self, t: Term):
        self.term = t
        names: Counter = Counter()
        lams: Counter = Counter()
        inside: dict = {}
        free = set()
        bound: Counter = Counter()
        normal = True
        has_sub = False
        todo: list = [t]
        while todo:
            n = todo.pop()
            if type(n) is tuple:
                _, x, before = n
                bound[x] -= 1
                inside[x] = names[x] - before
                continue
            if isinstance(n, Var):
                names[n.v] += 1
                if not bound[n.v]:
                    free.add(n.v)
            elif isinstance(n, Lam):
                lams[n.v] += 1
                before = names[n.v]
                names[n.v] += 1
                bound[n.v] += 1
                todo.append(("exit", n.v, before))
                todo.append(n.body)
            elif isinstance(n, App):
                if isinstance(n.fun, Lam):
                    normal = False
                todo.append(n.arg)
                todo.append(n.fun)
            else:
                has_sub = True
                names[n.v] += 1
                todo.append(n.arg)
                todo.append(n.body)
        self.names = names
        self.lams = lams
        self.inside = inside
        self.fv = frozenset(free)
        self.normal = normal
        self.neutral = normal and not isinstance(t, Lam)
        self.has_sub = has_sub
        self.skel = skeleton_key(t)


# ---------------------------------------------------------------------------
# the environment summary

class _EnvSummary:
    def __init__(self, info):
        self.info = info
        self.head: Optional[Cons] = None
        self.vis: list = []                 # visible entries: [x, kind]
        self.by_name: dict = {}             # x -> indices into vis
        self.opens: list = []               # vis indices of unmatched opens
        self.count: Counter = Counter()     # every occurrence of every name
        self.open_fresh: dict = {}
        self.open_count: dict = {}
        self.closed_occ: Counter = Counter()
        self.lam_binders: Counter = Counter()
        self.lam_inside: dict = {}
        self.touched: set = set()
        self.violations: list = []
        self.malformed = False

    def visible(self, y) -> bool:
        return bool(self.by_name.get(y))

    def _push_vis(self, x, kind) -> int:
        self.vis.append((x, kind))
        i = len(self.vis) - 1
        self.by_name.setdefault(x, []).append(i)
        return i

    def add(self, e, skels) -> None:
        bad = self.violations.append
        if isinstance(e, ESub):
            x = e.x
            ci = self.info(e.code)
            if ci.has_sub:
                bad(Violation("code", f"environment code for {_nm(x)} holds an ES"))
            if ci.names[x]:
                bad(Violation("name/substitution",
                              f"{_nm(x)} occurs in its own substituted code"))
            if self.count[x]:
                bad(Violation("name/substitution",
                              f"{_nm(x)} occurs in the older environment"))
            for y in ci.fv:
                if not self.visible(y):
                    bad(Violation("closure/environment",
                                  f"{_nm(y)} free in [{_nm(x)}<-...] is undefined below it"))
            if ci.skel not in skels:
                bad(Violation("subterm", f"environment code for {_nm(x)}"))
            self.count.update(ci.names)
            self.count[x] += 1
            for y, k in ci.lams.items():
                self.lam_binders[y] += k
                self.lam_inside[y] = ci.inside[y]
            self.touched.update(ci.names)
            self.touched.add(x)
            self._push_vis(x, "sub")
        elif isinstance(e, EOpen):
            x = e.x
            self.open_fresh[x] = self.count[x] == 0
            self.open_count[x] = self.count[x]
            self.count[x] += 1
            self.touched.add(x)
            self.opens.append(self._push_vis(x, "open"))
        else:
            x = e.x
            self.count[x] += 1
            self.touched.add(x)
            if not self.opens or self.vis[self.opens[-1]][0] != x:
                self.malformed = True
                bad(Violation("compatibility", f"close marker for {_nm(x)} is unmatched"))
                return
            i = self.opens.pop()
            while len(self.vis) > i:
                y, _ = self.vis.pop()
                self.by_name[y].pop()
            self.closed_occ[x] += self.count[x] - self.open_count[x]


# ---------------------------------------------------------------------------
# frame and stack cell summaries

class _FrameInfo:
    __slots__ = ("cell", "lam_set", "vars", "names", "fv", "measure", "local")


class _StackInfo:
    __slots__ = ("cell", "fv", "measure", "local")


class InvariantChecker:
    """Checks every state invariant; cheap to call on consecutive states."""

    def __init__(self, t0: Term, thorough: bool = False):
        self.t0 = t0
        self.skels = subterm_skeletons(t0)
        self.thorough = thorough
        self._codes: dict[int, CodeInfo] = {}
        self._frames: dict[int, _FrameInfo] = {}
        self._stacks: dict[int, _StackInfo] = {}
        self._lo: dict = {}
        self.env = _EnvSummary(self.info)

    # -- summaries -----------------------------------------------------------

    def info(self, t: Term) -> CodeInfo:
        ci = self._codes.get(id(t))
        if ci is None or ci.term is not t:
            ci = CodeInfo(t)
            self._codes[id(t)] = ci
        return ci

    def _sync_env(self, E: Optional[Cons]) -> None:
        env = self.env
        if E is env.head:
            return
        fresh_cells = []
        c = E
        while c is not None and c is not env.head:
            fresh_cells.append(c)
            c = c.tail
        if c is not env.head:
            # not an extension of what we saw: start over
            self.env = env = _EnvSummary(self.info)
            fresh_cells = []
            c = E
            while c is not None:
                fresh_cells.append(c)
                c = c.tail
        for cell in reversed(fresh_cells):
            env.add(cell.head, self.skels)
        env.head = E

    def stack_info(self, pi: Optional[Cons]) -> Optional[_StackInfo]:
        if pi is None:
            return None
        si = self._stacks.get(id(pi))
        if si is not None and si.cell is pi:
            return si
        # build the missing suffix from the bottom up, without recursion
        chain = []
        c = pi
        while c is not None:
            si = self._stacks.get(id(c))
            if si is not None and si.cell is c:
                break
            chain.append(c)
            c = c.tail
        below = si if c is not None else None
        for cell in reversed(chain):
            ci = self.info(cell.head)
            si = _StackInfo()
            si.cell = cell
            si.local = []
            if ci.has_sub:
                si.local.append(Violation("code", "stack code holds an ES"))
            if ci.skel not in self.skels:
                si.local.append(Violation("subterm", "stack code"))
            if below is None:
                si.fv = ci.fv
                si.measure = cell.head.size
            else:
                si.fv = below.fv | ci.fv if not ci.fv <= below.fv else below.fv
                si.measure = below.measure + cell.head.size
                si.local = si.local + below.local if below.local else si.local
            self._stacks[id(cell)] = si
            below = si
        return below

    def frame_info(self, F: Optional[Cons]) -> Optional[_FrameInfo]:
        if F is None:
            return None
        fi = self._frames.get(id(F))
        if fi is not None and fi.cell is F:
            return fi
        chain = []
        c = F
        while c is not None:
            fi = self._frames.get(id(c))
            if fi is not None and fi.cell is c:
                break
            chain.append(c)
            c = c.tail
        below = fi if c is not None else None
        for cell in reversed(chain):
            e = cell.head
            fi = _FrameInfo()
            fi.cell = cell
            lam_below = below.lam_set if below else frozenset()
            names_below = below.names if below else frozenset()
            fv_below = below.fv if below else frozenset()
            local = list(below.local) if below else []
            if isinstance(e, FVar):
                fi.lam_set = lam_below | {e.x}
                fi.vars = (e.x,) + (below.vars if below else ())
                if e.x in names_below:
                    local.append(Violation("name/marker",
                                           f"{_nm(e.x)} occurs in the older frame"))
                fi.names = names_below | {e.x}
                fi.fv = fv_below
                fi.measure = below.measure if below else 0
            else:
                ci = self.info(e.code)
                si = self.stack_info(e.stack)
                fi.lam_set = lam_below
                fi.vars = below.vars if below else ()
                if ci.has_sub:
                    local.append(Violation("code", "frame code holds an ES"))
                if not ci.neutral:
                    local.append(Violation("normal form/frame",
                                           "frame pair code is not neutral"))
                if not ci.fv <= lam_below:
                    local.append(Violation("backtracking fv/frame",
                                           "frame pair code has a free variable not "
                                           "abstracted below it"))
                stack_names = set()
                stack_fv = frozenset()
                for c2 in (e.stack or ()):
                    stack_names.update(self.info(c2).names)
                if si is not None:
                    stack_fv = si.fv
                    local.extend(si.local)
                fi.names = names_below | set(ci.names) | stack_names
                fi.fv = fv_below | ci.fv | stack_fv
                fi.measure = (below.measure if below else 0) + (si.measure if si else 0)
            fi.local = local
            self._frames[id(cell)] = fi
            below = fi
        return below

    # -- the check -----------------------------------------------------------

    def check(self, s: State) -> list[Violation]:
        out: list[Violation] = []
        bad = out.append
        self._sync_env(s.env)
        env = self.env
        out.extend(env.violations)
        fi = self.frame_info(s.frame)
        si = self.stack_info(s.stack)
        ci = self.info(s.code)
        if fi is not None:
            out.extend(fi.local)
        if si is not None:
            out.extend(si.local)
        if ci.has_sub:
            bad(Violation("code", "current code holds an ES"))

        # compatibility
        frame_vars = fi.vars if fi else ()
        open_vars = tuple(env.vis[i][0] for i in reversed(env.opens))
        compatible = not env.malformed and frame_vars == open_vars
        if not compatible:
            bad(Violation("compatibility", "frame and environment are not compatible"))

        lam_set = fi.lam_set if fi else frozenset()
        if s.phase is Phase.BACKTRACK:
            if not ci.normal:
                bad(Violation("normal form/code", "backtracking code is not normal"))
            elif s.stack is not None and not ci.neutral:
                bad(Violation("normal form/code",
                              "backtracking code is not neutral under a non-empty stack"))
            if not ci.fv <= lam_set:
                bad(Violation("backtracking fv/code",
                              "free variable of the code is not abstracted in the frame"))
        elif ci.skel not in self.skels:
            bad(Violation("subterm", "evaluation code"))

        # markers, per frame variable
        if compatible:
            self._check_markers(s.frame, bad)

        # closure of code, stack and frame codes
        for y in ci.fv | (si.fv if si else frozenset()) | (fi.fv if fi else frozenset()):
            if not env.visible(y):
                bad(Violation("closure/state", f"{_nm(y)} is undefined"))

        self._check_abstractions(s, bad)

        # LO decoding invariant
        if compatible:
            ok = self._lo_ok(s)
            if not ok:
                bad(Violation("LO decoding", "decoded context is not LO"))
        return out

    def _check_markers(self, F, bad) -> None:
        env = self.env
        open_index = {env.vis[i][0]: i for i in env.opens}
        c = F
        while c is not None:
            e = c.head
            if isinstance(e, FVar):
                x = e.x
                if not env.open_fresh.get(x, False):
                    bad(Violation("name/marker",
                                  f"{_nm(x)} occurs in the environment below its marker"))
                older = self.frame_info(c.tail)
                if older is not None:
                    i = open_index[x]
                    for y in older.fv:
                        idx = env.by_name.get(y)
                        if idx and idx[-1] > i:
                            bad(Violation("name/marker",
                                          f"{_nm(y)} free in the older frame is defined "
                                          f"above the marker of {_nm(x)}"))
            c = c.tail

    def _check_abstractions(self, s: State, bad) -> None:
        """Each λx occurs once; x occurs only below it or in x's closed fragment."""
        env = self.env
        names: Counter = Counter()
        lams: Counter = Counter()
        inside: dict = {}

        def take(t):
            ci = self.info(t)
            names.update(ci.names)
            if ci.lams:
                lams.update(ci.lams)
                inside.update(ci.inside)

        take(s.code)
        for t in (s.stack or ()):
            take(t)
        for e in (s.frame or ()):
            if isinstance(e, FVar):
                names[e.x] += 1
            else:
                take(e.code)
                for t in (e.stack or ()):
                    take(t)
        env_lams = env.lam_binders
        cand = set(lams)
        cand.update(y for y in names if y in env_lams)
        cand.update(y for y in env.touched if y in env_lams)
        env.touched = set()
        for y in cand:
            binders = lams[y] + env_lams[y]
            if binders > 1:
                bad(Violation("name/abstraction", f"λ{_nm(y)} occurs {binders} times"))
                continue
            total = names[y] + env.count[y]
            allowed = (inside[y] if lams[y] else env.lam_inside[y]) + env.closed_occ[y]
            if total != allowed:
                bad(Violation("name/abstraction",
                              f"{_nm(y)} occurs outside its abstraction"))

    def _lo_ok(self, s: State) -> bool:
        from .decoding import decode_pair, stack_layers
        key = (id(s.frame), id(s.env))
        hit = self._lo.get(key)
        if hit is not None and hit[0] is s.frame and hit[1] is s.env:
            pair_ok = hit[2]
        else:
            pair = decode_pair(s.frame, s.env)
            pair_ok = is_lo_context(pair, "ilo", active=False, neutral=self._neutral)
            if self.thorough:
                pair_ok = pair_ok and is_lo_context(pair, "clauses", active=False) \
                    and is_lo_context(pair, "clauses", active=True) \
                    and is_lo_context(pair, "ilo", active=True)
            self._lo[key] = (s.frame, s.env, pair_ok)
        if not self.thorough:
            # the stack only adds left-application layers below the pair
            # context, which the rules accept without changing its verdict
            return pair_ok
        whole = Context(decode_pair(s.frame, s.env).layers + tuple(stack_layers(s.stack)))
        return pair_ok and all(is_lo_context(whole, m, a)
                               for m in ("clauses", "ilo") for a in (True, False))

    def _neutral(self, t: Term) -> bool:
        ci = self.info(t)
        return ci.neutral and not ci.has_sub


def check_invariants(s: State, t0: Term) -> list[Violation]:
    """All invariant clauses on a single state, from scratch."""
    try:
        return InvariantChecker(t0, thorough=True).check(s)
    except Exception as exc:  # malformed beyond repair
        return [Violation("structure", f"{type(exc).__name__}: {exc}")]


# ---------------------------------------------------------------------------
# the measure and the bilinear bounds

class BilinearityChecker:
    """Per-transition measure deltas and the counter inequalities."""

    def __init__(self, t0: Term):
        self.n = t0.size
        self._frame_m: dict = {}
        self._stack_m: dict = {}
        self.prev = None

    def _stack_measure(self, pi) -> int:
        total = 0
        cells = []
        c = pi
        while c is not None:
            hit = self._stack_m.get(id(c))
            if hit is not None and hit[0] is c:
                total = hit[1]
                break
            cells.append(c)
            c = c.tail
        for cell in reversed(cells):
            total += cell.head.size
            self._stack_m[id(cell)] = (cell, total)
        return total

    def _frame_measure(self, F) -> int:
        total = 0
        cells = []
        c = F
        while c is not None:
            hit = self._frame_m.get(id(c))
            if hit is not None and hit[0] is c:
                total = hit[1]
                break
            cells.append(c)
            c = c.tail
        for cell in reversed(cells):
            if isinstance(cell.head, FPair):
                total += self._stack_measure(cell.head.stack)
            self._frame_m[id(cell)] = (cell, total)
        return total

    def measure(self, s: State) -> int:
        m = self._frame_measure(s.frame) + self._stack_measure(s.stack)
        if s.phase is Phase.EVAL:
            m += s.code.size
        return m

    def start(self, s: State) -> None:
        self.prev = self.measure(s)

    def advance(self, s2: State, lab: Label, counters: Counter) -> list[Violation]:
        out = []
        cur = self.measure(s2)
        delta = cur - self.prev
        self.prev = cur
        if lab is Label.E:
            if delta > self.n:
                out.append(Violation("measure", f"e raised the measure by {delta} > {self.n}"))
        elif lab in (Label.M, Label.C1, Label.C2, Label.C3):
            if delta >= 0:
                out.append(Violation("measure", f"{lab.value} changed the measure by {delta}"))
        elif delta != 0:
            out.append(Violation("measure", f"{lab.value} changed the measure by {delta}"))
        out.extend(bound_violations(counters, self.n))
        return out


def margins(counters: Counter, n: int) -> dict:
    """Right side minus left side of each bilinear inequality (>= 0 when it holds)."""
    m, e = counters[Label.M], counters[Label.E]
    c_ev = counters[Label.C1] + counters[Label.C2] + counters[Label.C3]
    c_bt = counters[Label.C4] + counters[Label.C5] + counters[Label.C6]
    return {
        "ev_bound": (1 + e) * n - (c_ev + m),
        "bt_bound": 2 * c_ev - c_bt,
        "total_bound": 3 * (1 + e) * n - (c_ev + c_bt),
    }


def bound_violations(counters: Counter, n: int) -> list[Violation]:
    out = []
    for k, v in margins(counters, n).items():
        if v < 0:
            out.append(Violation("bilinearity", f"{k} margin {v}"))
    C = counters
    if C[Label.C4] > C[Label.C2]:
        out.append(Violation("bilinearity", "#c4 > #c2"))
    if C[Label.C5] > C[Label.C6]:
        out.append(Violation("bilinearity", "#c5 > #c6"))
    if C[Label.C6] > C[Label.C3]:
        out.append(Violation("bilinearity", "#c6 > #c3"))
    return out


def check_compat(F: Optional[Cons], E: Optional[Cons]) -> bool:
    """F ∝ E, derived by peeling weak parts and matching abstraction heads."""
    from .decoding import split_env, split_frame
    from .machine import MalformedEnv
    f, e = F, E
    while True:
        sf = split_frame(f)
        try:
            se = split_env(e)
        except MalformedEnv:
            return False
        f, e = sf.trunk, se.trunk
        if f is None or e is None:
            return f is None and e is None
        if f.head.x != e.head.x:
            return False
        f, e = f.tail, e.tail
