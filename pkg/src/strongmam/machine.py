"""The strong Milner abstract machine.

A state is ``(phase, frame, code, stack, env)``.  Frame, stack and
environment are persistent cons lists with the most recent entry at the
head, so every transition touches only heads and old states stay valid.
Variable lookup goes through a run-wide dictionary (the "store") that maps
each name to its substitution or to an open-scope marker; the formal
list-based lookup ``env_lookup`` is kept for checking the store.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional, Union

from .terms import App, Lam, Term, Var, VarId, fv, rename_fresh, show, well_name


class Phase(Enum):
    EVAL = "▼"
    BACKTRACK = "▲"


class Cons:
    """Immutable list cell; ``None`` is the empty list."""

    __slots__ = ("head", "tail", "length")

    def __init__(self, head, tail: Optional["Cons"]):
        self.head = head
        self.tail = tail
        self.length = 1 + (tail.length if tail is not None else 0)

    def __iter__(self) -> Iterator:
        c = self
        while c is not None:
            yield c.head
            c = c.tail

    def __repr__(self) -> str:
        return "[" + ", ".join(map(repr, self)) + "]"


def clist(items) -> Optional[Cons]:
    """Build a cons list whose head is ``items[0]``."""
    out = None
    for x in reversed(list(items)):
        out = Cons(x, out)
    return out


def items(c: Optional[Cons]) -> list:
    return [] if c is None else list(c)


def length(c: Optional[Cons]) -> int:
    return 0 if c is None else c.length


# frame entries
@dataclass(frozen=True, slots=True)
class FVar:
    x: VarId


@dataclass(frozen=True, slots=True, eq=False)
class FPair:
    code: Term
    stack: Optional[Cons]


# environment entries
@dataclass(frozen=True, slots=True, eq=False)
class ESub:
    x: VarId
    code: Term


@dataclass(frozen=True, slots=True)
class EOpen:
    x: VarId


@dataclass(frozen=True, slots=True)
class EClose:
    x: VarId


FrameEntry = Union[FVar, FPair]
EnvEntry = Union[ESub, EOpen, EClose]


class Label(Enum):
    C1 = "c1"
    M = "m"
    C2 = "c2"
    E = "e"
    C3 = "c3"
    C4 = "c4"
    C5 = "c5"
    C6 = "c6"

    @property
    def principal(self) -> bool:
        return self in (Label.M, Label.E)

    @property
    def eval_commutative(self) -> bool:
        return self in (Label.C1, Label.C2, Label.C3)

    @property
    def backtrack_commutative(self) -> bool:
        return self in (Label.C4, Label.C5, Label.C6)


OPEN = "open"  # store value for a variable whose scope is open


@dataclass(frozen=True, eq=False)
class State:
    phase: Phase
    frame: Optional[Cons]
    code: Term
    stack: Optional[Cons]
    env: Optional[Cons]
    store: dict = field(default_factory=dict, repr=False)

    @property
    def is_final(self) -> bool:
        return self.phase is Phase.BACKTRACK and self.frame is None and self.stack is None


class NotClosed(ValueError):
    pass


class Stuck(RuntimeError):
    pass


class MalformedEnv(RuntimeError):
    pass


def init(t: Term) -> State:
    if fv(t):
        raise NotClosed("not closed: " + ", ".join(sorted(v.name for v in fv(t))))
    return State(Phase.EVAL, None, well_name(t), None, None, {})


# ---------------------------------------------------------------------------
# lookup

@dataclass(frozen=True)
class Bound:
    code: Term


class Scope(Enum):
    OPEN = "⊢"
    UNDEFINED = "⊥"


def env_lookup(env: Optional[Cons], x: VarId):
    """E(x) by the defining equations, skipping closed fragments wholesale."""
    c = env
    while c is not None:
        e = c.head
        if isinstance(e, EClose):
            # skip ⊣y : Ew : ⊢y
            depth = 1
            c = c.tail
            while depth:
                if c is None:
                    raise MalformedEnv(f"unmatched close marker for {e.x!r}")
                f = c.head
                if isinstance(f, EClose):
                    depth += 1
                elif isinstance(f, EOpen):
                    depth -= 1
                    if depth == 0 and f.x != e.x:
                        raise MalformedEnv(f"close {e.x!r} matched by open {f.x!r}")
                c = c.tail
            continue
        if e.x == x:
            return Bound(e.code) if isinstance(e, ESub) else Scope.OPEN
        c = c.tail
    return Scope.UNDEFINED


def fast_lookup(s: State, x: VarId):
    v = s.store.get(x)
    if v is None:
        return Scope.UNDEFINED
    if v is OPEN:
        return Scope.OPEN
    return Bound(v)


# ---------------------------------------------------------------------------
# transitions

def step(s: State) -> Optional[tuple[State, Label]]:
    """One transition, or None if s is final."""
    ph, F, t, pi, E, st = s.phase, s.frame, s.code, s.stack, s.env, s.store
    if ph is Phase.EVAL:
        if isinstance(t, App):
            return State(ph, F, t.fun, Cons(t.arg, pi), E, st), Label.C1
        if isinstance(t, Lam):
            if pi is not None:
                st[t.v] = pi.head
                return State(ph, F, t.body, pi.tail, Cons(ESub(t.v, pi.head), E), st), Label.M
            st[t.v] = OPEN
            return State(ph, Cons(FVar(t.v), F), t.body, None, Cons(EOpen(t.v), E), st), Label.C2
        if isinstance(t, Var):
            v = st.get(t.v)
            if v is OPEN:
                return State(Phase.BACKTRACK, F, t, pi, E, st), Label.C3
            if v is not None:
                return State(ph, F, rename_fresh(v), pi, E, st), Label.E
            raise Stuck(dump(s, f"unbound variable {t.v!r}"))
        raise Stuck(dump(s, "explicit substitution in code"))
    if pi is not None:
        return State(Phase.EVAL, Cons(FPair(t, pi.tail), F), pi.head, None, E, st), Label.C6
    if F is None:
        return None
    top = F.head
    if isinstance(top, FVar):
        return State(ph, F.tail, Lam(top.x, t), None, Cons(EClose(top.x), E), st), Label.C4
    return State(ph, F.tail, App(top.code, t), top.stack, E, st), Label.C5


# ---------------------------------------------------------------------------
# executions

class Outcome(Enum):
    FINAL = "final"
    BUDGET = "budget-exhausted"


class CheckLevel(Enum):
    OFF = "off"
    COUNTERS = "counters"
    FULL = "full"


@dataclass
class Execution:
    initial: State
    steps: list  # (Label, State) pairs, possibly empty when not kept
    counters: Counter
    outcome: Outcome
    final: State
    violations: list = field(default_factory=list)

    @property
    def length(self) -> int:
        return sum(self.counters.values())

    @property
    def m(self) -> int:
        return self.counters[Label.M]

    @property
    def e(self) -> int:
        return self.counters[Label.E]


class InvariantViolation(AssertionError):
    pass


def run(s0: State, budget: int = 100_000, checks: CheckLevel = CheckLevel.OFF,
        t0: Optional[Term] = None, keep_states: bool = True,
        on_step=None, raise_on_violation: bool = True) -> Execution:
    """Iterate ``step`` at most ``budget`` times.

    ``checks=COUNTERS`` asserts the bilinearity inequalities and measure
    deltas after every transition; ``FULL`` additionally checks every
    state invariant and the store against the list lookup.  ``on_step``
    is called as ``on_step(s, label, s')``.
    """
    from .invariants import BilinearityChecker, InvariantChecker

    t0 = s0.code if t0 is None else t0
    counters: Counter = Counter({lab: 0 for lab in Label})
    steps: list = []
    bil = BilinearityChecker(t0) if checks is not CheckLevel.OFF else None
    inv = InvariantChecker(t0) if checks is CheckLevel.FULL else None
    violations: list = []

    def report(vs, s, lab=None):
        if not vs:
            return
        violations.extend(vs)
        if raise_on_violation:
            where = f"after {lab.value}" if lab else "initially"
            raise InvariantViolation(dump(s, f"{where}: " + "; ".join(map(str, vs))))

    if inv is not None:
        report(inv.check(s0), s0)
    if bil is not None:
        bil.start(s0)
    s = s0
    outcome = Outcome.BUDGET
    for _ in range(budget):
        if inv is not None and s.phase is Phase.EVAL and isinstance(s.code, Var):
            want = env_lookup(s.env, s.code.v)
            got = fast_lookup(s, s.code.v)
            if want != got:
                report([f"store lookup {got} differs from list lookup {want}"], s)
        nxt = step(s)
        if nxt is None:
            outcome = Outcome.FINAL
            break
        s2, lab = nxt
        counters[lab] += 1
        if keep_states:
            steps.append((lab, s2))
        if bil is not None:
            report(bil.advance(s2, lab, counters), s2, lab)
        if inv is not None:
            report(inv.check(s2), s2, lab)
        if on_step is not None:
            on_step(s, lab, s2)
        s = s2
    else:
        if s.is_final:
            outcome = Outcome.FINAL
    return Execution(s0, steps, counters, outcome, s, violations)


# ---------------------------------------------------------------------------
# printing

def show_entry(e, names=None) -> str:
    if isinstance(e, FVar):
        return _nm(e.x, names)
    if isinstance(e, FPair):
        return f"<{show(e.code, names)}, {show_stack(e.stack, names)}>"
    if isinstance(e, ESub):
        return f"[{_nm(e.x, names)}<-{show(e.code, names)}]"
    if isinstance(e, EOpen):
        return f"|-{_nm(e.x, names)}"
    return f"-|{_nm(e.x, names)}"


def _nm(v: VarId, names) -> str:
    if names and v in names:
        return names[v]
    return f"{v.name}_{v.id}"


def show_stack(pi: Optional[Cons], names=None) -> str:
    return "[" + " : ".join(show(c, names) for c in items(pi)) + "]"


def state_dict(s: State) -> dict:
    """A JSON-ready view of a state.  Variables print as name_id."""
    names = _state_names(s)
    return {
        "phase": "eval" if s.phase is Phase.EVAL else "backtrack",
        "frame": [show_entry(e, names) for e in items(s.frame)],
        "code": show(s.code, names),
        "stack": [show(c, names) for c in items(s.stack)],
        "env": [show_entry(e, names) for e in items(s.env)],
    }


class _IdNames(dict):
    def __missing__(self, v):
        return f"{v.name}_{v.id}"

    def get(self, v, default=None):
        return self[v]

    def __contains__(self, v):
        return True


def _state_names(s: State):
    return _IdNames()


def dump(s: State, msg: str = "") -> str:
    d = state_dict(s)
    lines = [msg] if msg else []
    lines += [f"  phase: {s.phase.value}",
              f"  frame: {' : '.join(d['frame']) or 'ε'}",
              f"  code:  {d['code']}",
              f"  stack: {' : '.join(d['stack']) or 'ε'}",
              f"  env:   {' : '.join(d['env']) or 'ε'}"]
    return "\n".join(lines)
