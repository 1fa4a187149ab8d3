"""Decoding machine states into LSC terms, and per-transition distillation.

Decoded contexts reuse ``lsc.Context`` (layers, outermost first).  The
decoding of a frame/environment pair interleaves their trunks: each open
scope contributes a λ, each weak environment its visible substitutions
(closed fragments vanish), each weak frame its pairs and their stacks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .lsc import (
    Context, M as KIND_M, E as KIND_E, is_lo_context, plug, step_lo_detail,
)
from .machine import (
    Cons, EClose, EOpen, ESub, FPair, FVar, Label, MalformedEnv, Phase, State,
    items,
)
from .structural import (
    Axiom, AxiomKind, NotWithinDepth, apply_axiom, equiv_bounded, gc_reachable,
)
from .terms import (
    Step, Term, rebuild, alpha_eq, replace_at, same, skeleton_key, subterm_at,
)


class Incompatible(ValueError):
    pass


# ---------------------------------------------------------------------------
# factorisations

@dataclass(frozen=True)
class SplitFrame:
    weak: tuple            # pair entries, most recent first
    trunk: Optional[Cons]  # empty or starting with a variable entry


@dataclass(frozen=True)
class SplitEnv:
    weak: tuple            # entries, most recent first; no unmatched open
    trunk: Optional[Cons]  # empty or starting with an unmatched open marker


def split_frame(F: Optional[Cons]) -> SplitFrame:
    weak = []
    c = F
    while c is not None and isinstance(c.head, FPair):
        weak.append(c.head)
        c = c.tail
    return SplitFrame(tuple(weak), c)


def split_env(E: Optional[Cons]) -> SplitEnv:
    weak = []
    pending: list = []  # close markers awaiting their open
    c = E
    while c is not None:
        e = c.head
        if isinstance(e, EOpen):
            if not pending:
                break
            if pending[-1] != e.x:
                raise MalformedEnv(f"close {pending[-1]!r} matched by open {e.x!r}")
            pending.pop()
        elif isinstance(e, EClose):
            pending.append(e.x)
        weak.append(e)
        c = c.tail
    if pending:
        raise MalformedEnv(f"unmatched close marker for {pending[-1]!r}")
    return SplitEnv(tuple(weak), c)


# ---------------------------------------------------------------------------
# decoding

def weak_env_layers(weak) -> list:
    """Layers of a weak environment (given most recent first), outermost first."""
    out = []
    depth = 0
    for e in weak:
        if isinstance(e, EClose):
            depth += 1
        elif isinstance(e, EOpen):
            depth -= 1
        elif depth == 0:
            out.append((Step.SUB_BODY, e.x, e.code))
    out.reverse()
    return out


def stack_layers(pi) -> list:
    return [(Step.APP_LEFT, None, c) for c in reversed(items(pi))]


def weak_frame_layers(weak) -> list:
    out = []
    for pair in reversed(weak):
        out.extend(stack_layers(pair.stack))
        out.append((Step.APP_RIGHT, None, pair.code))
    return out


def decode_weak_env(Ew) -> Context:
    entries = items(Ew) if (Ew is None or isinstance(Ew, Cons)) else list(Ew)
    return Context(tuple(weak_env_layers(entries)))


def decode_stack(pi) -> Context:
    return Context(tuple(stack_layers(pi)))


def decode_weak_frame(Fw) -> Context:
    entries = items(Fw) if (Fw is None or isinstance(Fw, Cons)) else list(Fw)
    if any(isinstance(e, FVar) for e in entries):
        raise ValueError("weak frame holds a variable entry")
    return Context(tuple(weak_frame_layers(entries)))


def decode_pair(F: Optional[Cons], E: Optional[Cons]) -> Context:
    segments = []
    f, e = F, E
    while True:
        sf, se = split_frame(f), split_env(e)
        segments.append(weak_env_layers(se.weak) + weak_frame_layers(sf.weak))
        f, e = sf.trunk, se.trunk
        if f is None and e is None:
            break
        if f is None or e is None or f.head.x != e.head.x:
            raise Incompatible("frame and environment are not compatible")
        segments.append([(Step.LAM_BODY, f.head.x, None)])
        f, e = f.tail, e.tail
    layers = []
    for seg in reversed(segments):
        layers.extend(seg)
    return Context(tuple(layers))


def state_context(s: State) -> Context:
    pair = decode_pair(s.frame, s.env)
    return Context(pair.layers + tuple(stack_layers(s.stack)))


def decode_state(s: State) -> tuple[Context, Term]:
    c = state_context(s)
    return c, plug(c, s.code)


def decode(s: State) -> Term:
    return decode_state(s)[1]


def lo_decoding_ok(s: State) -> bool:
    """Both decoded contexts are LO, by clauses and by the inductive rules."""
    pair = decode_pair(s.frame, s.env)
    whole = Context(pair.layers + tuple(stack_layers(s.stack)))
    verdicts = {is_lo_context(c, m, a) for c in (pair, whole)
                for m in ("clauses", "ilo") for a in (True, False)}
    return verdicts == {True}


# ---------------------------------------------------------------------------
# distillation

@dataclass
class DistillResult:
    label: Label
    ok: bool
    detail: str = ""
    chain: tuple = field(default=())  # axioms of the m closure


def m_chain(s: State, w: Term, redex_path: tuple) -> tuple[Term, tuple]:
    """Float the ES created by a multiplicative step out to its decoded place.

    The new substitution sits at the redex, under the remaining stack and
    the weak frame.  Each of those layers is an application; the ES crosses
    it by one backward application axiom (left or right according to the
    side it sits on), innermost first.  Returns the result and the axioms.
    """
    sf = split_frame(s.frame)
    n_layers = len(stack_layers(s.stack.tail)) + len(weak_frame_layers(sf.weak))
    base = redex_path[:len(redex_path) - n_layers]
    # walk down once, then apply each axiom at the root of the rebuilt parent
    rel = redex_path[len(base):]
    spine = [subterm_at(w, base)]
    for st in rel:
        spine.append(subterm_at(spine[-1], (st,)))
    cur = spine.pop()
    chain = []
    for i in range(len(rel) - 1, -1, -1):
        kind = AxiomKind.APP_L if rel[i] is Step.APP_LEFT else AxiomKind.APP_R
        cur = apply_axiom(rebuild(spine[i], rel[i], cur), Axiom(kind, False, ()))
        chain.append(Axiom(kind, False, base + rel[:i]))
    return replace_at(w, base, cur), tuple(chain)


def check_transition(s: State, label: Label, s2: State,
                     blind: bool = False, blind_depth: Optional[int] = None) -> DistillResult:
    """Project one transition onto the calculus.

    Commutative c1/c2/c3/c5/c6 keep the decoding syntactically equal; c4
    reaches the new decoding by garbage collection alone; m is one
    multiplicative LO step followed by the constructive axiom chain; e is
    one exponential LO step, equal up to alpha, copying the same skeleton.
    ``blind`` additionally re-derives the m closure by bounded search.
    """
    c1, t1 = decode_state(s)
    c2, t2 = decode_state(s2)
    if label in (Label.C1, Label.C2, Label.C3, Label.C5, Label.C6):
        if same(t1, t2):
            return DistillResult(label, True)
        return DistillResult(label, False, "decodings differ")
    if label is Label.C4:
        if gc_reachable(t1, t2):
            return DistillResult(label, True)
        return DistillResult(label, False, "not reachable by garbage collection")
    res = step_lo_detail(t1)
    if res is None:
        return DistillResult(label, False, "decoding is normal")
    if label is Label.M:
        if s.stack is None or s.phase is not Phase.EVAL:
            return DistillResult(label, False, "state cannot fire m")
        if res.kind is not KIND_M:
            return DistillResult(label, False, f"strategy fired {res.kind.value}")
        # the redex (λx.t)u sits where the code and the stack head meet
        want = c1.path[:-1]
        if res.redex.position != want:
            return DistillResult(label, False, "redex position differs from the code position")
        got, chain = m_chain(s, res.term, want)
        if not same(got, t2):
            return DistillResult(label, False, "axiom chain does not reach the decoding")
        if blind:
            depth = blind_depth if blind_depth is not None else max(1, 2 * len(chain))
            r = equiv_bounded(res.term, t2, depth)
            if isinstance(r, NotWithinDepth):
                return DistillResult(label, False, f"blind search failed at depth {depth}", chain)
        return DistillResult(label, True, chain=chain)
    if res.kind is not KIND_E:
        return DistillResult(label, False, f"strategy fired {res.kind.value}")
    if res.redex.position != c1.path:
        return DistillResult(label, False, "redex position differs from the code position")
    if not alpha_eq(res.term, t2):
        return DistillResult(label, False, "exponential step does not reach the decoding")
    if skeleton_key(res.copied) != skeleton_key(s2.code):
        return DistillResult(label, False, "copied skeletons differ")
    return DistillResult(label, True)
