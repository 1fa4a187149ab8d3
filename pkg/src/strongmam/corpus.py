"""Term corpora: Church arithmetic, SKI compositions, seeded random terms."""

from __future__ import annotations

import random
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Optional

from .terms import (
    App, BudgetExhausted, Lam, Sub, Term, Var, beta_normalize, named, parse,
)

FAMILIES = ("church-arith", "combinators", "random-closed", "file")
_ALIASES = {"church": "church-arith", "ski": "combinators", "random": "random-closed"}


@dataclass(frozen=True)
class CorpusSpec:
    family: str
    size: int = 3
    seed: int = 0
    count: int = 100
    path: Optional[str] = None

    @classmethod
    def parse(cls, text: str) -> "CorpusSpec":
        """``church:3``, ``ski:5:seed=1:count=200``, ``random:40:seed=42``, ``file:PATH``."""
        head, _, rest = text.partition(":")
        family = _ALIASES.get(head, head)
        if family not in FAMILIES:
            raise ValueError(f"unknown corpus family {head!r}")
        if family == "file":
            if not rest:
                raise ValueError("file corpus needs a path")
            return cls(family, path=rest)
        kw: dict = {}
        for part in filter(None, rest.split(":")):
            if "=" in part:
                k, v = part.split("=", 1)
                if k not in ("seed", "count", "size"):
                    raise ValueError(f"unknown corpus option {k!r}")
                kw[k] = int(v)
            else:
                kw["size"] = int(part)
        return cls(family, **kw)


# ---------------------------------------------------------------------------
# Church arithmetic

def church(n: int) -> str:
    body = "x"
    for _ in range(n):
        body = f"f ({body})"
    return rf"(\f x. {body})"


ADD = r"(\m n f x. m f (n f x))"
MUL = r"(\m n f. m (n f))"
EXP = r"(\m n. n m)"  # m^n


def church_arith(size: int, exp_limit: int = 256) -> list[tuple[str, Term]]:
    """add, mul and exp on numerals 0..size; powers above exp_limit are skipped."""
    out = []
    for a, b in product(range(size + 1), repeat=2):
        out.append((f"{a}+{b}", parse(f"{ADD} {church(a)} {church(b)}")))
        out.append((f"{a}×{b}", parse(f"{MUL} {church(a)} {church(b)}")))
        if a ** b <= exp_limit:
            out.append((f"{a}^{b}", parse(f"{EXP} {church(a)} {church(b)}")))
    return out


# ---------------------------------------------------------------------------
# SKI

SKI = {"S": r"(\x y z. x z (y z))", "K": r"(\x y. x)", "I": r"(\x. x)"}


def _ski_flat(depth: int, max_args: int) -> list[str]:
    """Every head combinator applied to up to max_args arguments of lower depth."""
    level = list("SKI")
    for _ in range(depth):
        args = level
        nxt = []
        for h in "SKI":
            for k in range(max_args + 1):
                for xs in product(args, repeat=k):
                    nxt.append(" ".join([h] + [a if len(a) == 1 else f"({a})" for a in xs]))
        level = nxt
    return level


def _ski_sample(rng: random.Random, depth: int, max_args: int) -> str:
    h = rng.choice("SKI")
    if depth == 0:
        return h
    xs = [_ski_sample(rng, rng.randrange(depth), max_args)
          for _ in range(rng.randint(0, max_args))]
    return " ".join([h] + [a if len(a) == 1 else f"({a})" for a in xs])


def ski_to_lambda(src: str) -> Term:
    for k, v in SKI.items():
        src = src.replace(k, v)
    return parse(src)


def combinators(size: int, seed: int = 0, count: int = 100,
                max_args: int = 3) -> list[tuple[str, Term]]:
    """SKI compositions of argument depth <= size.

    Depth 1 is enumerated exhaustively (heads with up to ``max_args``
    atomic arguments, e.g. ``S K K I``); deeper terms are sampled.
    """
    names = _ski_flat(min(size, 1), max_args)
    seen = set(names)
    rng = random.Random(seed)
    tries = 0
    extra = []
    while size > 1 and len(extra) < count and tries < 50 * count:
        tries += 1
        s = _ski_sample(rng, size, max_args)
        if s not in seen:
            seen.add(s)
            extra.append(s)
    return [(s, ski_to_lambda(s)) for s in names + extra]


# ---------------------------------------------------------------------------
# random terms

_POOL = "abcde"


def random_closed(rng: random.Random, size: int, p_lam: float = 0.35) -> Term:
    """A closed pure term with exactly ``size`` constructors (size >= 2).

    Binder names come from a small pool, so shadowing is common.
    """
    if size < 2:
        raise ValueError("closed terms have size >= 2")
    # explicit stack of pending jobs; results are assembled bottom-up
    out: list = []
    todo: list = [("gen", size, ())]
    while todo:
        job = todo.pop()
        if job[0] == "lam":
            out.append(Lam(job[1], out.pop()))
            continue
        if job[0] == "app":
            b = out.pop()
            a = out.pop()
            out.append(App(a, b))
            continue
        _, n, scope = job
        if n == 1:
            out.append(Var(rng.choice(scope)))
            continue
        # an application needs two closed-in-scope halves
        if scope and n >= 3 and rng.random() >= p_lam:
            k = rng.randint(1, n - 2)
            todo.append(("app",))
            todo.append(("gen", n - 1 - k, scope))
            todo.append(("gen", k, scope))
        else:
            x = named(rng.choice(_POOL))
            todo.append(("lam", x))
            todo.append(("gen", n - 1, tuple(v for v in scope if v != x) + (x,)))
    return out[0]


def random_lsc(rng: random.Random, size: int, free: str = "uvw",
               p_sub: float = 0.25) -> Term:
    """A random LSC term with ``size`` constructors, possibly open."""
    out: list = []
    todo: list = [("gen", size, tuple(named(c) for c in free))]
    while todo:
        job = todo.pop()
        kind = job[0]
        if kind == "lam":
            out.append(Lam(job[1], out.pop()))
            continue
        if kind == "app":
            b = out.pop()
            a = out.pop()
            out.append(App(a, b))
            continue
        if kind == "sub":
            u = out.pop()
            t = out.pop()
            out.append(Sub(t, job[1], u))
            continue
        _, n, scope = job
        if n == 1:
            out.append(Var(rng.choice(scope)))
            continue
        r = rng.random()
        if n >= 3 and r < p_sub:
            x = named(rng.choice(_POOL))
            k = rng.randint(1, n - 2)
            todo.append(("sub", x))
            todo.append(("gen", n - 1 - k, scope))
            todo.append(("gen", k, scope + (x,)))
        elif n >= 3 and r < p_sub + 0.4:
            k = rng.randint(1, n - 2)
            todo.append(("app",))
            todo.append(("gen", n - 1 - k, scope))
            todo.append(("gen", k, scope))
        else:
            x = named(rng.choice(_POOL))
            todo.append(("lam", x))
            todo.append(("gen", n - 1, scope + (x,)))
    return out[0]


def random_corpus(size: int, seed: int = 0, count: int = 100,
                  min_size: int = 4) -> list[tuple[str, Term]]:
    rng = random.Random(seed)
    return [(f"random#{i}", random_closed(rng, rng.randint(min_size, size)))
            for i in range(count)]


# ---------------------------------------------------------------------------

def file_corpus(path: str) -> list[tuple[str, Term]]:
    """One term per non-blank line; ``#`` starts a comment."""
    out = []
    for i, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if line:
            out.append((f"{path}:{i}", parse(line)))
    return out


def gen_named_corpus(spec: CorpusSpec) -> list[tuple[str, Term]]:
    if spec.family == "church-arith":
        return church_arith(spec.size)
    if spec.family == "combinators":
        return combinators(spec.size, spec.seed, spec.count)
    if spec.family == "random-closed":
        return random_corpus(spec.size, spec.seed, spec.count)
    return file_corpus(spec.path)


def gen_corpus(spec: CorpusSpec) -> list[Term]:
    return [t for _, t in gen_named_corpus(spec)]


def split_normalizing(entries, budget: int = 2000):
    """Partition (name, term) pairs by whether β-normalisation ends in budget."""
    norm, div = [], []
    for name, t in entries:
        r = beta_normalize(t, budget)
        (div if isinstance(r, BudgetExhausted) else norm).append((name, t))
    return norm, div
