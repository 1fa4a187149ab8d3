"""Independent reference implementations used by the tests.

Nothing here imports the package's own reduction, renaming or equality
code: terms are converted to nameless (de Bruijn) tuples and everything
else is done on those.
"""

from strongmam.terms import App, Lam, Sub, Var


def nameless(t, env=()):
    """De Bruijn tuples; free variables keep their identity."""
    if isinstance(t, Var):
        for i, v in enumerate(reversed(env)):
            if v == t.v:
                return ("bv", i)
        return ("fv", t.v.id)
    if isinstance(t, Lam):
        return ("lam", nameless(t.body, env + (t.v,)))
    if isinstance(t, App):
        return ("app", nameless(t.fun, env), nameless(t.arg, env))
    return ("sub", nameless(t.body, env + (t.v,)), nameless(t.arg, env))


def count_nodes(t) -> int:
    if isinstance(t, Var):
        return 1
    if isinstance(t, Lam):
        return 1 + count_nodes(t.body)
    return 1 + count_nodes(t.fun if isinstance(t, App) else t.body) + \
        count_nodes(t.arg)


def _shift(d, c, t):
    tag = t[0]
    if tag == "bv":
        return ("bv", t[1] + d) if t[1] >= c else t
    if tag == "fv":
        return t
    if tag == "lam":
        return ("lam", _shift(d, c + 1, t[1]))
    return ("app", _shift(d, c, t[1]), _shift(d, c, t[2]))


def _subst(t, j, s):
    tag = t[0]
    if tag == "bv":
        return s if t[1] == j else t
    if tag == "fv":
        return t
    if tag == "lam":
        return ("lam", _subst(t[1], j + 1, _shift(1, 0, s)))
    return ("app", _subst(t[1], j, s), _subst(t[2], j, s))


def _beta(body, arg):
    return _shift(-1, 0, _subst(body, 0, _shift(1, 0, arg)))


def db_step(t):
    """One normal-order step on a nameless term, or None."""
    tag = t[0]
    if tag == "app":
        f, a = t[1], t[2]
        if f[0] == "lam":
            return _beta(f[1], a)
        r = db_step(f)
        if r is not None:
            return ("app", r, a)
        r = db_step(a)
        return None if r is None else ("app", f, r)
    if tag == "lam":
        r = db_step(t[1])
        return None if r is None else ("lam", r)
    return None


def db_normalize(t, budget):
    """(normal form, steps) or None when the budget runs out."""
    for k in range(budget + 1):
        r = db_step(t)
        if r is None:
            return t, k
        t = r
    return None


def church_value(t):
    """n if t is the Church numeral n (nameless), else None."""
    if t[0] != "lam" or t[1][0] != "lam":
        return None
    n, b = 0, t[1][1]
    while b[0] == "app" and b[1] == ("bv", 1):
        n, b = n + 1, b[2]
    return n if b == ("bv", 0) else None


def db_size(t):
    tag = t[0]
    if tag in ("bv", "fv"):
        return 1
    if tag == "lam":
        return 1 + db_size(t[1])
    return 1 + db_size(t[1]) + db_size(t[2])


def subtree_shapes(t, out=None):
    """All subtrees with every variable erased, by brute force."""
    out = set() if out is None else out

    def erase(u):
        if u[0] in ("bv", "fv"):
            return "*"
        if u[0] == "lam":
            return ("L", erase(u[1]))
        return (u[0], erase(u[1]), erase(u[2]))

    todo = [t]
    while todo:
        u = todo.pop()
        out.add(erase(u))
        if u[0] == "lam":
            todo.append(u[1])
        elif u[0] in ("app", "sub"):
            todo.extend((u[1], u[2]))
    return out


def unfold_nameless(t):
    """Meta-level substitution of every ES, on nameless terms."""
    tag = t[0]
    if tag in ("bv", "fv"):
        return t
    if tag == "lam":
        return ("lam", unfold_nameless(t[1]))
    if tag == "app":
        return ("app", unfold_nameless(t[1]), unfold_nameless(t[2]))
    return _beta(unfold_nameless(t[1]), unfold_nameless(t[2]))


# -- LSC redexes, recomputed naively --------------------------------------------

def _strip(t):
    while isinstance(t, Sub):
        t = t.body
    return t


def naive_redexes(t, scope=None, path=()):
    """(path, kind) of every redex outside ES arguments, by plain recursion."""
    from strongmam.terms import Step
    scope = {} if scope is None else scope
    if isinstance(t, Var):
        return [(path, "e")] if scope.get(t.v) == "es" else []
    if isinstance(t, Lam):
        return naive_redexes(t.body, {**scope, t.v: "lam"}, path + (Step.LAM_BODY,))
    if isinstance(t, App):
        here = [(path, "m")] if isinstance(_strip(t.fun), Lam) else []
        return here + naive_redexes(t.fun, scope, path + (Step.APP_LEFT,)) + \
            naive_redexes(t.arg, scope, path + (Step.APP_RIGHT,))
    return naive_redexes(t.body, {**scope, t.v: "es"}, path + (Step.SUB_BODY,))


def lo_key(path):
    """Outside-in, left-to-right: prefixes first, then left/body before right/arg."""
    from strongmam.terms import Step
    return tuple(1 if s in (Step.APP_RIGHT, Step.SUB_ARG) else 0 for s in path)


def naive_lo_redex(t):
    rs = naive_redexes(t)
    return min(rs, key=lambda r: lo_key(r[0])) if rs else None
