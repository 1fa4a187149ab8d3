"""Lock-step comparison of the machine against the calculus, and reports."""

from __future__ import annotations

import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

from .decoding import check_transition, decode
from .invariants import margins
from .lsc import step_lo_detail, unfold
from .machine import CheckLevel, Label, Outcome, init, run
from .terms import (
    BudgetExhausted, Term, alpha_eq, beta_normalize, parse, show, size,
)

BLIND_LIMIT = 15  # blind equivalence search only for initial terms this small


@dataclass
class Report:
    term: str
    size: int
    outcome: str                  # "normal-form" | "diverged-at-budget"
    counters: dict                # label value -> count
    strategy: dict                # {"m": .., "e": ..}
    checks: dict                  # name -> bool
    margins: dict                 # minimum over all prefixes
    final_margins: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    times: dict = field(default_factory=dict)
    normal_form: Optional[str] = None
    name: str = ""

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    @property
    def principal(self) -> int:
        return self.counters["m"] + self.counters["e"]

    @property
    def c_ev(self) -> int:
        return sum(self.counters[k] for k in ("c1", "c2", "c3"))

    @property
    def c_bt(self) -> int:
        return sum(self.counters[k] for k in ("c4", "c5", "c6"))

    @property
    def commutative(self) -> int:
        return self.c_ev + self.c_bt

    @property
    def length(self) -> int:
        return sum(self.counters.values())

    def to_json(self) -> dict:
        d = asdict(self)
        d["counters"] = dict(self.counters)
        return d


def run_and_compare(t: Term, budget: int = 100_000, name: str = "",
                    blind: Optional[bool] = None, distill: bool = True,
                    checks: CheckLevel = CheckLevel.FULL) -> Report:
    """Run the machine with checks, the strategy in lock-step, and the β oracle.

    The strategy advances once per principal machine transition, and the
    kinds must agree, so counts agree on every prefix and the first
    disagreement is localised.  Check failures are recorded, not raised.
    """
    s0 = init(t)
    n0 = size(t)
    if blind is None:
        blind = n0 <= BLIND_LIMIT
    failures: list = []
    lo_term = s0.code
    lo = {"m": 0, "e": 0}
    lo_stalled = False
    distill_ok = True
    counts_ok = True
    counters: Counter = Counter({lab: 0 for lab in Label})
    low = margins(counters, n0)
    t_lo = 0.0

    def on_step(s, lab, s2):
        nonlocal lo_term, lo_stalled, distill_ok, counts_ok, t_lo
        counters[lab] += 1
        for k, v in margins(counters, n0).items():
            if v < low[k]:
                low[k] = v
        if distill:
            r = check_transition(s, lab, s2, blind=blind)
            if not r.ok:
                distill_ok = False
                failures.append(f"distill {lab.value} #{sum(counters.values())}: {r.detail}")
        if lab.principal and not lo_stalled:
            t1 = time.perf_counter()
            res = step_lo_detail(lo_term)
            t_lo += time.perf_counter() - t1
            if res is None or res.kind.value != lab.value:
                counts_ok = False
                lo_stalled = True
                got = "normal" if res is None else res.kind.value
                failures.append(f"count: machine fired {lab.value} after m={lo['m']} "
                                f"e={lo['e']}, strategy {got}")
                return
            lo[res.kind.value] += 1
            lo_term = res.term

    t1 = time.perf_counter()
    ex = run(s0, budget=budget, checks=checks, t0=t, keep_states=False,
             on_step=on_step, raise_on_violation=False)
    t_machine_checked = time.perf_counter() - t1
    inv_ok = not any(_is_invariant(v) for v in ex.violations)
    bil_ok = not any(not _is_invariant(v) for v in ex.violations)
    for v in ex.violations:
        failures.append(f"violation {v}")
    if checks is CheckLevel.OFF:
        bil_ok = all(v >= 0 for v in low.values())

    t1 = time.perf_counter()
    ex_off = run(init(t), budget=budget, keep_states=False)
    t_machine = time.perf_counter() - t1

    result_ok = True
    nf = None
    t_beta = 0.0
    if ex.outcome is Outcome.FINAL:
        outcome = "normal-form"
        if not lo_stalled and step_lo_detail(lo_term) is not None:
            counts_ok = False
            failures.append("count: strategy has steps left after the machine stopped")
        final = unfold(decode(ex.final))
        nf = show(final)
        if not alpha_eq(final, unfold(lo_term)):
            result_ok = False
            failures.append("result: machine and strategy normal forms differ")
        t1 = time.perf_counter()
        beta = beta_normalize(t, budget)
        t_beta = time.perf_counter() - t1
        if isinstance(beta, BudgetExhausted):
            result_ok = False
            failures.append("result: β oracle ran out of budget on a normalising term")
        elif not alpha_eq(final, beta.term):
            result_ok = False
            failures.append("result: machine and β normal forms differ")
    else:
        outcome = "diverged-at-budget"
    if ex_off.counters != ex.counters:
        failures.append("unchecked run differs from checked run")
        result_ok = False

    return Report(
        term=show(t), size=n0, outcome=outcome,
        counters={lab.value: ex.counters[lab] for lab in Label},
        strategy=dict(lo),
        checks={"distill": distill_ok, "invariants": inv_ok, "bilinear": bil_ok,
                "counts": counts_ok, "result": result_ok},
        margins=low, final_margins=margins(counters, n0), failures=failures,
        times={"machine": t_machine, "machine_checked": t_machine_checked,
               "strategy": t_lo, "beta": t_beta},
        normal_form=nf, name=name,
    )


def _is_invariant(v) -> bool:
    return getattr(v, "clause", "") not in ("measure", "bilinearity")


# ---------------------------------------------------------------------------
# corpora, in parallel

def _worker(job) -> Report:
    # terms travel as text: a worker process has its own fresh-name supply
    name, src, budget, distill, checks = job
    return run_and_compare(parse(src), budget, name=name, distill=distill,
                           checks=CheckLevel(checks))


def compare_corpus(entries, budget: int = 100_000, workers: Optional[int] = None,
                   distill: bool = True,
                   checks: CheckLevel = CheckLevel.FULL) -> list[Report]:
    """Reports for (name, term) pairs, in input order."""
    jobs = [(name, show(t), budget, distill, checks.value) for name, t in entries]
    if workers == 1 or len(jobs) <= 1:
        return [_worker(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_worker, jobs, chunksize=4))


# ---------------------------------------------------------------------------
# cost of single transitions

@dataclass
class StepTimings:
    term: str
    steps: int
    env_length: int
    median_ns: dict          # label value -> median wall time of one step
    median_commutative_ns: float


def step_timings(t: Term, budget: int = 1_000_000, repeat: int = 1) -> StepTimings:
    """Wall time of every single transition of an unchecked run.

    With ``repeat > 1`` the run is repeated and each step keeps its fastest
    time, which filters out scheduler noise.
    """
    import gc
    from statistics import median

    from .machine import length, step

    best: list = []
    labs: list = []
    final = None
    for r in range(repeat):
        s = init(t)
        times = []
        was = gc.isenabled()
        gc.disable()
        try:
            for _ in range(budget):
                t1 = time.perf_counter_ns()
                nxt = step(s)
                dt = time.perf_counter_ns() - t1
                if nxt is None:
                    break
                s, lab = nxt
                times.append(dt)
                if r == 0:
                    labs.append(lab)
        finally:
            if was:
                gc.enable()
        best = times if r == 0 else [min(a, b) for a, b in zip(best, times)]
        final = s
    per: dict = {}
    for lab, dt in zip(labs, best):
        per.setdefault(lab.value, []).append(dt)
    comm = [dt for lab, dt in zip(labs, best) if not lab.principal]
    return StepTimings(show(t), len(labs), length(final.env),
                       {k: median(v) for k, v in per.items()},
                       median(comm) if comm else 0.0)
