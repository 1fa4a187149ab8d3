"""Median time per commutative transition as the environment grows."""

import argparse

from strongmam.corpus import EXP, church
from strongmam.harness import step_timings
from strongmam.terms import parse

ap = argparse.ArgumentParser()
ap.add_argument("--base", type=int, default=2)
ap.add_argument("--max-exp", type=int, default=10)
ap.add_argument("--repeat", type=int, default=3)
ns = ap.parse_args()

rows = [step_timings(parse(f"{EXP} {church(ns.base)} {church(k)}"), repeat=ns.repeat)
        for k in range(1, ns.max_exp + 1)]
print(f"{'instance':>8} {'steps':>7} {'env':>6} {'C median ns':>12} {'e median ns':>12}")
for k, r in enumerate(rows, 1):
    print(f"{ns.base}^{k:<6} {r.steps:7} {r.env_length:6} {r.median_commutative_ns:12.0f} "
          f"{r.median_ns.get('e', 0):12.0f}")
print(f"largest / smallest C median: "
      f"{rows[-1].median_commutative_ns / rows[0].median_commutative_ns:.2f}")
