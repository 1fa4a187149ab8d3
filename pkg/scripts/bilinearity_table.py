"""Counters and bound margins for a corpus, one row per term.

    python scripts/bilinearity_table.py church:4
"""

import argparse

from strongmam.corpus import CorpusSpec, gen_named_corpus
from strongmam.harness import compare_corpus
from strongmam.machine import CheckLevel

ap = argparse.ArgumentParser()
ap.add_argument("corpus", nargs="?", default="church:3")
ap.add_argument("--budget", type=int, default=100_000)
ns = ap.parse_args()

reports = compare_corpus(gen_named_corpus(CorpusSpec.parse(ns.corpus)), ns.budget,
                         workers=1, distill=False, checks=CheckLevel.COUNTERS)
print(f"{'term':>10} {'|t0|':>5} {'m':>6} {'e':>6} {'c-ev':>7} {'c-bt':>7} "
      f"{'(1+e)|t0|':>10} {'ev slack':>9} {'bt slack':>9}")
for r in reports:
    cap = (1 + r.counters["e"]) * r.size
    print(f"{r.name:>10} {r.size:5} {r.counters['m']:6} {r.counters['e']:6} {r.c_ev:7} "
          f"{r.c_bt:7} {cap:10} {r.margins['ev_bound']:9} {r.margins['bt_bound']:9}")
print(f"{sum(r.ok for r in reports)}/{len(reports)} within bounds")
