"""Strong call-by-name normalisation: the LSC strategy and the Strong MAM."""

from .terms import (
    App, Lam, Sub, Term, Var, VarId, alpha_eq, beta_normalize, fresh, fv, parse,
    parse_lsc, show, size, skeleton, well_name,
)
from .lsc import (
    Context, Redex, RuleKind, enumerate_redexes, find_lo_redex_by_order,
    find_lo_redex_ilo, is_lo_context, lo_compare, normalize_lo, step_lo, unfold,
)
from .structural import Equivalent, NotWithinDepth, equiv_bounded
from .machine import CheckLevel, Execution, Label, Phase, State, env_lookup, init, run, step
from .decoding import check_transition, decode
from .invariants import check_compat, check_invariants
from .harness import Report, run_and_compare
from .corpus import CorpusSpec, gen_corpus

__all__ = [n for n in dir() if not n.startswith("_")]
