"""Learning default grammars for syntax-guided synthesis by greedy rule removal."""
from .grammar import Grammar, NonTerminal, Operator, Terminal
from .problem import SynthProblem, extract_literals, parse_problem, print_problem
from .rules import (
    Metagrammar,
    Rule,
    default_metagrammar,
    enhanced_metagrammar,
    materialize,
    neighbors,
    reduced_metagrammar,
)
from .search import SearchConfig, descend, score_benchmark, score_metagrammar, select_final
from .solver import Builtin, External, RunLimits, SolveOutcome, enumerate_solve, run_batch, solve, verify
from .terms import BOOL, BV, App, Lit, Sort, Var, eval_term

__version__ = "0.1.0"
