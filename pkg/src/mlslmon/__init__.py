"""Offline monitoring for multi-lane spatial logic.

Simulates recorded motorway behavior with exact rational arithmetic,
evaluates spatial formulas directly, and compiles "holds at every instant"
checks — exact or robust against bounded spatio-temporal perturbations —
into nonlinear real arithmetic discharged by an external SMT solver.
"""

from .formula import MlslFormula, somewhere
from .monitor import CheckReport, check, check_robust, eval_at, oracle_check
from .oracle import Verdict, global_check_direct
from .parser import ParseError, parse_formula
from .scenario import Scenario, load_scenario, scenario_from_dict
from .semantics import evaluate
from .smt import SolverConfig, discover_solver
from .traffic import Model, TimedWord, TrafficSnapshot, ValidationError, View

__version__ = "0.1.0"

__all__ = [
    "CheckReport",
    "MlslFormula",
    "Model",
    "ParseError",
    "Scenario",
    "SolverConfig",
    "TimedWord",
    "TrafficSnapshot",
    "ValidationError",
    "Verdict",
    "View",
    "check",
    "check_robust",
    "discover_solver",
    "eval_at",
    "evaluate",
    "global_check_direct",
    "load_scenario",
    "oracle_check",
    "parse_formula",
    "scenario_from_dict",
    "somewhere",
    "__version__",
]
