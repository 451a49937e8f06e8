"""Model checking for strategy logics with updatable strategies.

Models are non-deterministic alternating transition systems; strategies
are finite-memory transducers; formulas combine strategy quantification
with binders that compose (or, in the revocation dialect, replace) the
strategies an agent is committed to.
"""

__version__ = "0.1.0"

from .model import (
    ModelValidationError,
    Nats,
    Track,
    convert_cgs,
    dump_model,
    is_deterministic,
    is_track,
    load_model,
    loads,
    make_track,
    successors,
    validate,
)
from .formula import (
    always,
    Atom,
    And,
    Bind,
    Const,
    embed_sl,
    eventually,
    Exists,
    forall,
    free_vars,
    f_or,
    gen_gamma,
    implies,
    is_sentence,
    Next,
    node_count,
    Not,
    PathAnd,
    PathNot,
    substitute,
    substitute_many,
    Unbind,
    Until,
)
from .parser import ParseError, parse_formula, render_formula
from .strategy import (
    advance,
    bind_commit,
    build_config_graph,
    coherent,
    ConfigGraph,
    Context,
    ctx_choice,
    enumerate_strategies,
    memoryless,
    strat_choice,
    StrategyConfig,
    StrategyTransducer,
    unbind_commit,
    UnboundVariableError,
)
from .pathcheck import (
    enumerate_lassos,
    eval_on_lasso,
    LabeledGraph,
    Lasso,
    ltl_to_buchi,
    universal_check,
)
from .checker import (
    BudgetExceeded,
    check_sentence,
    CheckError,
    EvalParams,
    Evaluator,
    OracleDivergence,
    property_suite_prop2,
    random_deterministic_nats,
    sustainable_control_formula,
    Verdict,
)
