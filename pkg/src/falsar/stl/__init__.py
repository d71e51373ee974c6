"""Signal temporal logic: syntax, parser and grid semantics."""

from .robustness import (
    STLEvaluationError,
    atom_margin,
    eval_boolean,
    eval_robust,
    eval_robust_restricted,
    falsified_time_set,
    interval_indices,
    robustness_trace,
    satisfaction_trace,
    sliding_extreme,
    window_mask,
)
from .syntax import (
    BOTTOM,
    TOP,
    Abs,
    Always,
    And,
    Atom,
    BinOp,
    Bottom,
    Const,
    Eventually,
    Expr,
    Formula,
    Interval,
    Neg,
    Not,
    Or,
    STLSyntaxError,
    Until,
    Var,
    channels,
    expr_channels,
    implies,
    parse,
    subformulas,
)
