"""Quantitative and Boolean STL semantics on the sample grid.

Every evaluator works on whole traces: ``robustness_trace(phi, w)[i]`` is the
robustness of ``phi`` on the shifted signal that starts at grid index ``i``.
The robustness of ``phi`` on ``w`` itself is the first entry.

Time intervals are intersected with the remaining horizon of each shift.
Suprema over an empty set of instants are ``-inf`` and infima ``+inf``;
both are carried as IEEE infinities.
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np

from ..signals import GRID_EPS, Signal, TimeSet
from .syntax import (
    BOTTOM,
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
    Until,
    Var,
)


class STLEvaluationError(ValueError):
    """Raised when a formula cannot be evaluated on a signal."""


def interval_indices(interval: Interval, step: float) -> tuple[int, int | None]:
    """Grid offsets ``(lo, hi)`` covered by ``interval``; ``hi`` is None when unbounded."""
    lo = int(math.ceil(interval.lo / step - GRID_EPS))
    if math.isinf(interval.hi):
        return lo, None
    return lo, int(math.floor(interval.hi / step + GRID_EPS))


def eval_expr(e: Expr, w: Signal) -> np.ndarray:
    n = w.n_samples
    if isinstance(e, Var):
        try:
            return w.column(e.name)
        except KeyError:
            raise STLEvaluationError(f"unknown channel {e.name!r}; signal has {w.channels}") from None
    if isinstance(e, Const):
        return np.full(n, e.value)
    if isinstance(e, BinOp):
        a, b = eval_expr(e.left, w), eval_expr(e.right, w)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        raise STLEvaluationError(f"unknown operator {e.op!r}")
    if isinstance(e, Neg):
        return -eval_expr(e.arg, w)
    if isinstance(e, Abs):
        return np.abs(eval_expr(e.arg, w))
    raise TypeError(f"not an expression: {e!r}")


def atom_margin(atom: Atom, w: Signal) -> np.ndarray:
    """Signed margin of an atom at every grid index.

    ``lhs > rhs`` and ``lhs >= rhs`` both give ``lhs - rhs``; ``<``/``<=`` give
    its negation.  ``lhs == rhs`` is read as ``|lhs - rhs| < 0.5`` (integer
    valued channels such as gears), giving ``min(d + 0.5, 0.5 - d)``.
    """
    d = eval_expr(atom.lhs, w) - eval_expr(atom.rhs, w)
    if atom.rel in (">", ">="):
        return d
    if atom.rel in ("<", "<="):
        return -d
    return np.minimum(d + 0.5, 0.5 - d)


def sliding_extreme(x: np.ndarray, lo: int, hi: int | None, mode: str) -> np.ndarray:
    """``out[i] = min`` (or ``max``) of ``x[i+lo : i+hi+1]`` clipped to the array.

    Empty windows give ``+inf`` for min and ``-inf`` for max.  Windows whose
    right end always reaches the last sample reduce to a suffix scan; the
    general case uses a monotone deque, so the cost is linear in ``len(x)``.
    """
    n = len(x)
    is_min = mode == "min"
    empty = math.inf if is_min else -math.inf
    out = np.full(n, empty)
    if lo >= n or (hi is not None and hi < lo):
        return out
    if hi is None or hi >= n - 1:
        acc = np.minimum if is_min else np.maximum
        suffix = acc.accumulate(x[::-1])[::-1]
        out[: n - lo] = suffix[lo:]
        return out

    vals = x.tolist()
    better = (lambda a, b: a <= b) if is_min else (lambda a, b: a >= b)
    dq: deque[int] = deque()
    right = lo - 1  # last index pushed
    for i in range(n - lo):
        r = min(i + hi, n - 1)
        while right < r:
            right += 1
            v = vals[right]
            while dq and better(v, vals[dq[-1]]):
                dq.pop()
            dq.append(right)
        while dq[0] < i + lo:
            dq.popleft()
        out[i] = vals[dq[0]]
    return out


def _until_trace(f1: np.ndarray, f2: np.ndarray, lo: int, hi: int | None) -> np.ndarray:
    n = len(f1)
    out = np.full(n, -math.inf)
    a, b = f1.tolist(), f2.tolist()
    for i in range(n):
        stop = n - 1 if hi is None else min(i + hi, n - 1)
        best, prefix = -math.inf, math.inf  # prefix = inf of f1 over [i, j)
        for j in range(i, stop + 1):
            if j >= i + lo:
                cand = b[j] if b[j] < prefix else prefix
                if cand > best:
                    best = cand
            if a[j] < prefix:
                prefix = a[j]
        out[i] = best
    return out


def robustness_trace(phi: Formula, w: Signal) -> np.ndarray:
    """Robustness of ``phi`` on every shift of ``w``."""
    n = w.n_samples
    if isinstance(phi, Atom):
        return atom_margin(phi, w)
    if isinstance(phi, Bottom):
        return np.full(n, -math.inf)
    if isinstance(phi, Not):
        return -robustness_trace(phi.arg, w)
    if isinstance(phi, And):
        return np.minimum(robustness_trace(phi.left, w), robustness_trace(phi.right, w))
    if isinstance(phi, Or):
        return np.maximum(robustness_trace(phi.left, w), robustness_trace(phi.right, w))
    if isinstance(phi, Always):
        lo, hi = interval_indices(phi.interval, w.step)
        return sliding_extreme(robustness_trace(phi.arg, w), lo, hi, "min")
    if isinstance(phi, Eventually):
        lo, hi = interval_indices(phi.interval, w.step)
        return sliding_extreme(robustness_trace(phi.arg, w), lo, hi, "max")
    if isinstance(phi, Until):
        lo, hi = interval_indices(phi.interval, w.step)
        return _until_trace(robustness_trace(phi.left, w), robustness_trace(phi.right, w), lo, hi)
    raise TypeError(f"not a formula: {phi!r}")


def eval_robust(phi: Formula, w: Signal) -> float:
    """Robustness of ``phi`` on ``w`` (an extended real)."""
    return float(robustness_trace(phi, w)[0])


# ---------------------------------------------------------------- Boolean
def satisfaction_trace(phi: Formula, w: Signal) -> np.ndarray:
    """Boolean satisfaction of ``phi`` on every shift of ``w``."""
    n = w.n_samples
    if isinstance(phi, Atom):
        d = eval_expr(phi.lhs, w) - eval_expr(phi.rhs, w)
        return {
            ">": d > 0,
            ">=": d >= 0,
            "<": d < 0,
            "<=": d <= 0,
            "==": (d + 0.5 > 0) & (0.5 - d > 0),
        }[phi.rel]
    if isinstance(phi, Bottom):
        return np.zeros(n, dtype=bool)
    if isinstance(phi, Not):
        return ~satisfaction_trace(phi.arg, w)
    if isinstance(phi, And):
        return satisfaction_trace(phi.left, w) & satisfaction_trace(phi.right, w)
    if isinstance(phi, Or):
        return satisfaction_trace(phi.left, w) | satisfaction_trace(phi.right, w)
    if isinstance(phi, (Always, Eventually)):
        sub = satisfaction_trace(phi.arg, w)
        lo, hi = interval_indices(phi.interval, w.step)
        out = np.empty(n, dtype=bool)
        for i in range(n):
            window = sub[i + lo : n if hi is None else i + hi + 1]
            out[i] = window.all() if isinstance(phi, Always) else window.any()
        return out
    if isinstance(phi, Until):
        s1, s2 = satisfaction_trace(phi.left, w), satisfaction_trace(phi.right, w)
        lo, hi = interval_indices(phi.interval, w.step)
        out = np.zeros(n, dtype=bool)
        for i in range(n):
            stop = n - 1 if hi is None else min(i + hi, n - 1)
            for j in range(i, stop + 1):
                if j >= i + lo and s2[j]:
                    out[i] = True
                    break
                if not s1[j]:
                    break
        return out
    raise TypeError(f"not a formula: {phi!r}")


def eval_boolean(phi: Formula, w: Signal) -> bool:
    """Classical satisfaction ``w |= phi`` on the sample grid."""
    return bool(satisfaction_trace(phi, w)[0])


# ----------------------------------------------------- restricted robustness
def eval_robust_restricted(psi: Formula, w: Signal, instants: TimeSet) -> float:
    """Infimum of the robustness of ``psi`` over the shifts flagged in ``instants``."""
    instants = np.asarray(instants, dtype=bool)
    if instants.shape != (w.n_samples,):
        raise STLEvaluationError(f"time set has {instants.shape} flags for {w.n_samples} samples")
    if not instants.any():
        return math.inf
    return float(robustness_trace(psi, w)[instants].min())


def falsified_time_set(phi_other: Formula, w: Signal, interval: Interval) -> TimeSet:
    """Grid instants ``t`` in ``interval`` at which ``phi_other`` has negative robustness."""
    return window_mask(w, interval) & (robustness_trace(phi_other, w) < 0)


def window_mask(w: Signal, interval: Interval) -> TimeSet:
    lo, hi = interval_indices(interval, w.step)
    mask = np.zeros(w.n_samples, dtype=bool)
    mask[lo : None if hi is None else hi + 1] = True
    return mask


__all__ = [
    "BOTTOM",
    "STLEvaluationError",
    "atom_margin",
    "eval_boolean",
    "eval_expr",
    "eval_robust",
    "eval_robust_restricted",
    "falsified_time_set",
    "interval_indices",
    "robustness_trace",
    "satisfaction_trace",
    "sliding_extreme",
    "window_mask",
]
