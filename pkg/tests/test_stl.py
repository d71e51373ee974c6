import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from falsar.signals import Signal, constant
from falsar.stl import (
    BOTTOM,
    TOP,
    Always,
    And,
    Atom,
    Const,
    Eventually,
    Interval,
    Not,
    Or,
    STLEvaluationError,
    STLSyntaxError,
    Until,
    Var,
    channels,
    eval_boolean,
    eval_robust,
    eval_robust_restricted,
    falsified_time_set,
    parse,
    robustness_trace,
    sliding_extreme,
)

from oracles import brute_restricted, brute_robust, brute_robust_at, random_formula, random_instance, random_signal


def x_signal(xs, step=1.0):
    return Signal.from_columns(step, x=xs)


# ------------------------------------------------------------------ parser
def test_parse_always_atom():
    assert parse("alw_[0,30](speed < 120)") == Always(Interval(0, 30), Atom(Var("speed"), "<", Const(120)))


def test_parse_rpm_speed_example():
    phi = parse("alw_[0,30](not(rpm > 4000) or (speed > 20))")
    assert phi == Always(
        Interval(0, 30),
        Or(Not(Atom(Var("rpm"), ">", Const(4000))), Atom(Var("speed"), ">", Const(20))),
    )


def test_parse_implication_desugars():
    phi = parse("alw_[0,30](gear == 3 -> speed > 20.6)")
    assert phi == Always(
        Interval(0, 30),
        Or(Not(Atom(Var("gear"), "==", Const(3))), Atom(Var("speed"), ">", Const(20.6))),
    )


def test_precedence():
    # not > and > or > ->
    assert parse("a > 0 or b > 0 and c > 0") == Or(
        Atom(Var("a"), ">", Const(0)), And(Atom(Var("b"), ">", Const(0)), Atom(Var("c"), ">", Const(0))))
    assert parse("not a > 0 and b > 0") == And(Not(Atom(Var("a"), ">", Const(0))), Atom(Var("b"), ">", Const(0)))
    p = parse("a > 0 -> b > 0 -> c > 0")
    assert p == Or(Not(Atom(Var("a"), ">", Const(0))), Or(Not(Atom(Var("b"), ">", Const(0))), Atom(Var("c"), ">", Const(0))))


def test_parse_misc():
    assert parse("ev_[0,inf] (x >= 1)").interval.hi == math.inf
    assert parse("true") == TOP and parse("false") == BOTTOM
    assert parse("2 <= x") == Atom(Const(2), "<=", Var("x"))
    assert channels(parse("abs(x - y) < 3 and z * 2 > -1")) == {"x", "y", "z"}


@pytest.mark.parametrize("text", [
    "alw_[3,3](x > 0)",          # singular interval
    "alw_[4,2](x > 0)",
    "alw_[0,30](x > 0",
    "x >",
    "x > 0 and",
    "alw_[0,(x > 0)",
    "x $ 3",
])
def test_parse_errors(text):
    with pytest.raises(STLSyntaxError):
        parse(text)


def test_syntax_error_position():
    with pytest.raises(STLSyntaxError) as info:
        parse("x > 0 and\n  y ? 2")
    assert info.value.line == 2 and info.value.column == 5


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10**6))
def test_str_round_trips(seed):
    rnd = random.Random(seed)
    phi = random_formula(rnd, 4, 20.0, 0.5)
    assert parse(str(phi)) == phi


# --------------------------------------------------------------- semantics
def test_constant_speed_ninety():
    w = constant(("speed",), (90.0,), horizon=30.0, step=1.0)
    phi = parse("alw_[0,30](speed<120)")
    assert eval_robust(phi, w) == 30
    assert eval_boolean(phi, w)
    assert not eval_boolean(phi, constant(("speed",), (130.0,), 30.0, 1.0))


def test_atom_and_bottom():
    assert eval_robust(parse("x > 0"), x_signal([5.0])) == 5
    assert eval_robust(BOTTOM, x_signal([5.0])) == -math.inf
    assert eval_robust(TOP, x_signal([5.0])) == math.inf


def test_rpm_speed_example_value():
    w = Signal.from_columns(1.0, rpm=[3000.0] * 31, speed=[10.0] * 31)
    phi = parse("alw_[0,30](not(rpm > 4000) or (speed > 20))")
    assert eval_robust(phi, w) == 1000


def test_equality_margin():
    w = Signal.from_columns(1.0, g=[3.0, 2.0, 3.25])
    tr = robustness_trace(parse("g == 3"), w)
    assert tr.tolist() == [0.5, -0.5, 0.25]


def test_eventually_is_window_max():
    xs = [0.3, -1.0, 2.5, 0.0, 1.0, -2.0]
    w = x_signal(xs, step=0.5)
    assert eval_robust(parse("ev_[0.5,1.5](x > 0)"), w) == max(xs[1:4])


def test_window_past_horizon():
    w = x_signal([1.0, 2.0])
    assert eval_robust(parse("alw_[5,9](x > 0)"), w) == math.inf
    assert eval_robust(parse("ev_[5,9](x > 0)"), w) == -math.inf
    assert eval_robust(parse("x > 0 until_[5,9] x > 0"), w) == -math.inf


def test_until_strict_prefix():
    # the left operand is not required at the instant the right one holds
    w = x_signal([1.0, 1.0, -3.0])
    phi = Until(Interval(0, 5), Atom(Var("x"), ">", Const(0)), Atom(Var("x"), "<", Const(0)))
    assert eval_robust(phi, w) == 1.0


def test_unknown_channel():
    with pytest.raises(STLEvaluationError):
        eval_robust(parse("nope > 1"), x_signal([1.0]))


def test_de_morgan_exact():
    rnd = random.Random(3)
    for _ in range(200):
        w = random_signal(rnd, 20)
        f = random_formula(rnd, 2, w.horizon, w.step)
        g = random_formula(rnd, 2, w.horizon, w.step)
        assert eval_robust(Not(And(f, g)), w) == eval_robust(Or(Not(f), Not(g)), w)


@pytest.mark.parametrize("seed", range(5))
def test_oracle_agreement_small_batch(seed):
    rnd = random.Random(seed)
    for _ in range(200):
        phi, w = random_instance(rnd, max_depth=3, max_len=25)
        assert robustness_trace(phi, w).tolist() == brute_robust_at(phi, w)


# ------------------------------------------------------- sliding windows
@settings(max_examples=300, deadline=None)
@given(
    st.lists(st.integers(-5, 5), min_size=1, max_size=40),
    st.integers(0, 45),
    st.one_of(st.none(), st.integers(0, 45)),
    st.sampled_from(["min", "max"]),
)
def test_sliding_extreme_matches_naive(xs, lo, width, mode):
    x = np.array(xs, dtype=float)
    hi = None if width is None else lo + width
    out = sliding_extreme(x, lo, hi, mode)
    n = len(x)
    for i in range(n):
        window = x[i + lo : n if hi is None else i + hi + 1]
        expect = (window.min() if mode == "min" else window.max()) if len(window) else (
            math.inf if mode == "min" else -math.inf)
        assert out[i] == expect


# --------------------------------------------------- restricted robustness
def test_restricted_examples():
    w = x_signal([3.0, -1.0, 4.0])
    psi = parse("x > 0")
    assert eval_robust_restricted(psi, w, np.array([True, False, True])) == 3
    assert eval_robust_restricted(psi, w, np.zeros(3, bool)) == math.inf
    assert eval_robust_restricted(psi, w, np.ones(3, bool)) == eval_robust(parse("alw_[0,2](x > 0)"), w)


def test_falsified_time_set_examples():
    w = x_signal([3.0, -1.0, 4.0])
    assert falsified_time_set(parse("x > 0"), w, Interval(0, 2)).tolist() == [False, True, False]
    assert falsified_time_set(BOTTOM, w, Interval(0, 1)).tolist() == [True, True, False]


def test_restricted_hand_built_trace():
    # phi1 false exactly on [10, 12], phi2's margin -1 there
    t = np.arange(21.0)
    a = np.where((t >= 10) & (t <= 12), -2.0, 1.0)
    b = np.where((t >= 10) & (t <= 12), -1.0, -5.0)
    w = Signal.from_columns(1.0, a=a, b=b)
    phi1, phi2 = parse("a > 0"), parse("b > 0")
    S = falsified_time_set(phi1, w, Interval(0, 20))
    assert np.flatnonzero(S).tolist() == [10, 11, 12]
    assert eval_robust_restricted(phi2, w, S) == -1
    assert brute_robust(Always(Interval(0, 20), Or(phi1, phi2)), w) < 0


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6))
def test_restricted_monotone_and_matches_oracle(seed):
    rnd = random.Random(seed)
    phi, w = random_instance(rnd, max_depth=2, max_len=20)
    small = np.array([rnd.random() < 0.4 for _ in range(w.n_samples)])
    big = small | np.array([rnd.random() < 0.4 for _ in range(w.n_samples)])
    r_small, r_big = eval_robust_restricted(phi, w, small), eval_robust_restricted(phi, w, big)
    assert r_big <= r_small
    assert r_small == brute_restricted(phi, w, small)


def test_restricted_shape_check():
    with pytest.raises(STLEvaluationError):
        eval_robust_restricted(parse("x > 0"), x_signal([1.0, 2.0]), np.ones(3, bool))


def test_eventually_always_nodes_agree_with_until():
    rnd = random.Random(11)
    for _ in range(200):
        w = random_signal(rnd, 20)
        f = random_formula(rnd, 2, w.horizon, w.step)
        itv = Interval(w.step * rnd.randint(0, 5), w.step * rnd.randint(6, 12))
        assert eval_robust(Eventually(itv, f), w) == eval_robust(Until(itv, TOP, f), w)
        assert eval_robust(Always(itv, f), w) == eval_robust(Not(Until(itv, TOP, Not(f))), w)
