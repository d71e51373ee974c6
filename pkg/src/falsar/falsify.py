"""Falsification drivers: plain hill climbing and bandit-guided search.

All drivers share one loop.  Each iteration picks an arm (always the whole
formula for plain hill climbing), lets that arm's optimiser take one
hill-climbing step, and records the step's best robustness.  The loop stops
at the first negative robustness or when the simulation budget is spent.

Budget ``K`` counts simulations; every candidate evaluated inside a
hill-climbing step costs one.  A step stops early once it finds a negative
robustness.  Each arm keeps its best point so far, so the robustness an arm
reports never increases.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import bandit as mab
from .hillclimb import InputSpace, Optimizer, decode, make_optimizer
from .signals import Signal
from .stl import (
    Always,
    And,
    Formula,
    Interval,
    Or,
    channels,
    eval_robust,
    eval_robust_restricted,
    falsified_time_set,
)
from .systems import SystemModel, with_required_deltas

ALGORITHMS = ("hc", "mab-ucb", "mab-egreedy")
FALSIFIED, EXHAUSTED, TIMEOUT = "falsified", "budget-exhausted", "timeout"


@dataclass(frozen=True)
class SafetySpec:
    shape: str                      # "conjunctive", "disjunctive" or "plain"
    formula: Formula
    interval: Interval | None = None
    phi1: Formula | None = None
    phi2: Formula | None = None

    @property
    def arms(self) -> tuple[Formula, Formula]:
        return self.phi1, self.phi2


def classify_spec(phi: Formula) -> SafetySpec:
    """Recognise ``alw_I (a and b)`` and ``alw_I (a or b)``; anything else is plain."""
    if isinstance(phi, Always):
        if isinstance(phi.arg, And):
            return SafetySpec("conjunctive", phi, phi.interval, phi.arg.left, phi.arg.right)
        if isinstance(phi.arg, Or):
            return SafetySpec("disjunctive", phi, phi.interval, phi.arg.left, phi.arg.right)
    return SafetySpec("plain", phi)


@dataclass
class Iteration:
    k: int
    arm: int | None                 # 1 or 2 for bandit drivers
    rb: float
    running_min: float
    simulations: int


@dataclass
class FalsificationResult:
    outcome: str
    robustness: float
    simulations: int
    seconds: float
    algorithm: str
    witness: Signal | None = None
    witness_output: Signal | None = None
    witness_robustness: float | None = None
    trace: list[Iteration] = field(default_factory=list)

    @property
    def falsified(self) -> bool:
        return self.outcome == FALSIFIED

    @property
    def arm_sequence(self) -> list[int | None]:
        return [it.arm for it in self.trace]

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "algorithm": self.algorithm,
            "robustness": _json_float(self.robustness),
            "simulations": self.simulations,
            "seconds": self.seconds,
            "witness_robustness": _json_float(self.witness_robustness),
            "witness": self.witness.to_csv() if self.witness is not None else None,
            "trace": [
                {"k": it.k, "arm": it.arm, "rb": _json_float(it.rb),
                 "running_min": _json_float(it.running_min), "simulations": it.simulations}
                for it in self.trace
            ],
        }


def _json_float(v):
    if v is None:
        return None
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")


class _Runner:
    """Counts simulations against the budget and the wall-clock deadline."""

    def __init__(self, model: SystemModel, space: InputSpace, budget: int, timeout: float | None):
        self.model, self.space, self.budget = model, space, budget
        self.sims = 0
        self.start = time.perf_counter()
        self.deadline = None if timeout is None else self.start + timeout
        self.timed_out = False

    def can_run(self) -> bool:
        if self.sims >= self.budget:
            return False
        if self.deadline is not None and time.perf_counter() > self.deadline:
            self.timed_out = True
            return False
        return True

    def run(self, x) -> Signal:
        self.sims += 1
        return self.model.simulate(decode(self.space, x))


@dataclass
class _Arm:
    optimizer: Optimizer
    objective: Callable[[Signal], float]
    best_x: np.ndarray | None = None
    best_rb: float = math.inf


def _climb(arm: _Arm, runner: _Runner) -> bool:
    """One hill-climbing step; updates the arm's incumbent.  False if nothing ran."""
    ran = False
    for _ in range(arm.optimizer.evals_per_step):
        if not runner.can_run():
            break
        x = arm.optimizer.suggest()
        rb = arm.objective(runner.run(x))
        arm.optimizer.observe(x, rb)
        ran = True
        if arm.best_x is None or rb < arm.best_rb:
            arm.best_x, arm.best_rb = x, rb
        if rb < 0:
            break
    return ran


def _drive(model, phi, arms, budget, strategy, seed, space, timeout, epsilon, c, name):
    if budget < 0:
        raise ValueError("budget must be non-negative")
    runner = _Runner(model, space, budget, timeout)
    history = mab.BanditHistory(len(arms))
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(3)[2])
    trace: list[Iteration] = []
    rb, k, last = math.inf, 0, None
    while rb >= 0 and runner.can_run():
        k += 1
        i = 0 if strategy is None else mab.select(history, strategy, rng, epsilon=epsilon, c=c)
        if not _climb(arms[i], runner):
            break
        rb_k = arms[i].best_rb
        history.record_robustness(i, rb_k)
        if rb_k < rb:
            rb = rb_k
        last = arms[i]
        trace.append(Iteration(k, None if strategy is None else i + 1, rb_k, rb, runner.sims))

    seconds = time.perf_counter() - runner.start
    result = FalsificationResult(EXHAUSTED, rb, runner.sims, seconds, name, trace=trace)
    if rb < 0:
        # re-simulate and judge the witness against the original formula
        u = decode(space, last.best_x)
        y = model.simulate(u)
        full = eval_robust(phi, y)
        if not full < 0:
            raise RuntimeError(f"{name}: witness with rb={rb} has robustness {full} on the full formula")
        result.outcome = FALSIFIED
        result.witness, result.witness_output, result.witness_robustness = u, y, full
    elif runner.timed_out:
        result.outcome = TIMEOUT
    return result


def _prepare(model: SystemModel, phi: Formula, space, control_points):
    model = with_required_deltas(model, phi)
    missing = channels(phi) - set(model.outputs)
    if missing:
        raise ValueError(f"formula uses channels {sorted(missing)} not produced by {model.name}")
    if space is None:
        space = InputSpace.for_model(model, control_points)
    return model, space


def _optimizers(kind, space, seed, n, options):
    streams = np.random.SeedSequence(seed).spawn(3)
    return [make_optimizer(kind, space, np.random.default_rng(streams[j]), **(options or {}))
            for j in range(n)]


def falsify_hc(model: SystemModel, phi: Formula, budget: int, optimizer: str = "cmaes",
               space: InputSpace | None = None, seed: int = 0, *,
               control_points: int | None = None, timeout: float | None = None,
               optimizer_options: dict | None = None) -> FalsificationResult:
    """Hill-climbing falsification on the robustness of the whole formula."""
    if budget < 1:
        raise ValueError("budget must be at least 1")
    model, space = _prepare(model, phi, space, control_points)
    (opt,) = _optimizers(optimizer, space, seed, 1, optimizer_options)
    arm = _Arm(opt, lambda y: eval_robust(phi, y))
    return _drive(model, phi, [arm], budget, None, seed, space, timeout, None, None, "hc")


def _mab(model, spec, shape, budget, strategy, optimizer, space, seed, control_points,
         timeout, epsilon, c, optimizer_options, objective_for):
    if spec.shape != shape:
        raise ValueError(f"expected a {shape} safety property, got {spec.shape}")
    model, space = _prepare(model, spec.formula, space, control_points)
    opts = _optimizers(optimizer, space, seed, 2, optimizer_options)
    arms = [_Arm(opts[j], objective_for(j)) for j in range(2)]
    name = f"mab-{strategy}"
    return _drive(model, spec.formula, arms, budget, strategy, seed, space, timeout, epsilon, c, name)


def falsify_mab_conj(model: SystemModel, spec: SafetySpec, budget: int, strategy: str = "ucb",
                     optimizer: str = "cmaes", space: InputSpace | None = None, seed: int = 0, *,
                     control_points: int | None = None, timeout: float | None = None,
                     epsilon: float = mab.DEFAULT_EPSILON, c: float = mab.DEFAULT_UCB_C,
                     optimizer_options: dict | None = None) -> FalsificationResult:
    """Bandit-guided falsification of ``alw_I (phi1 and phi2)``.

    Arm ``j`` minimises the robustness of ``alw_I phi_j``, which bounds the
    robustness of the conjunction from above.
    """
    def objective_for(j):
        target = Always(spec.interval, spec.arms[j])
        return lambda y: eval_robust(target, y)

    return _mab(model, spec, "conjunctive", budget, strategy, optimizer, space, seed,
                control_points, timeout, epsilon, c, optimizer_options, objective_for)


def falsify_mab_disj(model: SystemModel, spec: SafetySpec, budget: int, strategy: str = "ucb",
                     optimizer: str = "cmaes", space: InputSpace | None = None, seed: int = 0, *,
                     control_points: int | None = None, timeout: float | None = None,
                     epsilon: float = mab.DEFAULT_EPSILON, c: float = mab.DEFAULT_UCB_C,
                     optimizer_options: dict | None = None) -> FalsificationResult:
    """Bandit-guided falsification of ``alw_I (phi1 or phi2)``.

    Arm ``j`` minimises the robustness of ``phi_j`` restricted to the instants
    in ``I`` where the other disjunct is already violated.  When there is no
    such instant the arm falls back to the robustness of the whole formula.
    """
    def objective_for(j):
        mine, other = spec.arms[j], spec.arms[1 - j]

        def objective(y):
            instants = falsified_time_set(other, y, spec.interval)
            if instants.any():
                return eval_robust_restricted(mine, y, instants)
            return eval_robust(spec.formula, y)

        return objective

    return _mab(model, spec, "disjunctive", budget, strategy, optimizer, space, seed,
                control_points, timeout, epsilon, c, optimizer_options, objective_for)


def falsify(model: SystemModel, phi: Formula, algo: str, budget: int, seed: int = 0, **options) -> FalsificationResult:
    """Dispatch on ``algo``; bandit algorithms on non-safety formulas fall back to ``hc``."""
    if algo not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algo!r}; choose from {ALGORITHMS}")
    spec = classify_spec(phi)
    if algo == "hc" or spec.shape == "plain":
        options = {k: v for k, v in options.items() if k not in ("epsilon", "c")}
        return falsify_hc(model, phi, budget, seed=seed, **options)
    strategy = algo.split("-", 1)[1]
    driver = falsify_mab_conj if spec.shape == "conjunctive" else falsify_mab_disj
    return driver(model, spec, budget, strategy, seed=seed, **options)
