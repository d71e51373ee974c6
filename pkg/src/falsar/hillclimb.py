"""Input-space parameterisation and stochastic hill-climbing optimisers.

Inputs are piecewise-constant signals: each input channel is split into
``n_cp`` equal segments over ``[0, T]`` and a search point holds one value
per segment.  Optimisers work by ask/tell (``suggest`` / ``observe``) over
such points and minimise the observed robustness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .signals import Signal

DEFAULT_CONTROL_POINTS = 5
OPTIMIZERS = ("cmaes", "anneal", "random")


@dataclass(frozen=True)
class InputSpace:
    channels: tuple[str, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    control_points: tuple[int, ...]
    horizon: float
    step: float

    def __post_init__(self):
        k = len(self.channels)
        if not (len(self.lower) == len(self.upper) == len(self.control_points) == k):
            raise ValueError("channels, bounds and control points must have equal length")
        for ch, lo, hi, n in zip(self.channels, self.lower, self.upper, self.control_points):
            if not lo < hi:
                raise ValueError(f"empty range [{lo}, {hi}] for {ch!r}")
            if n < 1:
                raise ValueError(f"need at least one control point for {ch!r}")

    @classmethod
    def for_model(cls, model, control_points: int | Sequence[int] | None = None) -> "InputSpace":
        """Box of ``model``'s input ranges; ``control_points`` defaults to the model's own."""
        chans = model.input_channels
        if control_points is None:
            control_points = getattr(model, "default_control_points", DEFAULT_CONTROL_POINTS)
        if isinstance(control_points, int):
            control_points = (control_points,) * len(chans)
        return cls(
            chans,
            tuple(float(model.inputs[c][0]) for c in chans),
            tuple(float(model.inputs[c][1]) for c in chans),
            tuple(int(n) for n in control_points),
            model.horizon,
            model.step,
        )

    @property
    def dim(self) -> int:
        return sum(self.control_points)

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.repeat(self.lower, self.control_points)
        hi = np.repeat(self.upper, self.control_points)
        return lo.astype(float), hi.astype(float)

    @property
    def n_samples(self) -> int:
        return int(round(self.horizon / self.step)) + 1

    def contains(self, x) -> bool:
        lo, hi = self.bounds
        x = np.asarray(x, dtype=float)
        return x.shape == (self.dim,) and bool(np.all((x >= lo) & (x <= hi)))


def decode(space: InputSpace, x) -> Signal:
    """Piecewise-constant input signal for the search point ``x``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (space.dim,):
        raise ValueError(f"point has shape {x.shape}, space has dimension {space.dim}")
    if not space.contains(x):
        raise ValueError("point lies outside the input box")
    n = space.n_samples
    t = np.arange(n) * space.step
    cols, offset = [], 0
    for n_cp in space.control_points:
        seg = np.minimum(np.floor(t * n_cp / space.horizon + 1e-9).astype(int), n_cp - 1) if space.horizon > 0 else np.zeros(n, int)
        cols.append(x[offset + seg])
        offset += n_cp
    return Signal(space.channels, space.step, np.column_stack(cols))


@dataclass
class History:
    """Append-only record of evaluated points and their robustness."""

    points: list = field(default_factory=list)
    values: list = field(default_factory=list)

    def append(self, x, rb: float):
        self.points.append(np.array(x, dtype=float))
        self.values.append(float(rb))

    def __len__(self):
        return len(self.values)

    def best(self):
        if not self.values:
            return None, math.inf
        i = int(np.argmin(self.values))
        return self.points[i], self.values[i]


def finite_cap(values: Sequence[float], observed: Sequence[float]) -> np.ndarray:
    """Replace +inf by a finite value just above everything finite seen so far."""
    vals = np.asarray(values, dtype=float)
    finite = [v for v in observed if math.isfinite(v)] + [v for v in vals if math.isfinite(v)]
    if finite:
        top, spread = max(finite), max(finite) - min(finite)
        cap = top + (spread if spread > 0 else 1.0)
    else:
        cap = 0.0
    return np.where(np.isposinf(vals), cap, vals)


def reflect_unit(z: np.ndarray) -> np.ndarray:
    """Fold points back into the unit cube by mirroring at its faces."""
    z = np.mod(z, 2.0)
    return np.clip(np.where(z > 1.0, 2.0 - z, z), 0.0, 1.0)


class Optimizer:
    """Ask/tell minimiser over an :class:`InputSpace` box.

    ``evals_per_step`` is how many candidates one hill-climbing step spends;
    the falsification drivers emit the best of them as the step's result.
    """

    kind = "base"

    def __init__(self, space: InputSpace, rng: np.random.Generator, evals_per_step: int = 30):
        self.space = space
        self.rng = rng
        self.lower, self.upper = space.bounds
        self.width = self.upper - self.lower
        self.history = History()
        self.evals_per_step = int(evals_per_step)
        self._pending: np.ndarray | None = None

    # unit-cube helpers
    def _to_box(self, z: np.ndarray) -> np.ndarray:
        return np.clip(self.lower + np.clip(z, 0.0, 1.0) * self.width, self.lower, self.upper)

    def _to_unit(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.lower) / self.width

    def suggest(self) -> np.ndarray:
        if self._pending is not None:
            raise RuntimeError("observe() the previous suggestion first")
        x = self._propose()
        self._pending = x
        return x.copy()

    def observe(self, x, rb: float):
        if self._pending is None or not np.array_equal(np.asarray(x, dtype=float), self._pending):
            raise ValueError("observe() must receive the point just suggested")
        self._pending = None
        self.history.append(x, rb)
        self._update(np.asarray(x, dtype=float), float(rb))

    @property
    def best(self):
        return self.history.best()

    def _propose(self) -> np.ndarray:
        raise NotImplementedError

    def _update(self, x: np.ndarray, rb: float):
        pass

    def state(self) -> dict:
        """JSON-ready snapshot of the full optimiser state, for replay comparisons."""
        d = {k: _plain(v) for k, v in vars(self).items() if k not in ("rng", "space", "history")}
        d["rng"] = _plain(self.rng.bit_generator.state)
        d["history"] = [_plain(self.history.points), _plain(self.history.values)]
        return d


def _plain(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, np.generic):
        return v.item()
    return v


class RandomSearch(Optimizer):
    kind = "random"

    def _propose(self):
        return self._to_box(self.rng.random(self.space.dim))


class DiagonalES(Optimizer):
    """Evolution strategy with a diagonal covariance ("cmaes-lite").

    Each generation samples ``popsize`` candidates around the mean; the
    ``mu`` best (by rank only) are recombined with log weights.  Step size
    follows cumulative step-size adaptation; per-coordinate variances follow
    the weighted second moment of the selected steps.  One hill-climbing step
    is ``moves`` generations, i.e. every particle is moved ``moves`` times.
    """

    kind = "cmaes"

    def __init__(self, space, rng, popsize: int = 10, moves: int = 3, sigma0: float = 0.3):
        super().__init__(space, rng, evals_per_step=popsize * moves)
        d = space.dim
        self.popsize, self.moves = int(popsize), int(moves)
        self.mu = max(1, self.popsize // 2)
        w = np.log(self.mu + 0.5) - np.log(np.arange(1, self.mu + 1))
        self.weights = w / w.sum()
        self.mueff = 1.0 / np.sum(self.weights**2)
        self.cs = (self.mueff + 2) / (d + self.mueff + 5)
        self.damps = 1 + 2 * max(0.0, math.sqrt((self.mueff - 1) / (d + 1)) - 1) + self.cs
        self.cdiag = min(0.5, 0.2 * (self.mueff / 3))
        self.chi = math.sqrt(d) * (1 - 1 / (4 * d) + 1 / (21 * d * d))
        self.mean = rng.random(d)
        self.sigma = float(sigma0)
        self.diag = np.ones(d)
        self.path = np.zeros(d)
        self.generation = 0
        self._batch: list[np.ndarray] = []   # unit-cube candidates of this generation
        self._scores: list[float] = []

    def _propose(self):
        if len(self._scores) == len(self._batch):
            z = self.rng.standard_normal((self.popsize, self.space.dim))
            cand = reflect_unit(self.mean + self.sigma * np.sqrt(self.diag) * z)
            self._batch, self._scores = list(cand), []
        return self._to_box(self._batch[len(self._scores)])

    def _update(self, x, rb):
        self._scores.append(rb)
        if len(self._scores) < self.popsize:
            return
        scores = finite_cap(self._scores, self.history.values[: -self.popsize])
        order = np.argsort(scores, kind="stable")[: self.mu]
        cand = np.asarray(self._batch)
        steps = (cand[order] - self.mean) / self.sigma          # realised (clamped) steps
        ystep = self.weights @ steps
        self.mean = np.clip(self.mean + self.sigma * ystep, 0.0, 1.0)
        zstep = ystep / np.sqrt(self.diag)
        self.path = (1 - self.cs) * self.path + math.sqrt(self.cs * (2 - self.cs) * self.mueff) * zstep
        self.sigma *= math.exp((self.cs / self.damps) * (np.linalg.norm(self.path) / self.chi - 1))
        self.sigma = float(min(max(self.sigma, 1e-10), 1.0))
        second = self.weights @ (steps**2)
        self.diag = (1 - self.cdiag) * self.diag + self.cdiag * second
        self.diag = np.clip(self.diag / np.exp(np.mean(np.log(self.diag))), 1e-6, 1e6)
        self.generation += 1


class Annealer(Optimizer):
    """Simulated annealing with Gaussian proposals around the incumbent.

    Worse candidates are accepted with probability
    ``exp(-delta / (temperature * spread))`` where ``spread`` is the range of
    finite values seen so far, so acceptance does not depend on the unit of
    the robustness.  With ``temperature0 = 0`` this is greedy local descent.
    """

    kind = "anneal"

    def __init__(self, space, rng, temperature0: float = 0.1, cooling: float = 0.97,
                 proposal: float = 0.15, evals_per_step: int = 30):
        super().__init__(space, rng, evals_per_step=evals_per_step)
        self.temperature0, self.cooling, self.proposal = temperature0, cooling, proposal
        self.incumbent: np.ndarray | None = None
        self.incumbent_rb = math.inf

    @property
    def temperature(self) -> float:
        return self.temperature0 * self.cooling ** len(self.history)

    def _propose(self):
        if self.incumbent is None:
            return self._to_box(self.rng.random(self.space.dim))
        z = self.incumbent + self.proposal * self.rng.standard_normal(self.space.dim)
        return self._to_box(z)

    def _update(self, x, rb):
        prev = self.history.values[:-1]
        cur, inc = finite_cap([rb, self.incumbent_rb], prev)
        u = self.rng.random()
        if self.incumbent is None or cur <= inc:
            accept = True
        else:
            finite = [v for v in self.history.values if math.isfinite(v)]
            spread = (max(finite) - min(finite)) if len(finite) > 1 else 0.0
            temp = self.temperature * (spread if spread > 0 else 1.0)
            accept = temp > 0 and u < math.exp(-(cur - inc) / temp)
        if accept:
            self.incumbent, self.incumbent_rb = self._to_unit(x), rb


def make_optimizer(kind: str, space: InputSpace, rng: np.random.Generator, **options) -> Optimizer:
    if kind in ("cmaes", "cmaes-lite"):
        return DiagonalES(space, rng, **options)
    if kind == "anneal":
        return Annealer(space, rng, **options)
    if kind == "random":
        return RandomSearch(space, rng, **options)
    raise ValueError(f"unknown optimizer {kind!r}; choose from {OPTIMIZERS}")
