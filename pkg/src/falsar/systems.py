"""Black-box system models, built-in surrogate benchmarks and model wrappers.

A model maps an input :class:`~falsar.signals.Signal` to an output signal on
the same grid.  Built-ins:

``car``
    Automatic-transmission style vehicle.  Inputs ``throttle`` in [0, 100]
    and ``brake`` in [0, 325]; outputs ``speed``, ``rpm`` and ``gear``.
``fuel``
    Air-fuel-ratio control loop.  Inputs ``pedal`` in [8.8, 90] and
    ``engine`` in [900, 1100]; outputs ``mu`` (normalised air-fuel deviation)
    and ``mode`` (0 normal, 1 power enrichment).
``synthetic``
    A static robustness landscape with two outputs ``y1`` and ``y2`` of
    configurable magnitudes, for controlled scale experiments.

The surrogates keep the channels, ranges and horizons of the classic
falsification benchmarks; their dynamics are our own and make no claim of
numerical fidelity to the original Simulink models.
"""

from __future__ import annotations

import math
import re
from dataclasses import replace
from typing import Callable

import numpy as np

from . import stl
from .signals import Signal, concat
from .stl import Abs, Atom, BinOp, Const, Expr, Formula, Neg, Var


class ModelError(ValueError):
    """Raised for unknown models or malformed model configuration."""


class RangeViolation(ValueError):
    """Raised when an input sample lies outside the declared input range."""


class SystemModel:
    """Base class: subclasses implement :meth:`_run` on raw sample matrices.

    ``horizon`` is the nominal time horizon used to build input signals;
    :meth:`simulate` accepts inputs of any horizon on the model's grid, which
    is what the causality check needs.
    """

    name = "model"
    default_control_points = 5

    def __init__(self, inputs: dict[str, tuple[float, float]], outputs: tuple[str, ...],
                 horizon: float, step: float):
        self.inputs = dict(inputs)
        self.outputs = tuple(outputs)
        self.horizon = float(horizon)
        self.step = float(step)
        for ch, (lo, hi) in self.inputs.items():
            if not lo < hi:
                raise ModelError(f"empty range [{lo}, {hi}] for input {ch!r}")

    @property
    def input_channels(self) -> tuple[str, ...]:
        return tuple(self.inputs)

    def _run(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def validate_input(self, u: Signal):
        if u.channels != self.input_channels:
            raise ModelError(f"{self.name} expects inputs {self.input_channels}, got {u.channels}")
        if u.step != self.step:
            raise ModelError(f"{self.name} runs at step {self.step}, input has step {u.step}")
        for j, (ch, (lo, hi)) in enumerate(self.inputs.items()):
            col = u.samples[:, j]
            bad = np.flatnonzero((col < lo) | (col > hi) | ~np.isfinite(col))
            if bad.size:
                raise RangeViolation(
                    f"input {ch!r}={col[bad[0]]} at t={bad[0] * u.step:g} outside [{lo}, {hi}]"
                )

    def simulate(self, u: Signal) -> Signal:
        self.validate_input(u)
        out = self._run(u.samples)
        return Signal(self.outputs, self.step, out)

    def __repr__(self):
        return f"<{type(self).__name__} {self.name} in={self.input_channels} out={self.outputs}>"


# ------------------------------------------------------------------- car
# Shift schedule breakpoints over throttle, speeds in the model's speed unit.
_THROTTLE_BP = np.array([0.0, 25.0, 35.0, 50.0, 90.0, 100.0])
_UPSHIFT = np.array([
    [10.0, 10.0, 15.0, 23.0, 40.0, 40.0],    # 1 -> 2
    [30.0, 30.0, 30.0, 41.0, 70.0, 70.0],    # 2 -> 3
    [50.0, 50.0, 50.0, 60.0, 100.0, 100.0],  # 3 -> 4
])
_DOWNSHIFT = np.array([
    [0.0, 5.0, 5.0, 5.0, 30.0, 30.0],        # 2 -> 1
    [19.5, 24.0, 27.0, 35.0, 50.0, 50.0],    # 3 -> 2
    [34.5, 42.0, 45.0, 50.0, 60.0, 70.0],    # 4 -> 3
])


class CarModel(SystemModel):
    """Longitudinal vehicle with a four-gear automatic transmission.

    Explicit Euler on speed; the gear follows a throttle-dependent shift
    schedule with hysteresis (at most one shift per step).  Outputs at a grid
    index depend only on inputs at earlier or equal indices.
    """

    name = "car"
    drive = (12.0, 8.0, 5.5, 4.0)        # full-throttle acceleration per gear
    rpm_ratio = (90.0, 50.0, 35.0, 26.0)
    idle_rpm = 800.0
    max_brake_decel = 20.0
    rolling = 0.1
    drag = 0.00012

    def __init__(self, horizon: float = 30.0, step: float = 0.05):
        super().__init__({"throttle": (0.0, 100.0), "brake": (0.0, 325.0)},
                         ("speed", "rpm", "gear"), horizon, step)

    def _run(self, u: np.ndarray) -> np.ndarray:
        n, dt = u.shape[0], self.step
        thr = u[:, 0]
        brake = (u[:, 1] / 325.0 * self.max_brake_decel).tolist()
        up = [np.interp(thr, _THROTTLE_BP, row).tolist() for row in _UPSHIFT]
        down = [np.interp(thr, _THROTTLE_BP, row).tolist() for row in _DOWNSHIFT]
        push = (thr / 100.0).tolist()
        drive, ratio = self.drive, self.rpm_ratio
        out = np.empty((n, 3))
        v, g = 0.0, 1
        for i in range(n):
            out[i, 0] = v
            out[i, 1] = self.idle_rpm + ratio[g - 1] * v
            out[i, 2] = g
            if g < 4 and v > up[g - 1][i]:
                g += 1
            elif g > 1 and v < down[g - 2][i]:
                g -= 1
            acc = drive[g - 1] * push[i] - brake[i] - self.rolling - self.drag * v * v
            v = v + dt * acc
            if v < 0.0:
                v = 0.0
        return out


# ------------------------------------------------------------------ fuel
class FuelModel(SystemModel):
    """Air-fuel-ratio loop: first-order lag towards the mode's reference ratio.

    Pedal movements disturb the ratio in proportion to the pedal change and
    the engine speed, so steps in the pedal produce transient spikes in
    ``mu = |AF - AFref| / AFref``.  Pedal angles at or above 70 select the
    power-enrichment mode with a richer reference.
    """

    name = "fuel"
    af_ref = (14.7, 12.5)
    power_threshold = 70.0
    lag = 0.4
    disturbance = 0.04

    def __init__(self, horizon: float = 50.0, step: float = 0.05):
        super().__init__({"pedal": (8.8, 90.0), "engine": (900.0, 1100.0)},
                         ("mu", "mode"), horizon, step)

    def _run(self, u: np.ndarray) -> np.ndarray:
        n, dt = u.shape[0], self.step
        pedal, engine = u[:, 0].tolist(), (u[:, 1] / 1000.0).tolist()
        out = np.empty((n, 2))
        mode0 = 1 if pedal[0] >= self.power_threshold else 0
        af, prev = self.af_ref[mode0], pedal[0]
        alpha = dt / self.lag
        for i in range(n):
            mode = 1 if pedal[i] >= self.power_threshold else 0
            ref = self.af_ref[mode]
            out[i, 0] = abs(af - ref) / ref
            out[i, 1] = mode
            af = af + alpha * (ref - af) + self.disturbance * (pedal[i] - prev) * engine[i]
            prev = pedal[i]
        return out


# ------------------------------------------------------------- synthetic
class SyntheticModel(SystemModel):
    """Static two-output landscape over inputs ``u1, u2`` in [0, 1].

    ``y1 = m1 * (1 + 0.05 * |u - a|^2)`` is strictly positive, nearly flat,
    and smallest at the anchor ``a``; ``y2 = m2 * (|u - b| - radius)`` is
    negative only inside a disc of ``radius`` around the target ``b``.
    """

    name = "synthetic"
    # outputs are a static map of the inputs, so constant inputs lose nothing
    default_control_points = 1

    def __init__(self, m1: float = 1.0, m2: float = 1000.0, radius: float = 0.05,
                 target: tuple[float, float] = (0.85, 0.85), anchor: tuple[float, float] = (0.1, 0.1),
                 horizon: float = 10.0, step: float = 0.1):
        super().__init__({"u1": (0.0, 1.0), "u2": (0.0, 1.0)}, ("y1", "y2"), horizon, step)
        if m1 <= 0 or m2 <= 0:
            raise ModelError("magnitudes must be positive")
        self.m1, self.m2, self.radius = float(m1), float(m2), float(radius)
        self.target, self.anchor = tuple(map(float, target)), tuple(map(float, anchor))

    def _run(self, u: np.ndarray) -> np.ndarray:
        da = (u[:, 0] - self.anchor[0]) ** 2 + (u[:, 1] - self.anchor[1]) ** 2
        db = np.hypot(u[:, 0] - self.target[0], u[:, 1] - self.target[1])
        return np.column_stack([self.m1 * (1.0 + 0.05 * da), self.m2 * (db - self.radius)])


# --------------------------------------------------------------- wrappers
class ScaledModel(SystemModel):
    """Multiplies one output channel of ``inner`` by ``10**k``."""

    def __init__(self, inner: SystemModel, channel: str, k: int):
        if channel not in inner.outputs:
            raise ModelError(f"{inner.name} has no output {channel!r}")
        super().__init__(inner.inputs, inner.outputs, inner.horizon, inner.step)
        self.default_control_points = inner.default_control_points
        self.inner, self.channel, self.k = inner, channel, int(k)
        self.factor = 10.0 ** self.k
        self.name = f"{inner.name}[{channel}*10^{self.k}]"

    def _run(self, u):
        out = self.inner._run(u)
        if self.k != 0:
            j = self.outputs.index(self.channel)
            out[:, j] = out[:, j] * self.factor
        return out


def delta_channel_name(channel: str, tau: float) -> str:
    return f"delta_{format(tau, 'g').replace('.', 'p')}_{channel}"


_DELTA_RE = re.compile(r"^delta_(\d+(?:p\d+)?)_(\w+)$")


def parse_delta_channel(name: str) -> tuple[str, float] | None:
    """Inverse of :func:`delta_channel_name`; None if ``name`` is not a delta channel."""
    m = _DELTA_RE.match(name)
    if not m:
        return None
    return m.group(2), float(m.group(1).replace("p", "."))


class DerivedDeltaModel(SystemModel):
    """Adds ``delta_<tau>_<channel>(t) = x(t + tau) - x(t)`` (0 beyond ``T - tau``).

    The derived channel looks ahead by ``tau``, so the wrapped model is a
    monitoring convenience and is not causal in that channel.
    """

    def __init__(self, inner: SystemModel, channel: str, tau: float):
        if channel not in inner.outputs:
            raise ModelError(f"{inner.name} has no output {channel!r}")
        lag = tau / inner.step
        if abs(lag - round(lag)) > 1e-9 * max(1.0, lag) or round(lag) < 1:
            raise ModelError(f"tau={tau} is not a positive multiple of step {inner.step}")
        if tau > inner.horizon:
            raise ModelError(f"tau={tau} exceeds horizon {inner.horizon}")
        derived = delta_channel_name(channel, tau)
        super().__init__(inner.inputs, inner.outputs + (derived,), inner.horizon, inner.step)
        self.default_control_points = inner.default_control_points
        self.inner, self.channel, self.tau, self.lag = inner, channel, float(tau), int(round(lag))
        self.name = inner.name

    def _run(self, u):
        out = self.inner._run(u)
        x = out[:, self.inner.outputs.index(self.channel)]
        d = np.zeros_like(x)
        if self.lag < len(x):
            d[: len(x) - self.lag] = x[self.lag :] - x[: len(x) - self.lag]
        return np.column_stack([out, d])


def scale_output(m: SystemModel, channel: str, k: int) -> SystemModel:
    return ScaledModel(m, channel, k)


def with_derived_delta(m: SystemModel, channel: str, tau: float) -> SystemModel:
    return DerivedDeltaModel(m, channel, tau)


def with_required_deltas(m: SystemModel, phi: Formula) -> SystemModel:
    """Wrap ``m`` with every ``delta_<tau>_<ch>`` channel that ``phi`` mentions."""
    for name in sorted(stl.channels(phi)):
        if name in m.outputs:
            continue
        parsed = parse_delta_channel(name)
        if parsed is not None and parsed[0] in m.outputs:
            m = DerivedDeltaModel(m, parsed[0], parsed[1])
    return m


# -------------------------------------------------------- formula scaling
def _scale_expr(e: Expr, channel: str, factor: float) -> Expr:
    """Rewrite ``e`` (affine in ``channel``) so it reads the scaled channel.

    The result ``e'`` satisfies ``e'(factor * x) = factor * e(x)``.
    """
    if isinstance(e, Var):
        return e
    if isinstance(e, Const):
        return Const(e.value * factor)
    if isinstance(e, Neg):
        return Neg(_scale_expr(e.arg, channel, factor))
    if isinstance(e, Abs):
        return Abs(_scale_expr(e.arg, channel, factor))
    if isinstance(e, BinOp):
        if e.op in "+-":
            return BinOp(e.op, _scale_expr(e.left, channel, factor), _scale_expr(e.right, channel, factor))
        if not stl.expr_channels(e.left):
            return BinOp("*", e.left, _scale_expr(e.right, channel, factor))
        if not stl.expr_channels(e.right):
            return BinOp("*", _scale_expr(e.left, channel, factor), e.right)
    raise ModelError(f"cannot rescale non-affine expression {e}")


def scale_formula(phi: Formula, channel: str, k: int) -> Formula:
    """Multiply by ``10**k`` every constant compared against ``channel``.

    Atoms over ``channel`` alone have their margin multiplied by ``10**k``,
    so the rewritten formula on the scaled model is falsified by exactly the
    inputs that falsify ``phi`` on the original model.
    """
    factor = 10.0 ** int(k)

    def go(f: Formula) -> Formula:
        if isinstance(f, Atom):
            used = stl.expr_channels(f.lhs) | stl.expr_channels(f.rhs)
            if channel not in used:
                return f
            if used != {channel}:
                raise ModelError(f"atom {f} mixes {channel!r} with other channels")
            if f.rel == "==":
                raise ModelError(f"equality atom {f} cannot be rescaled")
            return Atom(_scale_expr(f.lhs, channel, factor), f.rel, _scale_expr(f.rhs, channel, factor))
        if isinstance(f, (stl.Not,)):
            return stl.Not(go(f.arg))
        if isinstance(f, (stl.Always, stl.Eventually)):
            return replace(f, arg=go(f.arg))
        if isinstance(f, (stl.And, stl.Or, stl.Until)):
            return replace(f, left=go(f.left), right=go(f.right))
        return f

    return go(phi)


# ---------------------------------------------------------------- causality
def check_causality(m: SystemModel, u: Signal, u2: Signal, tol: float = 1e-9) -> bool:
    """True iff ``simulate(u . u2)`` restricted to ``[0, T_u]`` matches ``simulate(u)``."""
    short = m.simulate(u).samples
    long = m.simulate(concat(u, u2)).samples[: short.shape[0]]
    return bool(np.max(np.abs(long - short)) <= tol)


# ----------------------------------------------------------------- registry
_REGISTRY: dict[str, Callable[..., SystemModel]] = {
    "car": CarModel,
    "fuel": FuelModel,
    "synthetic": SyntheticModel,
}


def model_names() -> list[str]:
    return sorted(_REGISTRY)


def load_model(name: str, **params) -> SystemModel:
    """Instantiate a built-in model by registry name."""
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise ModelError(f"unknown model {name!r}; choose from {model_names()}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ModelError(f"bad parameters for {name}: {exc}") from None


def parse_model_params(pairs) -> dict:
    """Turn ``key=value`` strings into keyword arguments (numbers, or comma tuples)."""
    params = {}
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep:
            raise ModelError(f"expected key=value, got {pair!r}")
        parts = [float(v) for v in value.split(",")]
        params[key.strip()] = parts[0] if len(parts) == 1 else tuple(parts)
    return params


__all__ = [
    "CarModel",
    "DerivedDeltaModel",
    "FuelModel",
    "ModelError",
    "RangeViolation",
    "ScaledModel",
    "SyntheticModel",
    "SystemModel",
    "check_causality",
    "delta_channel_name",
    "load_model",
    "model_names",
    "parse_delta_channel",
    "parse_model_params",
    "scale_formula",
    "scale_output",
    "with_derived_delta",
    "with_required_deltas",
]
