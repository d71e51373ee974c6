"""Uniformly sampled, time-bounded multi-channel signals.

A :class:`Signal` holds one row per grid point ``t_j = j * step`` and one
column per channel.  Values between grid points follow a piecewise-constant
hold, so every signal is defined on the whole closed interval ``[0, T]``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

# Relative slack used when snapping times onto the sample grid.
GRID_EPS = 1e-9


class SignalError(ValueError):
    """Raised for malformed signals or out-of-domain signal operations."""


@dataclass(frozen=True, eq=False)
class Signal:
    channels: tuple[str, ...]
    step: float
    samples: np.ndarray

    def __post_init__(self):
        channels = tuple(self.channels)
        samples = np.array(self.samples, dtype=float)
        if samples.ndim == 1:
            samples = samples.reshape(-1, 1) if len(channels) == 1 else samples.reshape(1, -1)
        if samples.ndim != 2 or samples.shape[0] < 1:
            raise SignalError("samples must be a non-empty 2-D array")
        if samples.shape[1] != len(channels):
            raise SignalError(
                f"{samples.shape[1]} sample columns for {len(channels)} channels"
            )
        if np.isnan(samples).any():
            raise SignalError("samples contain NaN")
        if len(set(channels)) != len(channels):
            raise SignalError(f"duplicate channel names in {channels}")
        if not (self.step > 0 and math.isfinite(self.step)):
            raise SignalError(f"step must be positive, got {self.step}")
        samples.setflags(write=False)
        object.__setattr__(self, "channels", channels)
        object.__setattr__(self, "step", float(self.step))
        object.__setattr__(self, "samples", samples)

    @classmethod
    def from_columns(cls, step: float, **columns: Iterable[float]) -> "Signal":
        """Build a signal from keyword channel columns of equal length."""
        names = tuple(columns)
        data = np.column_stack([np.asarray(list(v), dtype=float) for v in columns.values()])
        return cls(names, step, data)

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def horizon(self) -> float:
        return (self.n_samples - 1) * self.step

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.step

    def column(self, name: str) -> np.ndarray:
        try:
            return self.samples[:, self.channels.index(name)]
        except ValueError:
            raise KeyError(f"unknown channel {name!r}; have {self.channels}") from None

    def __getitem__(self, name: str) -> np.ndarray:
        return self.column(name)

    def with_channels(self, extra: dict[str, np.ndarray]) -> "Signal":
        """Return a copy with additional channels appended."""
        cols = [self.samples] + [np.asarray(v, dtype=float).reshape(-1, 1) for v in extra.values()]
        return Signal(self.channels + tuple(extra), self.step, np.hstack(cols))

    def equals(self, other: "Signal") -> bool:
        return (
            self.channels == other.channels
            and self.step == other.step
            and np.array_equal(self.samples, other.samples)
        )

    def __repr__(self):
        return f"Signal(channels={self.channels}, step={self.step}, T={self.horizon:g})"

    # ------------------------------------------------------------------ CSV
    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("time",) + self.channels)
        for t, row in zip(self.times, self.samples):
            writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8", newline="")
        return text

    @classmethod
    def from_csv(cls, source) -> "Signal":
        """Read a signal from a CSV path or CSV text with a ``time`` first column."""
        if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
            text = Path(source).read_text(encoding="utf-8")
        else:
            text = source
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0][0].strip() != "time":
            raise SignalError("CSV header must start with 'time'")
        header = [h.strip() for h in rows[0][1:]]
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
        if data.shape[0] < 1:
            raise SignalError("CSV holds no samples")
        times = data[:, 0]
        step = float(times[1] - times[0]) if len(times) > 1 else 1.0
        if len(times) > 1 and not np.allclose(np.diff(times), step, rtol=1e-6, atol=1e-12):
            raise SignalError("CSV time column is not uniformly spaced")
        return cls(tuple(header), step, data[:, 1:])


def grid_index(s: Signal, t: float) -> int:
    """Index of the grid point equal to ``t``; raises if ``t`` is off-grid."""
    q = t / s.step
    j = round(q)
    if abs(q - j) > GRID_EPS * max(1.0, abs(q)):
        raise SignalError(f"time {t} is not a multiple of step {s.step}")
    return int(j)


def value_at(s: Signal, t: float) -> np.ndarray:
    """Sample row held at time ``t`` (last grid point at or before ``t``)."""
    if not (-GRID_EPS * s.step <= t <= s.horizon + GRID_EPS * s.step):
        raise SignalError(f"time {t} outside [0, {s.horizon}]")
    j = int(math.floor(t / s.step + GRID_EPS))
    return s.samples[min(max(j, 0), s.n_samples - 1)].copy()


def _check_compatible(w: Signal, w2: Signal):
    if w.channels != w2.channels:
        raise SignalError(f"channel mismatch: {w.channels} vs {w2.channels}")
    if w.step != w2.step:
        raise SignalError(f"step mismatch: {w.step} vs {w2.step}")


def concat(w: Signal, w2: Signal) -> Signal:
    """Concatenation ``w . w2`` on ``[0, T + T2]``.

    The left operand owns the junction time ``T``; the first row of ``w2``
    (its local time 0) is dropped.
    """
    _check_compatible(w, w2)
    return Signal(w.channels, w.step, np.vstack([w.samples, w2.samples[1:]]))


def restrict(w: Signal, t1: float, t2: float) -> Signal:
    """Restriction of ``w`` to ``[t1, t2]``, re-based to start at time 0."""
    i1, i2 = grid_index(w, t1), grid_index(w, t2)
    if not (0 <= i1 <= i2 < w.n_samples):
        raise SignalError(f"need 0 <= t1 <= t2 <= {w.horizon}, got [{t1}, {t2}]")
    return Signal(w.channels, w.step, w.samples[i1 : i2 + 1])


def shift(w: Signal, t: float) -> Signal:
    """The ``t``-shift of ``w``: ``shift(w, t)(t') = w(t + t')``."""
    i = grid_index(w, t)
    if not (0 <= i < w.n_samples - 1):
        raise SignalError(f"shift needs 0 <= t < {w.horizon}, got {t}")
    return Signal(w.channels, w.step, w.samples[i:])


# A set of grid instants of a signal, as one boolean flag per sample row.
TimeSet = np.ndarray


def time_set(s: Signal, indices: Sequence[int] = ()) -> TimeSet:
    mask = np.zeros(s.n_samples, dtype=bool)
    mask[list(indices)] = True
    return mask


def constant(channels: Sequence[str], values: Sequence[float], horizon: float, step: float) -> Signal:
    """A signal holding ``values`` over ``[0, horizon]``."""
    n = int(round(horizon / step)) + 1
    return Signal(tuple(channels), step, np.tile(np.asarray(values, dtype=float), (n, 1)))
