"""Piecewise-linear time series used for drive and coupling profiles.

Interpolation is linear between sample points and clamped-constant outside
the sampled range, so every consumer sees the same values regardless of its
own time grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class TimeSeries:
    t: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if t.ndim != 1 or v.ndim != 1 or t.size != v.size or t.size == 0:
            raise ValueError("time series needs matching 1-d t and v arrays")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("time series sample times must be strictly increasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "v", v)

    @classmethod
    def constant(cls, value: float, t_end: float = 1.0) -> "TimeSeries":
        return cls(np.array([0.0, t_end]), np.array([value, value]))

    @classmethod
    def from_pairs(cls, pairs) -> "TimeSeries":
        arr = np.asarray(pairs, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("expected a sequence of [t, value] pairs")
        return cls(arr[:, 0], arr[:, 1])

    def to_pairs(self) -> list[list[float]]:
        return [[float(a), float(b)] for a, b in zip(self.t, self.v)]

    def __call__(self, x):
        return np.interp(x, self.t, self.v)

    def covers(self, lo: float, hi: float) -> bool:
        """True if samples span [lo, hi] (no clamped extrapolation needed)."""
        return self.t[0] <= lo and self.t[-1] >= hi

    @property
    def breakpoints(self) -> np.ndarray:
        return self.t

    def __eq__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return np.array_equal(self.t, other.t) and np.array_equal(self.v, other.v)
