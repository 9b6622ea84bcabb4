"""Pinned-coordinate constraint sets and piecewise-linear time schedules.

A constraint set pins the last m coordinates of a state to prescribed
values; its projection is a suffix overwrite.  Any subgradient of the
constraint indicator at an admissible state has zeros in the first n
components and arbitrary entries in the last m, so solver residuals are
checked against exactly that shape.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import OutOfRange, ParseError


@dataclass(frozen=True)
class ConstraintSet:
    """States whose last m coordinates equal a_values."""

    a_values: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "a_values", np.ascontiguousarray(self.a_values, dtype=np.float64)
        )

    @property
    def m(self) -> int:
        return self.a_values.shape[0]

    def contains(self, x, atol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=np.float64)
        return bool(np.all(np.abs(x[x.shape[0] - self.m :] - self.a_values) <= atol))


def project(x, k: ConstraintSet) -> np.ndarray:
    """Overwrite the pinned suffix; nearest admissible point, idempotent."""
    x = np.asarray(x, dtype=np.float64)
    out = x.copy()
    out[x.shape[0] - k.m :] = k.a_values
    return out


def lift(free, k: ConstraintSet) -> np.ndarray:
    """Admissible state with the given free part."""
    free = np.asarray(free, dtype=np.float64)
    return np.concatenate((free, k.a_values))


def reduce(x, k: ConstraintSet) -> np.ndarray:
    """Free part of a state; reduce(lift(f, k), k) == f."""
    x = np.asarray(x, dtype=np.float64)
    return x[: x.shape[0] - k.m].copy()


def indicator_section_residual(xi, n_free: int) -> float:
    """Norm of the first n components; zero for a valid indicator subgradient."""
    xi = np.asarray(xi, dtype=np.float64)
    return float(np.linalg.norm(xi[:n_free]))


@dataclass(frozen=True)
class Schedule:
    """Piecewise-linear vector function sampled on a strictly increasing grid.

    One sample represents a constant function on [0, inf).  The derivative
    is the slope of the active segment; at an interior knot the right
    segment's slope is returned, at the final knot the last segment's.
    """

    times: np.ndarray
    samples: np.ndarray

    def __post_init__(self):
        times = np.ascontiguousarray(self.times, dtype=np.float64)
        samples = np.ascontiguousarray(self.samples, dtype=np.float64)
        if samples.ndim == 1:
            samples = samples[:, None]
        if times.ndim != 1 or times.shape[0] == 0:
            raise ValueError("schedule needs at least one knot")
        if samples.shape[0] != times.shape[0]:
            raise ValueError(
                f"{times.shape[0]} knots but {samples.shape[0]} sample rows"
            )
        if times[0] != 0.0:
            raise ValueError("schedule must start at t = 0")
        if times.shape[0] > 1 and not (np.diff(times) > 0.0).all():
            raise ValueError("schedule knots must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "samples", samples)

    @classmethod
    def constant(cls, value) -> "Schedule":
        value = np.atleast_1d(np.asarray(value, dtype=np.float64))
        return cls(times=np.zeros(1), samples=value[None, :])

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    @property
    def is_constant(self) -> bool:
        return self.times.shape[0] == 1

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def _check_domain(self, t: float) -> None:
        if t < 0.0:
            raise OutOfRange(f"t = {t} is negative")
        if not self.is_constant and t > self.times[-1] * (1.0 + 1e-12) + 1e-15:
            raise OutOfRange(f"t = {t} beyond final knot {self.times[-1]}")

    def _segment(self, t: float) -> int:
        idx = int(np.searchsorted(self.times, t, side="right")) - 1
        return min(max(idx, 0), self.times.shape[0] - 2)

    def value(self, t: float) -> np.ndarray:
        self._check_domain(t)
        if self.is_constant:
            return self.samples[0].copy()
        i = self._segment(t)
        t0, t1 = self.times[i], self.times[i + 1]
        w = (t - t0) / (t1 - t0)
        return (1.0 - w) * self.samples[i] + w * self.samples[i + 1]

    def derivative(self, t: float) -> np.ndarray:
        self._check_domain(t)
        if self.is_constant:
            return np.zeros(self.dim)
        i = self._segment(t)
        return (self.samples[i + 1] - self.samples[i]) / (
            self.times[i + 1] - self.times[i]
        )

    def knots_within(self, t_end: float) -> np.ndarray:
        """Interior knots in (0, t_end), used to align integration grids."""
        if self.is_constant:
            return np.zeros(0)
        inner = self.times[(self.times > 0.0) & (self.times < t_end)]
        return inner.copy()


def schedule_value(s: Schedule, t: float) -> np.ndarray:
    return s.value(t)


def schedule_derivative(s: Schedule, t: float) -> np.ndarray:
    return s.derivative(t)


def schedule_from_json(text: str, expected_dim: int | None = None) -> Schedule:
    """Parse {"times": [...], "values": [[...], ...]} with length validation."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    for key in ("times", "values"):
        if key not in doc:
            raise ParseError(f"missing field '{key}'")
    times = np.asarray(doc["times"], dtype=np.float64)
    values = np.asarray(doc["values"], dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    if times.shape[0] != values.shape[0]:
        raise ParseError(
            f"{times.shape[0]} times but {values.shape[0]} value rows"
        )
    if expected_dim is not None and values.shape[1] != expected_dim:
        raise ParseError(
            f"expected rows of length {expected_dim}, got {values.shape[1]}"
        )
    try:
        return Schedule(times=times, samples=values)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def schedule_to_json(s: Schedule) -> str:
    return json.dumps(
        {"times": s.times.tolist(), "values": s.samples.tolist()}, indent=2
    )
