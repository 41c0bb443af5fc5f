"""Analog feed-forward electronics: look-up tables, gain stages, delays.

The local-oscillator phase arctan(kappa) and the feed-forward gain
sqrt(1 + kappa^2) have to be produced in real time by analog circuits, which
realize them as clamped piecewise-linear (broken-line) approximations.  This
module fits those tables, models gain/offset stages with latency, and applies
fractional-sample delays.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

_FMT = "{:.12g}"

_DENSE_GRID = 20001


def _arctan_d2(x):
    return -2.0 * x / (1.0 + x**2) ** 2


def _sqrt1px2(x):
    return np.sqrt(1.0 + x**2)


def _sqrt1px2_d2(x):
    return (1.0 + x**2) ** -1.5


# target name -> (function, second derivative, symmetry on [-a, a])
TARGETS = {
    "arctan": (np.arctan, _arctan_d2, "odd"),
    "sqrt1px2": (_sqrt1px2, _sqrt1px2_d2, "even"),
}


@dataclass(frozen=True)
class PiecewiseLinearFunction:
    """Broken-line function with constant clamping outside the breakpoint range.

    Attributes:
        xs: Strictly ascending breakpoint abscissae.
        ys: Function values at the breakpoints.
        clamp_below: Output for x < xs[0]; defaults to ys[0].
        clamp_above: Output for x > xs[-1]; defaults to ys[-1].
    """

    xs: np.ndarray
    ys: np.ndarray
    clamp_below: float | None = None
    clamp_above: float | None = None

    def __post_init__(self) -> None:
        xs = np.array(self.xs, dtype=float)
        ys = np.array(self.ys, dtype=float)
        if xs.ndim != 1 or xs.size < 2:
            raise ValueError("need at least two breakpoints")
        if ys.shape != xs.shape:
            raise ValueError("xs and ys must have the same shape")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise ValueError("breakpoints must be finite")
        if np.any(np.diff(xs) <= 0.0):
            raise ValueError("breakpoints must be strictly ascending")
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        if self.clamp_below is None:
            object.__setattr__(self, "clamp_below", float(ys[0]))
        if self.clamp_above is None:
            object.__setattr__(self, "clamp_above", float(ys[-1]))

    @property
    def n_segments(self) -> int:
        return self.xs.size - 1

    def __call__(self, x):
        out = np.interp(x, self.xs, self.ys, left=self.clamp_below, right=self.clamp_above)
        return float(out) if np.ndim(x) == 0 else out


def eval_pwl(f: PiecewiseLinearFunction, x):
    """Evaluate a broken-line function; clamps outside the breakpoint range."""
    return f(x)


def _lookup_target(target: str):
    try:
        return TARGETS[target]
    except KeyError:
        raise ValueError(
            f"unknown target {target!r}; known targets: {sorted(TARGETS)}"
        ) from None


def _cumulative_quantile(grid: np.ndarray, density: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Positions where the normalized cumulative integral of density hits q."""
    steps = 0.5 * (density[1:] + density[:-1]) * np.diff(grid)
    cum = np.concatenate([[0.0], np.cumsum(steps)])
    if cum[-1] <= 0.0:
        return np.interp(q, np.linspace(0.0, 1.0, grid.size), grid)
    return np.interp(q, cum / cum[-1], grid)


def _equidistributed_knots(target: str, n_segments: int, lo: float, hi: float) -> np.ndarray:
    """Knots spaced so each segment carries equal integral of |f''|^(1/2).

    That density equalizes the per-segment interpolation error h^2 |f''| / 8 to
    leading order.  On a symmetric range the knots are built on [0, hi] and
    mirrored, so odd/even targets yield exactly odd/even approximations.
    """
    fun, d2, _symmetry = _lookup_target(target)
    symmetric = np.isclose(lo, -hi) and hi > 0.0
    if symmetric:
        grid = np.linspace(0.0, hi, _DENSE_GRID)
        density = np.sqrt(np.abs(d2(grid)))
        density = np.maximum(density, 1e-9 * max(float(density.max()), 1.0))
        half = n_segments / 2.0
        if n_segments % 2 == 0:
            q = np.arange(n_segments // 2 + 1) / half
            right = _cumulative_quantile(grid, density, q)
            knots = np.concatenate([-right[:0:-1], right])
        else:
            # Odd count: the middle segment straddles 0, so the first knot on
            # the right sits at half a segment's worth of density.
            q = (np.arange(1, (n_segments + 1) // 2 + 1) - 0.5) / half
            right = _cumulative_quantile(grid, density, q)
            knots = np.concatenate([-right[::-1], right])
    else:
        grid = np.linspace(lo, hi, _DENSE_GRID)
        density = np.sqrt(np.abs(d2(grid)))
        density = np.maximum(density, 1e-9 * max(float(density.max()), 1.0))
        knots = _cumulative_quantile(grid, density, np.linspace(0.0, 1.0, n_segments + 1))
    knots[0], knots[-1] = lo, hi
    return knots


def fit_pwl(target: str, n_segments: int, lo: float, hi: float) -> PiecewiseLinearFunction:
    """Fit a clamped broken-line approximation of a registered target function.

    Knots are placed by error equidistribution (density |f''|^(1/2)) and the
    values are the target samples at the knots.  The fit falls back to uniform
    knots whenever those happen to do better, so the result is never worse
    than the naive baseline.
    """
    if n_segments < 1:
        raise ValueError("n_segments must be >= 1")
    lo, hi = float(lo), float(hi)
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo >= hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    fun, _d2, _symmetry = _lookup_target(target)
    candidates = [
        _equidistributed_knots(target, n_segments, lo, hi),
        np.linspace(lo, hi, n_segments + 1),
    ]
    dense = np.linspace(lo, hi, _DENSE_GRID)
    exact = fun(dense)
    best = None
    best_err = np.inf
    for xs in candidates:
        err = float(np.max(np.abs(np.interp(dense, xs, fun(xs)) - exact)))
        if err < best_err:
            best, best_err = xs, err
    return PiecewiseLinearFunction(best, fun(best))


def max_error(
    f: PiecewiseLinearFunction,
    target: str,
    lo: float | None = None,
    hi: float | None = None,
    grid_points: int = 10001,
) -> float:
    """Max absolute deviation from the target on a dense uniform grid.

    Requires grid_points >= 1000 so segment interiors are actually probed.
    """
    if grid_points < 1000:
        raise ValueError("grid_points must be >= 1000")
    fun, _d2, _symmetry = _lookup_target(target)
    lo = float(f.xs[0]) if lo is None else float(lo)
    hi = float(f.xs[-1]) if hi is None else float(hi)
    if lo >= hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    grid = np.linspace(lo, hi, grid_points)
    return float(np.max(np.abs(f(grid) - fun(grid))))


def save_pwl_table(f: PiecewiseLinearFunction, path) -> None:
    """Write breakpoints as text, one ascending "x y" pair per line."""
    lines = [
        f"{_FMT.format(x)} {_FMT.format(y)}" for x, y in zip(f.xs, f.ys)
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def load_pwl_table(path) -> PiecewiseLinearFunction:
    """Read a breakpoint table written by :func:`save_pwl_table`."""
    rows = []
    for ln, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{ln}: expected 'x y', got {line!r}")
        rows.append((float(parts[0]), float(parts[1])))
    if len(rows) < 2:
        raise ValueError(f"{path}: need at least two breakpoints")
    xs, ys = zip(*rows)
    return PiecewiseLinearFunction(np.array(xs), np.array(ys))


@dataclass(frozen=True)
class SignalChainStage:
    """One analog stage: y = gain * x + offset, contributing a fixed latency."""

    gain: float
    offset: float = 0.0
    latency_ns: float = 0.0

    def __post_init__(self) -> None:
        if not np.isfinite(self.gain) or self.gain == 0.0:
            raise ValueError(f"gain must be finite and nonzero, got {self.gain}")
        if not np.isfinite(self.offset):
            raise ValueError("offset must be finite")
        if not np.isfinite(self.latency_ns) or self.latency_ns < 0.0:
            raise ValueError(f"latency_ns must be >= 0, got {self.latency_ns}")

    def compensation(self) -> "SignalChainStage":
        """Stage undoing this one's gain and offset: y = x/g - o/g, zero latency.

        An inverting amplifier (g < 0) is undone by another inverting stage;
        latency cannot be undone and is not part of the compensation.
        """
        return SignalChainStage(1.0 / self.gain, -self.offset / self.gain, 0.0)


def delay_signal(signal, delay_ns: float, sample_period_ns: float):
    """Delay a uniformly sampled signal by a fractional number of samples.

    Linear interpolation between neighbouring samples; the edges hold the
    first/last value.  Negative delays advance the signal.
    """
    if sample_period_ns <= 0.0 or not np.isfinite(sample_period_ns):
        raise ValueError(f"sample_period_ns must be positive, got {sample_period_ns}")
    y = np.asarray(signal, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("signal must be a nonempty 1-d array")
    shift = delay_ns / sample_period_ns
    if shift == 0.0:
        return y.copy()
    idx = np.arange(y.size, dtype=float)
    return np.interp(idx - shift, idx, y, left=y[0], right=y[-1])


def apply_chain(signal, stages, sample_period_ns: float):
    """Run a sampled signal through gain/offset stages plus their total latency.

    Gains and offsets act pointwise in order; the summed latency is applied
    once at the end as a fractional-sample delay.
    """
    y = np.asarray(signal, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("signal must be a nonempty 1-d array")
    if sample_period_ns <= 0.0 or not np.isfinite(sample_period_ns):
        raise ValueError(f"sample_period_ns must be positive, got {sample_period_ns}")
    y = y.copy()
    total_latency = 0.0
    for stage in stages:
        y = stage.gain * y + stage.offset
        total_latency += stage.latency_ns
    return delay_signal(y, total_latency, sample_period_ns)


@dataclass(frozen=True)
class DelayModel:
    """Propagation delay of the optical path vs latency of the electronics.

    The optical output is delayed (free-space path) so the electronic signal
    arrives in time; what matters downstream is the residual mismatch.
    """

    optical_delay_ns: float = 43.4
    electronics_latency_ns: float = 10.0

    def __post_init__(self) -> None:
        for name in ("optical_delay_ns", "electronics_latency_ns"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0.0:
                raise ValueError(f"{name} must be >= 0, got {v}")

    @property
    def mismatch_ns(self) -> float:
        """Residual timing error, optical delay minus electronics latency."""
        return self.optical_delay_ns - self.electronics_latency_ns
