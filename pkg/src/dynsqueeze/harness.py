"""Repeated-shot experiment: dynamic control, input modulation, homodyne records.

The gate strength follows a control signal kappa(t) sampled on a uniform time
grid (>= 2 control periods); the coherent input carries a faster mean-field
modulation.  Each time bin is measured over many repetitions at three output
homodyne angles (x, p, and pi/4), and the per-bin sample moments are the raw
material for the variance analysis.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RunConfig, config_digest
from .electronics import fit_pwl
from .gate import GateParams, closed_form_output, gate_output_state
from .states import (
    GaussianState,
    db_to_variance,
    make_coherent,
    quadrature_mean,
    quadrature_variance,
)

# Output homodyne angles probed each run: x, p, and the diagonal quadrature.
MEASUREMENT_ANGLES = (0.0, np.pi / 2.0, np.pi / 4.0)

_ANGLE_LABELS = {0.0: "x", np.pi / 2.0: "p", np.pi / 4.0: "pi4"}

MOMENTS_COLUMNS = (
    "angle_rad",
    "bin_index",
    "time_us",
    "kappa",
    "mean",
    "variance",
    "se_mean",
    "se_var",
)

_FMT = "{:.12g}"


def label_for_angle(angle: float) -> str:
    """Short file-name label for one of the three measurement angles."""
    for ref, label in _ANGLE_LABELS.items():
        if abs(angle - ref) < 1e-12:
            return label
    raise ValueError(f"no label for angle {angle}")


@dataclass(frozen=True)
class ControlSignal:
    """Gate-strength waveform kappa(t).

    ``sine`` and ``square`` are periodic analytic waveforms; ``custom`` cycles
    through an explicit list of per-bin values.  In every case
    |kappa| <= amplitude.
    """

    waveform: str
    frequency_mhz: float
    amplitude: float
    phase_rad: float = 0.0
    samples: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.waveform not in ("sine", "square", "custom"):
            raise ValueError(f"unknown waveform {self.waveform!r}")
        if self.frequency_mhz <= 0.0 or self.amplitude <= 0.0:
            raise ValueError("frequency and amplitude must be positive")
        if self.waveform == "custom":
            if not self.samples:
                raise ValueError("custom waveform needs samples")
            if np.max(np.abs(np.asarray(self.samples))) > self.amplitude:
                raise ValueError("custom samples exceed the stated amplitude")
        elif self.samples is not None:
            raise ValueError("samples are only meaningful for the custom waveform")

    def sample_bins(self, n_bins: int, bin_width_us: float) -> np.ndarray:
        """kappa value for each time bin t_k = k * bin_width_us."""
        if self.waveform == "custom":
            reps = -(-n_bins // len(self.samples))
            return np.tile(np.asarray(self.samples, dtype=float), reps)[:n_bins]
        t = np.arange(n_bins) * bin_width_us
        phase = 2.0 * np.pi * self.frequency_mhz * t + self.phase_rad
        if self.waveform == "sine":
            return self.amplitude * np.sin(phase)
        return self.amplitude * np.sign(np.sin(phase))


@dataclass(frozen=True)
class InputModulation:
    """Sinusoidal mean-field modulation of the coherent input."""

    x_amplitude: float
    p_amplitude: float = 0.0
    frequency_mhz: float = 5.0
    phase_rad: float = 0.0

    def __post_init__(self) -> None:
        if self.frequency_mhz <= 0.0:
            raise ValueError("frequency must be positive")
        for v in (self.x_amplitude, self.p_amplitude, self.phase_rad):
            if not np.isfinite(v):
                raise ValueError("modulation parameters must be finite")

    def means(self, t_us: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        phase = 2.0 * np.pi * self.frequency_mhz * np.asarray(t_us) + self.phase_rad
        return self.x_amplitude * np.sin(phase), self.p_amplitude * np.sin(phase)


@dataclass(frozen=True)
class Traces:
    """Shared time grid with the control and input-mean traces on it."""

    time_us: np.ndarray
    kappa: np.ndarray
    mean_x: np.ndarray
    mean_p: np.ndarray


def control_from_config(cfg: RunConfig) -> ControlSignal:
    return ControlSignal(
        cfg.control_waveform,
        cfg.control_frequency_mhz,
        cfg.control_amplitude,
        cfg.control_phase_rad,
        cfg.control_samples,
    )


def modulation_from_config(cfg: RunConfig) -> InputModulation:
    return InputModulation(
        cfg.input_x_amplitude,
        cfg.input_p_amplitude,
        cfg.input_frequency_mhz,
        cfg.input_phase_rad,
    )


def generate_traces(cfg: RunConfig) -> Traces:
    """Sample control and input-modulation traces on the configured grid."""
    t = np.arange(cfg.n_bins) * cfg.bin_width_us
    kappa = control_from_config(cfg).sample_bins(cfg.n_bins, cfg.bin_width_us)
    mean_x, mean_p = modulation_from_config(cfg).means(t)
    return Traces(t, kappa, np.asarray(mean_x), np.asarray(mean_p))


def run_output_states(cfg: RunConfig) -> list[GaussianState]:
    """Per-bin gate output states through the full physical pipeline.

    With use_pwl_electronics the local-oscillator phase and feed-forward gain
    come from the fitted broken-line tables instead of the exact functions.
    """
    traces = generate_traces(cfg)
    vx = db_to_variance(cfg.ancilla_db)
    theta_lut = gain_lut = None
    if cfg.use_pwl_electronics:
        theta_lut = fit_pwl("arctan", cfg.pwl_segments, cfg.pwl_lo, cfg.pwl_hi)
        gain_lut = fit_pwl("sqrt1px2", cfg.pwl_segments, cfg.pwl_lo, cfg.pwl_hi)
    states = []
    for k, mx, mp in zip(traces.kappa, traces.mean_x, traces.mean_p):
        gain_override = cfg.feedforward_gain_override
        if gain_lut is not None:
            gain_override = gain_lut(k)
        params = GateParams(
            kappa=float(k),
            ancilla_vx=vx,
            feedforward_gain_override=gain_override,
            lo_phase_override=None if theta_lut is None else theta_lut(k),
            feedforward_sign=cfg.feedforward_sign,
            hd1_efficiency=cfg.hd1_efficiency,
        )
        states.append(gate_output_state(make_coherent(float(mx), float(mp)), params))
    return states


@dataclass(frozen=True)
class HomodyneRecordSet:
    """Raw per-trial homodyne samples for each measurement angle.

    ``samples[angle]`` has shape (n_trials, n_bins); all angles share the time
    grid and the control trace.  ``config_digest`` ties the records back to the
    configuration that produced them.
    """

    time_us: np.ndarray
    kappa: np.ndarray
    samples: dict[float, np.ndarray]
    seed: int
    config_digest: str

    def __post_init__(self) -> None:
        n_bins = len(self.time_us)
        if len(self.kappa) != n_bins:
            raise ValueError("kappa and time grids differ in length")
        shapes = {a: s.shape for a, s in self.samples.items()}
        for angle, shape in shapes.items():
            if len(shape) != 2 or shape[1] != n_bins:
                raise ValueError(f"samples at angle {angle} have shape {shape}, want (*, {n_bins})")
        if len(set(shapes.values())) != 1:
            raise ValueError(f"sample blocks disagree in shape: {shapes}")

    @property
    def angles(self) -> tuple[float, ...]:
        return tuple(self.samples)

    @property
    def n_trials(self) -> int:
        return next(iter(self.samples.values())).shape[0]

    def save(self, path) -> None:
        arrays = {"time_us": self.time_us, "kappa": self.kappa}
        for i, (angle, block) in enumerate(self.samples.items()):
            arrays[f"samples_{i}"] = block
        arrays["angles"] = np.array(list(self.samples))
        meta = json.dumps({"seed": self.seed, "config_digest": self.config_digest})
        np.savez_compressed(path, meta=np.array(meta), **arrays)

    @classmethod
    def load(cls, path) -> "HomodyneRecordSet":
        with np.load(path) as data:
            meta = json.loads(str(data["meta"]))
            samples = {
                float(angle): data[f"samples_{i}"]
                for i, angle in enumerate(data["angles"])
            }
            return cls(
                data["time_us"], data["kappa"], samples,
                int(meta["seed"]), str(meta["config_digest"]),
            )


def run_experiment(cfg: RunConfig, seed: int | None = None) -> HomodyneRecordSet:
    """Simulate the repeated-shot run and return the raw homodyne records.

    Every bin's output state is Gaussian, so the n_trials samples per (angle,
    bin) are drawn directly from the projected normal law.  Each angle gets an
    independent child stream of the seed; identical (config, seed) pairs give
    bit-identical records.
    """
    if seed is None:
        seed = cfg.seed
    states = run_output_states(cfg)
    traces = generate_traces(cfg)
    means = {
        angle: np.array([quadrature_mean(s, angle) for s in states])
        for angle in MEASUREMENT_ANGLES
    }
    sigmas = {
        angle: np.sqrt([quadrature_variance(s, angle) for s in states])
        for angle in MEASUREMENT_ANGLES
    }
    children = np.random.SeedSequence(seed).spawn(len(MEASUREMENT_ANGLES))
    samples = {}
    for angle, child in zip(MEASUREMENT_ANGLES, children):
        rng = np.random.default_rng(child)
        samples[angle] = rng.normal(
            means[angle], sigmas[angle], size=(cfg.n_trials, cfg.n_bins)
        )
    return HomodyneRecordSet(
        traces.time_us, traces.kappa, samples, int(seed), config_digest(cfg)
    )


@dataclass(frozen=True)
class MomentEstimates:
    """Per-bin sample moments of a record set, with standard errors.

    se_mean = sqrt(v / n); se_var = v * sqrt(2 / (n - 1)), the normal-theory
    standard error of an unbiased sample variance.
    """

    time_us: np.ndarray
    kappa: np.ndarray
    n_trials: int
    mean: dict[float, np.ndarray]
    variance: dict[float, np.ndarray]
    se_mean: dict[float, np.ndarray]
    se_var: dict[float, np.ndarray]


def estimate_moments(records: HomodyneRecordSet) -> MomentEstimates:
    """Sample mean/variance per (angle, bin); needs at least two trials."""
    n = records.n_trials
    if n < 2:
        raise ValueError("need at least two trials to estimate a variance")
    mean, var, sem, sev = {}, {}, {}, {}
    for angle, block in records.samples.items():
        m = block.mean(axis=0)
        v = block.var(axis=0, ddof=1)
        mean[angle] = m
        var[angle] = v
        sem[angle] = np.sqrt(v / n)
        sev[angle] = v * np.sqrt(2.0 / (n - 1))
    return MomentEstimates(records.time_us, records.kappa, n, mean, var, sem, sev)


@dataclass(frozen=True)
class TheoryTraces:
    """Noise-free predicted moments per bin and angle.

    ``p_variance_simplified`` is the coherent-input shortcut
    1 + (kappa^2 / 2)(1/2 + v_s): mean-field modulation moves only the means,
    so for coherent inputs it coincides with the full p-variance prediction.
    """

    time_us: np.ndarray
    kappa: np.ndarray
    mean: dict[float, np.ndarray]
    variance: dict[float, np.ndarray]
    p_variance_simplified: np.ndarray


def theory_traces(cfg: RunConfig) -> TheoryTraces:
    """Closed-form per-bin predictions for the three measurement angles.

    Deliberately computed from the scalar input-output relations (not the
    pipeline), so Monte Carlo vs theory comparisons cross independent routes.
    """
    traces = generate_traces(cfg)
    vx = db_to_variance(cfg.ancilla_db)
    outs = [
        closed_form_output(
            make_coherent(float(mx), float(mp)),
            GateParams(kappa=float(k), ancilla_vx=vx),
        )
        for k, mx, mp in zip(traces.kappa, traces.mean_x, traces.mean_p)
    ]
    mean = {
        angle: np.array([quadrature_mean(s, angle) for s in outs])
        for angle in MEASUREMENT_ANGLES
    }
    variance = {
        angle: np.array([quadrature_variance(s, angle) for s in outs])
        for angle in MEASUREMENT_ANGLES
    }
    simplified = 1.0 + 0.5 * traces.kappa**2 * (0.5 + vx)
    return TheoryTraces(traces.time_us, traces.kappa, mean, variance, simplified)


def _write_rows(path, angle, time_us, kappa, mean, variance, se_mean, se_var) -> None:
    lines = [",".join(MOMENTS_COLUMNS)]
    for b in range(len(time_us)):
        vals = (angle, b, time_us[b], kappa[b], mean[b], variance[b], se_mean[b], se_var[b])
        lines.append(
            ",".join(_FMT.format(v) if not isinstance(v, int) else str(v) for v in vals)
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_moments_csv(path, est: MomentEstimates, angle: float) -> None:
    """One angle's per-bin moments in the flat schema shared with theory files."""
    _write_rows(
        path, angle, est.time_us, est.kappa,
        est.mean[angle], est.variance[angle], est.se_mean[angle], est.se_var[angle],
    )


def write_theory_csv(path, theory: TheoryTraces, angle: float) -> None:
    """Theory predictions in the moments schema; standard errors are zero."""
    zeros = np.zeros_like(theory.time_us)
    _write_rows(
        path, angle, theory.time_us, theory.kappa,
        theory.mean[angle], theory.variance[angle], zeros, zeros,
    )


def write_simplified_csv(path, theory: TheoryTraces) -> None:
    """The shortcut p-variance trace, same schema, angle fixed to pi/2."""
    zeros = np.zeros_like(theory.time_us)
    _write_rows(
        path, np.pi / 2.0, theory.time_us, theory.kappa,
        theory.mean[np.pi / 2.0], theory.p_variance_simplified, zeros, zeros,
    )


def read_moments_csv(path) -> dict:
    """Read one moments/theory CSV back into arrays.

    Returns a dict with the scalar ``angle`` and one array per remaining
    column.  The header and the constancy of the angle column are enforced.
    """
    text = Path(path).read_text().strip().splitlines()
    if not text or text[0].split(",") != list(MOMENTS_COLUMNS):
        raise ValueError(f"{path}: expected header {','.join(MOMENTS_COLUMNS)}")
    rows = []
    for ln, line in enumerate(text[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(MOMENTS_COLUMNS):
            raise ValueError(f"{path}:{ln}: expected {len(MOMENTS_COLUMNS)} fields")
        rows.append([float(p) for p in parts])
    if not rows:
        raise ValueError(f"{path}: no data rows")
    data = np.asarray(rows)
    angles = np.unique(data[:, 0])
    if angles.size != 1:
        raise ValueError(f"{path}: mixed angles {angles} in one file")
    out = {"angle": float(angles[0])}
    for i, col in enumerate(MOMENTS_COLUMNS[1:], start=1):
        out[col] = data[:, i]
    return out
