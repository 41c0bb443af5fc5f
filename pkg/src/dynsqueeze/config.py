"""Run configuration: a flat record serialized to/from JSON.

Unknown keys are rejected rather than ignored so a typo cannot silently fall
back to a default.  The SHA-256 digest of the canonical JSON form is echoed by
the command-line tools and stored with simulation records, which pins every
output file to the exact configuration that produced it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

VALID_WAVEFORMS = ("sine", "square", "custom")


class ConfigError(ValueError):
    """Invalid configuration file or field value."""


@dataclass(frozen=True)
class RunConfig:
    """All knobs of a simulated run.

    Frequencies are in MHz and times in ns; amplitudes are in the
    shot-noise units used everywhere else (vacuum variance 1/2).
    """

    # ancilla and feed-forward
    ancilla_db: float = -3.1
    feedforward_sign: int = 1
    feedforward_gain_override: float | None = None
    hd1_efficiency: float = 1.0
    # control signal kappa(t)
    control_waveform: str = "sine"
    control_frequency_mhz: float = 1.0
    control_amplitude: float = 2.0
    control_phase_rad: float = 0.0
    control_samples: tuple[float, ...] | None = None
    # coherent input modulation
    input_x_amplitude: float = 3.0
    input_p_amplitude: float = 0.0
    input_frequency_mhz: float = 5.0
    input_phase_rad: float = 0.0
    # time grid
    bins_per_period: int = 100
    n_periods: int = 2
    # statistics
    n_trials: int = 10851
    seed: int = 12345
    # analog electronics
    use_pwl_electronics: bool = False
    pwl_segments: int = 16
    pwl_lo: float = -2.0
    pwl_hi: float = 2.0
    optical_delay_ns: float = 43.4
    electronics_latency_ns: float = 10.0

    def __post_init__(self) -> None:
        if self.control_samples is not None:
            object.__setattr__(
                self, "control_samples", tuple(float(s) for s in self.control_samples)
            )
        self._validate()

    def _validate(self) -> None:
        def positive(name):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise ConfigError(f"{name} must be positive, got {v}")

        def finite(name):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ConfigError(f"{name} must be finite, got {v}")

        for name in ("ancilla_db", "control_phase_rad", "input_phase_rad",
                     "input_x_amplitude", "input_p_amplitude"):
            finite(name)
        for name in ("control_frequency_mhz", "input_frequency_mhz", "control_amplitude"):
            positive(name)
        if self.feedforward_sign not in (-1, 1):
            raise ConfigError("feedforward_sign must be +1 or -1")
        if self.feedforward_gain_override is not None:
            finite("feedforward_gain_override")
        if not 0.0 < self.hd1_efficiency <= 1.0:
            raise ConfigError(f"hd1_efficiency must lie in (0, 1], got {self.hd1_efficiency}")
        if self.control_waveform not in VALID_WAVEFORMS:
            raise ConfigError(
                f"control_waveform must be one of {VALID_WAVEFORMS}, got {self.control_waveform!r}"
            )
        if self.control_waveform == "custom":
            if not self.control_samples:
                raise ConfigError("custom control waveform needs control_samples")
            samples = np.asarray(self.control_samples, dtype=float)
            if not np.all(np.isfinite(samples)):
                raise ConfigError("control_samples must be finite")
            if np.max(np.abs(samples)) > self.control_amplitude:
                raise ConfigError("control_samples exceed control_amplitude")
        elif self.control_samples is not None:
            raise ConfigError("control_samples only apply to the custom waveform")
        if self.bins_per_period < 2:
            raise ConfigError("bins_per_period must be >= 2")
        if self.n_periods < 2:
            raise ConfigError("the grid must span at least 2 control periods")
        if self.n_trials < 2:
            raise ConfigError("n_trials must be >= 2")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        if self.pwl_segments < 1:
            raise ConfigError("pwl_segments must be >= 1")
        if not self.pwl_lo < self.pwl_hi:
            raise ConfigError(f"need pwl_lo < pwl_hi, got [{self.pwl_lo}, {self.pwl_hi}]")
        for name in ("optical_delay_ns", "electronics_latency_ns"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ConfigError(f"{name} must be >= 0, got {v}")

    @property
    def n_bins(self) -> int:
        return self.bins_per_period * self.n_periods

    @property
    def bin_width_us(self) -> float:
        return 1.0 / (self.control_frequency_mhz * self.bins_per_period)


def to_json_dict(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    if d["control_samples"] is not None:
        d["control_samples"] = list(d["control_samples"])
    return d


def save_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(json.dumps(to_json_dict(cfg), indent=2, sort_keys=True) + "\n")


def load_config(path) -> RunConfig:
    """Load a JSON config; unknown keys and malformed values raise ConfigError."""
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    return config_from_dict(raw, source=str(path))


def config_from_dict(raw: dict, source: str = "config") -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be a JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"{source}: unknown keys {unknown}")
    try:
        return RunConfig(**raw)
    except (TypeError, ConfigError) as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def config_digest(cfg: RunConfig) -> str:
    """SHA-256 of the canonical JSON form; key order and float repr are fixed."""
    payload = json.dumps(to_json_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()
