"""Measurement-based squeezing gate with tunable interaction strength.

The target operation is the shear (quadratic-phase) map x -> x, p -> p + kappa x.
It is realized without an inline nonlinear medium: the input is mixed with a
squeezed-vacuum ancilla on a balanced beamsplitter, one port is read out by a
homodyne detector whose local-oscillator phase tracks theta = arctan(kappa),
and the measured value is fed forward to a p displacement of the other port
with gain g = sqrt(1 + kappa^2).  In the limit of an ideally squeezed ancilla
the input-output relations reduce to

    x_out = (x_in - x_s) / sqrt(2)
    p_out = sqrt(2) p_in + (kappa / sqrt(2)) x_in + (kappa / sqrt(2)) x_s

i.e. the shear composed with a fixed 3 dB x squeeze, plus ancilla noise
(kappa / sqrt(2)) x_s in p and the residual -x_s / sqrt(2) in x.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .homodyne import HomodyneOutcome, homodyne_measure, pure_loss
from .states import (
    GaussianState,
    db_to_variance,
    make_coherent,
    make_squeezed_vacuum,
    tensor,
)
from .symplectic import SymplecticTransform, apply, beamsplitter, shear

DEFAULT_ANCILLA_VX = db_to_variance(-3.1)

# Pipeline/closed-form agreement threshold used during sign calibration.
CALIBRATION_TOL = 1e-9


class GateCalibrationError(RuntimeError):
    """Raised when the discrete sign sweep does not single out one convention."""


class SignConventions(NamedTuple):
    """Discrete sign choices of the physical model.

    beamsplitter_sign: orientation of the beamsplitter output ports; -1 parity
        flips the kept mode.
    lo_sign: sign of the tracked local-oscillator phase (theta vs -theta).
    feedforward_sign: sign of the electronic gain applied to the measured value.
    """

    beamsplitter_sign: int
    lo_sign: int
    feedforward_sign: int


# Calibrated once against the closed-form moments; see calibrate_signs().
CONVENTIONS = SignConventions(1, 1, 1)


@dataclass(frozen=True)
class GateParams:
    """Operating point of the gate for one time bin.

    Attributes:
        kappa: Shear strength.
        ancilla_vx: x variance of the squeezed-vacuum ancilla (shot noise = 0.5).
        feedforward_gain_override: Replaces sqrt(1 + kappa^2) when not None,
            e.g. with a look-up-table approximation or 0 to disable feed-forward.
        lo_phase_override: Replaces arctan(kappa) when not None.
        feedforward_sign: Calibrated sign of the electronic gain.
        hd1_efficiency: Detection efficiency of the feed-forward homodyne.
    """

    kappa: float
    ancilla_vx: float = DEFAULT_ANCILLA_VX
    feedforward_gain_override: float | None = None
    lo_phase_override: float | None = None
    feedforward_sign: int = CONVENTIONS.feedforward_sign
    hd1_efficiency: float = 1.0

    def __post_init__(self) -> None:
        if not np.isfinite(self.kappa):
            raise ValueError("kappa must be finite")
        if not np.isfinite(self.ancilla_vx) or self.ancilla_vx <= 0.0:
            raise ValueError(f"ancilla_vx must be positive, got {self.ancilla_vx}")
        if self.feedforward_sign not in (-1, 1):
            raise ValueError("feedforward_sign must be +1 or -1")
        if not 0.0 < self.hd1_efficiency <= 1.0:
            raise ValueError(f"hd1_efficiency must lie in (0, 1], got {self.hd1_efficiency}")

    @property
    def lo_phase(self) -> float:
        """Local-oscillator phase: arctan(kappa) unless overridden."""
        if self.lo_phase_override is not None:
            return float(self.lo_phase_override)
        return float(np.arctan(self.kappa))

    @property
    def feedforward_gain(self) -> float:
        """Feed-forward gain: sqrt(1 + kappa^2) unless overridden."""
        if self.feedforward_gain_override is not None:
            return float(self.feedforward_gain_override)
        return float(np.sqrt(1.0 + self.kappa**2))


def ideal_shear_map(kappa: float) -> SymplecticTransform:
    """The target unitary map alone: x -> x, p -> p + kappa x."""
    return shear(kappa)


@dataclass(frozen=True)
class ShearDecomposition:
    """Rotation-sandwich form of the shear, shear = R(lam) T(2 lam) R(lam).

    T(2 lam) = [[sec 2lam, tan 2lam], [tan 2lam, sec 2lam]] is a squeeze along
    the +/- pi/4 axes with factors (sec - tan, sec + tan); their product is 1.

    Attributes:
        lam: Half-angle, (1/2) * arctan(kappa / 2).
        outer_rotation: R(lam); the same matrix appears on both sides.
        tilted_squeeze: T(2 lam).
        squeeze_factors: (sec 2lam - tan 2lam, sec 2lam + tan 2lam); for
            kappa > 0 the first factor < 1 contracts the -pi/4 axis.
    """

    lam: float
    outer_rotation: np.ndarray
    tilted_squeeze: np.ndarray
    squeeze_factors: tuple[float, float]

    def recompose(self) -> np.ndarray:
        return self.outer_rotation @ self.tilted_squeeze @ self.outer_rotation


def decompose_shear(kappa: float) -> ShearDecomposition:
    """Split the shear into a tilted squeeze between two equal rotations.

    This is the form the gate implements physically: the measurement plus
    feed-forward enact the tilted squeeze, the rotations are phase shifts.
    """
    lam = 0.5 * np.arctan(kappa / 2.0)
    c, s = np.cos(lam), np.sin(lam)
    rot = np.array([[c, -s], [s, c]])
    sec, tan = 1.0 / np.cos(2 * lam), np.tan(2 * lam)
    tilted = np.array([[sec, tan], [tan, sec]])
    return ShearDecomposition(float(lam), rot, tilted, (sec - tan, sec + tan))


def closed_form_output(state: GaussianState, params: GateParams) -> GaussianState:
    """Ideal-feed-forward output moments from the scalar input-output relations.

    Propagates means and second moments through x_out = (x_in - x_s)/sqrt(2),
    p_out = sqrt(2) p_in + (kappa/sqrt(2)) x_in + (kappa/sqrt(2)) x_s term by
    term.  This deliberately ignores the phase/gain overrides and detection
    efficiency: it is the reference the hardware model is checked against.
    """
    if state.n_modes != 1:
        raise ValueError("gate acts on a single mode")
    k = params.kappa
    vs = params.ancilla_vx
    mx, mp = state.mean
    vx, vp, cxp = state.cov[0, 0], state.cov[1, 1], state.cov[0, 1]
    mean = np.array([mx / np.sqrt(2.0), np.sqrt(2.0) * mp + k * mx / np.sqrt(2.0)])
    out_vx = 0.5 * (vx + vs)
    out_vp = 2.0 * vp + 0.5 * k**2 * (vx + vs) + 2.0 * k * cxp
    out_c = 0.5 * k * (vx - vs) + cxp
    return GaussianState(1, mean, np.array([[out_vx, out_c], [out_c, out_vp]]))


def _premeasurement_state(
    state: GaussianState, params: GateParams, conventions: SignConventions
) -> GaussianState:
    """Input plus ancilla after the balanced beamsplitter and detector loss.

    Mode 0 is the measured port (sum port for beamsplitter_sign +1), mode 1 the
    kept output port.
    """
    if state.n_modes != 1:
        raise ValueError("gate acts on a single mode")
    joint = tensor(state, make_squeezed_vacuum(params.ancilla_vx))
    joint = apply(beamsplitter(0.5, conventions.beamsplitter_sign), joint)
    if params.hd1_efficiency < 1.0:
        joint = pure_loss(joint, 0, params.hd1_efficiency)
    return joint


def _feedforward_map(params: GateParams, conventions: SignConventions) -> np.ndarray:
    """Linear map from (measured port, kept port) moments to the output mode.

    The homodyne reads q = sin(l*theta) x_m + cos(l*theta) p_m and the output is
    x_out = x_kept, p_out = p_kept + f * g * q, which as a 2x4 matrix is exact
    for both the ensemble mean and covariance of the record-discarded output.
    """
    theta = conventions.lo_sign * params.lo_phase
    fg = conventions.feedforward_sign * params.feedforward_sign * params.feedforward_gain
    return np.array(
        [
            [0.0, 0.0, 1.0, 0.0],
            [fg * np.sin(theta), fg * np.cos(theta), 0.0, 1.0],
        ]
    )


def _output_state(
    state: GaussianState, params: GateParams, conventions: SignConventions
) -> GaussianState:
    joint = _premeasurement_state(state, params, conventions)
    c = _feedforward_map(params, conventions)
    mean = c @ joint.mean
    cov = c @ joint.cov @ c.T
    return GaussianState(1, mean, 0.5 * (cov + cov.T))


def gate_output_state(state: GaussianState, params: GateParams) -> GaussianState:
    """Output state of the gate for a Gaussian input, via the physical pipeline.

    Builds ancilla, beamsplitter, homodyne and feed-forward explicitly, then
    averages over the measurement record: the returned mean is deterministic
    and the covariance includes the classical feed-forward contribution, so the
    result describes the ensemble of repeated shots.  At the default phase and
    gain it coincides with :func:`closed_form_output` to float precision.
    """
    return _output_state(state, params, CONVENTIONS)


def simulate_gate_shot(
    state: GaussianState, params: GateParams, rng: np.random.Generator
) -> tuple[GaussianState, HomodyneOutcome]:
    """One repetition of the gate: sample the feed-forward homodyne record.

    The returned state is the same ensemble output as :func:`gate_output_state`
    (the record is consumed by the feed-forward, not kept as side information);
    the outcome is a faithful draw of the detector reading at the tracked phase.
    """
    joint = _premeasurement_state(state, params, CONVENTIONS)
    theta = CONVENTIONS.lo_sign * params.lo_phase
    # q = sin(theta) x + cos(theta) p is the quadrature at axis pi/2 - theta.
    outcome, _ = homodyne_measure(joint, 0, np.pi / 2.0 - theta, rng)
    return _output_state(state, params, CONVENTIONS), outcome


def calibrate_signs() -> SignConventions:
    """Sweep the 2^3 sign conventions and return the one matching closed form.

    A coherent input with nonzero means on both quadratures over a kappa grid
    separates all eight combinations: a wrong feed-forward or LO sign shows up
    in the output covariance for kappa != 0, a wrong beamsplitter orientation
    flips the output means.  Exactly one combination must survive.

    Raises:
        GateCalibrationError: If zero or several combinations match.
    """
    probe = make_coherent(1.3, -0.7)
    kappas = (-2.0, -1.0, 0.5, 2.0)
    matches = []
    for b in (1, -1):
        for lo in (1, -1):
            for f in (1, -1):
                cand = SignConventions(b, lo, f)
                worst = 0.0
                for k in kappas:
                    params = GateParams(kappa=k, ancilla_vx=0.24494)
                    got = _output_state(probe, params, cand)
                    want = closed_form_output(probe, params)
                    worst = max(
                        worst,
                        float(np.max(np.abs(got.cov - want.cov))),
                        float(np.max(np.abs(got.mean - want.mean))),
                    )
                if worst < CALIBRATION_TOL:
                    matches.append(cand)
    if len(matches) != 1:
        raise GateCalibrationError(
            f"expected exactly one sign convention to match, found {len(matches)}"
        )
    return matches[0]
