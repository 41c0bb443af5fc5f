"""Gaussian states of traveling optical modes.

Conventions used throughout the package:

* hbar = 1, so each vacuum quadrature has variance 1/2.
* Quadrature ordering is interleaved: (x1, p1, x2, p2, ...).
* Noise powers in dB are quoted relative to shot noise,
  dB = 10 * log10(v / 0.5), so vacuum sits at 0 dB and squeezing is negative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SHOT_NOISE_VARIANCE = 0.5

# Covariances whose symplectic spectrum dips below 1/2 - PHYSICALITY_TOL are rejected.
PHYSICALITY_TOL = 1e-9
SYMMETRY_TOL = 1e-10

# Squeezed variances below this are treated as numerically degenerate.
MIN_SQUEEZED_VARIANCE = 1e-12


def symplectic_form(n_modes: int) -> np.ndarray:
    """Symplectic form for the interleaved ordering: block-diagonal [[0, 1], [-1, 0]]."""
    omega = np.zeros((2 * n_modes, 2 * n_modes))
    for k in range(n_modes):
        omega[2 * k, 2 * k + 1] = 1.0
        omega[2 * k + 1, 2 * k] = -1.0
    return omega


def variance_to_db(variance: float) -> float:
    """Quadrature variance to dB relative to the shot-noise value 1/2."""
    variance = np.asarray(variance, dtype=float)
    if np.any(variance <= 0.0):
        raise ValueError("variance must be positive to express in dB")
    out = 10.0 * np.log10(variance / SHOT_NOISE_VARIANCE)
    return float(out) if out.ndim == 0 else out


def db_to_variance(db: float) -> float:
    """Inverse of :func:`variance_to_db`."""
    db = np.asarray(db, dtype=float)
    out = SHOT_NOISE_VARIANCE * 10.0 ** (db / 10.0)
    return float(out) if out.ndim == 0 else out


def symplectic_eigenvalues(cov) -> np.ndarray:
    """Symplectic eigenvalues of a covariance matrix, sorted ascending.

    Computed as the moduli of the eigenvalues of i*Omega*cov, which come in
    +/- pairs; one representative per pair is returned.  Physical states have
    every symplectic eigenvalue >= 1/2.
    """
    if isinstance(cov, GaussianState):
        cov = cov.cov
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0] // 2
    vals = np.sort(np.abs(np.linalg.eigvals(1j * symplectic_form(n) @ cov)))
    return 0.5 * (vals[::2] + vals[1::2])


@dataclass(frozen=True)
class GaussianState:
    """Gaussian state given by its quadrature means and covariance matrix.

    Both arrays are copied and made read-only at construction.  Construction
    validates shapes, symmetry of the covariance (to 1e-10), finiteness, and
    physicality: every symplectic eigenvalue must be >= 1/2 - 1e-9.

    Attributes:
        n_modes: Number of optical modes.
        mean: Quadrature means, shape (2 * n_modes,), interleaved ordering.
        cov: Quadrature covariance matrix, shape (2*n_modes, 2*n_modes).
    """

    n_modes: int
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self) -> None:
        n = self.n_modes
        if n < 1:
            raise ValueError("state needs at least one mode")
        mean = np.array(self.mean, dtype=float)
        cov = np.array(self.cov, dtype=float)
        if mean.shape != (2 * n,):
            raise ValueError(f"mean must have shape ({2 * n},), got {mean.shape}")
        if cov.shape != (2 * n, 2 * n):
            raise ValueError(f"cov must have shape ({2 * n}, {2 * n}), got {cov.shape}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("moments must be finite")
        if np.max(np.abs(cov - cov.T)) > SYMMETRY_TOL:
            raise ValueError("covariance must be symmetric")
        cov = 0.5 * (cov + cov.T)
        nu_min = float(symplectic_eigenvalues(cov).min())
        if nu_min < SHOT_NOISE_VARIANCE - PHYSICALITY_TOL:
            raise ValueError(
                f"unphysical covariance: min symplectic eigenvalue {nu_min:.9g} < 1/2"
            )
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)


def make_vacuum(n_modes: int = 1) -> GaussianState:
    """Vacuum in every mode: zero means, covariance (1/2) * identity."""
    return GaussianState(
        n_modes, np.zeros(2 * n_modes), SHOT_NOISE_VARIANCE * np.eye(2 * n_modes)
    )


def make_coherent(x: float, p: float) -> GaussianState:
    """Single-mode coherent state: vacuum covariance displaced to mean (x, p)."""
    return GaussianState(1, np.array([x, p], dtype=float), SHOT_NOISE_VARIANCE * np.eye(2))


def make_squeezed_vacuum(vx: float) -> GaussianState:
    """Single-mode minimum-uncertainty squeezed vacuum with x variance ``vx``.

    The conjugate variance is fixed by purity, vp = 1 / (4 * vx).  Values of
    ``vx`` below 1e-12 are rejected as degenerate.
    """
    vx = float(vx)
    if not np.isfinite(vx) or vx < MIN_SQUEEZED_VARIANCE:
        raise ValueError(f"squeezed variance must be finite and >= 1e-12, got {vx}")
    return GaussianState(1, np.zeros(2), np.diag([vx, 1.0 / (4.0 * vx)]))


def tensor(a: GaussianState, b: GaussianState) -> GaussianState:
    """Product state of two registers; ``a`` keeps the lower mode indices."""
    n = a.n_modes + b.n_modes
    mean = np.concatenate([a.mean, b.mean])
    cov = np.zeros((2 * n, 2 * n))
    cov[: 2 * a.n_modes, : 2 * a.n_modes] = a.cov
    cov[2 * a.n_modes :, 2 * a.n_modes :] = b.cov
    return GaussianState(n, mean, cov)


def quadrature_direction(angle: float, mode: int, n_modes: int) -> np.ndarray:
    """Unit phase-space vector of the quadrature x*cos(angle) + p*sin(angle)."""
    if not 0 <= mode < n_modes:
        raise ValueError(f"mode {mode} out of range for {n_modes} modes")
    u = np.zeros(2 * n_modes)
    u[2 * mode] = np.cos(angle)
    u[2 * mode + 1] = np.sin(angle)
    return u


def quadrature_mean(state: GaussianState, angle: float, mode: int = 0) -> float:
    u = quadrature_direction(angle, mode, state.n_modes)
    return float(u @ state.mean)


def quadrature_variance(state: GaussianState, angle: float, mode: int = 0) -> float:
    """Variance of the rotated quadrature x*cos(angle) + p*sin(angle) of one mode.

    angle = 0 gives the x variance, pi/2 the p variance, and pi/4 the variance
    of (x + p) / sqrt(2).
    """
    u = quadrature_direction(angle, mode, state.n_modes)
    return float(u @ state.cov @ u)
