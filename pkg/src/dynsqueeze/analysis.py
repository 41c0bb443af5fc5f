"""Variance reconstruction and diagonalization from three-angle measurements.

Measuring the x, p and pi/4 quadrature variances determines the full 2x2
covariance of the output mode: the cross term follows from

    sigma_xp = sigma_pi4^2 - (sigma_x^2 + sigma_p^2) / 2.

Diagonalizing that matrix gives the anti-squeezed/squeezed variance pair and
the principal-axis angle phi; the minimum-variance axis sits at -phi.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .harness import MEASUREMENT_ANGLES, MomentEstimates, TheoryTraces
from .states import variance_to_db

SUMMARY_COLUMNS = (
    "bin_index",
    "time_us",
    "kappa",
    "sigma_x2",
    "sigma_p2",
    "sigma_pi4_2",
    "sigma_xp",
    "sigma_plus2_db",
    "sigma_minus2_db",
    "phi_rad",
    "valid",
)

RESIDUAL_COLUMNS = (
    "bin_index",
    "time_us",
    "kappa",
    "d_mean_x",
    "d_mean_p",
    "d_mean_pi4",
    "d_var_x",
    "d_var_p",
    "d_var_pi4",
)

_FMT = "{:.12g}"

_X, _P, _PI4 = MEASUREMENT_ANGLES


def reconstruct_variance_matrix(sigma_x2: float, sigma_p2: float, sigma_pi4_2: float) -> np.ndarray:
    """2x2 covariance from the three measured quadrature variances.

    The result is not guaranteed positive-definite: statistical noise can push
    the reconstructed cross term outside the physical cone.  Callers flag that
    case instead of failing (see :func:`summarize`).
    """
    for name, v in (("sigma_x2", sigma_x2), ("sigma_p2", sigma_p2), ("sigma_pi4_2", sigma_pi4_2)):
        if not np.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v}")
    if sigma_x2 <= 0.0 or sigma_p2 <= 0.0:
        raise ValueError("quadrature variances must be positive")
    c = sigma_pi4_2 - 0.5 * (sigma_x2 + sigma_p2)
    return np.array([[sigma_x2, c], [c, sigma_p2]])


def is_positive_definite(matrix: np.ndarray) -> bool:
    return bool(np.linalg.eigvalsh(np.asarray(matrix, dtype=float)).min() > 0.0)


def diagonalize(matrix) -> tuple[float, float, float]:
    """Principal variances and axis angle of a 2x2 covariance.

    Returns (sigma_plus^2, sigma_minus^2, phi) with

        phi = (1/2) arctan(-2 sigma_xp / (sigma_x^2 - sigma_p^2))

    reduced to (-pi/4, pi/4].  sigma_minus^2 is the variance along the axis at
    angle -phi and sigma_plus^2 the one at -phi + pi/2; whenever
    sigma_p^2 >= sigma_x^2 (always true for this gate on vacuum-variance
    inputs) these are the max/min variance pair.
    """
    v = np.asarray(matrix, dtype=float)
    if v.shape != (2, 2):
        raise ValueError(f"need a 2x2 matrix, got shape {v.shape}")
    if abs(v[0, 1] - v[1, 0]) > 1e-10:
        raise ValueError("matrix must be symmetric")
    if not is_positive_definite(v):
        raise ValueError("matrix must be positive definite")
    a, b, c = v[0, 0], v[1, 1], v[0, 1]
    phi = 0.5 * np.arctan2(-2.0 * c, a - b)
    if phi > np.pi / 4.0:
        phi -= np.pi / 2.0
    elif phi <= -np.pi / 4.0:
        phi += np.pi / 2.0
    sin, cos = np.sin(phi), np.cos(phi)
    sigma_plus2 = a * sin**2 + b * cos**2 + 2.0 * c * sin * cos
    sigma_minus2 = a * cos**2 + b * sin**2 - 2.0 * c * sin * cos
    return float(sigma_plus2), float(sigma_minus2), float(phi)


def scan_extrema(matrix, n_angles: int = 10000) -> tuple[float, float, float, float]:
    """Brute-force scan of the quadrature variance over angles in [0, pi).

    Returns (min_value, argmin_angle, max_value, argmax_angle); used as an
    independent check of :func:`diagonalize`.
    """
    v = np.asarray(matrix, dtype=float)
    angles = np.linspace(0.0, np.pi, n_angles, endpoint=False)
    cs, sn = np.cos(angles), np.sin(angles)
    values = v[0, 0] * cs**2 + v[1, 1] * sn**2 + 2.0 * v[0, 1] * cs * sn
    lo, hi = int(np.argmin(values)), int(np.argmax(values))
    return float(values[lo]), float(angles[lo]), float(values[hi]), float(angles[hi])


@dataclass(frozen=True)
class VarianceSummary:
    """Reconstructed covariance and its diagonalization for one time bin.

    Bins where the reconstructed matrix is not positive-definite (a noise
    artifact of finite statistics) carry valid=False and NaN derived fields.
    """

    bin_index: int
    time_us: float
    kappa: float
    sigma_x2: float
    sigma_p2: float
    sigma_pi4_2: float
    sigma_xp: float
    sigma_plus2: float
    sigma_minus2: float
    phi_rad: float
    valid: bool


@dataclass(frozen=True)
class Residuals:
    """Measured-minus-theory per-bin differences on a shared grid."""

    time_us: np.ndarray
    kappa: np.ndarray
    d_mean: dict[float, np.ndarray]
    d_variance: dict[float, np.ndarray]


def summarize(
    moments: MomentEstimates, theory: TheoryTraces | None = None
) -> tuple[list[VarianceSummary], Residuals | None]:
    """Reconstruct and diagonalize each bin; optionally attach theory residuals.

    Requires all three measurement angles in ``moments``.  When ``theory`` is
    given its grid must match the measured one.
    """
    for angle in MEASUREMENT_ANGLES:
        if angle not in moments.variance:
            raise ValueError(f"moments are missing angle {angle}")
    rows = []
    for b in range(len(moments.time_us)):
        sx2 = float(moments.variance[_X][b])
        sp2 = float(moments.variance[_P][b])
        spi4 = float(moments.variance[_PI4][b])
        valid = sx2 > 0.0 and sp2 > 0.0
        sxp = splus = sminus = phi = np.nan
        if valid:
            v = reconstruct_variance_matrix(sx2, sp2, spi4)
            sxp = float(v[0, 1])
            valid = is_positive_definite(v)
            if valid:
                splus, sminus, phi = diagonalize(v)
        rows.append(
            VarianceSummary(
                b, float(moments.time_us[b]), float(moments.kappa[b]),
                sx2, sp2, spi4, sxp, splus, sminus, phi, valid,
            )
        )
    residuals = None
    if theory is not None:
        if len(theory.time_us) != len(moments.time_us) or (
            np.max(np.abs(theory.time_us - moments.time_us)) > 1e-9
            or np.max(np.abs(theory.kappa - moments.kappa)) > 1e-9
        ):
            raise ValueError("theory and moments are on different grids")
        d_mean = {
            a: moments.mean[a] - theory.mean[a] for a in MEASUREMENT_ANGLES
        }
        d_var = {
            a: moments.variance[a] - theory.variance[a] for a in MEASUREMENT_ANGLES
        }
        residuals = Residuals(moments.time_us, moments.kappa, d_mean, d_var)
    return rows, residuals


def write_summary_csv(path, rows: list[VarianceSummary]) -> None:
    """Summary rows in the flat schema; squeezing levels are stored in dB."""
    lines = [",".join(SUMMARY_COLUMNS)]
    for r in rows:
        plus_db = variance_to_db(r.sigma_plus2) if r.valid else np.nan
        minus_db = variance_to_db(r.sigma_minus2) if r.valid else np.nan
        vals = [
            str(r.bin_index),
            _FMT.format(r.time_us),
            _FMT.format(r.kappa),
            _FMT.format(r.sigma_x2),
            _FMT.format(r.sigma_p2),
            _FMT.format(r.sigma_pi4_2),
            _FMT.format(r.sigma_xp),
            _FMT.format(plus_db),
            _FMT.format(minus_db),
            _FMT.format(r.phi_rad),
            str(int(r.valid)),
        ]
        lines.append(",".join(vals))
    Path(path).write_text("\n".join(lines) + "\n")


def write_residuals_csv(path, res: Residuals) -> None:
    lines = [",".join(RESIDUAL_COLUMNS)]
    for b in range(len(res.time_us)):
        vals = [str(b)] + [
            _FMT.format(v)
            for v in (
                res.time_us[b], res.kappa[b],
                res.d_mean[_X][b], res.d_mean[_P][b], res.d_mean[_PI4][b],
                res.d_variance[_X][b], res.d_variance[_P][b], res.d_variance[_PI4][b],
            )
        ]
        lines.append(",".join(vals))
    Path(path).write_text("\n".join(lines) + "\n")


def read_summary_csv(path) -> dict:
    """Summary CSV back to a dict of columns (arrays; ``valid`` as bool)."""
    text = Path(path).read_text().strip().splitlines()
    if not text or text[0].split(",") != list(SUMMARY_COLUMNS):
        raise ValueError(f"{path}: expected header {','.join(SUMMARY_COLUMNS)}")
    rows = [[float(p) for p in line.split(",")] for line in text[1:]]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    data = np.asarray(rows)
    out = {col: data[:, i] for i, col in enumerate(SUMMARY_COLUMNS)}
    out["bin_index"] = out["bin_index"].astype(int)
    out["valid"] = out["valid"].astype(bool)
    return out
