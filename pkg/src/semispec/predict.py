"""Predicted eigenvalue strings and fits of the observed ones."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from semispec.linalg import EigenvalueCloud


class FitError(ValueError):
    pass


def wrap_angle(t: float) -> float:
    """Representative of t in (-pi, pi]."""
    w = math.remainder(t, 2 * math.pi)
    return w + 2 * math.pi if w <= -math.pi else w


@dataclass(frozen=True)
class Prediction:
    z0: complex
    mu: complex
    direction: float
    string: List[complex]
    h: float
    k_max: int

    @property
    def slope(self) -> float:
        return math.tan(self.direction)


def predict_string(z0: complex, mu: complex, h: float, k_max: int) -> Prediction:
    """z_k = z0 + (mu/i) h (2k+1), k = 0..k_max."""
    if not h > 0 or k_max < 0:
        raise ValueError("need h > 0 and k_max >= 0")
    w = mu / 1j
    zs = [z0 + w * h * (2 * k + 1) for k in range(k_max + 1)]
    return Prediction(complex(z0), complex(mu), cmath.phase(w), zs, h, k_max)


def _points(cloud, z0):
    if isinstance(cloud, EigenvalueCloud):
        v = cloud.trusted_values()
    else:
        v = np.asarray(cloud, dtype=complex).ravel()
    v = v[np.abs(v - z0) >= 1e-12]
    return v[np.argsort(np.abs(v - z0), kind="stable")]


def fit_direction(cloud, z0: complex, k_use: int = 5, radius: Optional[float] = None) -> float:
    """Principal axis through z0 of the k_use trusted values nearest z0.

    phi = arg(sum (z - z0)^2) / 2, oriented toward the bulk of the points.
    ``cloud`` may also be a plain array of values (all treated as trusted).
    """
    v = _points(cloud, z0)
    if radius is not None:
        v = v[np.abs(v - z0) <= radius]
    v = v[:k_use]
    if len(v) < 3:
        raise FitError(f"need at least 3 trusted values near z0, have {len(v)}")
    w = v - z0
    phi = 0.5 * cmath.phase(np.sum(w * w))
    if np.sum((w * cmath.exp(-1j * phi)).real) < 0:
        phi += math.pi
    return wrap_angle(phi)


@dataclass(frozen=True)
class FitResult:
    fitted_direction: float
    angle_error: float
    per_k_residuals: List[float]
    g0_coeffs: List[complex] = field(default_factory=list)

    @property
    def linear_coeff(self) -> complex:
        return self.g0_coeffs[1]


def fit_spectral_function(
    cloud,
    z0: complex,
    h: float,
    degree: int = 1,
    k_use: Optional[int] = None,
    prediction: Optional[Prediction] = None,
) -> FitResult:
    """Least-squares fit of z_k - z0 by a polynomial in q_k = h(k + 1/2)
    without constant term.

    g0_coeffs[n] multiplies q^n (g0_coeffs[0] is 0); the argument of the
    linear coefficient estimates the direction of the string.
    """
    if not 1 <= degree <= 4:
        raise ValueError("degree must be in 1..4")
    v = _points(cloud, z0)
    if k_use is not None:
        v = v[:k_use]
    if len(v) < degree + 1:
        raise FitError(f"{len(v)} points cannot determine a degree-{degree} fit")
    q = h * (np.arange(len(v)) + 0.5)
    A = np.column_stack([q**n for n in range(1, degree + 1)]).astype(complex)
    coef, *_ = np.linalg.lstsq(A, v - z0, rcond=None)
    resid = np.abs(A @ coef - (v - z0))
    direction = cmath.phase(coef[0])
    err = abs(wrap_angle(direction - prediction.direction)) if prediction else float("nan")
    return FitResult(
        fitted_direction=direction,
        angle_error=err,
        per_k_residuals=[float(r) for r in resid],
        g0_coeffs=[0j] + [complex(c) for c in coef],
    )
