"""Closed-form reference values for the two-mode squeezing schemes.

All rates share the units of their inputs (the package uses rad/s).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


@dataclass(frozen=True)
class SqueezeParam:
    r: float
    theta: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.r < 1.0:
            raise ValueError(f"squeezing ratio r must satisfy 0 <= r < 1, got {self.r}")

    @property
    def s(self) -> float:
        return float(np.arctanh(self.r))

    @property
    def epsilon(self) -> complex:
        return self.s * np.exp(1j * self.theta)


def _check_r(r: float) -> None:
    if not 0.0 <= r < 1.0:
        raise ValueError(f"squeezing ratio r must satisfy 0 <= r < 1, got {r}")


def v_epr_ideal(r: float) -> tuple[float, float]:
    """(squeezed, anti-squeezed) EPR variances of the pure two-mode squeezed state."""
    _check_r(r)
    return 2.0 * (1.0 - r) / (1.0 + r), 2.0 * (1.0 + r) / (1.0 - r)


class LambdaPlus(NamedTuple):
    value: float
    regime: str  # "overdamped", "critical" or "underdamped"

    @property
    def rate(self) -> float:
        return abs(self.value)


def lambda_plus(kappa: float, beta: float, r: float) -> LambdaPlus:
    """Slowest relaxation eigenvalue of the ideal single-cavity scheme.

    Returns the real part of ``-kappa/2 + sqrt((kappa/2)^2 - |beta|^2 (1 - r^2))``.
    """
    if not kappa > 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    half = 0.5 * kappa
    bt2 = abs(beta) ** 2 * (1.0 - r * r)
    disc = half * half - bt2
    if abs(disc) <= 1e-12 * half * half:
        return LambdaPlus(-half, "critical")
    if disc < 0:
        return LambdaPlus(-half, "underdamped")
    # cancellation-free form of -kappa/2 + sqrt(disc)
    return LambdaPlus(-bt2 / (half + np.sqrt(disc)), "overdamped")


def gamma_rate(beta: float, r: float, kappa: float) -> float:
    """Preparation rate of the cascaded scheme in the bad-cavity limit."""
    if not kappa > 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    return abs(beta) ** 2 * (1.0 - r * r) / kappa


def v_epr_cascaded(r: float, eta: float) -> float:
    """Squeezed EPR variance of the cascaded scheme with inter-cavity efficiency ``eta``."""
    _check_r(r)
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    return 2.0 * (r * r - 2.0 * r * np.sqrt(eta) + 1.0) / (1.0 - r * r)


def r_opt(eta: float) -> float:
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    return float((1.0 - np.sqrt(1.0 - eta)) / np.sqrt(eta))


def v_min(eta: float) -> float:
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    return float(2.0 * np.sqrt(1.0 - eta))


def to_db(V: float) -> float:
    """Variance relative to the two-mode vacuum level 2, in dB."""
    if not V > 0:
        raise ValueError(f"variance must be positive, got {V}")
    return float(10.0 * np.log10(V / 2.0))
