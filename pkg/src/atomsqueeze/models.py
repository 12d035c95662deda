"""Model catalog: Gaussian networks for the atomic-ensemble squeezing schemes.

Every builder returns a :class:`~atomsqueeze.gaussian.GaussianSystem`.  Rates
are in rad/s; ``KHZ`` converts a frequency quoted as ``omega/(2 pi)`` in kHz.

==========================  ===========  =========================================
builder                     modes        Hamiltonian / dissipation
==========================  ===========  =========================================
build_single_cavity_ideal   a, b, c1, c2 beta a^dag (c1 + r e^{i theta} c2^dag)
                                         + beta b^dag (c2 + r e^{i theta} c1^dag)
                                         + h.c.; loss kappa_a on a, kappa_b on b
build_single_cavity_general a, b, c1, c2 detunings on a, b; couplings
                                         sqrt(N1) beta_r1 a^dag c1,
                                         sqrt(N2) beta_r2 a^dag c2^dag,
                                         sqrt(N1) beta_s1 b^dag c1^dag,
                                         sqrt(N2) beta_s2 b^dag c2 (+ h.c.)
build_single_mode           a, c1        beta a^dag (c1 + r e^{i theta} c1^dag) + h.c.
build_cascaded              a1, b1, a2,  beta (a1^dag c1 + r e^{i theta} a2^dag c2^dag)
                            b2, c1, c2   + beta (b2^dag c2 + r e^{i theta} b1^dag c1^dag)
                                         + h.c.; cascades a1->a2, b1->b2
build_reduced_adiabatic     c1, c2       jumps cosh(s) c1 - e^{i theta} sinh(s) c2^dag
                                         and cosh(s) c2 - e^{i theta} sinh(s) c1^dag
                                         at rate |beta|^2 (1 - r^2) / kappa
==========================  ===========  =========================================

The single-cavity steady state is ``S12(eps)|00>`` (squeezed in ``X1 + X2``
for ``theta = 0``); the cascaded and reduced steady states are
``S12(-eps)|00>`` (squeezed in ``X1 - X2``), with ``eps = e^{i theta}
artanh(r)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .gaussian import (CascadeLink, GaussianSystem, LinearJump,
                       QuadraticHamiltonian)

KHZ = 2.0 * np.pi * 1e3

SINGLE_CAVITY_LABELS = ("a", "b", "c1", "c2")
SINGLE_MODE_LABELS = ("a", "c1")
CASCADED_LABELS = ("a1", "b1", "a2", "b2", "c1", "c2")
REDUCED_LABELS = ("c1", "c2")


def _check_r(r: float) -> None:
    if not 0.0 <= r < 1.0:
        raise ValueError(
            f"r = {r} violates 0 <= r < 1 (artanh(r) diverges; no steady state)")


def _check_positive(**values: float) -> None:
    for name, value in values.items():
        if not value > 0:
            raise ValueError(f"{name} must be positive, got {value}")


@dataclass(frozen=True)
class IdealParams:
    beta: float
    r: float
    theta: float = 0.0
    kappa_a: float = 1.0
    kappa_b: float = 1.0

    def __post_init__(self):
        _check_positive(beta=self.beta, kappa_a=self.kappa_a, kappa_b=self.kappa_b)
        _check_r(self.r)


@dataclass(frozen=True)
class GeneralRamanParams:
    """Single-atom Raman rates, atom numbers and residual cavity detunings."""

    beta_r1: complex
    beta_s1: complex
    beta_r2: complex
    beta_s2: complex
    N1: float
    N2: float
    delta_a_eff: float = 0.0
    delta_b_eff: float = 0.0
    kappa_a: float = 1.0
    kappa_b: float = 1.0

    def __post_init__(self):
        if self.N1 < 1 or self.N2 < 1:
            raise ValueError(f"atom numbers must be >= 1, got N1={self.N1}, N2={self.N2}")
        _check_positive(kappa_a=self.kappa_a, kappa_b=self.kappa_b)

    @property
    def collective(self) -> tuple[complex, complex, complex, complex]:
        """Collective rates (sqrt(N1) b_r1, sqrt(N1) b_s1, sqrt(N2) b_r2, sqrt(N2) b_s2)."""
        n1, n2 = np.sqrt(self.N1), np.sqrt(self.N2)
        return (n1 * self.beta_r1, n1 * self.beta_s1, n2 * self.beta_r2, n2 * self.beta_s2)


@dataclass(frozen=True)
class CascadeParams:
    beta: float
    r: float
    theta: float = 0.0
    kappa: float = 1.0
    eta: float = 1.0

    def __post_init__(self):
        _check_positive(kappa=self.kappa)
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        _check_r(self.r)
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta = {self.eta} violates 0 <= eta <= 1")


@dataclass(frozen=True)
class PhysicalParams:
    g: float
    Omega: float
    Delta: float
    N: float
    gamma: float = 0.0
    omega_1: float = 0.0

    def __post_init__(self):
        if self.Delta == 0:
            raise ValueError("Delta must be nonzero")
        if abs(self.Delta) < 10 * abs(self.Omega) or abs(self.Delta) < 10 * abs(self.g):
            warnings.warn("Delta is not large compared to Omega and g; adiabatic "
                          "elimination of the excited state is questionable",
                          stacklevel=2)


def _hermitian_pair(F: np.ndarray, i: int, j: int, value: complex) -> None:
    F[i, j] += value
    F[j, i] += np.conj(value)


def _pair(M: np.ndarray, i: int, j: int, value: complex) -> None:
    if i == j:
        M[i, i] += 2.0 * value
    else:
        M[i, j] += value
        M[j, i] += value


def build_single_cavity_ideal(p: IdealParams) -> GaussianSystem:
    a, b, c1, c2 = range(4)
    F = np.zeros((4, 4), dtype=complex)
    M = np.zeros((4, 4), dtype=complex)
    pair = p.r * np.exp(1j * p.theta) * p.beta
    _hermitian_pair(F, a, c1, p.beta)
    _hermitian_pair(F, b, c2, p.beta)
    _pair(M, a, c2, pair)
    _pair(M, b, c1, pair)
    jumps = (LinearJump.loss(4, a, p.kappa_a), LinearJump.loss(4, b, p.kappa_b))
    return GaussianSystem(SINGLE_CAVITY_LABELS, QuadraticHamiltonian(F, M), jumps)


def build_single_cavity_general(p: GeneralRamanParams) -> GaussianSystem:
    a, b, c1, c2 = range(4)
    g_r1, g_s1, g_r2, g_s2 = p.collective
    F = np.zeros((4, 4), dtype=complex)
    M = np.zeros((4, 4), dtype=complex)
    F[a, a] = p.delta_a_eff
    F[b, b] = p.delta_b_eff
    _hermitian_pair(F, a, c1, g_r1)
    _hermitian_pair(F, b, c2, g_s2)
    _pair(M, a, c2, g_r2)
    _pair(M, b, c1, g_s1)
    jumps = (LinearJump.loss(4, a, p.kappa_a), LinearJump.loss(4, b, p.kappa_b))
    return GaussianSystem(SINGLE_CAVITY_LABELS, QuadraticHamiltonian(F, M), jumps)


def general_from_ideal(p: IdealParams, N1: float = 1e6, N2: float | None = None,
                       *, scale_r1: float = 1.0, scale_s1: float = 1.0,
                       scale_r2: float = 1.0, scale_s2: float = 1.0,
                       delta_a_eff: float = 0.0, delta_b_eff: float = 0.0
                       ) -> GeneralRamanParams:
    """Single-atom parameters realizing ``p`` for atom numbers (N1, N2), then perturbed.

    The single-atom rates are chosen so that matching conditions hold for
    ``N2 = N1``; passing a different ``N2`` (or ``scale_*`` factors) breaks them.
    """
    N2 = N1 if N2 is None else N2
    root = np.sqrt(N1)
    pair = p.r * np.exp(1j * p.theta) * p.beta
    return GeneralRamanParams(
        beta_r1=scale_r1 * p.beta / root,
        beta_s1=scale_s1 * pair / root,
        beta_r2=scale_r2 * pair / root,
        beta_s2=scale_s2 * p.beta / root,
        N1=N1, N2=N2, delta_a_eff=delta_a_eff, delta_b_eff=delta_b_eff,
        kappa_a=p.kappa_a, kappa_b=p.kappa_b,
    )


def atom_number_mismatch(p: IdealParams, ratio: float, N1: float = 1e6) -> GeneralRamanParams:
    """Ideal single-atom rates with ensemble 2 holding ``ratio**2 * N1`` atoms.

    This sets ``sqrt(N2/N1) beta_s2 / beta_r1 = ratio`` while leaving every
    single-atom rate and detuning at its nominal value.
    """
    if not ratio > 0:
        raise ValueError(f"ratio must be positive, got {ratio}")
    return general_from_ideal(p, N1=N1, N2=ratio ** 2 * N1)


def build_single_mode(beta: float, r: float, theta: float = 0.0, kappa: float = 1.0
                      ) -> GaussianSystem:
    _check_r(r)
    _check_positive(kappa=kappa)
    a, c = range(2)
    F = np.zeros((2, 2), dtype=complex)
    M = np.zeros((2, 2), dtype=complex)
    _hermitian_pair(F, a, c, beta)
    _pair(M, a, c, r * np.exp(1j * theta) * beta)
    return GaussianSystem(SINGLE_MODE_LABELS, QuadraticHamiltonian(F, M),
                          (LinearJump.loss(2, a, kappa),))


def build_cascaded(p: CascadeParams) -> GaussianSystem:
    """Two cavities in series; the links carry all cavity losses.

    Each link lowers to ``kappa D[source] + kappa D[target]`` plus the
    cross-feeding term, so no separate loss jumps are added here.
    """
    a1, b1, a2, b2, c1, c2 = range(6)
    F = np.zeros((6, 6), dtype=complex)
    M = np.zeros((6, 6), dtype=complex)
    pair = p.r * np.exp(1j * p.theta) * p.beta
    _hermitian_pair(F, a1, c1, p.beta)
    _hermitian_pair(F, b2, c2, p.beta)
    _pair(M, a2, c2, pair)
    _pair(M, b1, c1, pair)
    links = (CascadeLink(a1, a2, p.kappa, p.eta), CascadeLink(b1, b2, p.kappa, p.eta))
    return GaussianSystem(CASCADED_LABELS, QuadraticHamiltonian(F, M), (), links)


def build_reduced_adiabatic(beta: float, r: float, theta: float = 0.0, kappa: float = 1.0
                            ) -> GaussianSystem:
    _check_r(r)
    _check_positive(kappa=kappa)
    s = np.arctanh(r)
    rate = abs(beta) ** 2 * (1.0 - r * r) / kappa
    ch, sh = np.cosh(s), np.exp(1j * theta) * np.sinh(s)
    jumps = (LinearJump([ch, 0.0], [0.0, -sh], rate),
             LinearJump([0.0, ch], [-sh, 0.0], rate))
    return GaussianSystem(REDUCED_LABELS, QuadraticHamiltonian.zeros(2), jumps)


class PhysicalEstimate(NamedTuple):
    beta_single: float
    beta_collective: float
    spont_rate: float
    stark_shift: float


def estimate_physical(p: PhysicalParams) -> PhysicalEstimate:
    beta_single = p.Omega * p.g / (2.0 * p.Delta)
    return PhysicalEstimate(
        beta_single=beta_single,
        beta_collective=np.sqrt(p.N) * beta_single,
        spont_rate=p.gamma * p.Omega ** 2 / (4.0 * p.Delta ** 2),
        stark_shift=p.Omega ** 2 / (4.0 * p.Delta),
    )


class MatchingReport(NamedTuple):
    cond_i_residual: tuple[float, float]
    cond_ii_ratio: complex
    cond_iii_ratio: complex
    r_effective: float

    @property
    def unstable(self) -> bool:
        return self.r_effective >= 1.0

    def satisfied(self, tol: float = 1e-12) -> bool:
        return (max(abs(x) for x in self.cond_i_residual) <= tol
                and abs(self.cond_ii_ratio - 1) <= tol
                and abs(self.cond_iii_ratio - 1) <= tol)


def check_matching_conditions(p: GeneralRamanParams) -> MatchingReport:
    g_r1, g_s1, g_r2, g_s2 = p.collective
    return MatchingReport(
        cond_i_residual=(p.delta_a_eff, p.delta_b_eff),
        cond_ii_ratio=complex(g_s2 / g_r1) if g_r1 else complex(np.inf),
        cond_iii_ratio=complex(g_s1 / g_r2) if g_r2 else complex(np.inf),
        r_effective=float(abs(g_s1) / abs(g_r1)) if g_r1 else float("inf"),
    )
