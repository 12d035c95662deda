"""Two-mode squeezing of atomic ensembles by cavity-mediated Raman transitions.

:mod:`atomsqueeze.gaussian` evolves first and second moments exactly for
quadratic bosonic models; :mod:`atomsqueeze.fock` is a brute-force Lindblad
solver used to cross-check it; :mod:`atomsqueeze.models` builds the model
catalog and :mod:`atomsqueeze.analytics` holds the closed-form references.
"""

from .gaussian import (
    CascadeLink,
    CovarianceState,
    DriftDiffusion,
    GaussianSystem,
    LinearJump,
    NotHurwitz,
    QuadraticHamiltonian,
    assemble_generator,
    epr_variances,
    spectral_gap,
    steady_state,
)

__all__ = [
    "CascadeLink",
    "CovarianceState",
    "DriftDiffusion",
    "GaussianSystem",
    "LinearJump",
    "NotHurwitz",
    "QuadraticHamiltonian",
    "assemble_generator",
    "epr_variances",
    "spectral_gap",
    "steady_state",
]
