"""Exact second-moment dynamics of linear open bosonic networks.

Conventions used throughout the package:

* quadratures ``X = a + a^dag`` and ``P = -i(a - a^dag)``, ordered
  ``(X_1, P_1, ..., X_n, P_n)``; the vacuum covariance is the identity;
* the dissipator carries a factor of two, ``D[L]rho = 2 L rho L^dag -
  L^dag L rho - rho L^dag L``, so a mode with loss rate ``kappa`` has its
  amplitude decay at ``kappa`` and its photon number at ``2 kappa``;
* the Hamiltonian is ``sum F_ij a_i^dag a_j + 1/2 sum (M_ij a_i^dag a_j^dag
  + conj(M_ij) a_i a_j)`` with ``F`` Hermitian and ``M`` symmetric.

Moments obey ``d<R>/dt = A <R>`` and ``d sigma/dt = A sigma + sigma A^T + D``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence, Union

import numpy as np
from scipy import linalg
from scipy.integrate import solve_ivp

ModeRef = Union[int, str]

RTOL = 1e-10
ATOL = 1e-12


class NotHurwitz(ArithmeticError):
    """Raised when a drift matrix has an eigenvalue outside the open left half-plane."""

    def __init__(self, eigenvalue: complex, threshold: float):
        self.eigenvalue = complex(eigenvalue)
        self.threshold = threshold
        super().__init__(
            f"drift matrix is not Hurwitz: eigenvalue {self.eigenvalue:.6g} has "
            f"real part >= -{threshold:.3g}; no unique steady state"
        )


class IntegrationError(RuntimeError):
    pass


def _frozen(x, dtype) -> np.ndarray:
    arr = np.array(x, dtype=dtype)
    arr.setflags(write=False)
    return arr


def symplectic_form(n: int) -> np.ndarray:
    """Block-diagonal ``[[0, 1], [-1, 0]]``; ``[R_i, R_j] = 2i Omega_ij``."""
    return np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def amplitude_basis(n: int) -> np.ndarray:
    """Matrix ``T`` with ``(a_1..a_n, a_1^dag..a_n^dag) = T @ (X_1, P_1, ...)``.

    This is the only place where ``a = (X + iP)/2`` is encoded.
    """
    T = np.zeros((2 * n, 2 * n), dtype=complex)
    for k in range(n):
        T[k, 2 * k] = 0.5
        T[k, 2 * k + 1] = 0.5j
        T[n + k, 2 * k] = 0.5
        T[n + k, 2 * k + 1] = -0.5j
    return T


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class QuadraticHamiltonian:
    F: np.ndarray
    M: np.ndarray

    def __post_init__(self):
        F = np.atleast_2d(np.asarray(self.F, dtype=complex))
        M = np.atleast_2d(np.asarray(self.M, dtype=complex))
        if F.shape != M.shape or F.shape[0] != F.shape[1]:
            raise ValueError(f"F and M must be equal square matrices, got {F.shape} and {M.shape}")
        scale = max(1.0, np.abs(F).max(initial=0.0), np.abs(M).max(initial=0.0))
        if np.abs(F - F.conj().T).max(initial=0.0) > 1e-12 * scale:
            raise ValueError("F must be Hermitian")
        if np.abs(M - M.T).max(initial=0.0) > 1e-12 * scale:
            raise ValueError("M must be symmetric")
        object.__setattr__(self, "F", _frozen(F, complex))
        object.__setattr__(self, "M", _frozen(M, complex))

    @classmethod
    def zeros(cls, n: int) -> "QuadraticHamiltonian":
        return cls(np.zeros((n, n)), np.zeros((n, n)))

    @property
    def n_modes(self) -> int:
        return self.F.shape[0]

    def __add__(self, other: "QuadraticHamiltonian") -> "QuadraticHamiltonian":
        return QuadraticHamiltonian(self.F + other.F, self.M + other.M)


@dataclass(frozen=True)
class LinearJump:
    """Dissipator ``rate * D[L]`` with ``L = sum_i u_i a_i + v_i a_i^dag``."""

    u: np.ndarray
    v: np.ndarray
    rate: float

    def __post_init__(self):
        u = np.atleast_1d(np.asarray(self.u, dtype=complex))
        v = np.atleast_1d(np.asarray(self.v, dtype=complex))
        if u.shape != v.shape or u.ndim != 1:
            raise ValueError("u and v must be vectors of equal length")
        if not self.rate >= 0:
            raise ValueError(f"jump rate must be >= 0, got {self.rate}")
        if self.rate > 0 and not (np.any(u) or np.any(v)):
            raise ValueError("a jump with positive rate needs a nonzero operator")
        object.__setattr__(self, "u", _frozen(u, complex))
        object.__setattr__(self, "v", _frozen(v, complex))
        object.__setattr__(self, "rate", float(self.rate))

    @classmethod
    def loss(cls, n: int, mode: int, rate: float) -> "LinearJump":
        u = np.zeros(n, dtype=complex)
        u[mode] = 1.0
        return cls(u, np.zeros(n), rate)


@dataclass(frozen=True)
class CascadeLink:
    """Unidirectional coupling of the output of ``source`` into ``target``."""

    source: int
    target: int
    kappa: float
    eta: float

    def __post_init__(self):
        if self.source == self.target:
            raise ValueError("cascade source and target must differ")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"cascade efficiency eta must lie in [0, 1], got {self.eta}")
        if not self.kappa >= 0:
            raise ValueError(f"cascade kappa must be >= 0, got {self.kappa}")


@dataclass(frozen=True)
class GaussianSystem:
    labels: tuple[str, ...]
    hamiltonian: QuadraticHamiltonian
    jumps: tuple[LinearJump, ...] = ()
    cascades: tuple[CascadeLink, ...] = ()

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "jumps", tuple(self.jumps))
        object.__setattr__(self, "cascades", tuple(self.cascades))
        n = len(labels)
        if len(set(labels)) != n:
            raise ValueError(f"mode labels must be unique: {labels}")
        if self.hamiltonian.n_modes != n:
            raise ValueError("Hamiltonian size does not match the number of modes")
        for jump in self.jumps:
            if jump.u.shape[0] != n:
                raise ValueError("jump operator size does not match the number of modes")
        for link in self.cascades:
            if not (0 <= link.source < n and 0 <= link.target < n):
                raise ValueError(f"cascade link {link} references a mode out of range")

    @property
    def n_modes(self) -> int:
        return len(self.labels)

    def index(self, mode: ModeRef) -> int:
        return _resolve(self.labels, mode)

    def lowered(self) -> tuple[QuadraticHamiltonian, tuple[LinearJump, ...]]:
        """Hamiltonian and jump list with every cascade link expanded."""
        H = self.hamiltonian
        jumps = list(self.jumps)
        for link in self.cascades:
            extra, dH = lower_cascade(link, self.n_modes)
            jumps.extend(extra)
            H = H + dH
        return H, tuple(jumps)


def _resolve(labels: Sequence[str], mode: ModeRef) -> int:
    if isinstance(mode, str):
        try:
            return labels.index(mode)
        except ValueError:
            raise KeyError(f"unknown mode label {mode!r}; known: {list(labels)}") from None
    idx = int(mode)
    if not 0 <= idx < len(labels):
        raise IndexError(f"mode index {idx} out of range for {len(labels)} modes")
    return idx


@dataclass(frozen=True)
class DriftDiffusion:
    A: np.ndarray
    D: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        D = np.asarray(self.D, dtype=float)
        scale = max(1.0, np.abs(D).max(initial=0.0))
        if np.abs(D - D.T).max(initial=0.0) > 1e-12 * scale:
            raise ValueError("diffusion matrix must be symmetric")
        object.__setattr__(self, "A", _frozen(A, float))
        object.__setattr__(self, "D", _frozen(0.5 * (D + D.T), float))
        object.__setattr__(self, "labels", tuple(self.labels))


@dataclass(frozen=True)
class CovarianceState:
    mean: np.ndarray
    sigma: np.ndarray
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=float)
        mean = np.asarray(self.mean, dtype=float)
        if sigma.shape != (mean.size, mean.size) or mean.size % 2:
            raise ValueError("sigma must be 2n x 2n and match the mean vector")
        labels = tuple(self.labels) or tuple(f"m{k}" for k in range(mean.size // 2))
        if len(labels) != mean.size // 2:
            raise ValueError("number of labels does not match the number of modes")
        object.__setattr__(self, "mean", _frozen(mean, float))
        object.__setattr__(self, "sigma", _frozen(0.5 * (sigma + sigma.T), float))
        object.__setattr__(self, "labels", labels)

    @property
    def n_modes(self) -> int:
        return self.mean.size // 2

    def index(self, mode: ModeRef) -> int:
        return _resolve(self.labels, mode)

    def block(self, modes: Sequence[ModeRef]) -> np.ndarray:
        """Covariance sub-block of the given modes, in the given order."""
        idx = _quad_indices([self.index(m) for m in modes])
        return self.sigma[np.ix_(idx, idx)]

    def reduced(self, modes: Sequence[ModeRef]) -> "CovarianceState":
        ks = [self.index(m) for m in modes]
        idx = _quad_indices(ks)
        return CovarianceState(self.mean[idx], self.sigma[np.ix_(idx, idx)],
                               tuple(self.labels[k] for k in ks))


def _quad_indices(modes: Sequence[int]) -> list[int]:
    return [q for k in modes for q in (2 * k, 2 * k + 1)]


def vacuum(labels: Sequence[str]) -> CovarianceState:
    n = len(labels)
    return CovarianceState(np.zeros(2 * n), np.eye(2 * n), tuple(labels))


# ---------------------------------------------------------------------------
# generator assembly


def lower_cascade(link: CascadeLink, n_modes: int) -> tuple[list[LinearJump], QuadraticHamiltonian]:
    """Standard-Lindblad form of a cascade link.

    ``kappa D[a_s] + kappa D[a_t] - 2 kappa sqrt(eta) ([a_t^dag, a_s rho] +
    [rho a_s^dag, a_t])`` equals a collective jump ``a_t + sqrt(eta) a_s`` at
    rate ``kappa``, a residual jump ``a_s`` at rate ``kappa (1 - eta)`` and the
    Hamiltonian ``i kappa sqrt(eta) (a_s^dag a_t - a_t^dag a_s)``.
    """
    s, t = link.source, link.target
    root = np.sqrt(link.eta)
    u = np.zeros(n_modes, dtype=complex)
    u[t] = 1.0
    u[s] = root
    jumps = [LinearJump(u, np.zeros(n_modes), link.kappa)]
    residual = link.kappa * (1.0 - link.eta)
    if residual > 0:
        jumps.append(LinearJump.loss(n_modes, s, residual))
    F = np.zeros((n_modes, n_modes), dtype=complex)
    F[s, t] = 1j * link.kappa * root
    F[t, s] = -1j * link.kappa * root
    return jumps, QuadraticHamiltonian(F, np.zeros((n_modes, n_modes)))


def hamiltonian_quadratic_form(H: QuadraticHamiltonian) -> np.ndarray:
    """Real symmetric ``K`` with ``H = 1/2 R^T K R + const``."""
    n = H.n_modes
    T = amplitude_basis(n)
    big = np.block([[H.F, H.M], [H.M.conj(), H.F.conj()]])
    K = (T.conj().T @ big @ T).real
    return 0.5 * (K + K.T)


def _jump_vectors(jump: LinearJump) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients ``l`` with ``L = l . R`` and ``c_i = [R_i, L]``."""
    n = jump.u.size
    ell = amplitude_basis(n).T @ np.concatenate([jump.u, jump.v])
    c = 2j * symplectic_form(n) @ ell
    return ell, c


def assemble_generator(system: GaussianSystem) -> DriftDiffusion:
    n = system.n_modes
    H, jumps = system.lowered()
    Omega = symplectic_form(n)
    A = 2.0 * Omega @ hamiltonian_quadratic_form(H)
    D = np.zeros((2 * n, 2 * n))
    for jump in jumps:
        if jump.rate == 0:
            continue
        ell, c = _jump_vectors(jump)
        A += 2.0 * jump.rate * np.real(np.outer(c.conj(), ell))
        D += 2.0 * jump.rate * np.real(np.outer(c.conj(), c))
    return DriftDiffusion(A, D, system.labels)


# ---------------------------------------------------------------------------
# steady state, evolution, spectra


def stability_threshold(A: np.ndarray) -> float:
    return 1e-9 * np.linalg.norm(A)


def check_hurwitz(A: np.ndarray) -> np.ndarray:
    eigs = np.linalg.eigvals(A)
    eps = stability_threshold(A)
    worst = eigs[np.argmax(eigs.real)]
    if worst.real >= -eps:
        raise NotHurwitz(worst, eps)
    return eigs


def solve_lyapunov(A: np.ndarray, D: np.ndarray) -> np.ndarray:
    """Solve ``A X + X A^T + D = 0`` by dense vectorization."""
    m = A.shape[0]
    eye = np.eye(m)
    big = np.kron(eye, A) + np.kron(A, eye)
    X = np.linalg.solve(big, -D.reshape(-1, order="F")).reshape(m, m, order="F")
    return 0.5 * (X + X.T)


def lyapunov_residual(gen: DriftDiffusion, sigma: np.ndarray) -> float:
    return float(np.linalg.norm(gen.A @ sigma + sigma @ gen.A.T + gen.D))


def steady_state(gen: DriftDiffusion) -> CovarianceState:
    check_hurwitz(gen.A)
    sigma = solve_lyapunov(gen.A, gen.D)
    return CovarianceState(np.zeros(gen.A.shape[0]), sigma, gen.labels)


def spectral_gap(gen: DriftDiffusion) -> float:
    """Slowest decay rate ``min(-Re lambda)``; negative means unstable."""
    return float(np.min(-np.linalg.eigvals(gen.A).real))


def physicality_margin(state: CovarianceState) -> float:
    """Smallest eigenvalue of ``sigma + i Omega`` (>= 0 for a physical state)."""
    Omega = symplectic_form(state.n_modes)
    return float(np.linalg.eigvalsh(state.sigma + 1j * Omega).min())


def is_physical(state: CovarianceState, tol: float = 1e-8) -> bool:
    return physicality_margin(state) >= -tol


def evolve(gen: DriftDiffusion, initial: CovarianceState, t_final: float,
           n_samples: int = 101, rtol: float = RTOL, atol: float = ATOL
           ) -> list[tuple[float, CovarianceState]]:
    """Integrate the moment equations from ``initial`` with an adaptive RK4(5) pair."""
    if not t_final > 0:
        raise ValueError(f"t_final must be positive, got {t_final}")
    if n_samples < 2:
        raise ValueError("need at least two samples")
    m = gen.A.shape[0]
    A, D = gen.A, gen.D

    def rhs(_t, y):
        mean = y[:m]
        sigma = y[m:].reshape(m, m)
        dsigma = A @ sigma + sigma @ A.T + D
        return np.concatenate([A @ mean, dsigma.ravel()])

    y0 = np.concatenate([initial.mean, initial.sigma.ravel()])
    times = np.linspace(0.0, t_final, n_samples)
    sol = solve_ivp(rhs, (0.0, t_final), y0, method="RK45", t_eval=times,
                    rtol=rtol, atol=atol)
    if sol.status != 0:
        raise IntegrationError(f"moment integration failed: {sol.message}")

    out = []
    for k, t in enumerate(sol.t):
        state = CovarianceState(sol.y[:m, k], sol.y[m:, k].reshape(m, m), gen.labels)
        if not is_physical(state):
            raise IntegrationError(
                f"state at t={t:.6g} violates sigma + i Omega >= 0 "
                f"(margin {physicality_margin(state):.3g})")
        out.append((float(t), state))
    return out


# ---------------------------------------------------------------------------
# state metrics


class EPRVariances(NamedTuple):
    x_sum: float
    x_diff: float
    p_sum: float
    p_diff: float

    def best(self) -> float:
        return min(self)


def epr_variances(state: CovarianceState, i: ModeRef, j: ModeRef) -> EPRVariances:
    ki, kj = state.index(i), state.index(j)
    if ki == kj:
        raise ValueError("EPR variances need two distinct modes")
    s = state.sigma
    xi, pi_, xj, pj = 2 * ki, 2 * ki + 1, 2 * kj, 2 * kj + 1
    vx = s[xi, xi] + s[xj, xj]
    vp = s[pi_, pi_] + s[pj, pj]
    return EPRVariances(
        float(vx + 2 * s[xi, xj]),
        float(vx - 2 * s[xi, xj]),
        float(vp + 2 * s[pi_, pj]),
        float(vp - 2 * s[pi_, pj]),
    )


def purity(state: CovarianceState) -> float:
    return float(1.0 / np.sqrt(np.linalg.det(state.sigma)))


def occupation(state: CovarianceState, mode: ModeRef) -> float:
    """Mean photon number ``<a^dag a>`` of one mode."""
    k = state.index(mode)
    x, p = 2 * k, 2 * k + 1
    second = state.sigma[x, x] + state.sigma[p, p] + state.mean[x] ** 2 + state.mean[p] ** 2
    return float((second - 2.0) / 4.0)


def symplectic_eigenvalues(sigma: np.ndarray) -> np.ndarray:
    n = sigma.shape[0] // 2
    ev = np.abs(np.linalg.eigvals(1j * symplectic_form(n) @ sigma))
    return np.sort(ev)[::2]


def log_negativity(state: CovarianceState, partition: Sequence[ModeRef]) -> float:
    ks = {state.index(m) for m in partition}
    if not ks or len(ks) == state.n_modes:
        raise ValueError("partition must be a nonempty proper subset of the modes")
    flip = np.ones(2 * state.n_modes)
    for k in ks:
        flip[2 * k + 1] = -1.0
    sigma_pt = flip[:, None] * state.sigma * flip[None, :]
    nu = symplectic_eigenvalues(sigma_pt)
    return float(np.sum(np.maximum(0.0, -np.log(nu))))


def two_mode_squeezer(n: int, i: int, j: int, s: float, theta: float) -> np.ndarray:
    """Symplectic matrix of ``exp(conj(eps) a_i a_j - eps a_i^dag a_j^dag)``, ``eps = s e^{i theta}``."""
    M = np.zeros((n, n), dtype=complex)
    M[i, j] = M[j, i] = -1j * s * np.exp(1j * theta)
    K = hamiltonian_quadratic_form(QuadraticHamiltonian(np.zeros((n, n)), M))
    return linalg.expm(2.0 * symplectic_form(n) @ K)


def squeeze_transform(state: CovarianceState, s: float, theta: float,
                      i: ModeRef, j: ModeRef) -> CovarianceState:
    """Apply the two-mode squeezer ``S_ij(s e^{i theta})`` to ``state``."""
    ki, kj = state.index(i), state.index(j)
    if ki == kj:
        raise ValueError("two-mode squeezing needs two distinct modes")
    S = two_mode_squeezer(state.n_modes, ki, kj, s, theta)
    return CovarianceState(S @ state.mean, S @ state.sigma @ S.T, state.labels)


def two_mode_squeezed_vacuum(s: float, theta: float = 0.0,
                             labels: Sequence[str] = ("c1", "c2")) -> CovarianceState:
    return squeeze_transform(vacuum(labels), s, theta, 0, 1)
