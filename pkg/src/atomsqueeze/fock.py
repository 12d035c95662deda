"""Brute-force Lindblad dynamics in a truncated Fock (or Dicke) basis.

This module is the independent check on :mod:`atomsqueeze.gaussian`.  It
shares only the system description and the cascade lowering with it; all
operators are built as explicit sparse matrices.

The product basis is mode-major with occupation numbers ascending, i.e. the
Hilbert space is ``kron(H_0, H_1, ...)``.  Density matrices are vectorized
column-wise, ``vec(A rho B) = (B^T kron A) vec(rho)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import linalg
from scipy.linalg import lapack

from .gaussian import CovarianceState, GaussianSystem, QuadraticHamiltonian, LinearJump

MAX_DIM = 20000
# preconditioner shift, relative to the largest jump rate (tuned on the model catalog)
_SHIFT = 0.1


class TruncationError(RuntimeError):
    """Raised when the truncated space would exceed the size guard."""


class NotConverged(RuntimeError):
    def __init__(self, message: str, history: list[tuple[tuple[int, ...], float]]):
        super().__init__(message)
        self.history = history


@dataclass(frozen=True)
class FockConfig:
    cutoffs: tuple[int, ...]
    convergence_tol: float = 1e-3

    def __post_init__(self):
        cutoffs = tuple(int(c) for c in self.cutoffs)
        object.__setattr__(self, "cutoffs", cutoffs)
        if any(c < 2 for c in cutoffs):
            raise ValueError(f"every cutoff must be >= 2, got {cutoffs}")
        if self.dim > MAX_DIM:
            raise TruncationError(
                f"truncated dimension {self.dim} exceeds the guard of {MAX_DIM}")

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(c + 1 for c in self.cutoffs)

    @property
    def dim(self) -> int:
        return math.prod(self.dims)


@dataclass(frozen=True)
class FockState:
    rho: np.ndarray
    dims: tuple[int, ...]
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        d = math.prod(self.dims)
        if rho.shape != (d, d):
            raise ValueError(f"rho has shape {rho.shape}, expected {(d, d)}")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "dims", tuple(self.dims))
        labels = tuple(self.labels) or tuple(f"m{k}" for k in range(len(self.dims)))
        object.__setattr__(self, "labels", labels)

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.rho))

    def hermiticity_error(self) -> float:
        return float(np.abs(self.rho - self.rho.conj().T).max())

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.rho + self.rho.conj().T)).min())

    def expect(self, op) -> complex:
        return complex((op.T.multiply(self.rho)).sum()) if sp.issparse(op) \
            else complex(np.sum(op.T * self.rho))

    def populations(self, mode: int) -> np.ndarray:
        """Marginal occupation distribution of one mode."""
        diag = np.real(np.diag(self.rho)).reshape(self.dims)
        axes = tuple(k for k in range(len(self.dims)) if k != mode)
        return diag.sum(axis=axes)


def basis_state(dims: Sequence[int], occupations: Sequence[int],
                labels: Sequence[str] = ()) -> FockState:
    d = math.prod(dims)
    idx = np.ravel_multi_index(tuple(occupations), tuple(dims))
    rho = np.zeros((d, d), dtype=complex)
    rho[idx, idx] = 1.0
    return FockState(rho, tuple(dims), tuple(labels))


def coherent_state(dims: Sequence[int], alphas: Sequence[complex],
                   labels: Sequence[str] = ()) -> FockState:
    """Product of truncated, renormalized coherent states."""
    psi = np.ones(1, dtype=complex)
    for d, alpha in zip(dims, alphas):
        n = np.arange(d)
        amps = np.array([alpha ** k / math.sqrt(math.factorial(k)) for k in n], dtype=complex)
        amps /= np.linalg.norm(amps)
        psi = np.kron(psi, amps)
    return FockState(np.outer(psi, psi.conj()), tuple(dims), tuple(labels))


# ---------------------------------------------------------------------------
# operators


def destroy(d: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, d)), 1, shape=(d, d), format="csr", dtype=complex)


def embed(op, k: int, dims: Sequence[int]) -> sp.csr_matrix:
    """Operator ``op`` acting on factor ``k`` of the product space."""
    left = math.prod(dims[:k])
    right = math.prod(dims[k + 1:])
    return sp.kron(sp.kron(sp.identity(left, format="csr"), op), sp.identity(right, format="csr"),
                   format="csr")


def ladder_operators(dims: Sequence[int]) -> list[sp.csr_matrix]:
    return [embed(destroy(d), k, dims) for k, d in enumerate(dims)]


def hamiltonian_matrix(H: QuadraticHamiltonian, ops: Sequence[sp.spmatrix]) -> sp.csr_matrix:
    n = len(ops)
    dim = ops[0].shape[0]
    out = sp.csr_matrix((dim, dim), dtype=complex)
    pairs = sp.csr_matrix((dim, dim), dtype=complex)
    for i in range(n):
        for j in range(n):
            if H.F[i, j] != 0:
                out = out + H.F[i, j] * (ops[i].getH() @ ops[j])
            if H.M[i, j] != 0:
                pairs = pairs + 0.5 * H.M[i, j] * (ops[i].getH() @ ops[j].getH())
    return (out + pairs + pairs.getH()).tocsr()


def jump_matrix(jump: LinearJump, ops: Sequence[sp.spmatrix]) -> sp.csr_matrix:
    dim = ops[0].shape[0]
    L = sp.csr_matrix((dim, dim), dtype=complex)
    for k, op in enumerate(ops):
        if jump.u[k] != 0:
            L = L + jump.u[k] * op
        if jump.v[k] != 0:
            L = L + jump.v[k] * op.getH()
    return L.tocsr()


def _spnorm2_bound(op: sp.spmatrix) -> float:
    return math.sqrt(spla.norm(op, 1) * spla.norm(op, np.inf))


@dataclass
class LindbladModel:
    """Explicit Hamiltonian and jump matrices over a truncated product space.

    ``jumps`` holds ``(rate, L)`` pairs with the factor-two dissipator
    ``rate * (2 L rho L^dag - L^dag L rho - rho L^dag L)``.  ``basis_charge``
    labels each basis state with a quantity the no-jump evolution conserves;
    the stationary state is block diagonal in it.
    """

    H: sp.csr_matrix
    jumps: list[tuple[float, sp.csr_matrix]]
    dims: tuple[int, ...]
    labels: tuple[str, ...]
    mode_ops: list[sp.csr_matrix]
    basis_charge: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    def apply(self, rho: np.ndarray) -> np.ndarray:
        H = self.H
        out = -1j * (H @ rho - (H.getH() @ rho.conj().T).conj().T)
        for rate, L in self.jumps:
            if rate == 0:
                continue
            LdL = (L.getH() @ L).tocsr()
            Lrho = L @ rho
            LrhoLd = (L @ Lrho.conj().T).conj().T
            out += rate * (2.0 * LrhoLd - LdL @ rho - (LdL @ rho.conj().T).conj().T)
        return out

    def superoperator(self) -> sp.csc_matrix:
        d = self.dim
        eye = sp.identity(d, format="csr", dtype=complex)
        H = self.H
        S = -1j * (sp.kron(eye, H) - sp.kron(H.T, eye))
        for rate, L in self.jumps:
            if rate == 0:
                continue
            LdL = (L.getH() @ L).tocsr()
            S = S + rate * (2.0 * sp.kron(L.conj(), L) - sp.kron(eye, LdL) - sp.kron(LdL.T, eye))
        return S.tocsc()

    def norm_bound(self) -> float:
        """Upper bound on the operator 2-norm of the generator."""
        bound = 2.0 * _spnorm2_bound(self.H)
        for rate, L in self.jumps:
            bound += 4.0 * rate * _spnorm2_bound(L) ** 2
        return bound

    def state(self, rho: np.ndarray) -> FockState:
        return FockState(rho, self.dims, self.labels)


def mode_charges(system: GaussianSystem) -> np.ndarray | None:
    """Per-mode charges +-1 conserved (up to a constant shift) by every term.

    Beam-splitter terms force equal charges, pair terms opposite ones, and a
    jump must lower or raise the total charge by a fixed amount.  Returns
    ``None`` when no consistent assignment exists (e.g. single-mode squeezing).
    """
    H, jumps = system.lowered()
    n = system.n_modes
    edges: list[tuple[int, int, int]] = []  # (i, j, parity) with q_i = (-1)^parity q_j
    for i in range(n):
        for j in range(n):
            if i != j and H.F[i, j] != 0:
                edges.append((i, j, 0))
            if H.M[i, j] != 0:
                edges.append((i, j, 1))
    for jump in jumps:
        if jump.rate == 0:
            continue
        terms = [(k, 0) for k in np.flatnonzero(jump.u)] + [(k, 1) for k in np.flatnonzero(jump.v)]
        for (k0, p0), (k1, p1) in zip(terms, terms[1:]):
            edges.append((k0, k1, p0 ^ p1))

    charge = [0] * n
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for i, j, par in edges:
        adj[i].append((j, par))
        adj[j].append((i, par))
    for start in range(n):
        if charge[start]:
            continue
        charge[start] = 1
        stack = [start]
        while stack:
            i = stack.pop()
            for j, par in adj[i]:
                want = charge[i] * (-1 if par else 1)
                if charge[j] == 0:
                    charge[j] = want
                    stack.append(j)
                elif charge[j] != want:
                    return None
    return np.array(charge)


def build_model(system: GaussianSystem, cfg: FockConfig) -> LindbladModel:
    if len(cfg.cutoffs) != system.n_modes:
        raise ValueError(
            f"{len(cfg.cutoffs)} cutoffs given for a system of {system.n_modes} modes")
    dims = cfg.dims
    ops = ladder_operators(dims)
    H, jumps = system.lowered()
    q = mode_charges(system)
    occ = np.indices(dims).reshape(len(dims), -1)
    # Without a U(1) charge, total photon-number parity still works: quadratic
    # Hamiltonians preserve it and linear jumps flip it.
    basis_charge = q @ occ if q is not None else occ.sum(axis=0) % 2
    return LindbladModel(
        H=hamiltonian_matrix(H, ops),
        jumps=[(j.rate, jump_matrix(j, ops)) for j in jumps],
        dims=dims, labels=system.labels, mode_ops=ops, basis_charge=basis_charge,
    )


def liouvillian_apply(system: GaussianSystem, cfg: FockConfig, state: FockState) -> np.ndarray:
    model = build_model(system, cfg)
    if state.rho.shape != (model.dim, model.dim):
        raise ValueError(f"state dimension {state.rho.shape[0]} does not match {model.dim}")
    return model.apply(state.rho)


# ---------------------------------------------------------------------------
# dynamics


def integrate_model(model: LindbladModel, rho0: FockState, t_final: float,
                    n_samples: int = 11, step_factor: float = 0.01
                    ) -> list[tuple[float, FockState]]:
    """Fixed-step RK4 with ``h <= step_factor / ||generator||``."""
    if not t_final > 0:
        raise ValueError(f"t_final must be positive, got {t_final}")
    norm = model.norm_bound()
    h_max = step_factor / norm if norm > 0 else t_final
    if not h_max > 0 or t_final / h_max > 5e7:
        raise RuntimeError(f"RK4 step underflow: h_max={h_max:.3g} for t_final={t_final:.3g}")
    d = model.dim
    if d * d <= 250_000:
        S = model.superoperator().tocsr()

        def f(y):
            return S @ y
        y = rho0.rho.reshape(-1, order="F").copy()
        unpack = lambda v: v.reshape(d, d, order="F")  # noqa: E731
    else:
        f = model.apply
        y = rho0.rho.copy()
        unpack = lambda v: v  # noqa: E731

    times = np.linspace(0.0, t_final, n_samples)
    out = [(0.0, model.state(unpack(y).copy()))]
    for t0, t1 in zip(times[:-1], times[1:]):
        steps = max(1, math.ceil((t1 - t0) / h_max))
        h = (t1 - t0) / steps
        for _ in range(steps):
            k1 = f(y)
            k2 = f(y + 0.5 * h * k1)
            k3 = f(y + 0.5 * h * k2)
            k4 = f(y + h * k3)
            y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append((float(t1), model.state(unpack(y).copy())))
    return out


def integrate(system: GaussianSystem, cfg: FockConfig, rho0: FockState, t_final: float,
              n_samples: int = 11, step_factor: float = 0.01) -> list[tuple[float, FockState]]:
    return integrate_model(build_model(system, cfg), rho0, t_final, n_samples, step_factor)


def _charge_blocks(model: LindbladModel) -> list[np.ndarray]:
    if model.basis_charge is None:
        return [np.arange(model.dim)]
    q = model.basis_charge
    return [np.flatnonzero(q == Q) for Q in np.unique(q)]


def _steady_state_direct(model: LindbladModel) -> np.ndarray:
    d = model.dim
    S = model.superoperator()
    if model.basis_charge is not None:
        q = model.basis_charge
        ii, jj = np.nonzero(q[:, None] == q[None, :])
        idx = ii + jj * d  # column-stacked position of rho[i, j]
        S = S.tocsr()[idx].tocsc()[:, idx]
    else:
        idx = np.arange(d * d)
        ii, jj = idx % d, idx // d
    m = len(idx)
    diag = np.flatnonzero(ii == jj)
    # the diagonal rows sum to zero (trace preservation); swap one for tr(rho) = 1
    keep = np.ones(m)
    keep[diag[0]] = 0.0
    trace_row = sp.csr_matrix((np.ones(diag.size), (np.full(diag.size, diag[0]), diag)),
                              shape=(m, m))
    A = (sp.diags(keep) @ S.tocsr() + trace_row).tocsc()
    rhs = np.zeros(m, dtype=complex)
    rhs[diag[0]] = 1.0
    x = spla.spsolve(A, rhs)
    rho = np.zeros((d, d), dtype=complex)
    rho[ii, jj] = x
    return rho


def _sylvester_solver(K: np.ndarray):
    """Return a solver for ``K Y + Y K^dag = R``.

    A well-conditioned eigenbasis turns the solve into an elementwise division
    with BLAS-3 basis changes; otherwise fall back to the Schur-form solver.
    """
    lam, V = linalg.eig(K)
    if np.linalg.cond(V) < 1e6:
        Vinv = np.linalg.inv(V)
        denom = lam[:, None] + lam.conj()[None, :]
        VinvH = Vinv.conj().T
        VH = V.conj().T
        return lambda R: V @ ((Vinv @ R @ VinvH) / denom) @ VH
    T, U = linalg.schur(K, output="complex")
    UH = U.conj().T

    def solve(R):
        Z, scale, _ = lapack.ztrsyl(T, T, UH @ R @ U, trana="N", tranb="C")
        return U @ (Z / scale) @ UH
    return solve


def _steady_state_gmres(model: LindbladModel, rtol: float = 1e-12) -> np.ndarray:
    """GMRES on the charge-diagonal blocks with a Sylvester preconditioner.

    The generator splits into ``K rho + rho K^dag`` with ``K = -iH -
    sum rate L^dag L`` (block diagonal in the charge) plus the jump feeding
    ``2 rate L rho L^dag`` (moves blocks by a fixed charge).  The preconditioner
    inverts the shifted first part block by block.  The trace condition enters
    as the rank-one term ``E tr(rho)`` with ``E = I/d``.  Rates are divided by
    the largest one first so that this term is not swamped in SI units.
    """
    blocks = _charge_blocks(model)
    scale = max((rate for rate, _ in model.jumps), default=0.0)
    if scale <= 0:
        scale = max(1.0, float(abs(model.H).max()))
    K = (-1j / scale * model.H).tocsr()
    for rate, L in model.jumps:
        K = K - (rate / scale) * (L.getH() @ L)
    K = K.tocsr()
    K_blocks = [K[I][:, I].toarray() for I in blocks]
    if sum(np.abs(Kb).sum() for Kb in K_blocks) < np.abs(K).sum() * (1 - 1e-12):
        raise RuntimeError("no-jump generator is not block diagonal in the charge")

    sizes = [len(I) for I in blocks]
    offsets = np.concatenate([[0], np.cumsum([m * m for m in sizes])])
    n = int(offsets[-1])
    feeds = []
    for rate, L in model.jumps:
        if rate == 0:
            continue
        L = L.tocsr()
        for a, Ia in enumerate(blocks):
            rows = L[Ia]
            for b, Ib in enumerate(blocks):
                piece = rows[:, Ib]
                if piece.nnz:
                    feeds.append((2.0 * rate / scale, a, b, piece.tocsr(),
                                  piece.getH().tocsr()))

    def unpack(x):
        return [x[offsets[k]:offsets[k + 1]].reshape(m, m) for k, m in enumerate(sizes)]

    trace_vec = np.concatenate([np.eye(m).ravel() for m in sizes])
    E = trace_vec / model.dim

    def matvec(x):
        R = unpack(x)
        out = [Kb @ Rk + Rk @ Kb.conj().T for Kb, Rk in zip(K_blocks, R)]
        for w, a, b, Lab, LabH in feeds:
            out[a] += w * (LabH.T @ (Lab @ R[b]).T).T
        return np.concatenate([o.ravel() for o in out]) + E * (trace_vec @ x)

    solvers = [_sylvester_solver(Kb - 0.5 * _SHIFT * np.eye(len(Kb))) for Kb in K_blocks]

    def precondition(x):
        return np.concatenate([solve(Rk).ravel() for solve, Rk in zip(solvers, unpack(x))])

    A = spla.LinearOperator((n, n), matvec, dtype=complex)
    P = spla.LinearOperator((n, n), precondition, dtype=complex)
    # long Krylov cycles converge far better than restarts; cap the basis at ~0.5 GB
    restart = min(n, 400, max(120, int(3e7 // n)))
    x, info = spla.gmres(A, E, M=P, rtol=rtol, atol=0.0, restart=restart, maxiter=20)
    residual = np.linalg.norm(matvec(x) - E) / np.linalg.norm(E)
    if info != 0 or residual > 1e3 * rtol:
        raise NotConverged(f"steady-state GMRES failed (info={info}, residual={residual:.2e})", [])
    rho = np.zeros((model.dim, model.dim), dtype=complex)
    for I, Rk in zip(blocks, unpack(x)):
        rho[np.ix_(I, I)] = Rk
    return rho


def steady_state_model(model: LindbladModel, method: str = "gmres") -> FockState:
    """Unique stationary state of ``model``, normalized to unit trace.

    When the model conserves a charge only the charge-diagonal blocks of the
    density matrix are solved for; the stationary state lives there.
    ``method`` is ``"gmres"`` (preconditioned Krylov) or ``"direct"`` (sparse LU,
    practical only for a few thousand unknowns).
    """
    if method == "gmres":
        rho = _steady_state_gmres(model)
    elif method == "direct":
        rho = _steady_state_direct(model)
    else:
        raise ValueError(f"unknown steady-state method {method!r}")
    rho = 0.5 * (rho + rho.conj().T)
    return model.state(rho / np.trace(rho).real)


def steady_state(system: GaussianSystem, cfg: FockConfig, method: str = "gmres") -> FockState:
    return steady_state_model(build_model(system, cfg), method)


# ---------------------------------------------------------------------------
# observables


def quadrature_moments(state: FockState, ops: Sequence[sp.spmatrix]) -> CovarianceState:
    """Means and symmetrized covariances of ``X = c + c^dag``, ``P = -i(c - c^dag)``."""
    quads = []
    for c in ops:
        cd = c.getH()
        quads.append((c + cd).tocsr())
        quads.append((-1j * (c - cd)).tocsr())
    m = len(quads)
    mean = np.array([state.expect(R).real for R in quads])
    sigma = np.empty((m, m))
    for i in range(m):
        for j in range(i, m):
            val = state.expect(quads[i] @ quads[j]).real - mean[i] * mean[j]
            sigma[i, j] = sigma[j, i] = val
    return CovarianceState(mean, sigma, state.labels)


def moments(state: FockState) -> CovarianceState:
    return quadrature_moments(state, ladder_operators(state.dims))


def truncation_check(system: GaussianSystem, cfg: FockConfig,
                     observable: Callable[[FockState], float],
                     modes: Sequence[int] | None = None, max_dim: int = MAX_DIM,
                     max_doublings: int = 6) -> tuple[tuple[int, ...], float]:
    """Double cutoffs until ``observable`` of the steady state changes by < tol.

    Only the cutoffs listed in ``modes`` are doubled (default: all).  Returns
    the smallest cutoffs whose value is confirmed by the doubled run, along
    with that value.  Raises :class:`NotConverged` if the size guard is hit.
    """
    modes = range(len(cfg.cutoffs)) if modes is None else list(modes)
    cutoffs = cfg.cutoffs
    value = observable(steady_state(system, cfg))
    history = [(cutoffs, value)]
    for _ in range(max_doublings):
        bigger = tuple(2 * c if k in modes else c for k, c in enumerate(cutoffs))
        if math.prod(c + 1 for c in bigger) > min(max_dim, MAX_DIM):
            break
        new = observable(steady_state(system, FockConfig(bigger, cfg.convergence_tol)))
        history.append((bigger, new))
        if abs(new - value) < cfg.convergence_tol:
            return cutoffs, value
        cutoffs, value = bigger, new
    raise NotConverged(
        f"observable not converged to {cfg.convergence_tol} before the dimension guard "
        f"({max_dim}); history: {history}", history)


# ---------------------------------------------------------------------------
# collective spin model


def dicke_lowering(N: int) -> sp.csr_matrix:
    """Collective lowering operator on the symmetric Dicke ladder.

    Basis index ``k`` counts atoms in ``|1>``; ``J_z = k - N/2`` and
    ``J^- |k> = sqrt(k (N - k + 1)) |k - 1>``.
    """
    k = np.arange(1, N + 1)
    return sp.diags(np.sqrt(k * (N - k + 1.0)), 1, shape=(N + 1, N + 1), format="csr",
                    dtype=complex)


def dicke_jz(N: int) -> sp.csr_matrix:
    return sp.diags(np.arange(N + 1) - N / 2.0, 0, format="csr", dtype=complex)


@dataclass(frozen=True)
class SpinModelParams:
    """Raman-coupled collective spins with the dispersive and Stark terms kept.

    ``chi_*`` are ``|g|^2 / Delta`` cavity shifts per atom and ``stark_*`` are
    ``|Omega|^2 / (4 Delta)`` light shifts.  With ``shared_mode`` the two
    cavity fields ``a`` and ``b`` are one and the same mode.
    """

    N1: int
    beta_r1: complex
    beta_s1: complex
    N2: int = 0
    beta_r2: complex = 0.0
    beta_s2: complex = 0.0
    delta_a: float = 0.0
    delta_b: float = 0.0
    chi_a1: float = 0.0
    chi_a2: float = 0.0
    chi_b1: float = 0.0
    chi_b2: float = 0.0
    stark_r1: float = 0.0
    stark_s1: float = 0.0
    stark_r2: float = 0.0
    stark_s2: float = 0.0
    kappa_a: float = 1.0
    kappa_b: float = 1.0
    shared_mode: bool = False

    @classmethod
    def single_mode_scheme(cls, N: int, beta: float, r: float, theta: float = 0.0,
                           kappa: float = 1.0, **extra) -> "SpinModelParams":
        """One ensemble, one cavity mode, collective rates ``beta`` and ``r e^{i theta} beta``."""
        root = math.sqrt(N)
        return cls(N1=N, beta_r1=beta / root, beta_s1=r * np.exp(1j * theta) * beta / root,
                   kappa_a=kappa, kappa_b=0.0, shared_mode=True, **extra)


@dataclass(frozen=True)
class SpinEnsembleConfig:
    field_cutoffs: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "field_cutoffs", tuple(int(c) for c in self.field_cutoffs))
        if any(c < 2 for c in self.field_cutoffs):
            raise ValueError("field cutoffs must be >= 2")


@dataclass
class SpinModel:
    model: LindbladModel
    params: SpinModelParams
    Jz: list[sp.csr_matrix]

    def boson_like_ops(self) -> list[sp.csr_matrix]:
        """Cavity annihilators followed by ``J_i^- / sqrt(N_i)``."""
        return self.model.mode_ops

    def moments(self, state: FockState) -> CovarianceState:
        return quadrature_moments(state, self.model.mode_ops)

    def steady_state(self) -> FockState:
        return steady_state_model(self.model)

    def excitations(self, state: FockState, ensemble: int = 0) -> float:
        """Mean number of atoms in ``|1>`` (``J_z + N/2``)."""
        N = (self.params.N1, self.params.N2)[ensemble]
        return state.expect(self.Jz[ensemble]).real + N / 2.0


def build_spin_model(p: SpinModelParams, cfg: SpinEnsembleConfig) -> SpinModel:
    n_fields = 1 if p.shared_mode else 2
    if len(cfg.field_cutoffs) != n_fields:
        raise ValueError(f"expected {n_fields} field cutoffs, got {len(cfg.field_cutoffs)}")
    ensembles = [p.N1] + ([p.N2] if p.N2 > 0 else [])
    dims = tuple(c + 1 for c in cfg.field_cutoffs) + tuple(N + 1 for N in ensembles)
    total = math.prod(dims)
    if total > MAX_DIM:
        raise TruncationError(f"spin model dimension {total} exceeds the guard of {MAX_DIM}")

    a = embed(destroy(dims[0]), 0, dims)
    b = a if p.shared_mode else embed(destroy(dims[1]), 1, dims)
    off = n_fields
    Jm = [embed(dicke_lowering(N), off + k, dims) for k, N in enumerate(ensembles)]
    Jz = [embed(dicke_jz(N), off + k, dims) for k, N in enumerate(ensembles)]
    eye = sp.identity(total, format="csr", dtype=complex)
    zero = sp.csr_matrix((total, total), dtype=complex)
    Jm2 = Jm[1] if len(Jm) > 1 else zero
    Jz2 = Jz[1] if len(Jz) > 1 else zero
    N1, N2 = p.N1, p.N2

    ada = a.getH() @ a
    bdb = b.getH() @ b
    shift_a = p.delta_a * eye + p.chi_a1 * (N1 / 2 * eye - Jz[0]) + p.chi_a2 * (N2 / 2 * eye + Jz2)
    shift_b = p.delta_b * eye + p.chi_b1 * (N1 / 2 * eye + Jz[0]) + p.chi_b2 * (N2 / 2 * eye - Jz2)
    H = shift_a @ ada + shift_b @ bdb
    H = H + p.stark_r1 * (N1 / 2 * eye + Jz[0]) + p.stark_s1 * (N1 / 2 * eye - Jz[0])
    H = H + p.stark_r2 * (N2 / 2 * eye + Jz2) + p.stark_s2 * (N2 / 2 * eye - Jz2)
    coupling = a.getH() @ (p.beta_r1 * Jm[0] + p.beta_r2 * Jm2.getH()) \
        + b.getH() @ (p.beta_s1 * Jm[0].getH() + p.beta_s2 * Jm2)
    H = (H + coupling + coupling.getH()).tocsr()
    H = 0.5 * (H + H.getH())

    if p.shared_mode:
        jumps = [(p.kappa_a + p.kappa_b, a)]
        labels = ("a",)
        field_ops = [a]
    else:
        jumps = [(p.kappa_a, a), (p.kappa_b, b)]
        labels = ("a", "b")
        field_ops = [a, b]
    labels = labels + tuple(f"c{k + 1}" for k in range(len(ensembles)))
    ops = field_ops + [J / math.sqrt(N) for J, N in zip(Jm, ensembles)]
    # each coupling term moves one photon and one atomic excitation, so the
    # parity of (photons + excitations) is conserved by H and flipped by the jumps
    parity = np.indices(dims).reshape(len(dims), -1).sum(axis=0) % 2
    model = LindbladModel(H=H.tocsr(), jumps=jumps, dims=dims, labels=labels,
                          mode_ops=[o.tocsr() for o in ops], basis_charge=parity)
    return SpinModel(model, p, Jz)
