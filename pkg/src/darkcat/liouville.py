"""Liouville-space generators, colored noise embedding and time evolution.

Operators are vectorized by stacking columns, vec(A X B) = (B^T kron A) vec(X).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eig, expm

log = logging.getLogger(__name__)


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, n: Optional[int] = None) -> np.ndarray:
    n = n or int(round(np.sqrt(v.size)))
    return np.asarray(v).reshape(n, n, order="F")


@dataclass(frozen=True)
class Superoperator:
    matrix: np.ndarray
    dim: int

    def __post_init__(self):
        if self.matrix.shape != (self.dim ** 2, self.dim ** 2):
            raise ValueError(f"superoperator shape {self.matrix.shape} does not match dim {self.dim}")

    def __add__(self, other: "Superoperator") -> "Superoperator":
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        return Superoperator(self.matrix + other.matrix, self.dim)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(rho), self.dim)

    def trace_defect(self) -> float:
        """|vec(1)^T L| relative to |L|, zero for trace-preserving generators."""
        row = vec(np.eye(self.dim)) @ self.matrix
        return float(np.linalg.norm(row) / max(np.linalg.norm(self.matrix), 1e-300))


@dataclass(frozen=True)
class JumpChannel:
    op: np.ndarray
    rate: float = 1.0

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("jump rate must be non-negative")


@dataclass(frozen=True)
class OUNoise:
    """Ornstein-Uhlenbeck amplitude noise with white-noise strength kappa."""

    kappa: float
    lam: float
    n_x: int = 3

    def __post_init__(self):
        if self.kappa <= 0 or self.lam <= 0:
            raise ValueError("kappa and lambda must be positive")
        if self.n_x != 3:
            raise ValueError("only the three-point discretization is available")

    @property
    def generator(self) -> np.ndarray:
        return self.lam * np.array([[-1.0, 0.5, 0.0], [1.0, -1.0, 1.0], [0.0, 0.5, -1.0]])

    @property
    def x_values(self) -> np.ndarray:
        return np.sqrt(self.kappa * self.lam) * np.array([-1.0, 0.0, 1.0])

    @property
    def p_ss(self) -> np.ndarray:
        return np.array([0.25, 0.5, 0.25])


def _square(a: np.ndarray) -> int:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a.shape[0]


def commutator_super(H: np.ndarray) -> np.ndarray:
    """Matrix of X -> [H, X]."""
    n = _square(H)
    eye = np.eye(n)
    return np.kron(eye, H) - np.kron(H.T, eye)


def vectorize_hamiltonian(H: np.ndarray) -> Superoperator:
    n = _square(H)
    return Superoperator(-1j * commutator_super(np.asarray(H, dtype=complex)), n)


def vectorize_dissipator(ch: JumpChannel) -> Superoperator:
    a = np.asarray(ch.op, dtype=complex)
    n = _square(a)
    eye = np.eye(n)
    ada = a.conj().T @ a
    D = np.kron(a.conj(), a) - 0.5 * (np.kron(ada.T, eye) + np.kron(eye, ada))
    return Superoperator(ch.rate * D, n)


def lindbladian(H: np.ndarray, channels: Sequence[JumpChannel] = ()) -> Superoperator:
    L = vectorize_hamiltonian(H)
    for ch in channels:
        if ch.rate:
            L = L + vectorize_dissipator(ch)
    return L


def lindblad_rhs_matrix(H: np.ndarray, channels: Sequence[JumpChannel], rho: np.ndarray) -> np.ndarray:
    """Operator-form -i[H, rho] + sum_k rate D[a_k] rho (reference implementation)."""
    out = -1j * (H @ rho - rho @ H)
    for ch in channels:
        a = ch.op
        ad = a.conj().T
        out = out + ch.rate * (a @ rho @ ad - 0.5 * (ad @ a @ rho + rho @ ad @ a))
    return out


def white_noise_lindbladian(L: Superoperator, noise_op: np.ndarray, kappa: float) -> Superoperator:
    if kappa == 0:
        return L
    return L + vectorize_dissipator(JumpChannel(noise_op, kappa))


@dataclass(frozen=True)
class OUSystem:
    """Generator acting on the stacked marginals u(X_-1), u(X_0), u(X_+1)."""

    matrix: np.ndarray
    dim: int
    noise: OUNoise


def build_ou3_system(L: Superoperator, noise_op: np.ndarray, noise: OUNoise) -> OUSystem:
    """Colored-noise generator; the noise enters as the perturbation X(t) * noise_op."""
    O = np.asarray(noise_op, dtype=complex)
    if not np.allclose(O, O.conj().T, atol=1e-12):
        raise ValueError("noise operator must be Hermitian")
    m = L.dim ** 2
    G = (np.kron(noise.generator, np.eye(m))
         - 1j * np.kron(np.diag(noise.x_values), commutator_super(O))
         + np.kron(np.eye(3), L.matrix))
    return OUSystem(G, L.dim, noise)


def ou_initial(rho0: np.ndarray, noise: Optional[OUNoise] = None) -> np.ndarray:
    """Marginals at t=0: each noise value weighted by its stationary probability."""
    p = np.array([0.25, 0.5, 0.25]) if noise is None else noise.p_ss
    return np.kron(p, vec(rho0))


def ou_average(u: np.ndarray, n: int) -> np.ndarray:
    """Noise-averaged density matrix from stacked marginals (last axis or 1-D)."""
    m = n * n
    u = np.asarray(u)
    avg = u[..., :m] + u[..., m:2 * m] + u[..., 2 * m:]
    return avg


class IntegrationError(RuntimeError):
    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


Generator = Union[np.ndarray, Superoperator, "OUSystem", Callable]


def evolve(G: Generator, state0: np.ndarray, times: Sequence[float], method: str = "rk",
           breakpoints: Sequence[float] = (), rtol: float = 1e-10, atol: float = 1e-12,
           t0: float = 0.0) -> np.ndarray:
    """States at the requested times for dy/dt = G y.

    ``G`` is a matrix, a Superoperator, or a callable ``rhs(t, y)`` for
    time-dependent problems. ``state0`` may be a vector or a stack of column
    vectors evolved together. Returns an array with a leading time axis.
    ``method="expm"`` uses dense matrix exponentials (time-independent G only).
    Integration restarts at each breakpoint so ramp kinks are not stepped over.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(np.diff(times) < 0) or (times.size and times[0] < t0):
        raise ValueError("times must be increasing and start at or after t0")
    y0 = np.asarray(state0, dtype=complex)
    shape = y0.shape
    if isinstance(G, (Superoperator, OUSystem)):
        G = G.matrix
    if callable(G):
        if method != "rk":
            raise ValueError("expm propagation requires a time-independent generator")
        user_rhs = G

        def rhs(t, y):
            return user_rhs(t, y.reshape(shape)).reshape(-1)
    else:
        Gm = np.asarray(G)
        if method == "expm":
            return _evolve_expm(Gm, y0, times, t0)

        def rhs(t, y):
            return (Gm @ y.reshape(shape)).reshape(-1)

    out = np.empty((times.size,) + shape, dtype=complex)
    out[times == t0] = y0
    if not times.size or times[-1] == t0:
        return out
    t_end = float(times[-1])
    edges = sorted({t0, t_end, *[float(b) for b in breakpoints if t0 < b < t_end]})
    y = y0.reshape(-1)
    for a, b in zip(edges[:-1], edges[1:]):
        sel = np.flatnonzero((times > a) & (times <= b))
        t_eval = np.unique(np.r_[times[sel], b])
        sol = solve_ivp(rhs, (a, b), y, method="DOP853", rtol=rtol, atol=atol, t_eval=t_eval)
        if sol.status != 0:
            raise IntegrationError(f"integration failed on [{a}, {b}]: {sol.message}",
                                   {"t_fail": float(sol.t[-1]) if len(sol.t) else a,
                                    "nfev": int(sol.nfev)})
        idx = np.searchsorted(t_eval, times[sel])
        for i, k in zip(sel, idx):
            out[i] = sol.y[:, k].reshape(shape)
        y = sol.y[:, -1]
    return out


def _evolve_expm(G: np.ndarray, y0: np.ndarray, times: np.ndarray, t0: float) -> np.ndarray:
    out = np.empty((times.size,) + y0.shape, dtype=complex)
    y = y0
    t_prev = t0
    cache = {}
    for i, t in enumerate(times):
        dt = float(t - t_prev)
        if dt > 0:
            key = round(dt, 14)
            if key not in cache:
                cache[key] = expm(G * dt)
            y = cache[key] @ y
        out[i] = y
        t_prev = t
    return out


@dataclass(frozen=True)
class Spectrum:
    values: np.ndarray
    right: np.ndarray
    left: np.ndarray


def spectrum(L: Union[Superoperator, np.ndarray]) -> Spectrum:
    M = L.matrix if isinstance(L, Superoperator) else np.asarray(L)
    w, vl, vr = eig(M, left=True, right=True)
    order = np.argsort(-w.real)
    return Spectrum(w[order], vr[:, order], vl[:, order])


def zero_tolerance(L: Union[Superoperator, np.ndarray]) -> float:
    M = L.matrix if isinstance(L, Superoperator) else np.asarray(L)
    return 1e-9 * np.linalg.norm(M, 2)


def dissipative_gap(L: Union[Superoperator, np.ndarray], values: Optional[np.ndarray] = None) -> float:
    """Smallest non-zero decay rate -Re(lambda) of the generator."""
    w = spectrum(L).values if values is None else values
    tol = zero_tolerance(L)
    decaying = -w.real[w.real < -tol]
    if decaying.size == 0:
        raise ValueError("generator has no decaying modes")
    return float(decaying.min())


def zero_multiplicity(L: Union[Superoperator, np.ndarray], values: Optional[np.ndarray] = None) -> int:
    w = spectrum(L).values if values is None else values
    return int(np.sum(np.abs(w) < zero_tolerance(L)))


def operator_rhs(hamiltonian: Callable[[float], np.ndarray], channels: Sequence[JumpChannel] = (),
                 noise_op: Optional[np.ndarray] = None, noise: Optional[OUNoise] = None) -> Callable:
    """Right-hand side in operator form for a time-dependent Lindblad problem.

    The state has shape (b, k, n, n): b = 3 noise marginals (or 1 without
    noise) and k operators evolved together. Equivalent to the vectorized
    generator but avoids building n^2 x n^2 matrices at every step.
    """
    ops = [(np.sqrt(ch.rate) * np.asarray(ch.op, dtype=complex)) for ch in channels if ch.rate]
    ops_d = [a.conj().T for a in ops]
    decay = sum(ad @ a for a, ad in zip(ops, ops_d)) if ops else None
    if noise is not None:
        lam_mat = noise.generator
        xs = noise.x_values.reshape(3, 1, 1, 1)
        O = np.asarray(noise_op, dtype=complex)

    def rhs(t, u):
        H = hamiltonian(t)
        Heff = H - 0.5j * decay if decay is not None else H
        out = -1j * (Heff @ u - u @ Heff.conj().T)
        for a, ad in zip(ops, ops_d):
            out += a @ u @ ad
        if noise is not None:
            out += np.tensordot(lam_mat, u, axes=(1, 0))
            out += -1j * xs * (O @ u - u @ O)
        return out

    return rhs
