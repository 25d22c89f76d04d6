"""Pauli transfer matrices over the cat-qubit basis and rate/channel estimates.

The operator basis is E = (1~, sx~, sy~, sz~) with
sx~ = |0~><1~| + |1~><0~|, sy~ = -i(|1~><0~| - |0~><1~|), sz~ = |1~><1~| - |0~><0~|.
Relative to the usual Paulis in the (|0~>, |1~>) basis these are (X, -Y, -Z).
R_nm(t) = tr[E_n rho_m(t)] / 2 with rho_m(t) the evolution of E_m.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize_scalar

from .liouville import OUSystem, Superoperator, evolve, ou_average, unvec, vec

log = logging.getLogger(__name__)

LABELS = ("I", "X", "Y", "Z")

PAULI_2x2 = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, 1j], [-1j, 0]], dtype=complex),
    np.array([[-1, 0], [0, 1]], dtype=complex),
)


@dataclass(frozen=True)
class LogicalBasis:
    ket0: np.ndarray
    ket1: np.ndarray

    @property
    def dim(self) -> int:
        return self.ket0.size

    @property
    def isometry(self) -> np.ndarray:
        return np.column_stack([self.ket0, self.ket1])

    def lift(self, op2: np.ndarray) -> np.ndarray:
        V = self.isometry
        return V @ op2 @ V.conj().T

    @property
    def ops(self) -> List[np.ndarray]:
        return [self.lift(P) for P in PAULI_2x2]

    def restrict(self, op: np.ndarray) -> np.ndarray:
        V = self.isometry
        return V.conj().T @ op @ V


@dataclass(frozen=True)
class PTM:
    r: np.ndarray
    label: object = None

    @property
    def diag(self) -> np.ndarray:
        return np.diag(self.r).copy()

    def __getitem__(self, key: str) -> float:
        """Element by Pauli labels, e.g. ``ptm["XX"]``."""
        return float(self.r[LABELS.index(key[0]), LABELS.index(key[1])])


# An evolver maps a stack of operators (k, n, n) and times to (len(times), k, n, n).
Evolver = Callable[[np.ndarray, Sequence[float]], np.ndarray]


def lindblad_evolver(L: Superoperator, method: str = "expm") -> Evolver:
    def run(ops, times):
        ops = np.asarray(ops)
        cols = np.stack([vec(o) for o in ops], axis=1)
        traj = evolve(L, cols, times, method=method)
        return np.stack([[unvec(traj[i][:, k], L.dim) for k in range(len(ops))]
                         for i in range(len(times))])
    return run


def ou_evolver(system: OUSystem, method: str = "expm") -> Evolver:
    n = system.dim

    def run(ops, times):
        ops = np.asarray(ops)
        p = system.noise.p_ss
        cols = np.stack([np.kron(p, vec(o)) for o in ops], axis=1)
        traj = evolve(system, cols, times, method=method)
        return np.stack([[unvec(ou_average(traj[i][:, k], n), n) for k in range(len(ops))]
                         for i in range(len(times))])
    return run


def ptm_from_operators(evolved: Sequence[np.ndarray], basis: LogicalBasis,
                       imag_tol: float = 1e-9, label=None) -> PTM:
    E = basis.ops
    R = np.array([[np.trace(En @ rho) / 2 for rho in evolved] for En in E])
    if np.max(np.abs(R.imag)) > imag_tol:
        raise ValueError(f"PTM has imaginary residue {np.max(np.abs(R.imag)):.3e}")
    return PTM(R.real, label)


def compute_ptm(evolver: Evolver, basis: LogicalBasis, times) -> List[PTM]:
    """PTMs at each requested time (a single time gives a one-element list)."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    traj = evolver(np.stack(basis.ops), times)
    return [ptm_from_operators(traj[i], basis, label=float(t)) for i, t in enumerate(times)]


def ptm_from_states(evolved_states: Sequence[np.ndarray], basis: LogicalBasis, label=None) -> PTM:
    """PTM from the evolutions of |0~>, |1~>, |+~>, |+i~> by linear inversion.

    With E the Pauli set above, |+i~> is (|0~> - i|1~>)/sqrt(2), the +1 state of sy~.
    """
    r0, r1, rp, ry = evolved_states
    ident = r0 + r1
    ez = r1 - r0
    ex = 2 * rp - ident
    ey = 2 * ry - ident
    return ptm_from_operators([ident, ex, ey, ez], basis, label=label)


def probe_states(basis: LogicalBasis) -> List[np.ndarray]:
    k0, k1 = basis.ket0, basis.ket1
    kets = [k0, k1, (k0 + k1) / math.sqrt(2), (k0 - 1j * k1) / math.sqrt(2)]
    return [np.outer(k, k.conj()) for k in kets]


def ptm_of_unitary(U2: np.ndarray) -> np.ndarray:
    """4x4 PTM of a 2x2 logical unitary in the E basis."""
    return np.array([[np.trace(Pn @ U2 @ Pm @ U2.conj().T).real / 2 for Pm in PAULI_2x2]
                     for Pn in PAULI_2x2])


def logical_z_rotation(alpha: float) -> np.ndarray:
    """U_z(alpha) = exp(-i alpha sz~ / 2) as a 2x2 matrix on (|0~>, |1~>)."""
    return expm(-0.5j * alpha * PAULI_2x2[3])


def logical_x_rotation(alpha: float) -> np.ndarray:
    return expm(-0.5j * alpha * PAULI_2x2[1])


def r_ideal(alpha: float) -> np.ndarray:
    """PTM of the ideal logical z-rotation by alpha."""
    return ptm_of_unitary(logical_z_rotation(alpha))


# --- rates ------------------------------------------------------------------

@dataclass(frozen=True)
class RateEstimate:
    slopes: np.ndarray        # d R_nn / dt for n = I, X, Y, Z
    windows: tuple            # (t_start, t_stop) used for each diagonal
    r_squared: np.ndarray
    half_mismatch: np.ndarray
    certified: np.ndarray     # per diagonal: passed the linearity test

    def normalized(self, kappa: float) -> np.ndarray:
        return self.slopes / kappa


def _fit(t, y):
    A = np.column_stack([t, np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return coef[0], r2


def fit_window(times: np.ndarray, diags: np.ndarray, flat_tol: float = 1e-8):
    """Slope, R^2 and half-window slope mismatch for each diagonal column.

    Columns that move by less than ``flat_tol`` are reported as certified flat.
    """
    times = np.asarray(times)
    if times.size < 5:
        raise ValueError("rate fit needs at least 5 samples")
    half = times.size // 2
    slopes, r2s, mism = [], [], []
    for col in np.asarray(diags).T:
        s, r2 = _fit(times, col)
        if abs(col.max() - col.min()) < flat_tol:
            slopes.append(s), r2s.append(1.0), mism.append(0.0)
            continue
        s1, _ = _fit(times[: half + 1], col[: half + 1])
        s2, _ = _fit(times[half:], col[half:])
        slopes.append(s), r2s.append(r2), mism.append(abs(s1 - s2) / max(abs(s), 1e-300))
    return np.array(slopes), np.array(r2s), np.array(mism)


def error_rates(evolver: Evolver, basis: LogicalBasis, kappa: float, n_samples: int = 9,
                max_shifts: int = 14, r2_min: float = 0.99, mismatch_max: float = 0.02,
                t_center: Optional[float] = None) -> RateEstimate:
    """Slopes of the PTM diagonals in their linear regime.

    The first window is centred on t kappa / (2 pi) = 1 and spans a factor of
    two in time. A diagonal is accepted in the first window where R^2 exceeds
    ``r2_min`` and the slopes fitted on the two window halves agree to
    ``mismatch_max``; otherwise its window moves earlier by factors of two.
    """
    tc = 2 * math.pi / kappa if t_center is None else t_center
    chosen = [None] * 4
    best = [None] * 4
    for k in range(max_shifts + 1):
        c = tc / 2 ** k
        t = np.linspace(c / math.sqrt(2), c * math.sqrt(2), n_samples)
        diags = np.array([p.diag for p in compute_ptm(evolver, basis, t)])
        slopes, r2, mism = fit_window(t, diags)
        for j in range(4):
            if chosen[j] is not None:
                continue
            entry = (slopes[j], (float(t[0]), float(t[-1])), r2[j], mism[j], k)
            if r2[j] > r2_min and mism[j] < mismatch_max:
                chosen[j] = entry
                if k:
                    log.info("R_%s%s window shifted %d octave(s) earlier", LABELS[j], LABELS[j], k)
            elif r2[j] > r2_min and (best[j] is None or mism[j] < best[j][3]):
                best[j] = entry
        if all(e is not None for e in chosen):
            break
    certified = np.array([e is not None for e in chosen])
    for j in range(4):
        if chosen[j] is None:
            if best[j] is None:
                raise ValueError(f"no linear window found for R_{LABELS[j]}{LABELS[j]}")
            log.warning("R_%s%s never met the linearity test; using window %s",
                        LABELS[j], LABELS[j], best[j][1])
            chosen[j] = best[j]
    return RateEstimate(np.array([e[0] for e in chosen]), tuple(e[1] for e in chosen),
                        np.array([e[2] for e in chosen]), np.array([e[3] for e in chosen]),
                        certified)


# --- gate channels ----------------------------------------------------------------

def _offdiag_norm(M: np.ndarray) -> float:
    return float(np.linalg.norm(M - np.diag(np.diag(M))))


def gate_error_channel(ptm: PTM, alpha_family: Callable[[float], np.ndarray] = r_ideal,
                       grid: int = 721, xtol: float = 1e-10):
    """Residual channel R R_ideal(alpha*)^-1 with alpha* minimizing its off-diagonals.

    Returns (residual PTM, alpha* wrapped to [-pi, pi)).
    """
    R = ptm.r

    def cost(a):
        return _offdiag_norm(R @ np.linalg.inv(alpha_family(a)))

    grid_a = np.linspace(-math.pi, math.pi, grid)
    vals = [cost(a) for a in grid_a]
    k = int(np.argmin(vals))
    h = grid_a[1] - grid_a[0]
    res = minimize_scalar(cost, bracket=(grid_a[k] - h, grid_a[k], grid_a[k] + h),
                          method="golden", options={"xtol": xtol})
    # alpha and alpha + pi leave the same off-diagonal weight (they differ by a
    # diagonal pi rotation); keep the branch whose residual is closest to identity
    cands = [float((a + math.pi) % (2 * math.pi) - math.pi) for a in (res.x, res.x + math.pi)]
    resid = [R @ np.linalg.inv(alpha_family(a)) for a in cands]
    k = int(np.argmax([np.trace(r) for r in resid]))
    return PTM(resid[k], ptm.label), cands[k]


def worst_case_infidelity(residual: PTM) -> float:
    r = residual.r
    if (1 - r[3, 3]) > (1 - r[1, 1]) + 1e-12:
        log.warning("channel is not bit-flip biased: 1-Rzz=%.3g, 1-Rxx=%.3g", 1 - r[3, 3], 1 - r[1, 1])
    return float((1 - r[1, 1]) / 2)
