"""Autonomous stabilization of the cat qubit by a +-x drive plus spontaneous emission.

The logical states are the stretched x-states of the ground manifold,
|0~> = exp(-i pi/2 Fy)|Fg, Fg> and |1~> = exp(-i pi/2 Fy)|Fg, -Fg>.
All x-basis states are taken as |F, m>_x = exp(-i pi/2 Fy)|F, m>.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List

import numpy as np
from scipy.linalg import expm, null_space

from .dark_states import Layout, coupling_hamiltonian, raising_operator
from .liouville import JumpChannel, Superoperator, lindbladian, spectrum, unvec, vec, dissipative_gap
from .spin import HalfInt, exp_fy

MODES = ("all_three", "sigma_pm_only")


@dataclass(frozen=True)
class StabilizationConfig:
    Fg: HalfInt = field(default_factory=lambda: HalfInt(2))
    omega: float = 1.0
    gamma: float = 1.0
    polarization_mode: str = "all_three"
    delta_big: float = 0.0
    delta_small: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "Fg", HalfInt.of(self.Fg))
        if self.omega <= 0 or self.gamma <= 0:
            raise ValueError("omega and gamma must be positive")
        if self.polarization_mode not in MODES:
            raise ValueError(f"polarization_mode must be one of {MODES}")

    @property
    def rabi_norm(self) -> float:
        """|Omega| of the +-x drive, twice the per-component scale omega."""
        return 2 * self.omega


def stabilization_drive(omega: float) -> tuple:
    """O^{+1} = -O^{-1} = -sqrt(2) omega, O^0 = 0: dark states along +-x."""
    return (-math.sqrt(2) * omega, 0.0, math.sqrt(2) * omega)


def x_basis(F) -> np.ndarray:
    """Columns are |F, m>_x for m = +F ... -F."""
    return exp_fy(math.pi / 2, F)


def x_basis_full(Fg) -> np.ndarray:
    lay = Layout(HalfInt.of(Fg))
    U = np.zeros((lay.n, lay.n), dtype=complex)
    U[lay.g, lay.g] = x_basis(lay.Fg)
    U[lay.e, lay.e] = x_basis(lay.Fe)
    return U


def logical_states(Fg) -> tuple:
    """(|0~>, |1~>) embedded in the ground + excited space."""
    lay = Layout(HalfInt.of(Fg))
    X = x_basis(lay.Fg)
    return lay.embed_g(X[:, 0]), lay.embed_g(X[:, -1])


def stabilization_hamiltonian(cfg: StabilizationConfig) -> np.ndarray:
    lay = Layout(cfg.Fg)
    H = coupling_hamiltonian(stabilization_drive(cfg.omega), cfg.Fg)
    return H - cfg.delta_big * lay.projector_e() - cfg.delta_small * lay.spin_full("fz", "e")


def decay_channels(Fg, gamma: float, mode: str = "all_three") -> List[JumpChannel]:
    qs = (1, 0, -1) if mode == "all_three" else (1, -1)
    return [JumpChannel(raising_operator(Fg, q).conj().T, gamma) for q in qs]


def stabilization_lindbladian(cfg: StabilizationConfig) -> Superoperator:
    return lindbladian(stabilization_hamiltonian(cfg),
                       decay_channels(cfg.Fg, cfg.gamma, cfg.polarization_mode))


def parity_operator(Fg) -> np.ndarray:
    """exp(i pi (F_gz + F_ez + P_e - Fg)), diagonal with entries +-1."""
    lay = Layout(HalfInt.of(Fg))
    phase = np.r_[lay.Fg.ms(), lay.Fe.ms() + 1] - lay.Fg.value
    return np.diag(np.exp(1j * math.pi * phase)).round(12)


# --- closed-form coefficients -----------------------------------------------

def _G_values(Fg: HalfInt) -> List[Fraction]:
    """G(m) for m = -Fg ... Fg-1 as exact fractions."""
    F = Fraction(Fg.twice, 2)
    out = [Fraction(1)]
    for k in range(1, Fg.twice):
        m = -F + k
        out.append(out[-1] * (F - m + 1) * (F - m) / ((F + m + 1) * (F + m)))
    return out


def g_sum(Fg) -> Fraction:
    return sum(_G_values(HalfInt.of(Fg)), Fraction(0))


def g_sum_closed_form(Fg) -> int:
    Fg = HalfInt.of(Fg)
    f = math.factorial
    num, den = f(2 * Fg.twice), f(Fg.twice + 1) * f(Fg.twice)
    if num % den:
        raise ArithmeticError("closed-form normalization is not an integer")
    return num // den


def g_sum_asymptotic(Fg) -> float:
    F = HalfInt.of(Fg).value
    return 16.0 ** F / (F ** 1.5 * math.sqrt(8 * math.pi))


def am_coefficients(Fg) -> Dict[int, Fraction]:
    """a_m keyed by 2m for m = 1-Fg ... Fg-1, exact."""
    Fg = HalfInt.of(Fg)
    G = _G_values(Fg)
    total = sum(G, Fraction(0))
    out, partial = {}, Fraction(0)
    for k in range(1, Fg.twice):
        partial += G[k - 1]
        out[-Fg.twice + 2 * k] = partial / total
    return out


@dataclass(frozen=True)
class ConservedSet:
    j00: np.ndarray
    j01: np.ndarray
    j10: np.ndarray
    j11: np.ndarray
    a_m: Dict[int, float]
    source: str

    @property
    def as_list(self) -> list:
        return [self.j00, self.j01, self.j10, self.j11]


def _assemble(Fg: HalfInt, am: Dict[int, Fraction], coherent: bool, source: str) -> ConservedSet:
    lay = Layout(Fg)
    U = x_basis_full(Fg)
    # diagonal of J00 in the x basis, ordered like the full space
    d = np.zeros(lay.n)
    d[0] = 1.0
    for tm, a in am.items():
        d[(Fg.twice - tm) // 2] = float(a)
        d[lay.ng + (lay.Fe.twice - tm) // 2] = float(a)
    j00 = U @ np.diag(d) @ U.conj().T
    k01 = np.zeros((lay.n, lay.n))
    k01[0, lay.ng - 1] = 1.0
    if coherent:
        for tm, a in am.items():
            k01[(Fg.twice - tm) // 2, (Fg.twice + tm) // 2] = float(a)
            k01[lay.ng + (lay.Fe.twice - tm) // 2, lay.ng + (lay.Fe.twice + tm) // 2] = float(a)
    j01 = U @ k01 @ U.conj().T
    return ConservedSet(j00, j01, j01.conj().T, np.eye(lay.n) - j00,
                        {tm: float(a) for tm, a in am.items()}, source)


def conserved_analytic(Fg) -> ConservedSet:
    """Left zero modes of the stabilization generator from the closed-form a_m."""
    Fg = HalfInt.of(Fg)
    return _assemble(Fg, am_coefficients(Fg), coherent=False, source="analytic")


def engineered_conserved(Fg) -> ConservedSet:
    """Zeroth-order conserved set when only sigma+- decay is kept."""
    Fg = HalfInt.of(Fg)
    return _assemble(Fg, am_coefficients(Fg), coherent=True, source="analytic-engineered")


def steady_operators(Fg) -> list:
    z0, z1 = logical_states(Fg)
    return [np.outer(a, b.conj()) for a, b in ((z0, z0), (z0, z1), (z1, z0), (z1, z1))]


def conserved_numeric(L: Superoperator, Fg) -> ConservedSet:
    """Left null space of L, gauge-fixed by biorthogonality to the logical dyads."""
    Fg = HalfInt.of(Fg)
    N = null_space(L.matrix.conj().T, rcond=1e-10)
    if N.shape[1] != 4:
        raise ValueError(f"expected 4 conserved quantities, found {N.shape[1]}")
    S = np.column_stack([vec(s) for s in steady_operators(Fg)])
    A = np.linalg.inv(N.conj().T @ S).conj().T
    J = N @ A
    js = [unvec(J[:, k], L.dim) for k in range(4)]
    jx = x_basis_full(Fg).conj().T @ js[0] @ x_basis_full(Fg)
    am = {tm: float(jx[(Fg.twice - tm) // 2, (Fg.twice - tm) // 2].real)
          for tm in range(-Fg.twice + 2, Fg.twice - 1, 2)}
    return ConservedSet(*js, am, "numeric")


def project_logical(rho: np.ndarray, cs: ConservedSet) -> np.ndarray:
    """2x2 matrix c_{mu nu} = tr(J_{mu nu}^dagger rho) in the {|0~>, |1~>} basis."""
    c = [np.vdot(J, rho) for J in cs.as_list]  # vdot conjugates its first argument
    return np.array([[c[0], c[1]], [c[2], c[3]]])


def embed_logical(c: np.ndarray, Fg) -> np.ndarray:
    z0, z1 = logical_states(Fg)
    V = np.column_stack([z0, z1])
    return V @ c @ V.conj().T


# --- scans and first-order rates -----------------------------------------------

def dissipative_gap_scan(configs: Iterable[StabilizationConfig]) -> List[dict]:
    rows = []
    for cfg in configs:
        w = spectrum(stabilization_lindbladian(cfg)).values
        gap = dissipative_gap(stabilization_lindbladian(cfg), w)
        rows.append({"Fg": cfg.Fg.value, "omega": cfg.omega, "gamma": cfg.gamma,
                     "rabi_norm": cfg.rabi_norm, "gap": gap,
                     "reference": cfg.gamma / (cfg.Fg.twice + 1)})
    return rows


@dataclass(frozen=True)
class BitflipRate:
    exact: float
    asymptotic: float


def bitflip_rate_firstorder(Fg, kappa: float) -> BitflipRate:
    """dR_zz/dt to first order in kappa for white Fz noise under stabilization."""
    Fg = HalfInt.of(Fg)
    a_low = am_coefficients(Fg)[-Fg.twice + 2] if Fg.twice > 1 else Fraction(0)
    F = Fg.value
    return BitflipRate(-kappa * F * float(a_low),
                       -kappa * F ** 2.5 * math.sqrt(8 * math.pi) / 16.0 ** F)


def kick_and_restabilize(Fg, generator_mode: str, omega: float = 1.0, gamma: float = 0.01,
                         kick: float = 0.3) -> float:
    """|c01| after exp(-i kick Fz) acts on |+~> and the system relaxes.

    Relaxation is evaluated through the numerically exact conserved quantities
    of the generator, which is the t -> infinity limit of the evolution.
    """
    Fg = HalfInt.of(Fg)
    cfg = StabilizationConfig(Fg, omega, gamma, generator_mode)
    cs = conserved_numeric(stabilization_lindbladian(cfg), Fg)
    z0, z1 = logical_states(Fg)
    lay = Layout(Fg)
    psi = expm(-1j * kick * lay.spin_full("fz", "g")) @ ((z0 + z1) / math.sqrt(2))
    return float(abs(project_logical(np.outer(psi, psi.conj()), cs)[0, 1]))
