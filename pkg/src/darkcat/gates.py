"""Single-qubit operations from slowly varied drives.

Angle-based profiles steer the dark SCS pair along (beta(t), alpha(t)) and
its antipode. Amplitude-based profiles (state preparation, the collision
gate) specify the spherical drive components directly.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Tuple

import numpy as np

from .dark_states import Layout, decay_operators, drive_from_angles, raising_operator
from .liouville import JumpChannel, OUNoise, evolve, operator_rhs
from .ptm import PAULI_2x2, PTM, gate_error_channel, ptm_of_unitary, r_ideal, worst_case_infidelity
from .spin import HalfInt
from .stabilization import conserved_analytic, logical_states, project_logical

log = logging.getLogger(__name__)

Spherical = Tuple[complex, complex, complex]


@dataclass(frozen=True)
class RampProfile:
    """Time-dependent drive on [0, T].

    Either ``alpha``/``beta`` (with derivatives) describe the dark-state axis
    at fixed amplitude ``omega``, or ``spherical`` gives the drive directly.
    """

    T: float
    omega: float
    alpha: Optional[Callable[[float], float]] = None
    beta: Optional[Callable[[float], float]] = None
    dalpha: Optional[Callable[[float], float]] = None
    dbeta: Optional[Callable[[float], float]] = None
    spherical: Optional[Callable[[float], Spherical]] = None
    breakpoints: tuple = ()
    kind: str = ""
    cd_printed: Optional[Callable[[float], np.ndarray]] = None

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError("gate time must be positive")
        if self.spherical is None and (self.alpha is None or self.beta is None):
            raise ValueError("profile needs either angles or spherical components")

    @property
    def angle_based(self) -> bool:
        return self.spherical is None

    def drive(self, t: float) -> Spherical:
        if self.spherical is not None:
            return self.spherical(t)
        return drive_from_angles(self.omega, self.beta(t), self.alpha(t))


# --- profiles -------------------------------------------------------------------

def _piecewise(T: float, edges, funcs):
    """Select funcs[i] on [edges[i], edges[i+1]) in units of T."""
    def f(t):
        s = t / T
        for i in range(len(funcs) - 1, -1, -1):
            if s >= edges[i]:
                return funcs[i](s)
        return funcs[0](s)
    return f


def uz_profile(T: float, omega: float = 1.0, alpha1: float = 5 * math.pi / 26,
               beta1: float = 5 * math.pi / 78) -> RampProfile:
    """Closed loop: lift off the equator, move in longitude, return, slide back."""
    a1, b1 = alpha1, beta1
    edges = (0.0, 1 / 8, 1 / 2, 5 / 8)
    alpha = _piecewise(T, edges, [
        lambda s: 0.0,
        lambda s: a1 * 8 / 3 * (s - 1 / 8),
        lambda s: a1,
        lambda s: -a1 * 8 / 3 * (s - 1),
    ])
    beta = _piecewise(T, edges, [
        lambda s: math.pi / 2 - b1 * (1 + math.sin(4 * math.pi * s - math.pi / 2)),
        lambda s: math.pi / 2 - b1,
        lambda s: math.pi / 2 - b1 * (1 + math.sin(4 * math.pi * s - math.pi)),
        lambda s: math.pi / 2,
    ])
    w = 4 * math.pi / T
    dalpha = _piecewise(T, edges, [
        lambda s: 0.0,
        lambda s: a1 * 8 / 3 / T,
        lambda s: 0.0,
        lambda s: -a1 * 8 / 3 / T,
    ])
    dbeta = _piecewise(T, edges, [
        lambda s: -b1 * w * math.cos(4 * math.pi * s - math.pi / 2),
        lambda s: 0.0,
        lambda s: -b1 * w * math.cos(4 * math.pi * s - math.pi),
        lambda s: 0.0,
    ])

    def printed(t):
        s = t / T
        a, da, db = alpha(t), dalpha(t), dbeta(t)
        if s < 1 / 8:
            return np.array([0.0, db, 0.0])
        if s < 1 / 2:
            c = math.sin(b1) * math.cos(b1) * da
            return np.array([math.cos(a) * c, math.sin(a) * c, math.sin(a) * math.cos(b1) * da])
        if s < 5 / 8:
            return np.array([db, 0.0, 0.0])
        return np.array([0.0, 0.0, da])

    return RampProfile(T, omega, alpha, beta, dalpha, dbeta, breakpoints=(T / 8, T / 2, 5 * T / 8),
                       kind="uz", cd_printed=printed)


def uz_rotation_angle(Fg, alpha1: float = 5 * math.pi / 26, beta1: float = 5 * math.pi / 78) -> float:
    """Geometric rotation angle 2 Fg alpha1 sin(beta1) of the loop."""
    return 2 * HalfInt.of(Fg).value * alpha1 * math.sin(beta1)


def ux_profile(T: float, omega: float = 1.0) -> RampProfile:
    """Half turn of the cat axis along the equator."""
    return RampProfile(T, omega, alpha=lambda t: math.pi * t / T, beta=lambda t: math.pi / 2,
                       dalpha=lambda t: math.pi / T, dbeta=lambda t: 0.0, kind="ux",
                       cd_printed=lambda t: np.array([0.0, 0.0, math.pi / T]))


def virtual_ux_ptm() -> PTM:
    """Relabeling |0~> <-> |1~> costs nothing and is an exact logical X."""
    return PTM(ptm_of_unitary(PAULI_2x2[1]), "ux-virtual")


def prep_plus_profile(T: float, omega: float = 1.0) -> RampProfile:
    """STIRAP-like turn-on from |Fg, -Fg>: the sigma+ beam that misses it comes first."""
    def spherical(t):
        c = math.cos(0.5 * math.pi * t / T)
        norm = math.sqrt(2 * (1 + c * c))
        return (-omega * (1 - c) / norm, 0.0, omega * (1 + c) / norm)
    return RampProfile(T, omega, spherical=spherical, kind="prep_plus")


def _smoothstep(x: float) -> float:
    """0 -> 1 on [0, 1] with vanishing slope at both ends."""
    return x - math.sin(2 * math.pi * x) / (2 * math.pi)


def ux_holonomic_profile(alpha_x: float, T: float, omega: float = 1.0) -> RampProfile:
    """Collide the cat legs at the pole, re-expand them rotated, undo the rotation.

    Written in covariant components O_q (the factor multiplying C_q):
    O_{+1} = omega throughout; O_{-1} goes -omega -> 0 -> -omega e^{-2i alpha_x}
    -> -omega, one third of T per stage. Every stage starts and ends with zero
    slope (sin^2 amplitude ramps, smoothstep phase ramp).
    """
    ph = np.exp(-2j * alpha_x)

    def covariant_minus(t):
        s = 3 * t / T
        if s < 1:
            return -omega * math.cos(0.5 * math.pi * s) ** 2
        if s < 2:
            return -omega * ph * math.sin(0.5 * math.pi * (s - 1)) ** 2
        return -omega * np.exp(-2j * alpha_x * (1 - _smoothstep(min(s - 2, 1.0))))

    def spherical(t):
        return (omega + 0j, 0j, np.conj(covariant_minus(t)))

    return RampProfile(T, omega, spherical=spherical, breakpoints=(T / 3, 2 * T / 3),
                       kind="ux_holonomic")


# --- counter-diabatic driving ---------------------------------------------------------

def counter_diabatic_terms(profile: RampProfile, t: float, form: str = "generic",
                           warn: bool = True) -> np.ndarray:
    """Rotation vector w(t); the added Hamiltonian is w . F_g.

    ``generic`` is w = n x dn/dt for the dark axis n(alpha, beta), which
    carries the dark pair exactly along the loop. ``printed`` is the
    per-segment closed form listed with the loop.
    """
    if not profile.angle_based:
        raise ValueError("counter-diabatic terms need an angle-based profile")
    if warn and t in profile.breakpoints:
        log.warning("CD term requested at a ramp kink t=%g; using the right-hand derivative", t)
    if form == "printed":
        if profile.cd_printed is None:
            raise ValueError("profile has no printed counter-diabatic form")
        return profile.cd_printed(t)
    a, b = profile.alpha(t), profile.beta(t)
    da, db = profile.dalpha(t), profile.dbeta(t)
    ca, sa, cb, sb = math.cos(a), math.sin(a), math.cos(b), math.sin(b)
    e_alpha = np.array([-sa, ca, 0.0])
    e_beta = np.array([cb * ca, cb * sa, -sb])
    return db * e_alpha - da * sb * e_beta


# --- simulation ------------------------------------------------------------------

KINDS = ("uz", "ux", "prep_plus", "ux_holonomic")


@dataclass(frozen=True)
class GateSpec:
    kind: str = "uz"
    T: float = 1000.0
    Fg: HalfInt = field(default_factory=lambda: HalfInt(8))
    omega: float = 1.0
    gamma: float = 0.0
    counter_diabatic: bool = False
    cd_form: str = "generic"
    stabilize_after: bool = True
    alpha1: float = 5 * math.pi / 26
    beta1: float = 5 * math.pi / 78
    alpha_x: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "Fg", HalfInt.of(self.Fg))
        if self.kind not in KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.T <= 0:
            raise ValueError("gate time must be positive")

    def profile(self) -> RampProfile:
        if self.kind == "uz":
            return uz_profile(self.T, self.omega, self.alpha1, self.beta1)
        if self.kind == "ux":
            return ux_profile(self.T, self.omega)
        if self.kind == "prep_plus":
            return prep_plus_profile(self.T, self.omega)
        return ux_holonomic_profile(self.alpha_x, self.T, self.omega)


@dataclass(frozen=True)
class GateResult:
    raw: Optional[PTM] = None
    residual: Optional[PTM] = None
    alpha_star: Optional[float] = None
    infidelity: Optional[float] = None
    fidelity: Optional[float] = None
    logical: Optional[np.ndarray] = None      # 2x2 logical block (noiseless runs)
    leakage: Optional[float] = None


class _HamiltonianBuilder:
    def __init__(self, spec: GateSpec, profile: RampProfile):
        lay = Layout(spec.Fg)
        self.C = [raising_operator(spec.Fg, q) for q in (1, 0, -1)]
        self.F = [lay.spin_full(c, "g") for c in ("fx", "fy", "fz")]
        self.profile = profile
        self.cd = spec.counter_diabatic
        self.cd_form = spec.cd_form

    def __call__(self, t: float) -> np.ndarray:
        drive = self.profile.drive(t)
        V = sum(np.conj(o) * C for o, C in zip(drive, self.C))
        H = 0.5 * (V + V.conj().T)
        if self.cd:
            w = counter_diabatic_terms(self.profile, t, self.cd_form, warn=False)
            H = H + w[0] * self.F[0] + w[1] * self.F[1] + w[2] * self.F[2]
        return H


def _initial_states(spec: GateSpec):
    lay = Layout(spec.Fg)
    if spec.kind == "prep_plus":
        psi = np.zeros(lay.n, dtype=complex)
        psi[lay.ng - 1] = 1.0
        return psi[:, None]
    z0, z1 = logical_states(spec.Fg)
    return np.column_stack([z0, z1])


def plus_target(Fg) -> np.ndarray:
    """Cat (|0~> + e^{2 i pi Fg}|1~>)/sqrt(2), the parity sector reached from |Fg, -Fg>."""
    Fg = HalfInt.of(Fg)
    z0, z1 = logical_states(Fg)
    return (z0 + (-1) ** Fg.twice * z1) / math.sqrt(2)


def simulate_gate(spec: GateSpec, noise: Optional[OUNoise] = None, rtol: float = 1e-10,
                  atol: float = 1e-12) -> GateResult:
    """Run one gate and characterize it on the logical qubit.

    Without noise and decay the kets are propagated directly; otherwise the
    four logical Pauli operators (or the preparation state) are evolved as
    density operators, with OU marginals when ``noise`` is given.
    """
    profile = spec.profile()
    H = _HamiltonianBuilder(spec, profile)
    lay = Layout(spec.Fg)
    psi0 = _initial_states(spec)
    bps = profile.breakpoints
    cs = conserved_analytic(spec.Fg) if spec.stabilize_after else None

    if noise is None and spec.gamma == 0:
        psiT = evolve(lambda t, y: -1j * (H(t) @ y), psi0, [spec.T], breakpoints=bps,
                      rtol=rtol, atol=atol)[0]
        if spec.kind == "prep_plus":
            rho = np.outer(psiT[:, 0], psiT[:, 0].conj())
            return GateResult(fidelity=_prep_fidelity(rho, spec, cs),
                              leakage=float(1 - np.real(np.trace(lay.projector_g() @ rho))))
        ops_out = [psiT @ P @ psiT.conj().T for P in PAULI_2x2]
        logical = np.column_stack(logical_states(spec.Fg)).conj().T @ psiT
        leak = float(1 - np.linalg.norm(logical, 2) ** 2)
    else:
        channels = [JumpChannel(a, spec.gamma) for a in decay_operators(spec.Fg)] if spec.gamma else []
        fz = lay.spin_full("fz", "g")
        rhs = operator_rhs(H, channels, fz if noise else None, noise)
        if spec.kind == "prep_plus":
            ops_in = [np.outer(psi0[:, 0], psi0[:, 0].conj())]
        else:
            ops_in = [psi0 @ P @ psi0.conj().T for P in PAULI_2x2]
        u0 = np.array(ops_in)[None]
        if noise is not None:
            u0 = noise.p_ss.reshape(3, 1, 1, 1) * u0
        uT = evolve(rhs, u0, [spec.T], breakpoints=bps, rtol=rtol, atol=atol)[0]
        ops_out = list(uT.sum(axis=0))
        logical, leak = None, None
        if spec.kind == "prep_plus":
            return GateResult(fidelity=_prep_fidelity(ops_out[0], spec, cs))

    raw = _logical_ptm(ops_out, spec, cs)
    if spec.kind == "uz":
        residual, a_star = gate_error_channel(raw, r_ideal)
    elif spec.kind == "ux":
        residual = PTM(raw.r @ np.linalg.inv(ptm_of_unitary(PAULI_2x2[1])), raw.label)
        a_star = None
    else:
        residual, a_star = raw, None
    return GateResult(raw, residual, a_star, worst_case_infidelity(residual), None, logical, leak)


def _logical_ptm(ops_out, spec: GateSpec, cs) -> PTM:
    if cs is not None:
        blocks = [project_logical(o, cs) for o in ops_out]
    else:
        V = np.column_stack(logical_states(spec.Fg))
        blocks = [V.conj().T @ o @ V for o in ops_out]
    R = np.array([[np.trace(Pn @ b) / 2 for b in blocks] for Pn in PAULI_2x2])
    if np.max(np.abs(R.imag)) > 1e-8:
        raise ValueError("gate PTM has a large imaginary part")
    return PTM(R.real, spec.kind)


def _prep_fidelity(rho: np.ndarray, spec: GateSpec, cs) -> float:
    target = plus_target(spec.Fg)
    if cs is None:
        return float(np.real(np.vdot(target, rho @ target)))
    c = project_logical(rho, cs)
    V = np.column_stack(logical_states(spec.Fg))
    t2 = V.conj().T @ target
    return float(np.real(np.vdot(t2, c @ t2)))


def infidelity_vs_T(spec: GateSpec, Ts, noise: Optional[OUNoise] = None) -> list:
    """Sweep the gate time; returns (T, GateResult) pairs."""
    return [(float(T), simulate_gate(replace(spec, T=float(T)), noise)) for T in Ts]
