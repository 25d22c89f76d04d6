"""Driven Fg -> Fe = Fg - 1 system and its two dark states.

The Hilbert space is the ground manifold (2Fg+1 states) followed by the
excited manifold (2Fe+1 states), each in the m = +F ... -F order.

Drive amplitudes are given as the contravariant spherical components
``omega_sph = (O^{+1}, O^0, O^{-1})``. The operator C_q raises m by q and is
paired with the covariant component conj(O^q), which keeps the Cartesian
vector ``(Ox, Oy, Oz)`` aligned with the Bloch direction of the dark SCS.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .spin import (HalfInt, SCSAngles, coupling_matrix, rotation_operator,
                   spin_coherent_state, spin_operators)

QS = (1, 0, -1)


class DarkStateError(RuntimeError):
    """Dark-state search failed; ``residuals`` holds the offending numbers."""

    def __init__(self, msg, residuals=None):
        super().__init__(msg)
        self.residuals = residuals


@dataclass(frozen=True)
class DriveConfig:
    omega_sph: tuple = (0j, 0j, 0j)
    delta_big: float = 0.0
    delta_small: float = 0.0
    gamma: float = 0.0
    Fg: HalfInt = field(default_factory=lambda: HalfInt(2))

    def __post_init__(self):
        object.__setattr__(self, "Fg", HalfInt.of(self.Fg))
        object.__setattr__(self, "omega_sph", tuple(complex(o) for o in self.omega_sph))
        if len(self.omega_sph) != 3:
            raise ValueError("omega_sph needs three components (+1, 0, -1)")
        if self.Fg.twice < 2:
            raise ValueError("Fg must be at least 1 so that Fe = Fg - 1 exists")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")

    @property
    def Fe(self) -> HalfInt:
        return self.Fg - 1

    @property
    def rabi_norm(self) -> float:
        return float(np.linalg.norm(self.omega_sph))


@dataclass(frozen=True)
class Layout:
    """Index bookkeeping for the ground + excited space."""

    Fg: HalfInt

    @property
    def Fe(self) -> HalfInt:
        return self.Fg - 1

    @property
    def ng(self) -> int:
        return self.Fg.dim

    @property
    def ne(self) -> int:
        return self.Fe.dim

    @property
    def n(self) -> int:
        return self.ng + self.ne

    @property
    def g(self) -> slice:
        return slice(0, self.ng)

    @property
    def e(self) -> slice:
        return slice(self.ng, self.n)

    def embed_g(self, vec: np.ndarray) -> np.ndarray:
        out = np.zeros(self.n, dtype=complex)
        out[: self.ng] = vec
        return out

    def projector_e(self) -> np.ndarray:
        return np.diag(np.r_[np.zeros(self.ng), np.ones(self.ne)]).astype(complex)

    def projector_g(self) -> np.ndarray:
        return np.diag(np.r_[np.ones(self.ng), np.zeros(self.ne)]).astype(complex)

    def fz_total(self) -> np.ndarray:
        return np.diag(np.r_[self.Fg.ms(), self.Fe.ms()]).astype(complex)

    def spin_full(self, comp: str, which: str = "both") -> np.ndarray:
        """F_comp on g, e or both blocks, embedded in the full space."""
        out = np.zeros((self.n, self.n), dtype=complex)
        if which in ("g", "both"):
            out[self.g, self.g] = getattr(spin_operators(self.Fg), comp)
        if which in ("e", "both") and self.ne:
            out[self.e, self.e] = getattr(spin_operators(self.Fe), comp)
        return out


def raising_operator(Fg, q: int) -> np.ndarray:
    """Full-space C_q = sum_m CG |Fe, m+q><Fg, m| (maps ground to excited)."""
    lay = Layout(HalfInt.of(Fg))
    C = np.zeros((lay.n, lay.n), dtype=complex)
    C[lay.e, lay.g] = coupling_matrix(lay.Fg, lay.Fe, q)
    return C


def decay_operators(Fg) -> list:
    """Jump operators C_q^dagger for spontaneous emission e -> g, one per polarization.

    sum_q C_q C_q^dagger equals the excited-state projector, so each excited
    sublevel decays at the full rate gamma.
    """
    return [raising_operator(Fg, q).conj().T for q in QS]


def coupling_hamiltonian(omega_sph: Sequence[complex], Fg) -> np.ndarray:
    """(1/2) sum_q (conj(O^q) C_q + h.c.)."""
    V = sum(np.conj(o) * raising_operator(Fg, q) for o, q in zip(omega_sph, QS))
    return 0.5 * (V + V.conj().T)


def build_hds(cfg: DriveConfig, include_decay: bool = False) -> np.ndarray:
    """Rotating-frame Hamiltonian; with ``include_decay`` Delta picks up +i gamma/2."""
    lay = Layout(cfg.Fg)
    detuning = cfg.delta_big + (0.5j * cfg.gamma if include_decay else 0.0)
    H = -detuning * lay.projector_e() - cfg.delta_small * lay.spin_full("fz", "e")
    return H + coupling_hamiltonian(cfg.omega_sph, cfg.Fg)


@dataclass(frozen=True)
class CartesianRabi:
    vector: np.ndarray
    is_real: bool
    direction: Optional[np.ndarray]


def cartesian_rabi(omega_sph, tol: float = 1e-10) -> CartesianRabi:
    """Cartesian (Ox, Oy, Oz) and whether it is real up to one global phase.

    When real, ``direction`` is the unit vector with the sign chosen so that its
    largest-magnitude component is positive.
    """
    op, o0, om = (complex(o) for o in omega_sph)
    vec = np.array([(om - op) / math.sqrt(2), 1j * (om + op) / math.sqrt(2), o0])
    norm = np.linalg.norm(vec)
    if norm == 0:
        return CartesianRabi(vec, True, None)
    k = int(np.argmax(np.abs(vec)))
    rot = vec * np.exp(-1j * np.angle(vec[k]))
    is_real = bool(np.max(np.abs(rot.imag)) <= tol * norm)
    direction = rot.real / np.linalg.norm(rot.real) if is_real else None
    return CartesianRabi(vec, is_real, direction)


@dataclass(frozen=True)
class DarkStatePair:
    ds1: np.ndarray
    ds2: np.ndarray
    angles1: Optional[SCSAngles]
    angles2: Optional[SCSAngles]
    degenerate_flag: bool
    orthogonal_flag: bool

    def basis(self) -> np.ndarray:
        return np.column_stack([self.ds1, self.ds2])


def _fix_phase(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    return v * np.exp(-1j * np.angle(v[k]))


def _angles_from_direction(d) -> SCSAngles:
    theta = math.acos(max(-1.0, min(1.0, d[2])))
    phi = math.atan2(d[1], d[0]) % (2 * math.pi)
    return SCSAngles(theta, phi)


def _angles_from_homogeneous(u: complex, v: complex) -> SCSAngles:
    beta = 2 * math.atan2(abs(u), abs(v))
    if abs(u) == 0 or abs(v) == 0:
        alpha = 0.0
    else:
        alpha = (cmath.phase(u) - cmath.phase(v)) % (2 * math.pi)
    return SCSAngles(beta, alpha)


def rotated_minus_component(alpha: float, beta: float, omega_sph) -> complex:
    """Rotated drive component whose zeros select the dark-state rotations."""
    op, o0, om = (np.conj(complex(o)) for o in omega_sph)
    c, s = math.cos(beta), math.sin(beta)
    return (cmath.exp(1j * alpha) * (1 - c) / 2 * op - s / math.sqrt(2) * o0
            + cmath.exp(-1j * alpha) * (1 + c) / 2 * om)


def dark_angles(omega_sph) -> tuple:
    """The two rotations (as SCSAngles) that null the rotated -1 component.

    With z = exp(i alpha) tan(beta/2) the condition is the quadratic
    a z^2 + b z + c = 0, a = O_{+1}, b = -sqrt(2) O_0, c = O_{-1} (covariant
    components). It is solved in homogeneous form so that roots at z = inf
    (beta = pi) come out cleanly.
    """
    a, b, c = (np.conj(complex(o)) for o in omega_sph)
    b = -math.sqrt(2) * b
    scale = max(abs(a), abs(b), abs(c))
    if scale == 0:
        raise DarkStateError("zero drive has no isolated dark states")
    swap = abs(a) < abs(c)
    if swap:
        a, c = c, a
    # roots of a x^2 + b x + c in homogeneous (num, den) form
    if abs(a) <= 1e-15 * scale:
        # a == c == 0 here, so the roots are x = 0 and x = inf
        roots = [(0j, 1 + 0j), (1 + 0j, 0j)]
    else:
        disc = np.sqrt(complex(b * b - 4 * a * c))
        sgn = 1 if (np.conj(b) * disc).real >= 0 else -1
        qv = -(b + sgn * disc) / 2
        r1 = qv / a
        roots = [(r1, 1 + 0j), (c, qv) if abs(qv) > 0 else (0j, 1 + 0j)]
    if swap:
        roots = [(d, n) for n, d in roots]
    out = [_angles_from_homogeneous(u, v) for u, v in roots]
    out.sort(key=lambda ang: (round(ang.theta, 12), ang.phi))
    for ang in out:
        res = abs(rotated_minus_component(ang.phi, ang.theta, omega_sph))
        if res > 1e-9 * scale:
            raise DarkStateError("dark-state rotation residual too large", residuals=res)
    return tuple(out)


def _is_degenerate(a1: SCSAngles, a2: SCSAngles, tol: float = 1e-6) -> bool:
    return float(np.linalg.norm(a1.bloch() - a2.bloch())) < tol


def find_dark_states_rotation(cfg: DriveConfig) -> DarkStatePair:
    """Dark states from the rotations that remove the rotated -1 component."""
    if cfg.rabi_norm == 0:
        raise DarkStateError("|Omega| must be positive")
    F = cfg.Fg
    cart = cartesian_rabi(cfg.omega_sph)
    if cart.is_real:
        a1 = _angles_from_direction(cart.direction)
        a2 = a1.antipode()
        ds1 = spin_coherent_state(a1, F)
        bottom = np.zeros(F.dim, dtype=complex)
        bottom[-1] = 1.0
        ds2 = rotation_operator(a1.phi, a1.theta, 0.0, F) @ bottom
        return DarkStatePair(ds1, ds2, a1, a2, False, True)
    a1, a2 = dark_angles(cfg.omega_sph)
    if _is_degenerate(a1, a2):
        R = rotation_operator(a1.phi, a1.theta, 0.0, F)
        return DarkStatePair(R[:, 0].copy(), R[:, 1].copy(), a1, a1, True, False)
    ds1 = spin_coherent_state(a1, F)
    v2 = spin_coherent_state(a2, F)
    v2 = v2 - np.vdot(ds1, v2) * ds1
    ds2 = _fix_phase(v2 / np.linalg.norm(v2))
    return DarkStatePair(ds1, ds2, a1, a2, False, False)


def find_dark_states_null(cfg: DriveConfig, rel_tol: float = 1e-10) -> DarkStatePair:
    """Dark states as the ground-supported kernel of the coupling operator (SVD)."""
    if cfg.rabi_norm == 0:
        raise DarkStateError("|Omega| must be positive")
    lay = Layout(cfg.Fg)
    V = coupling_hamiltonian(cfg.omega_sph, cfg.Fg)
    # ground-supported kernel: the e <- g block must annihilate the vector
    block = V[lay.e, lay.g]
    _, s, vh = np.linalg.svd(block)
    s_full = np.zeros(lay.ng)
    s_full[: s.size] = s
    null = np.flatnonzero(s_full < rel_tol * s_full.max())
    if null.size != 2:
        raise DarkStateError(f"expected a 2-dimensional dark space, found {null.size}",
                             residuals=s_full)
    vecs = [_fix_phase(vh[k].conj()) for k in null]
    a1, a2 = dark_angles(cfg.omega_sph)
    degenerate = _is_degenerate(a1, a2)
    ortho = cartesian_rabi(cfg.omega_sph).is_real
    return DarkStatePair(vecs[0], vecs[1], None, None, degenerate, ortho)


def principal_angle(A: np.ndarray, B: np.ndarray) -> float:
    """Largest principal angle between the column spans of A and B."""
    qa, _ = np.linalg.qr(A)
    qb, _ = np.linalg.qr(B)
    s = np.linalg.svd(qa.conj().T @ qb, compute_uv=False)
    # sin of the largest angle is more accurate than arccos of the smallest cosine
    resid = qb - qa @ (qa.conj().T @ qb)
    return float(np.arcsin(min(1.0, np.linalg.norm(resid, 2)))) if s.size else 0.0


def drive_from_angles(omega: float, beta: float, alpha: float) -> tuple:
    """Spherical components whose dark SCS points along (beta, alpha)."""
    s = math.sin(beta)
    return (-omega / math.sqrt(2) * cmath.exp(1j * alpha) * s,
            omega * math.cos(beta) + 0j,
            omega / math.sqrt(2) * cmath.exp(-1j * alpha) * s)
