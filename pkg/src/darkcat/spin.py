"""Angular-momentum algebra on single spin manifolds.

Every matrix in this package uses the basis ordering m = +F, +F-1, ..., -F,
so index ``i`` corresponds to ``m = F - i``. Quantum numbers are carried as
:class:`HalfInt`, which stores ``2F`` to keep half-integers exact.

Spin coherent states follow |theta, phi> = exp(-i phi Fz) exp(-i theta Fy)|F, F>.
This differs from Radcliffe's definition by the global phase exp(-i F phi).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np


@dataclass(frozen=True, order=True)
class HalfInt:
    """Non-negative half-integer stored as ``twice`` = 2F."""

    twice: int

    def __post_init__(self):
        if not isinstance(self.twice, (int, np.integer)) or self.twice < 0:
            raise ValueError(f"twice_value must be a non-negative integer, got {self.twice!r}")

    @classmethod
    def of(cls, value) -> "HalfInt":
        """Coerce an int, float, Fraction or HalfInt to a HalfInt."""
        if isinstance(value, HalfInt):
            return value
        twice = 2 * float(value)
        if twice != round(twice):
            raise ValueError(f"{value!r} is not a half-integer")
        return cls(int(round(twice)))

    @property
    def value(self) -> float:
        return self.twice / 2

    @property
    def dim(self) -> int:
        return self.twice + 1

    def ms(self) -> np.ndarray:
        """Magnetic quantum numbers in basis order (+F ... -F)."""
        return np.arange(self.twice, -self.twice - 1, -2) / 2

    def __sub__(self, other) -> "HalfInt":
        return HalfInt(self.twice - HalfInt.of(other).twice)

    def __add__(self, other) -> "HalfInt":
        return HalfInt(self.twice + HalfInt.of(other).twice)

    def __float__(self):
        return self.value

    def __str__(self):
        return str(self.twice // 2) if self.twice % 2 == 0 else f"{self.twice}/2"


def index_of(F, m) -> int:
    """Basis index of magnetic sublevel ``m`` in the F manifold."""
    F = HalfInt.of(F)
    twice_m = int(round(2 * float(m)))
    if abs(twice_m) > F.twice or (F.twice - twice_m) % 2:
        raise ValueError(f"m={m} is not a valid projection for F={F}")
    return (F.twice - twice_m) // 2


@dataclass(frozen=True)
class SpinOps:
    fx: np.ndarray
    fy: np.ndarray
    fz: np.ndarray
    fplus: np.ndarray
    fminus: np.ndarray

    @property
    def dim(self) -> int:
        return self.fz.shape[0]


@lru_cache(maxsize=None)
def _spin_operators(twice: int) -> SpinOps:
    F = twice / 2
    ms = np.arange(twice, -twice - 1, -2) / 2
    n = twice + 1
    fplus = np.zeros((n, n), dtype=complex)
    for i in range(1, n):
        m = ms[i]
        fplus[i - 1, i] = math.sqrt(F * (F + 1) - m * (m + 1))
    fminus = fplus.T.copy()
    fx = (fplus + fminus) / 2
    fy = (fplus - fminus) / 2j
    fz = np.diag(ms).astype(complex)
    for a in (fplus, fminus, fx, fy, fz):
        a.setflags(write=False)
    return SpinOps(fx, fy, fz, fplus, fminus)


def spin_operators(F) -> SpinOps:
    """Spin matrices for manifold F (hbar = 1), basis m = +F ... -F."""
    return _spin_operators(HalfInt.of(F).twice)


# --- Clebsch-Gordan coefficients -------------------------------------------

def _check_m(F: HalfInt, twice_m: int, name: str):
    if abs(twice_m) > F.twice or (F.twice - twice_m) % 2:
        raise ValueError(f"invalid quantum numbers: {name}={twice_m / 2} for F={F}")


def clebsch_gordan(F1, m1, q: int, F2, m2) -> float:
    """<F1, m1; 1, q | F2, m2> with the Condon-Shortley phase.

    Uses the closed-form rank-1 coupling table. Selection-rule violations
    (m2 != m1 + q, |m2| > F2, |F1 - 1| <= F2 <= F1 + 1 violated) return 0;
    an m1 outside the F1 manifold or a wrong-parity m2 raises.
    """
    F1, F2 = HalfInt.of(F1), HalfInt.of(F2)
    tm1, tm2 = int(round(2 * float(m1))), int(round(2 * float(m2)))
    _check_m(F1, tm1, "m1")
    if (F2.twice - tm2) % 2:
        raise ValueError(f"invalid quantum numbers: m2={tm2 / 2} for F={F2}")
    if abs(tm2) > F2.twice:
        return 0.0
    if q not in (-1, 0, 1):
        raise ValueError(f"q must be -1, 0 or +1, got {q}")
    if tm2 != tm1 + 2 * q:
        return 0.0
    j = F1.value
    M = tm2 / 2
    d = F2.twice - F1.twice
    if d == 2:
        if q == 1:
            num, den, sign = (j + M) * (j + M + 1), (2 * j + 1) * (2 * j + 2), 1
        elif q == 0:
            num, den, sign = (j - M + 1) * (j + M + 1), (2 * j + 1) * (j + 1), 1
        else:
            num, den, sign = (j - M) * (j - M + 1), (2 * j + 1) * (2 * j + 2), 1
    elif d == 0:
        if j == 0:
            return 0.0
        if q == 1:
            num, den, sign = (j + M) * (j - M + 1), 2 * j * (j + 1), -1
        elif q == 0:
            return M / math.sqrt(j * (j + 1))
        else:
            num, den, sign = (j - M) * (j + M + 1), 2 * j * (j + 1), 1
    elif d == -2:
        if j < 1:
            return 0.0
        if q == 1:
            num, den, sign = (j - M) * (j - M + 1), 2 * j * (2 * j + 1), 1
        elif q == 0:
            num, den, sign = (j - M) * (j + M), j * (2 * j + 1), -1
        else:
            num, den, sign = (j + M + 1) * (j + M), 2 * j * (2 * j + 1), 1
    else:
        return 0.0
    return sign * math.sqrt(num / den)


def racah_cg(F1, m1, F2_, m2_, J, M) -> float:
    """General <j1 m1; j2 m2 | J M> from Racah's formula in exact integer arithmetic.

    Independent reference for :func:`clebsch_gordan`; arguments may be
    half-integers. Returns 0 when selection rules fail.
    """
    tj1, tm1 = int(round(2 * float(F1))), int(round(2 * float(m1)))
    tj2, tm2 = int(round(2 * float(F2_))), int(round(2 * float(m2_)))
    tJ, tM = int(round(2 * float(J))), int(round(2 * float(M)))
    if tm1 + tm2 != tM or tJ > tj1 + tj2 or tJ < abs(tj1 - tj2):
        return 0.0
    if (tj1 + tj2 + tJ) % 2 or abs(tm1) > tj1 or abs(tm2) > tj2 or abs(tM) > tJ:
        return 0.0
    f = math.factorial
    # all half-sums below are integers
    a = (tj1 + tj2 - tJ) // 2
    b = (tj1 - tj2 + tJ) // 2
    c = (-tj1 + tj2 + tJ) // 2
    e = (tj1 + tj2 + tJ) // 2 + 1
    pre = Fraction((tJ + 1) * f(a) * f(b) * f(c), f(e))
    pre *= f((tj1 + tm1) // 2) * f((tj1 - tm1) // 2) * f((tj2 + tm2) // 2) * f((tj2 - tm2) // 2)
    pre *= f((tJ + tM) // 2) * f((tJ - tM) // 2)
    total = Fraction(0)
    for k in range(0, a + 1):
        d1 = (tj1 - tm1) // 2 - k
        d2 = (tj2 + tm2) // 2 - k
        d3 = (tJ - tj2 + tm1) // 2 + k
        d4 = (tJ - tj1 - tm2) // 2 + k
        if min(a - k, d1, d2, d3, d4) < 0:
            continue
        term = Fraction((-1) ** k, f(k) * f(a - k) * f(d1) * f(d2) * f(d3) * f(d4))
        total += term
    if total == 0:
        return 0.0
    sign = 1 if total > 0 else -1
    # square stays exact until the single final rounding
    return sign * math.sqrt(float(pre * total * total))


@lru_cache(maxsize=None)
def _coupling(twice_g: int, twice_e: int, q: int) -> np.ndarray:
    Fg, Fe = HalfInt(twice_g), HalfInt(twice_e)
    C = np.zeros((Fe.dim, Fg.dim))
    for i, m in enumerate(Fg.ms()):
        if abs(m + q) <= Fe.value:
            C[index_of(Fe, m + q), i] = clebsch_gordan(Fg, m, q, Fe, m + q)
    C.setflags(write=False)
    return C


def coupling_matrix(Fg, Fe, q: int) -> np.ndarray:
    """Block of C_q = sum_m <Fg m; 1 q|Fe m+q> |Fe, m+q><Fg, m| (shape dim_e x dim_g)."""
    return _coupling(HalfInt.of(Fg).twice, HalfInt.of(Fe).twice, q)


# --- rotations and coherent states ------------------------------------------

@lru_cache(maxsize=None)
def _fy_eig(twice: int):
    w, v = np.linalg.eigh(_spin_operators(twice).fy)
    return w, v


def exp_fy(beta: float, F) -> np.ndarray:
    """exp(-i beta Fy) through the eigendecomposition of Fy."""
    w, v = _fy_eig(HalfInt.of(F).twice)
    return (v * np.exp(-1j * beta * w)) @ v.conj().T


def exp_fz(alpha: float, F) -> np.ndarray:
    return np.diag(np.exp(-1j * alpha * HalfInt.of(F).ms()))


def rotation_operator(alpha: float, beta: float, gamma: float, F) -> np.ndarray:
    """exp(-i alpha Fz) exp(-i beta Fy) exp(-i gamma Fz) on a single manifold."""
    F = HalfInt.of(F)
    ph_a = np.exp(-1j * alpha * F.ms())
    ph_g = np.exp(-1j * gamma * F.ms())
    return ph_a[:, None] * exp_fy(beta, F) * ph_g[None, :]


def wigner_small_d1(beta: float) -> np.ndarray:
    """Closed-form d^(1)(beta) with rows/columns ordered q = +1, 0, -1."""
    c, s = math.cos(beta), math.sin(beta)
    r = math.sqrt(2)
    return np.array([
        [(1 + c) / 2, -s / r, (1 - c) / 2],
        [s / r, c, -s / r],
        [(1 - c) / 2, s / r, (1 + c) / 2],
    ])


@dataclass(frozen=True)
class SCSAngles:
    theta: float
    phi: float

    def bloch(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])

    def antipode(self) -> "SCSAngles":
        return SCSAngles(math.pi - self.theta, (math.pi + self.phi) % (2 * math.pi))


def spin_coherent_state(angles: SCSAngles, F) -> np.ndarray:
    F = HalfInt.of(F)
    top = np.zeros(F.dim, dtype=complex)
    top[0] = 1.0
    return rotation_operator(angles.phi, angles.theta, 0.0, F) @ top


def bloch_angle(a1: SCSAngles, a2: SCSAngles) -> float:
    return float(np.arccos(np.clip(a1.bloch() @ a2.bloch(), -1.0, 1.0)))


def scs_overlap_law(a1: SCSAngles, a2: SCSAngles, F) -> float:
    """|<a1|a2>| = cos^(2F)(Theta/2), Theta the angle between the Bloch directions."""
    return abs(math.cos(bloch_angle(a1, a2) / 2)) ** HalfInt.of(F).twice


def scs_fz_power_element(n_z: int, a1: SCSAngles, a2: SCSAngles, F) -> complex:
    """Exact <a1|(Fz)^n_z|a2>."""
    if n_z < 0:
        raise ValueError("n_z must be non-negative")
    F = HalfInt.of(F)
    v1 = spin_coherent_state(a1, F)
    v2 = spin_coherent_state(a2, F)
    return complex(np.vdot(v1, (F.ms() ** n_z) * v2))


def scs_offdiag_asymptotic(n_z: int, theta1: float, eps: float, F, perturb: str = "theta") -> float:
    """Leading-order |<theta1,phi1|Fz^n|theta2,phi2>| for a nearly antipodal pair.

    ``perturb="theta"``: theta2 = pi - theta1 + eps (exponent k = n_z on |sin theta1|);
    ``perturb="phi"``: phi2 = pi + phi1 + eps (k = 2F).
    """
    F = HalfInt.of(F)
    tf = F.twice
    if n_z > tf:
        raise ValueError("asymptotic form requires n_z <= 2F")
    k = n_z if perturb == "theta" else tf
    return (abs(eps) ** (tf - n_z) * 2.0 ** (-tf) * math.factorial(tf) / math.factorial(tf - n_z)
            * abs(math.sin(theta1)) ** k)


def scs_diag_differential(n_z: int, a1: SCSAngles, F) -> float:
    """Exact <a1|Fz^n|a1> - <a2|Fz^n|a2> for the antipode a2 of a1."""
    return (scs_fz_power_element(n_z, a1, a1, F) - scs_fz_power_element(n_z, a1.antipode(), a1.antipode(), F)).real


def scs_diag_differential_asymptotic(n_z: int, theta1: float, F) -> float:
    """Leading order 2 (F cos theta1)^n_z of the diagonal differential."""
    return 2 * (HalfInt.of(F).value * math.cos(theta1)) ** n_z
