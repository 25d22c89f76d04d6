import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from darkcat.dark_states import DriveConfig, Layout, coupling_hamiltonian, find_dark_states_rotation
from darkcat.gates import (GateSpec, _HamiltonianBuilder, RampProfile, counter_diabatic_terms, plus_target, prep_plus_profile,
                           simulate_gate, uz_profile, uz_rotation_angle, ux_holonomic_profile, ux_profile,
                           virtual_ux_ptm)
from darkcat.liouville import evolve
from darkcat.ptm import logical_x_rotation
from darkcat.spin import HalfInt, bloch_angle
from darkcat.stabilization import logical_states

fracs = st.floats(0.0, 1.0)


def test_uz_profile_continuity_and_closure():
    T = 100.0
    p = uz_profile(T)
    for tb in (T / 8, T / 2, 5 * T / 8):
        for f in (p.alpha, p.beta):
            assert f(tb - 1e-9) == pytest.approx(f(tb), abs=1e-8)
    assert p.alpha(0) == 0 and p.beta(0) == pytest.approx(math.pi / 2)
    assert p.alpha(T) == pytest.approx(0, abs=1e-12) and p.beta(T) == pytest.approx(math.pi / 2)


def test_uz_rotation_angle_frozen():
    # 2 * 4 * (5 pi/26) * sin(5 pi/78), evaluated independently
    assert uz_rotation_angle(4) == pytest.approx(0.96676807709, abs=1e-10)
    assert uz_rotation_angle(4) == pytest.approx(8 * 5 * math.pi / 26 * math.cos(math.pi / 2 - 5 * math.pi / 78))


@given(fracs, st.sampled_from([1, 2, 3.5, 4]))
def test_dark_pair_antipodal_and_annihilated_along_profiles(s, F):
    for prof in (uz_profile(80.0), ux_profile(80.0)):
        t = s * prof.T
        cfg = DriveConfig(prof.drive(t), Fg=F)
        pair = find_dark_states_rotation(cfg)
        assert bloch_angle(pair.angles1, pair.angles2) == pytest.approx(math.pi, abs=1e-7)
        lay = Layout(cfg.Fg)
        V = coupling_hamiltonian(cfg.omega_sph, cfg.Fg)
        assert max(np.linalg.norm(V @ lay.embed_g(v)) for v in (pair.ds1, pair.ds2)) < 1e-10


def test_counter_diabatic_static_and_ux():
    static = RampProfile(10.0, 1.0, alpha=lambda t: 0.3, beta=lambda t: 1.0,
                         dalpha=lambda t: 0.0, dbeta=lambda t: 0.0)
    assert np.allclose(counter_diabatic_terms(static, 2.0), 0)
    T = 37.0
    p = ux_profile(T)
    for t in (0.1, 5.0, 20.0):
        assert np.allclose(counter_diabatic_terms(p, t), [0, 0, math.pi / T])
        assert np.allclose(counter_diabatic_terms(p, t, "printed"), [0, 0, math.pi / T])
    with pytest.raises(ValueError):
        counter_diabatic_terms(prep_plus_profile(10.0), 1.0)


def test_cd_tracks_dark_space_exactly():
    F = HalfInt.of(2)
    spec = GateSpec("uz", 20.0, F, counter_diabatic=True)
    prof = spec.profile()
    lay = Layout(F)
    H = _HamiltonianBuilder(spec, prof)
    z0, _ = logical_states(F)
    ts = np.linspace(0, spec.T, 17)[1:]
    traj = evolve(lambda t, y: -1j * (H(t) @ y), z0, ts, breakpoints=prof.breakpoints)
    for t, psi in zip(ts, traj):
        pair = find_dark_states_rotation(DriveConfig(prof.drive(t), Fg=F))
        B = np.column_stack([lay.embed_g(pair.ds1), lay.embed_g(pair.ds2)])
        outside = 1 - np.linalg.norm(B.conj().T @ psi) ** 2
        assert outside < 1e-8


def test_uz_with_cd_is_exact_at_short_time():
    r = simulate_gate(GateSpec("uz", 50.0, 2, counter_diabatic=True))
    assert r.infidelity < 1e-8
    assert r.alpha_star == pytest.approx(uz_rotation_angle(2), abs=1e-6)


def test_uz_without_cd_improves_with_T():
    infs = [simulate_gate(GateSpec("uz", T, 2)).infidelity for T in (50.0, 200.0, 800.0)]
    assert infs[0] > 1e-3
    assert infs[0] > infs[1] > infs[2]


def test_ux_maps_zero_to_one():
    r = simulate_gate(GateSpec("ux", 40.0, 2, counter_diabatic=True, stabilize_after=False))
    assert abs(r.logical[1, 0]) == pytest.approx(1, abs=1e-9)
    assert r.infidelity < 1e-9
    deficits = [1 - abs(simulate_gate(GateSpec("ux", T, 2, stabilize_after=False)).logical[1, 0])
                for T in (100.0, 400.0)]
    assert deficits[1] < deficits[0] < 5e-2


def test_ux_endpoint_drive_flips_sign():
    p = ux_profile(10.0)
    d0, dT = np.array(p.drive(0.0)), np.array(p.drive(10.0))
    assert np.allclose(dT, -d0, atol=1e-12)


def test_virtual_ux_is_exact_flip():
    assert np.allclose(virtual_ux_ptm().r, np.diag([1, 1, -1, -1]))


def test_prep_profile_endpoints():
    T = 10.0
    p = prep_plus_profile(T)
    d0 = p.drive(0.0)
    assert d0[0] == 0 and d0[1] == 0
    dT = p.drive(T)
    assert abs(dT[0]) == pytest.approx(abs(dT[2]), abs=1e-12)
    assert dT[1] == 0


def test_prep_fidelity_monotone():
    fids = [simulate_gate(GateSpec("prep_plus", T, 2)).fidelity for T in (20.0, 100.0, 500.0)]
    assert fids[0] < fids[1] < fids[2]
    assert fids[-1] > 0.99


@pytest.mark.parametrize("F", [2, 2.5])
def test_parity_sectors_never_mix_without_pi_light(F):
    F = HalfInt.of(F)
    lay = Layout(F)
    prof = prep_plus_profile(30.0)
    H = _HamiltonianBuilder(GateSpec("prep_plus", 30.0, F), prof)
    psi = np.zeros(lay.n, complex)
    psi[lay.ng - 1] = 1
    out = evolve(lambda t, y: -1j * (H(t) @ y), psi, [7.0, 30.0])
    # sigma+- couplings change m by one between manifolds; the parity of
    # m_g (and m_e + 1) is conserved
    parity = np.r_[np.round(lay.Fg.ms() - lay.Fg.value) % 2, np.round(lay.Fe.ms() + 1 - lay.Fg.value) % 2]
    for v in out:
        assert np.sum(np.abs(v[parity != parity[lay.ng - 1]]) ** 2) < 1e-20
    assert abs(np.vdot(plus_target(F), plus_target(F))) == pytest.approx(1)


@pytest.mark.parametrize("F,sign", [(2, +1), (1.5, -1)])
def test_holonomic_ux_rotation(F, sign):
    ax = 0.7
    r = simulate_gate(GateSpec("ux_holonomic", 1500.0, F, alpha_x=ax, stabilize_after=False))
    assert r.leakage < 1e-5
    ov = abs(np.trace(logical_x_rotation(sign * ax).conj().T @ r.logical)) / 2
    assert ov > 1 - 1e-4
    # relative phase between the even and odd cats equals alpha_x in magnitude
    z0, z1 = np.eye(2)
    even, odd = (z0 + z1) / math.sqrt(2), (z0 - z1) / math.sqrt(2)
    rel = np.angle(np.vdot(even, r.logical @ even) / np.vdot(odd, r.logical @ odd))
    assert abs(rel) == pytest.approx(ax, abs=1e-3)


def test_holonomic_identity_and_swap():
    r0 = simulate_gate(GateSpec("ux_holonomic", 1500.0, 2, alpha_x=0.0, stabilize_after=False))
    assert abs(np.trace(r0.logical)) / 2 > 1 - 1e-6
    rp = simulate_gate(GateSpec("ux_holonomic", 1500.0, 2, alpha_x=math.pi, stabilize_after=False))
    assert abs(rp.logical[1, 0]) > 1 - 1e-5


def test_holonomic_profile_stages():
    T = 9.0
    p = ux_holonomic_profile(0.4, T)
    # contravariant Omega^{-1} is the conjugate of the covariant -omega e^{-2i alpha_x}
    assert p.drive(0.0)[2] == pytest.approx(-1.0)
    assert abs(p.drive(T / 3)[2]) < 1e-12
    assert p.drive(2 * T / 3)[2] == pytest.approx(-np.exp(2j * 0.4))
    assert p.drive(T)[2] == pytest.approx(-1.0)


def test_gate_spec_validation():
    with pytest.raises(ValueError):
        GateSpec("uy", 10.0, 2)
    with pytest.raises(ValueError):
        GateSpec("uz", 0.0, 2)
