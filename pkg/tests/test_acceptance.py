"""Acceptance checks: one PASS/FAIL line per criterion, collected in the terminal summary.

Known misses are kept at their stated tolerance and marked strict xfail.
"""
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from darkcat.cx import (C0, CR, CXConfig, monitored_cx, mu_effective, optimal_gate_time,
                        predicted_gate_time, simulate_cx, swap_frequency)
from darkcat.dark_states import (DriveConfig, Layout, build_hds, find_dark_states_null,
                                 find_dark_states_rotation, principal_angle)
from darkcat.gates import GateSpec, simulate_gate, uz_rotation_angle
from darkcat.liouville import (JumpChannel, OUNoise, build_ou3_system, evolve, lindbladian, ou_average,
                               ou_initial, unvec, vec, vectorize_hamiltonian, white_noise_lindbladian)
from darkcat.ptm import LogicalBasis, error_rates, lindblad_evolver, ou_evolver
from darkcat.spin import HalfInt, clebsch_gordan, racah_cg, spin_operators
from darkcat.stabilization import (StabilizationConfig, am_coefficients, bitflip_rate_firstorder,
                                   conserved_analytic, conserved_numeric, dissipative_gap_scan,
                                   logical_states, stabilization_lindbladian)

slow = pytest.mark.slow
SPINS_TO_6 = [HalfInt(t) for t in range(2, 13)]
SPINS_TO_4 = [HalfInt(t) for t in range(2, 9)]


# --- 1 ------------------------------------------------------------------------------

def test_c1_dark_state_solvers(report):
    rng = np.random.default_rng(2024)
    worst_ang, worst_res = 0.0, 0.0
    for F in SPINS_TO_6:
        lay = Layout(F)
        for _ in range(200):
            z = rng.normal(size=3) + 1j * rng.normal(size=3)
            cfg = DriveConfig(tuple(z / np.linalg.norm(z)), Fg=F)
            rot, null = find_dark_states_rotation(cfg), find_dark_states_null(cfg)
            worst_ang = max(worst_ang, principal_angle(rot.basis(), null.basis()))
            H = build_hds(cfg)
            worst_res = max(worst_res, *(np.linalg.norm(H @ lay.embed_g(v)) for v in (rot.ds1, rot.ds2)))
    ok = worst_ang < 1e-8 and worst_res < 1e-10
    report("1", ok, f"max principal angle {worst_ang:.1e} (<1e-8), max residual {worst_res:.1e} (<1e-10)")
    assert ok


# --- 2 ------------------------------------------------------------------------------

def test_c2_conserved_quantities(report):
    worst = 0.0
    for F in SPINS_TO_4:
        L = stabilization_lindbladian(StabilizationConfig(F, 0.5, 0.05))
        a, n = conserved_analytic(F), conserved_numeric(L, F)
        worst = max(worst, max(np.abs(x - y).max() for x, y in zip(a.as_list, n.as_list)))
    a0 = am_coefficients(1)[0]
    ok = worst < 1e-8 and a0 == 0.5
    report("2", ok, f"analytic vs numeric max entry diff {worst:.1e} (<1e-8), a_0(Fg=1) = {a0}")
    assert ok


# --- 3 ------------------------------------------------------------------------------

def _gap_ratios(Fs):
    # |Omega| = 1 and |Omega| / gamma = 50
    rows = dissipative_gap_scan([StabilizationConfig(F, 0.5, 1 / 50) for F in Fs])
    return [r["gap"] / r["reference"] for r in rows]


def test_c3_gap_fg2_to_4(report):
    ratios = _gap_ratios([2, 3, 4])
    ok = all(abs(r - 1) < 0.1 for r in ratios)
    report("3 (Fg=2..4)", ok, "gap / (gamma/(2Fg+1)) = " + ", ".join(f"{r:.4f}" for r in ratios))
    assert ok


@pytest.mark.xfail(strict=True, reason="at Fg=1 the slowest decaying mode sits at 0.75 gamma/3 for any "
                                       "Omega/gamma; the 10% band is not reachable")
def test_c3_gap_fg1(report):
    (r,) = _gap_ratios([1])
    ok = abs(r - 1) < 0.1
    report("3 (Fg=1)", ok, f"gap / (gamma/3) = {r:.4f} (needs within 10% of 1)")
    assert ok


# --- 4 ------------------------------------------------------------------------------

def test_c4_first_order_bitflip(report):
    kap = 0.5e-4          # 1e-4 times the per-component drive scale; |Omega| = 1
    Fs = [1, 2, 3, 4]
    sims, preds = [], []
    for F in Fs:
        cfg = StabilizationConfig(F, 0.5, 1 / (2 * math.pi))
        Lw = white_noise_lindbladian(stabilization_lindbladian(cfg), Layout(cfg.Fg).spin_full("fz", "g"), kap)
        est = error_rates(lindblad_evolver(Lw), LogicalBasis(*logical_states(F)), kap)
        sims.append(est.slopes[3])
        preds.append(bitflip_rate_firstorder(F, kap).exact)
    rel = [abs(s / p - 1) for s, p in zip(sims, preds)]
    logr = np.log(np.abs(sims)) - 2.5 * np.log(Fs)
    slope = np.polyfit(Fs, logr, 1)[0]
    raw = np.polyfit(Fs, np.log(np.abs(sims)), 1)[0]
    ok = max(rel) < 0.1 and abs(slope / -math.log(16) - 1) < 0.2
    report("4", ok, f"max rel. deviation from -kappa Fg a_(1-Fg) {max(rel):.3f} (<0.1); log-slope of "
                    f"rate/Fg^2.5 {slope:.3f} vs -log16 {-math.log(16):.3f} (20%); raw log-slope {raw:.3f}")
    assert ok


# --- 5 ------------------------------------------------------------------------------

@slow
def test_c5_colored_noise_bias(report):
    kap, gam = 1e-4, 1 / (2 * math.pi)
    lams = [1e-3, 1e-1, 10.0]
    slopes = {}
    for F in (2, 3, 4):
        cfg = StabilizationConfig(F, 0.5, gam)
        L = stabilization_lindbladian(cfg)
        basis = LogicalBasis(*logical_states(F))
        fz = Layout(cfg.Fg).spin_full("fz", "g")
        for lam in lams:
            ev = ou_evolver(build_ou3_system(L, fz, OUNoise(kap, lam)))
            slopes[F, lam] = error_rates(ev, basis, kap).slopes
    xy = max(abs(s[1] / s[2] - 1) for s in slopes.values())
    bias = max(slopes[4, lam][3] / slopes[4, lam][1] for lam in lams)
    mono = all(abs(slopes[2, lam][3]) > abs(slopes[3, lam][3]) > abs(slopes[4, lam][3]) for lam in lams)
    ok = xy < 0.02 and bias <= 0.1 and mono
    zz = "; ".join(f"lam={lam:g}: " + ", ".join(f"{slopes[F, lam][3] / kap:.2e}" for F in (2, 3, 4))
                   for lam in lams)
    report("5", ok, f"(a) max |XX/YY-1| {xy:.1e} (<2%); (b) max (1-Rzz)/(1-Rxx) at Fg=4 {bias:.1e} "
                    f"(<=0.1); (c) dRzz/kappa over Fg=2,3,4 [{zz}] monotone={mono}")
    assert ok


# --- 6 ------------------------------------------------------------------------------

@pytest.mark.xfail(strict=True, reason="the kinked U_z loop leaks as ~1/T^2 without counter-diabatic "
                                       "terms: 5.7e-5 at T|Omega|=2000, 1.8e-6 only at 16000")
def test_c6_uz_without_cd(report):
    r = simulate_gate(GateSpec("uz", 2000.0, 4))
    ok = r.infidelity < 1e-6
    report("6 (no CD, T|Omega|=2000)", ok, f"noiseless infidelity {r.infidelity:.2e} (needs <1e-6)")
    assert ok


def test_c6_uz_with_cd_and_angle(report):
    cd = simulate_gate(GateSpec("uz", 50.0, 4, counter_diabatic=True))
    slow_gate = simulate_gate(GateSpec("uz", 2000.0, 4))
    da = abs(slow_gate.alpha_star - uz_rotation_angle(4))
    ok = cd.infidelity < 1e-8 and da < 1e-3
    report("6 (CD, alpha*)", ok, f"CD infidelity at T|Omega|=50 {cd.infidelity:.1e} (<1e-8); "
                                 f"|alpha* - 2Fg a1 sin b1| = {da:.1e} rad (<1e-3)")
    assert ok


@slow
def test_c6_uz_noisy_curve(report):
    noise = OUNoise(1e-4, 1e-3)
    Ts = [100.0, 200.0, 400.0, 800.0, 1600.0]
    res = [simulate_gate(GateSpec("uz", T, 4, gamma=1 / (2 * math.pi)), noise) for T in Ts]
    inf = [r.infidelity for r in res]
    k = int(np.argmin(inf))
    d = res[k].residual.diag
    ok = 0 < k < len(Ts) - 1 and (1 - d[3]) < 0.01 * (1 - d[1])
    report("6 (noisy)", ok, "infidelity vs T " + ", ".join(f"{x:.3e}" for x in inf)
           + f"; optimum T|Omega|={Ts[k]:g}, 1-Rzz={1 - d[3]:.1e} vs 1-Rxx={1 - d[1]:.1e}")
    assert ok


# --- 7 ------------------------------------------------------------------------------

def test_c7_state_preparation(report):
    Ts = [25.0, 50.0, 100.0, 200.0, 400.0, 800.0]
    fids = [simulate_gate(GateSpec("prep_plus", T, 4)).fidelity for T in Ts]
    ok = fids[-1] > 0.99 and all(b >= a - 1e-9 for a, b in zip(fids, fids[1:]))
    report("7", ok, "|+> fidelity vs T|Omega| " + ", ".join(f"{T:g}:{f:.5f}" for T, f in zip(Ts, fids)))
    assert ok


# --- 8 ------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def cx_runs():
    out = {}
    for F in (2, 3, 4):
        cfg = CXConfig(Fg=HalfInt.of(F))
        T_opt, _, _ = optimal_gate_time(cfg)
        out[F] = (T_opt, simulate_cx(replace(cfg, T=T_opt), C0), simulate_cx(replace(cfg, T=T_opt), CR))
    return out


@slow
def test_c8a_swap(report, cx_runs):
    cfg = CXConfig(Fg=HalfInt(8))
    w, mu = swap_frequency(cfg), mu_effective(cfg)
    rel = abs(w / mu - 1)
    bound = (cfg.omega_r / cfg.delta_r) ** 2
    rzz = cx_runs[4][1].ptm.r[3, 3]
    ok = rel < bound and rzz < -0.99
    report("8a", ok, f"swap rate / mu - 1 = {rel:.3f} (< (Omega_r/Delta_r)^2 = {bound:.2f}); "
                     f"target Rzz after the gate {rzz:.4f}")
    assert ok


@slow
def test_c8b_worst_case_infidelity(report, cx_runs):
    T_opt, o0, o1 = cx_runs[4]
    worst = max(o0.infidelity, o1.infidelity)
    ok = 5e-4 <= worst <= 5e-3
    report("8b", ok, f"Fg=4 T_opt={T_opt:.1f}/Omega_r ({T_opt / predicted_gate_time(CXConfig()):.3f} pi/mu): "
                     f"control 0 {o0.infidelity:.2e}, control r {o1.infidelity:.2e}, worst {worst:.2e} "
                     f"(5e-4..5e-3)")
    assert ok


@slow
def test_c8c_blockaded_bitflip(report, cx_runs):
    e = [1 - cx_runs[F][2].residual.diag[3] for F in (2, 3, 4)]
    slope, icpt = np.polyfit([2, 3, 4], np.log(e), 1)
    fit = np.exp(icpt + slope * np.array([2, 3, 4]))
    ok = e[0] > e[1] > e[2] and slope < -math.log(2) and np.max(np.abs(fit / e - 1)) < 0.5
    report("8c", ok, "control-r 1-Rzz over Fg=2,3,4: " + ", ".join(f"{x:.2e}" for x in e)
           + f"; log-slope {slope:.2f}")
    assert ok


@slow
@pytest.mark.xfail(strict=True, reason="finite Delta_r makes the monitored fidelity dip at n_re=6 "
                                       "(0.99275 at 5, 0.99094 at 6)")
def test_c8d_monitoring(report):
    base = CXConfig(Fg=HalfInt(8), ramp="none", model="extended")
    cfg = replace(base, T=math.pi / swap_frequency(base))
    ref = monitored_cx(replace(cfg, gamma_c=0.0), CR, 0).fidelity
    fids = [monitored_cx(replace(cfg, n_re=n), CR, 0).fidelity for n in range(7)]
    mono = all(b >= a - 1e-12 for a, b in zip(fids, fids[1:]))
    closer = abs(ref - fids[-1]) < abs(ref - fids[0])
    ok = mono and closer
    report("8d", ok, "fidelity vs n_re 0..6: " + ", ".join(f"{f:.5f}" for f in fids)
           + f"; no-decay {ref:.5f}; monotone={mono}, approaches={closer}")
    assert ok


# --- 9 ------------------------------------------------------------------------------

def test_c9_numerical_hygiene(report):
    worst = {}

    def note(key, v):
        worst[key] = max(worst.get(key, 0.0), float(v))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 8), st.floats(0.05, 2.0), st.floats(0.01, 1.0), st.integers(0, 2 ** 31 - 1))
    def lindblad_props(tw, om, g, seed):
        L = stabilization_lindbladian(StabilizationConfig(HalfInt(tw), om, g))
        rng = np.random.default_rng(seed)
        A = rng.normal(size=(L.dim,) * 2) + 1j * rng.normal(size=(L.dim,) * 2)
        rho = A @ A.conj().T
        rho /= np.trace(rho)
        out = unvec(evolve(L, vec(rho), [1.7], method="expm")[0])
        note("trace", abs(np.trace(out) - 1))
        note("herm", np.abs(out - out.conj().T).max())
        assert worst["trace"] < 1e-9 and worst["herm"] < 1e-9

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 15), st.integers(-1, 1), st.data())
    def cg_props(tw, q, data):
        F1 = HalfInt(tw)
        tw2 = data.draw(st.sampled_from([t for t in (tw - 2, tw, tw + 2) if t >= 0]))
        F2 = HalfInt(tw2)
        for m in F1.ms():
            if abs(m + q) <= F2.value:
                note("cg", abs(clebsch_gordan(F1, m, q, F2, m + q) - racah_cg(F1.value, m, 1, q, F2.value, m + q)))
        s = spin_operators(F1)
        note("comm", np.abs(s.fx @ s.fy - s.fy @ s.fx - 1j * s.fz).max())
        assert worst["cg"] < 1e-14 and worst["comm"] < 1e-12

    @settings(max_examples=10, deadline=None)
    @given(st.floats(0.05, 0.5), st.floats(0.0, 1.0))
    def ou_white(kap, h):
        sz = np.diag([0.5, -0.5]).astype(complex)
        L0 = vectorize_hamiltonian(h * np.array([[0, 1], [1, 0]], complex))
        rho = np.full((2, 2), 0.5, complex)
        S = build_ou3_system(L0, sz, OUNoise(kap, 1e4))
        c = unvec(ou_average(evolve(S, ou_initial(rho), [3.0], method="expm")[0], 2))
        w = unvec(evolve(white_noise_lindbladian(L0, sz, kap), vec(rho), [3.0], method="expm")[0])
        note("ou", np.abs(c - w).max() / np.abs(w).max())
        assert worst["ou"] < 0.02

    # plain channels too: trace preservation of an arbitrary Lindbladian
    L = lindbladian(np.diag([0.0, 1.0, 2.0]).astype(complex), [JumpChannel(np.eye(3, k=1), 0.3)])
    note("trace", L.trace_defect())
    lindblad_props()
    cg_props()
    ou_white()
    report("9", True, f"trace {worst['trace']:.1e}, Hermiticity {worst['herm']:.1e}, CG-vs-Racah {worst['cg']:.1e}, "
                      f"commutators {worst['comm']:.1e}, OU->white {worst['ou']:.1e}")
