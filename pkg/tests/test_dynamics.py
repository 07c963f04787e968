import math

import numpy as np
import pytest
from scipy.special import jv

from kickrotor import dynamics as d
from kickrotor.observables import mean_p2
from kickrotor.params import AliasingError, SimParams
from kickrotor.schedule import KickEvent, KickSchedule, build_two_frequency_schedule


def bessel_series(n, x, terms=80):
    """J_n(x) from its power series, for the oracle (n >= 0)."""
    total = 0.0
    for k in range(terms):
        total += (-1) ** k / (math.factorial(k) * math.factorial(k + n)) * (x / 2) ** (2 * k + n)
    return total


def test_bessel_series_oracle_agrees_with_scipy():
    for n in range(6):
        assert bessel_series(n, 1.0) == pytest.approx(jv(n, 1.0), abs=1e-15)


def test_free_propagate_zero_momentum_unchanged():
    s = d.MomentumLadderState.plane_wave(64, 2.0, beta=0.0, index=0)
    out = d.free_propagate(s, 3.7)
    assert np.array_equal(out.amps, s.amps)


def test_free_propagate_phase():
    s = d.MomentumLadderState.plane_wave(64, 1.0, beta=0.0, index=1)
    out = d.free_propagate(s, 1.0)
    assert out.amps[33] == pytest.approx(np.exp(-0.5j), abs=1e-15)


def test_free_propagate_dt_zero_identity():
    rng = np.random.default_rng(1)
    amps = rng.normal(size=64) + 1j * rng.normal(size=64)
    s = d.MomentumLadderState(0.3, amps, 1.5)
    assert np.array_equal(d.free_propagate(s, 0.0).amps, amps)


def test_zero_kick_identity():
    s = d.MomentumLadderState.plane_wave(64, 1.0, index=3)
    assert np.allclose(d.apply_delta_kick(s, 0.0).amps, s.amps)


@pytest.mark.parametrize("x", [0.5, 1.0, 5.0, 20.0])
def test_delta_kick_matches_jacobi_anger(x):
    hbar = 1.7
    s = d.MomentumLadderState.plane_wave(256, hbar, beta=0.2, index=5)
    out = d.apply_delta_kick(s, x * hbar)
    j = np.arange(256) - 128 - 5
    expect = jv(j, x) ** 2
    assert np.max(np.abs(out.probabilities - expect)) < 1e-10


def test_delta_kick_central_population_value():
    s = d.MomentumLadderState.plane_wave(128, 1.0)
    out = d.apply_delta_kick(s, 1.0)
    assert out.probabilities[64] == pytest.approx(bessel_series(0, 1.0) ** 2, abs=1e-12)
    # J0(1)^2 to six places
    assert out.probabilities[64] == pytest.approx(0.585527, abs=1e-6)


def test_kick_unitary_random_state():
    rng = np.random.default_rng(4)
    amps = np.zeros(256, complex)
    amps[100:156] = rng.normal(size=56) + 1j * rng.normal(size=56)
    amps /= np.linalg.norm(amps)
    s = d.MomentumLadderState(0.41, amps, 2.3)
    out = d.apply_delta_kick(s, 7.3)
    assert out.norm() == pytest.approx(1.0, abs=1e-12)


def test_kick_then_p2_is_half_strength_squared():
    s = d.MomentumLadderState.plane_wave(512, 2.89)
    out = d.apply_delta_kick(s, 8.0)
    assert mean_p2(out) == pytest.approx(8.0**2 / 2, abs=1e-8)


def test_short_pulse_approaches_delta_kick():
    s = d.MomentumLadderState.plane_wave(128, 1.0)
    a = d.apply_delta_kick(s, 1.0)
    b = d.apply_square_pulse(s, 1.0, 1e-3)
    overlap = abs(np.vdot(a.amps, b.amps)) ** 2
    assert overlap > 1 - 1e-4


def test_zero_strength_pulse_is_free_flight():
    s = d.MomentumLadderState(0.2, np.exp(1j * np.arange(64)) / 8.0, 1.3)
    a = d.apply_square_pulse(s, 0.0, 0.05)
    b = d.free_propagate(s, 0.05)
    assert np.allclose(a.amps, b.amps, atol=1e-13)


def test_pulse_second_order_convergence():
    s = d.MomentumLadderState.plane_wave(256, 1.0, beta=0.3)
    s = d.apply_delta_kick(s, 6.0)
    ref = d.apply_square_pulse(s, 10.0, 0.3, substeps=2560)
    err = []
    for n in (20, 40, 80):
        out = d.apply_square_pulse(s, 10.0, 0.3, substeps=n)
        err.append(np.linalg.norm(out.amps - ref.amps))
    assert 3.5 < err[0] / err[1] < 4.5
    assert 3.5 < err[1] / err[2] < 4.5


def test_pulse_substep_floor():
    s = d.MomentumLadderState.plane_wave(64, 1.0)
    with pytest.raises(ValueError):
        d.apply_square_pulse(s, 1.0, 0.05, substeps=5)


def _bump(m=64, hbar=2.0):
    amps = np.zeros(m, complex)
    amps[m // 2 - 4:m // 2 + 4] = np.exp(0.3j * np.arange(8)) / np.sqrt(8)
    return d.MomentumLadderState(0.25, amps, hbar)


def test_empty_schedule_is_free_flight():
    s = _bump()
    final, _ = d.evolve_schedule(s, KickSchedule([], 7.0))
    assert np.allclose(final.amps, d.free_propagate(s, 7.0).amps, atol=1e-13)


def test_single_kick_composition():
    s = _bump(256)
    final, recs = d.evolve_schedule(s, KickSchedule([KickEvent(1.0, 3.0)], 1.0), record=[1.0])
    expect = d.apply_delta_kick(d.free_propagate(s, 1.0), 3.0)
    assert np.allclose(final.amps, expect.amps, atol=1e-12)
    assert np.allclose(recs[0][1].amps, expect.amps, atol=1e-12)


def test_merged_kicks_equal_back_to_back_kicks():
    p = SimParams(K=2.5, hbar_eff=2.0, r=1.0, phi=0.0, N1=4, grid_size=128)
    merged = build_two_frequency_schedule(p)
    manual = []
    for n in range(1, 5):
        manual.append(KickEvent(float(n), 2.5))
        if n < 4:
            manual.append(KickEvent(float(n) + 1e-12, 2.5))
    s = d.MomentumLadderState.plane_wave(128, 2.0, beta=0.17)
    a, _ = d.evolve_schedule(s, merged)
    b, _ = d.evolve_schedule(s, KickSchedule(manual, 4.0))
    assert np.allclose(a.amps, b.amps, atol=1e-10)


def test_norm_drift_over_long_schedule():
    p = SimParams(K=5.0, hbar_eff=2.89, r=0.618, phi=0.3, N1=200, grid_size=512)
    s = d.MomentumLadderState.plane_wave(512, 2.89, beta=0.1)
    final, _ = d.evolve_schedule(s, build_two_frequency_schedule(p))
    assert abs(final.norm() - 1.0) < 1e-10


def test_quasi_momentum_conserved():
    ens = d.make_ensemble(2.89, 256, beta_samples=8, sigma_P=2.0, seed=3)
    p = SimParams(K=5.0, hbar_eff=2.89, N1=10, grid_size=256)
    final, _ = d.evolve_schedule(ens, build_two_frequency_schedule(p))
    assert np.array_equal(final.betas, ens.betas)


def test_aliasing_guard_names_time():
    s = d.MomentumLadderState.plane_wave(64, 1.0)
    sch = KickSchedule([KickEvent(float(n), 30.0) for n in range(1, 4)], 3.0)
    with pytest.raises(AliasingError, match="t=1"):
        d.evolve_schedule(s, sch, record=[1.0, 2.0])


def test_regrid_recovers_from_aliasing():
    sch = KickSchedule([KickEvent(float(n), 30.0) for n in range(1, 4)], 3.0)
    final, _, m = d.evolve_with_regrid(
        lambda M: d.MomentumLadderState.plane_wave(M, 1.0), sch, 64
    )
    assert m > 64
    assert abs(final.norm() - 1) < 1e-10


def test_ensemble_weights_and_band():
    full = d.make_ensemble(5.76, 128, beta_samples=32, sigma_P=1.0, seed=0)
    assert full.weights.sum() == pytest.approx(1.0)
    assert np.all((full.betas >= 0) & (full.betas < 1))
    band = d.make_ensemble(5.76, 128, beta_samples=32, sigma_P=1.0, seed=0, band=0.5 / 5.76)
    # fraction of a N(0,1) cloud within |P| <= 0.5
    assert band.weights.sum() == pytest.approx(math.erf(0.5 / math.sqrt(2)), rel=1e-3)


def test_classical_no_kick_constant():
    out = d.classical_diffusion(0.0, 50, 1000, seed=1)
    assert np.all(out == out[0])


def test_classical_nonnegative():
    assert np.all(d.classical_diffusion(3.0, 100, 2000, seed=2) >= 0)


def _oracle_standard_map(K, n, size, seed):
    rng = np.random.default_rng(seed)
    th = rng.uniform(0, 2 * np.pi, size)
    p = np.zeros(size)
    out = []
    for _ in range(n):
        p = p + K * np.sin(th)
        th = (th + p) % (2 * np.pi)
        out.append(np.mean(p**2))
    return np.array(out)


def test_classical_diffusion_rate():
    K, n = 10.0, 100
    fast = d.classical_diffusion(K, n, 100_000, seed=5)
    ref = _oracle_standard_map(K, n, 1_000_000, seed=6)
    k = np.arange(1, n + 1)
    d_fast = np.polyfit(k, fast, 1)[0]
    d_ref = np.polyfit(k, ref, 1)[0]
    assert d_fast == pytest.approx(d_ref, rel=0.05)
    # correlated diffusion, D = K^2/2 (1 - 2 J2(K) + 2 J2(K)^2 - ...), well below K^2/2 at K=10
    rw = K**2 / 2 * (1 - 2 * jv(2, K) + 2 * jv(2, K) ** 2)
    assert d_fast == pytest.approx(rw, rel=0.15)
