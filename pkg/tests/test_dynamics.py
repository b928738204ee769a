import math

import numpy as np
import pytest
from scipy.integrate import quad

from qdtimebin.dynamics import (
    B,
    G,
    X,
    ConstantDrive,
    DecayRates,
    DephasingModel,
    PulseDrive,
    cumulative_emission,
    default_t_span,
    emission_probabilities,
    evolve,
    export_trajectory_csv,
    hamiltonian,
    lindblad_rhs,
    liouvillian,
    omega0_for_area,
    pulse_area,
    pulse_energy,
)
from qdtimebin.linalg import hermiticity_defect, min_eigenvalue

import oracles

GROUND = np.diag([1.0, 0.0, 0.0]).astype(complex)
BIEXCITON = np.diag([0.0, 0.0, 1.0]).astype(complex)
EXCITON = np.diag([0.0, 1.0, 0.0]).astype(complex)
NO_DECAY = DecayRates(gamma_b=0.0, gamma_x=0.0)
NO_DEPH = DephasingModel(gamma_bg=0.0, gamma_i0=0.0)


# --- Hamiltonian -------------------------------------------------------------

def test_hamiltonian_zero():
    drive = ConstantDrive(omega0=0.0, delta_x=0.0, delta_b=0.0)
    assert np.allclose(hamiltonian(0.0, drive), 0.0)


def test_hamiltonian_resonant_coupling():
    drive = ConstantDrive(omega0=2.0, delta_x=0.0, delta_b=0.0)
    h = hamiltonian(2.0, drive)
    assert h[G, X] == h[X, B] == 1.0
    assert np.allclose(np.diag(h), 0.0)
    assert h[G, B] == 0.0
    assert hermiticity_defect(h) == 0.0


def test_hamiltonian_detunings():
    drive = ConstantDrive(omega0=0.0, delta_x=3.0, delta_b=1.0)
    h = hamiltonian(0.0, drive)
    assert np.allclose(h, np.diag([0.0, 2.0, -2.0]))


def test_hamiltonian_rejects_negative_amplitude():
    with pytest.raises(ValueError):
        hamiltonian(-1.0, ConstantDrive(omega0=1.0))


# --- drive / model types ------------------------------------------------------

def test_pulse_amplitude_profile():
    drive = PulseDrive(omega0=2.0, sigma=3.0, t0=1.0)
    assert drive.amplitude(1.0) == pytest.approx(2.0)
    assert drive.amplitude(4.0) == pytest.approx(1.0)  # half maximum at t0+sigma
    with pytest.raises(ValueError):
        PulseDrive(omega0=1.0, sigma=0.0)
    with pytest.raises(ValueError):
        PulseDrive(omega0=-1.0, sigma=1.0)


def test_dephasing_model_rate():
    deph = DephasingModel(gamma_bg=0.1, gamma_i0=0.5, n_p=2)
    assert deph.rate(2.0) == pytest.approx(0.1 + 0.5 * 4.0)
    flat = DephasingModel(gamma_bg=0.0, gamma_i0=0.3, n_p=0)
    assert flat.rate(0.0) == flat.rate(5.0) == pytest.approx(0.3)
    with pytest.raises(ValueError):
        DephasingModel(gamma_i0=-1.0)
    with pytest.raises(ValueError):
        DephasingModel(n_p=-1)


def test_pulse_area_values():
    assert pulse_area(PulseDrive(omega0=0.0, sigma=1.0)) == 0.0
    drive = PulseDrive(omega0=1.0, sigma=1.0)
    assert pulse_area(drive) == pytest.approx(2.12893, abs=1e-5)
    # adaptive quadrature oracle
    ref, _ = quad(lambda t: drive.amplitude(t), -40, 40, epsabs=1e-12)
    assert pulse_area(drive) == pytest.approx(ref, abs=1e-9)
    assert pulse_area(PulseDrive(omega0=1.0, sigma=2.0)) == \
        pytest.approx(2 * pulse_area(drive), rel=1e-12)
    assert pulse_energy(PulseDrive(omega0=3.0, sigma=2.0)) == 18.0
    assert omega0_for_area(pulse_area(drive), 1.0) == pytest.approx(1.0)


# --- master equation right-hand side -----------------------------------------

def test_rhs_ground_state_stationary():
    drive = ConstantDrive(omega0=0.0)
    out = lindblad_rhs(GROUND, 0.0, drive, DecayRates(1.0, 1.0),
                       DephasingModel(0.5, 0.2, 2))
    assert np.abs(out).max() < 1e-15


def test_rhs_biexciton_decay_feeds_exciton():
    drive = ConstantDrive(omega0=0.0)
    out = lindblad_rhs(BIEXCITON, 0.0, drive, DecayRates(gamma_b=1.0, gamma_x=0.0),
                       NO_DEPH)
    expected = np.diag([0.0, 1.0, -1.0])
    assert np.abs(out - expected).max() < 1e-14


def test_rhs_pure_dephasing_on_gx_coherence():
    # The x-population channel alone damps the g-x coherence with
    # coefficient 4*(gamma_d/2) = 2 gamma_d; the b-population channel adds
    # another gamma_d/2 through its anticommutator, so the full model gives
    # 2.5 gamma_d.  Both are pinned against the superoperator oracle.
    c = 0.3 - 0.1j
    rho = np.zeros((3, 3), dtype=complex)
    rho[G, X] = c
    rho[X, G] = np.conj(c)
    gamma_d = 0.7

    a_xx = np.diag([-1.0, 1.0, 0.0]).astype(complex)
    s_xx = oracles.lindblad_superoperator(np.zeros((3, 3)), [(a_xx, gamma_d)])
    only_xx = oracles.apply_superoperator(s_xx, rho)
    assert only_xx[G, X] == pytest.approx(-2.0 * gamma_d * c, abs=1e-14)

    out = lindblad_rhs(rho, 0.0, ConstantDrive(omega0=0.0, delta_x=0.0),
                       NO_DECAY, DephasingModel(gamma_bg=gamma_d))
    assert out[G, X] == pytest.approx(-2.5 * gamma_d * c, abs=1e-14)
    s_full = oracles.lindblad_superoperator(
        np.zeros((3, 3)), oracles.ladder_jumps(0.0, 0.0, gamma_d))
    ref = oracles.apply_superoperator(s_full, rho)
    assert np.abs(out - ref).max() < 1e-14


def test_rhs_against_superoperator_oracle():
    rng = np.random.default_rng(42)
    for _ in range(25):
        omega = rng.uniform(0, 3)
        dx, db = rng.uniform(-2, 2, size=2)
        gb, gx, gd = rng.uniform(0, 2, size=3)
        rho = oracles.random_density_matrix(rng, 3)
        drive = ConstantDrive(omega0=omega, delta_x=dx, delta_b=db)
        ours = lindblad_rhs(rho, 0.0, drive, DecayRates(gb, gx),
                            DephasingModel(gamma_bg=gd))
        s = oracles.lindblad_superoperator(
            oracles.ladder_hamiltonian(omega, dx, db),
            oracles.ladder_jumps(gb, gx, gd))
        ref = oracles.apply_superoperator(s, rho)
        assert np.abs(ours - ref).max() < 1e-12
        assert abs(np.trace(ours)) < 1e-12
        assert hermiticity_defect(ours) < 1e-12


def test_compiled_liouvillian_matches_rhs():
    rng = np.random.default_rng(5)
    drive = ConstantDrive(omega0=1.3, delta_x=0.7, delta_b=-0.2)
    decay = DecayRates(0.4, 0.9)
    deph = DephasingModel(gamma_bg=0.1, gamma_i0=0.2, n_p=2)
    s = liouvillian(1.3, drive, decay, deph)
    for _ in range(10):
        rho = oracles.random_density_matrix(rng, 3)
        ref = lindblad_rhs(rho, 0.0, drive, decay, deph)
        ours = (s @ rho.ravel()).reshape(3, 3)
        assert np.abs(ours - ref).max() < 1e-13


# --- evolution ----------------------------------------------------------------

def test_evolve_ground_is_constant():
    drive = PulseDrive(omega0=0.0, sigma=1.0)
    traj = evolve(GROUND, drive, DecayRates(0.5, 0.25), NO_DEPH,
                  t_span=(0.0, 10.0), tol=1e-9)
    assert np.abs(traj.states - GROUND).max() < 1e-12
    assert np.allclose(traj.populations.sum(axis=1), 1.0, atol=1e-10)


def test_evolve_cascade_matches_closed_form():
    decay = DecayRates(gamma_b=2.0, gamma_x=1.0)
    drive = ConstantDrive(omega0=0.0, delta_x=0.0)
    traj = evolve(BIEXCITON, drive, decay, NO_DEPH, t_span=(0.0, 10.0),
                  tol=1e-10)
    p_b, p_x = oracles.cascade_populations(traj.times, 2.0, 1.0)
    assert np.abs(traj.populations[:, B] - p_b).max() < 1e-6
    assert np.abs(traj.populations[:, X] - p_x).max() < 1e-6
    # populations are the diagonal of the stored states
    assert np.abs(traj.populations
                  - np.real(traj.states[:, (G, X, B), (G, X, B)])).max() == 0.0


def test_evolve_two_level_rabi():
    # large equal detunings park the biexciton level far away, reducing the
    # ladder to a resonant two-level system
    big = 400.0
    drive = ConstantDrive(omega0=1.0, delta_x=big, delta_b=big)
    traj = evolve(GROUND, drive, NO_DECAY, NO_DEPH, t_span=(0.0, 5.0),
                  tol=1e-10, max_step=0.05)
    ref = np.cos(traj.times / 2.0) ** 2
    assert np.abs(traj.populations[:, G] - ref).max() < 1e-5


def test_evolve_matches_expm_oracle():
    rng = np.random.default_rng(123)
    omega, dx, db = 1.2, 0.6, -0.1
    gb, gx, gd = 0.8, 0.5, 0.3
    drive = ConstantDrive(omega0=omega, delta_x=dx, delta_b=db)
    rho0 = oracles.random_density_matrix(rng, 3)
    traj = evolve(rho0, drive, DecayRates(gb, gx),
                  DephasingModel(gamma_bg=gd), t_span=(0.0, 5.0), tol=1e-10)
    s = oracles.lindblad_superoperator(
        oracles.ladder_hamiltonian(omega, dx, db),
        oracles.ladder_jumps(gb, gx, gd))
    for i in range(0, len(traj.times), 37):
        ref = oracles.propagate_expm(rho0, oracles.ladder_hamiltonian(omega, dx, db),
                                     oracles.ladder_jumps(gb, gx, gd),
                                     traj.times[i])
        assert np.abs(traj.states[i] - ref).max() < 1e-6


def test_evolve_intensity_dependent_dephasing_uses_stage_times():
    # compare against a fine-grid reference: same model, much tighter tol
    drive = PulseDrive(omega0=0.8, sigma=2.0, t0=0.0, delta_x=0.5)
    decay = DecayRates(0.01, 0.005)
    deph = DephasingModel(gamma_bg=0.0, gamma_i0=0.3, n_p=2)
    t_span = (-10.0, 10.0)
    a = evolve(GROUND, drive, decay, deph, t_span=t_span, tol=1e-8)
    b = evolve(GROUND, drive, decay, deph, t_span=t_span, tol=1e-12,
               max_step=0.02)
    assert np.abs(a.states[-1] - b.states[-1]).max() < 1e-6


def test_evolve_validates_inputs():
    drive = PulseDrive(omega0=0.0, sigma=1.0)
    with pytest.raises(ValueError):
        evolve(GROUND, drive, DecayRates(), NO_DEPH, t_span=(0, 10), tol=1e-2)
    with pytest.raises(ValueError):
        evolve(GROUND, drive, DecayRates(gamma_b=0.1, gamma_x=0.0), NO_DEPH)


def test_default_span_covers_pulse_and_decay():
    drive = PulseDrive(omega0=1.0, sigma=4.0, t0=2.0)
    decay = DecayRates(gamma_b=0.02, gamma_x=0.01)
    t0, t1 = default_t_span(drive, decay)
    assert t0 == 2.0 - 20.0
    assert t1 == 2.0 + 20.0 + 1000.0


# --- emission probabilities ----------------------------------------------------

def test_emission_zero_drive_from_ground():
    drive = PulseDrive(omega0=0.0, sigma=1.0)
    traj = evolve(GROUND, drive, DecayRates(0.5, 0.25), NO_DEPH,
                  t_span=(0.0, 20.0))
    p_x, p_b = emission_probabilities(traj, DecayRates(0.5, 0.25), 20.0)
    assert p_x == pytest.approx(0.0, abs=1e-12)
    assert p_b == pytest.approx(0.0, abs=1e-12)


def test_emission_cascade_complete():
    decay = DecayRates(gamma_b=2.0, gamma_x=1.0)
    drive = ConstantDrive(omega0=0.0, delta_x=0.0)
    traj = evolve(BIEXCITON, drive, decay, NO_DEPH, t_span=(0.0, 20.0),
                  tol=1e-10)
    p_x, p_b = emission_probabilities(traj, decay, 20.0)
    assert p_x == pytest.approx(1.0, abs=1e-5)
    assert p_b == pytest.approx(1.0, abs=1e-5)
    # intermediate time against the closed form
    ref_x, ref_b = oracles.cascade_emission(3.7, 2.0, 1.0)
    p_x, p_b = emission_probabilities(traj, decay, 3.7)
    assert p_x == pytest.approx(ref_x, abs=1e-6)
    assert p_b == pytest.approx(ref_b, abs=1e-6)


def test_emission_from_exciton_only():
    decay = DecayRates(gamma_b=2.0, gamma_x=1.0)
    traj = evolve(EXCITON, ConstantDrive(omega0=0.0, delta_x=0.0), decay,
                  NO_DEPH, t_span=(0.0, 25.0), tol=1e-10)
    p_x, p_b = emission_probabilities(traj, decay, 25.0)
    assert p_x == pytest.approx(1.0, abs=1e-5)
    assert p_b == pytest.approx(0.0, abs=1e-8)


def test_emission_rejects_out_of_range():
    traj = evolve(GROUND, PulseDrive(omega0=0.0, sigma=1.0), DecayRates(),
                  DephasingModel(), t_span=(0.0, 1.0))
    with pytest.raises(ValueError, match="outside"):
        emission_probabilities(traj, DecayRates(), 2.0)


# --- trajectory invariants ------------------------------------------------------

def test_trajectory_conservation_under_drive():
    drive = PulseDrive(omega0=0.9, sigma=3.0, t0=0.0, delta_x=0.5)
    decay = DecayRates(0.05, 0.02)
    deph = DephasingModel(gamma_bg=0.02, gamma_i0=0.1, n_p=2)
    traj = evolve(GROUND, drive, decay, deph, t_span=(-15.0, 60.0), tol=1e-9)
    trace = traj.states.trace(axis1=1, axis2=2)
    assert np.abs(trace - 1.0).max() < 1e-7
    defects = [hermiticity_defect(s) for s in traj.states]
    assert max(defects) < 1e-8
    eigs = [min_eigenvalue(0.5 * (s + s.conj().T)) for s in traj.states]
    assert min(eigs) > -1e-6
    assert np.abs(traj.populations.sum(axis=1) - 1.0).max() < 1e-8


def test_two_photon_pi_pulse_fills_biexciton():
    # coherent transfer: first Rabi maximum of the biexciton photon yield
    from qdtimebin.sweeps import first_cycle_extrema
    decay = DecayRates(gamma_b=2e-4, gamma_x=1e-4)
    _, pb_max, _, pb_min = first_cycle_extrema(
        sigma=12.0, deph=NO_DEPH, decay=decay, delta_x=0.5, tol=1e-9)
    assert pb_max > 0.95
    assert pb_min < 0.05


def test_trajectory_csv_export(tmp_path):
    decay = DecayRates(gamma_b=2.0, gamma_x=1.0)
    traj = evolve(BIEXCITON, ConstantDrive(omega0=0.0, delta_x=0.0), decay,
                  NO_DEPH, t_span=(0.0, 5.0))
    path = tmp_path / "traj.csv"
    export_trajectory_csv(traj, decay, path, params={"note": "cascade"})
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# ")
    assert lines[1] == "t,rho_gg,rho_xx,rho_bb,re_gb,im_gb,p_x,p_b"
    assert len(lines) == 2 + len(traj.times)
    # cumulative columns approach the analytic totals
    last = [float(v) for v in lines[-1].split(",")]
    ref_x, ref_b = oracles.cascade_emission(5.0, 2.0, 1.0)
    assert last[6] == pytest.approx(ref_x, abs=1e-4)
    assert last[7] == pytest.approx(ref_b, abs=1e-4)


def test_cumulative_emission_monotone():
    decay = DecayRates(gamma_b=2.0, gamma_x=1.0)
    traj = evolve(BIEXCITON, ConstantDrive(omega0=0.0, delta_x=0.0), decay,
                  NO_DEPH, t_span=(0.0, 5.0))
    px, pb = cumulative_emission(traj, decay)
    assert np.all(np.diff(px) >= 0) and np.all(np.diff(pb) >= 0)
    assert px[0] == pb[0] == 0.0
