import json

import numpy as np
import pytest

from qdtimebin.dynamics import (
    DecayRates,
    DephasingModel,
    PulseDrive,
    emission_probabilities,
    evolve,
    omega0_for_area,
)
from qdtimebin.sweeps import (
    GROUND,
    OverdampedError,
    coherent_first_max_area,
    emission_after_pulse,
    export_sweep_csv,
    first_cycle_extrema,
    first_cycle_ratio,
    fit_gamma_i0,
    rabi_sweep,
    ratio_sweep,
)

DECAY = DecayRates(gamma_b=0.004, gamma_x=0.002)
NO_DEPH = DephasingModel(0.0, 0.0)


def test_rabi_sweep_zero_area_gives_nothing():
    res = rabi_sweep(12.0, NO_DEPH, DECAY, areas=[0.0, 0.5], tol=1e-8,
                     delta_x=0.5)
    assert res.p_b[0] == pytest.approx(0.0, abs=1e-10)
    assert res.p_x[0] == pytest.approx(0.0, abs=1e-10)
    assert res.abscissa_kind == "area"
    assert not res.flag_reexcitation().any()


def test_rabi_sweep_validates_grid():
    with pytest.raises(ValueError):
        rabi_sweep(12.0, NO_DEPH, DECAY, areas=[1.0])
    with pytest.raises(ValueError):
        rabi_sweep(12.0, NO_DEPH, DECAY, areas=[2.0, 1.0])


def test_rabi_sweep_oscillates_and_damps():
    theta = coherent_first_max_area(12.0, 0.5)
    areas = np.linspace(0.2, 1.6, 13) * theta
    coherent = rabi_sweep(12.0, NO_DEPH, DECAY, areas, delta_x=0.5)
    damped = rabi_sweep(12.0, DephasingModel(0.0, 0.0349, 2), DECAY, areas,
                        delta_x=0.5)
    i_max = np.argmax(coherent.p_b)
    assert coherent.p_b[i_max] > 0.9
    assert 0 < i_max < len(areas) - 1
    # oscillation comes back down after the maximum
    assert coherent.p_b[-1] < coherent.p_b[i_max] - 0.3
    # intensity-dependent dephasing visibly damps the first maximum
    assert damped.p_b[i_max] < coherent.p_b[i_max] - 0.05
    assert np.all(coherent.p_b[np.isfinite(coherent.p_b)] <= 2.0)


def test_emission_after_pulse_matches_full_span():
    drive = PulseDrive(omega0=0.35, sigma=12.0, delta_x=0.5)
    deph = DephasingModel(0.0, 0.0349, 2)
    p_x_fast, p_b_fast = emission_after_pulse(drive, DECAY, deph, tol=1e-9)
    traj = evolve(GROUND, drive, DECAY, deph, tol=1e-9)
    p_x_ref, p_b_ref = emission_probabilities(traj, DECAY, traj.times[-1])
    # the default-span reference truncates its radiative tail at e^-10; the
    # closed-form tail has no such cutoff, so agreement is bounded by that
    assert p_x_fast == pytest.approx(p_x_ref, abs=2 * np.exp(-10))
    assert p_b_fast == pytest.approx(p_b_ref, abs=1e-7)


def test_emission_after_pulse_needs_decay():
    drive = PulseDrive(omega0=0.1, sigma=5.0)
    with pytest.raises(ValueError):
        emission_after_pulse(drive, DecayRates(0.0, 0.0), NO_DEPH)


def test_first_cycle_extrema_ordering():
    a_max, v_max, a_min, v_min = first_cycle_extrema(
        12.0, DephasingModel(0.0, 0.0349, 2), DECAY, delta_x=3.5)
    assert a_max < a_min
    assert v_max > v_min > 0.0
    # the coherent estimate is the right scale
    assert 0.5 < a_max / coherent_first_max_area(12.0, 3.5) < 1.6


def test_first_cycle_overdamped_raises():
    with pytest.raises(OverdampedError):
        first_cycle_extrema(12.0, DephasingModel(gamma_bg=0.5), DECAY,
                            delta_x=0.5)


def test_fit_gamma_i0_validation():
    with pytest.raises(ValueError, match="target_ratio"):
        fit_gamma_i0(2, 0.9, 12.0, DECAY)
    with pytest.raises(ValueError, match="n_p"):
        fit_gamma_i0(7, 2.0, 12.0, DECAY)


def test_fit_gamma_i0_unreachable_target():
    # the undamped curve's ratio bounds what any fit can reach
    with pytest.raises(ValueError, match="unreachable"):
        fit_gamma_i0(2, 1e9, 12.0, DECAY, delta_x=3.5)


def test_fit_gamma_i0_round_trip_quick():
    planted = 0.05
    deph = DephasingModel(0.0, planted, 2)
    r = first_cycle_ratio(12.0, deph, DECAY, delta_x=3.5)
    fitted = fit_gamma_i0(2, r, 12.0, DECAY, delta_x=3.5)
    assert fitted == pytest.approx(planted, rel=0.02)


def test_monotone_damping_property():
    # the first-cycle ratio never increases with the dephasing amplitude
    gammas = np.linspace(0.0, 0.09, 10)
    ratios = [first_cycle_ratio(12.0, DephasingModel(0.0, g, 2), DECAY,
                                delta_x=3.5, tol=1e-7) for g in gammas]
    assert all(a >= b - 1e-6 for a, b in zip(ratios, ratios[1:]))


def test_ratio_sweep_zero_drive_saturated():
    res = ratio_sweep([12.0], [1e-10, 1.0, 2.0], NO_DEPH, DECAY,
                      delta_x=3.5)[0]
    assert res.saturated[0]
    assert np.isfinite(res.ratio[0])


def test_ratio_sweep_validates():
    with pytest.raises(ValueError):
        ratio_sweep([], [1.0, 2.0], NO_DEPH, DECAY)
    with pytest.raises(ValueError):
        ratio_sweep([12.0], [2.0, 1.0], NO_DEPH, DECAY)


def test_ratio_sweep_longer_pulse_wins():
    deph = DephasingModel(0.01, 0.0349, 2)
    energies = np.linspace(1.0, 16.0, 10)
    short, long = ratio_sweep([4.0, 12.0], energies, deph, DECAY,
                              delta_x=3.5)
    assert long.peak_ratio > short.peak_ratio
    assert short.sigma == 4.0 and long.sigma == 12.0
    assert long.abscissa_kind == "energy"


def test_sweep_csv_export(tmp_path):
    res = rabi_sweep(12.0, DephasingModel(0.0, 0.02, 2), DECAY,
                     areas=[1.0, 2.0, 3.0], delta_x=0.5)
    path = tmp_path / "sweep.csv"
    export_sweep_csv(res, path, extra_params={"tag": "test"})
    lines = path.read_text().splitlines()
    header = json.loads(lines[0][2:])
    assert header["sigma"] == 12.0
    assert header["dephasing"]["gamma_i0"] == 0.02
    assert header["tag"] == "test"
    assert lines[1] == "theta,omega0,energy,p_b,p_x,ratio,saturated"
    assert len(lines) == 2 + 3
    row = [float(v) for v in lines[2].split(",")]
    assert row[0] == pytest.approx(1.0)  # theta round trip
    assert row[1] == pytest.approx(omega0_for_area(1.0, 12.0))


def test_parallel_workers_match_serial():
    areas = np.linspace(2.0, 10.0, 4)
    serial = rabi_sweep(12.0, NO_DEPH, DECAY, areas, delta_x=0.5, workers=1)
    parallel = rabi_sweep(12.0, NO_DEPH, DECAY, areas, delta_x=0.5, workers=2)
    assert np.array_equal(serial.p_b, parallel.p_b)
    assert np.array_equal(serial.p_x, parallel.p_x)
