import numpy as np
import pytest

from qdtimebin.ode import IntegrationError, integrate_adaptive


def test_exponential_decay():
    ts, ys = integrate_adaptive(lambda t, y: -y, (0.0, 5.0),
                                np.array([1.0]), tol=1e-10, max_step=0.5)
    assert np.abs(ys[:, 0] - np.exp(-ts)).max() < 1e-8
    assert ts[0] == 0.0 and ts[-1] == 5.0
    assert np.all(np.diff(ts) > 0)


def test_harmonic_oscillator():
    def rhs(t, y):
        return np.array([y[1], -y[0]])

    ts, ys = integrate_adaptive(rhs, (0.0, 10.0), np.array([1.0, 0.0]),
                                tol=1e-10, max_step=0.5)
    assert np.abs(ys[:, 0] - np.cos(ts)).max() < 1e-7


def test_max_step_respected():
    ts, _ = integrate_adaptive(lambda t, y: 0.0 * y, (0.0, 1.0),
                               np.array([1.0]), tol=1e-6, max_step=0.01)
    assert np.diff(ts).max() <= 0.01 + 1e-12


def test_step_callback_runs_per_accepted_step():
    seen = []
    integrate_adaptive(lambda t, y: -y, (0.0, 1.0), np.array([1.0]),
                       tol=1e-8, max_step=0.1,
                       step_callback=lambda t, y: seen.append(t))
    assert seen and seen[-1] == 1.0


def test_underflow_reports_failure_time():
    # finite-time blow-up: y' = y^2, y(0)=1 diverges at t=1
    with pytest.raises(IntegrationError) as err:
        integrate_adaptive(lambda t, y: y ** 2, (0.0, 2.0), np.array([1.0]),
                           tol=1e-10, max_step=0.5)
    assert 0.9 < err.value.t <= 1.05


def test_input_validation():
    with pytest.raises(ValueError, match="tol"):
        integrate_adaptive(lambda t, y: -y, (0.0, 1.0), np.array([1.0]),
                           tol=1e-2, max_step=0.1)
    with pytest.raises(ValueError, match="increasing"):
        integrate_adaptive(lambda t, y: -y, (1.0, 0.0), np.array([1.0]),
                           tol=1e-8, max_step=0.1)
