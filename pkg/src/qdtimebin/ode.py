"""Adaptive embedded Runge-Kutta integration (Dormand-Prince 4(5) pair).

Operates on flat real float64 state vectors; complex problems are expected
to pass a real view of their state.  Every accepted step is recorded, which
is what the trajectory consumers downstream rely on.
"""

from __future__ import annotations

from typing import Callable

import numpy as np


class IntegrationError(RuntimeError):
    """Step-size underflow or invariant failure; carries the failure time."""

    def __init__(self, message: str, t: float):
        super().__init__(message)
        self.t = t


# Dormand-Prince coefficients; the 5th-order solution is propagated and the
# embedded 4th-order one supplies the local error estimate (FSAL).
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = _B - np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                    -92097 / 339200, 187 / 2100, 1 / 40])

MIN_STEP_FACTOR = 0.2
MAX_STEP_FACTOR = 5.0
SAFETY = 0.9


def _error_norm(err: np.ndarray, y0: np.ndarray, y1: np.ndarray, tol: float) -> float:
    scale = tol + tol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def integrate_adaptive(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    t_span: tuple[float, float],
    y0: np.ndarray,
    tol: float,
    max_step: float,
    step_callback: Callable[[float, np.ndarray], None] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate ``dy/dt = rhs(t, y)`` over ``t_span`` with local error <= tol.

    Returns the accepted time grid and the states at those times (row per
    time, including both endpoints).  ``step_callback``, when given, is run
    after each accepted step and may raise to abort (e.g. invariant checks).

    Raises IntegrationError on step-size underflow.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError(f"t_span must be increasing, got {t_span}")
    if not 0.0 < tol <= 1e-3:
        raise ValueError(f"tol must be in (0, 1e-3], got {tol}")
    span = t1 - t0
    max_step = min(float(max_step), span)
    min_step = 1e-14 * max(abs(t0), abs(t1), 1.0)

    y = np.array(y0, dtype=float, copy=True)
    k = np.empty((7, y.size))
    k[0] = rhs(t0, y)

    # Initial step from the first derivative, deliberately conservative.
    d0 = float(np.max(np.abs(y))) + 1.0
    d1 = float(np.max(np.abs(k[0])))
    h = min(max_step, 0.01 * d0 / d1 if d1 > 0 else max_step)

    times = [t0]
    states = [y.copy()]
    t = t0

    while t < t1:
        h = min(h, t1 - t, max_step)
        if h < min_step:
            raise IntegrationError(
                f"step size underflow ({h:.3e}) at t = {t:.6g}", t)

        for i in range(1, 7):
            yi = y + h * (k[:i].T @ _A[i])
            k[i] = rhs(t + _C[i] * h, yi)
        y_new = y + h * (k.T @ _B)
        err = h * (k.T @ _E)
        norm = _error_norm(err, y, y_new, tol)

        if norm <= 1.0:
            t = t + h
            if abs(t1 - t) < 1e-12 * max(1.0, abs(t1)):
                t = t1  # snap the endpoint against float drift
            # FSAL: k7 was evaluated at (t+h, y_new)
            k[0] = k[6]
            y = y_new
            times.append(t)
            states.append(y.copy())
            if step_callback is not None:
                step_callback(t, y)
            factor = MAX_STEP_FACTOR if norm == 0.0 else \
                min(MAX_STEP_FACTOR, SAFETY * norm ** -0.2)
            h *= max(MIN_STEP_FACTOR, factor)
        else:
            # rejected; k[0] still holds rhs(t, y)
            h *= max(MIN_STEP_FACTOR, SAFETY * norm ** -0.2)

    return np.array(times), np.array(states)
