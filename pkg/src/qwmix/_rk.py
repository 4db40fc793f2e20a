"""Adaptive embedded Runge-Kutta driver for complex linear-size systems.

Dormand-Prince 5(4) with FSAL, PI-free standard step control, and
sample-grid dense output (cubic Hermite on the endpoint derivatives).
The step loop is compiled with numba: the strongly driven regimes are
stability-limited at millions of steps per run, far beyond what a
Python-callback integrator can do in the acceptance-time budget.

`make_driver(rhs)` specializes the compiled loop to one jitted RHS of
signature ``rhs(tau, y, p, out)`` with ``y``/``out`` complex128 1-D and
``p`` a complex128 parameter vector.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# Dormand-Prince RK5(4)7M tableau.
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
# Error weights: 5th-order propagated solution minus the embedded 4th.
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1
STATUS_NON_FINITE = 2
STATUS_MAX_STEPS = 3

DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-12
MAX_STEPS = 80_000_000


class StepSizeUnderflow(RuntimeError):
    """Step size collapsed below machine resolution (stiffness or bad params)."""


class NonFinite(RuntimeError):
    """The state left the finite range (divergence)."""


def make_driver(rhs):
    """Compile an adaptive DP54 loop specialized to one jitted RHS.

    Returns
    -------
    callable
        ``driver(y0, t0, t1, p, rtol, atol, sample_ts, fixed_h, max_h,
        max_steps) -> (y_end, samples, status, n_steps, n_rejected)``.
        ``samples[j]`` interpolates the solution at ``sample_ts[j]``
        (sorted, inside [t0, t1]).  ``fixed_h > 0`` disables error
        control and marches with that step.
    """

    @njit(cache=True)
    def driver(y0, t0, t1, p, rtol, atol, sample_ts, fixed_h, max_h, max_steps):
        n = y0.shape[0]
        y = y0.copy()
        yt = np.empty(n, np.complex128)
        ynew = np.empty(n, np.complex128)
        k = np.empty((7, n), np.complex128)

        n_samp = sample_ts.shape[0]
        samples = np.empty((n_samp, n), np.complex128)
        si = 0
        t = t0
        while si < n_samp and sample_ts[si] <= t:
            for i in range(n):
                samples[si, i] = y[i]
            si += 1

        rhs(t, y, p, k[0])

        # Initial step: conservative curvature-free guess, then let the
        # controller adapt.  Fixed-step mode bypasses all of this.
        if fixed_h > 0.0:
            h = fixed_h
        else:
            d0 = 0.0
            d1 = 0.0
            for i in range(n):
                sc = atol + rtol * abs(y[i])
                q0 = abs(y[i]) / sc
                q1 = abs(k[0, i]) / sc
                d0 += q0 * q0
                d1 += q1 * q1
            d0 = np.sqrt(d0 / n)
            d1 = np.sqrt(d1 / n)
            if d0 < 1e-5 or d1 < 1e-5:
                h = 1e-6
            else:
                h = 0.01 * d0 / d1
            if h > max_h:
                h = max_h
            if h > t1 - t0:
                h = t1 - t0

        status = STATUS_OK
        n_steps = 0
        n_rejected = 0
        nonfinite_seen = False

        while t < t1:
            if n_steps + n_rejected >= max_steps:
                status = STATUS_MAX_STEPS
                break
            if fixed_h > 0.0:
                h = fixed_h
            if h > max_h:
                h = max_h
            # Land on the next sample time when it is a real step away:
            # samples are then error-controlled solution points.  A
            # roundoff-sized gap is left to the interpolant instead of
            # being forced into a degenerate step.
            if si < n_samp and t + h > sample_ts[si]:
                h_clip = sample_ts[si] - t
                if h_clip > 1e-9 * max(1.0, abs(t)):
                    h = h_clip
            last = False
            if t + h >= t1:
                h = t1 - t
                last = True
            min_h = 1e-14 * max(1.0, abs(t))
            if h < min_h and not last:
                status = STATUS_NON_FINITE if nonfinite_seen else STATUS_STEP_UNDERFLOW
                break

            for i in range(n):
                yt[i] = y[i] + h * (_A21 * k[0, i])
            rhs(t + _C2 * h, yt, p, k[1])
            for i in range(n):
                yt[i] = y[i] + h * (_A31 * k[0, i] + _A32 * k[1, i])
            rhs(t + _C3 * h, yt, p, k[2])
            for i in range(n):
                yt[i] = y[i] + h * (_A41 * k[0, i] + _A42 * k[1, i] + _A43 * k[2, i])
            rhs(t + _C4 * h, yt, p, k[3])
            for i in range(n):
                yt[i] = y[i] + h * (
                    _A51 * k[0, i] + _A52 * k[1, i] + _A53 * k[2, i] + _A54 * k[3, i]
                )
            rhs(t + _C5 * h, yt, p, k[4])
            for i in range(n):
                yt[i] = y[i] + h * (
                    _A61 * k[0, i] + _A62 * k[1, i] + _A63 * k[2, i] + _A64 * k[3, i] + _A65 * k[4, i]
                )
            rhs(t + h, yt, p, k[5])
            for i in range(n):
                ynew[i] = y[i] + h * (
                    _B1 * k[0, i] + _B3 * k[2, i] + _B4 * k[3, i] + _B5 * k[4, i] + _B6 * k[5, i]
                )
            rhs(t + h, ynew, p, k[6])

            err = 0.0
            finite = True
            for i in range(n):
                e = h * (
                    _E1 * k[0, i] + _E3 * k[2, i] + _E4 * k[3, i]
                    + _E5 * k[4, i] + _E6 * k[5, i] + _E7 * k[6, i]
                )
                ay = abs(ynew[i])
                if not np.isfinite(ay):
                    finite = False
                    break
                sc = atol + rtol * max(abs(y[i]), ay)
                q = abs(e) / sc
                err += q * q
            if finite:
                err = np.sqrt(err / n)
            else:
                err = np.inf

            accept = fixed_h > 0.0 or (finite and err <= 1.0)
            if accept and not finite:
                status = STATUS_NON_FINITE
                break

            if accept:
                t_new = t + h
                # Cubic Hermite dense output on (y, f) endpoint pairs;
                # max_h keeps its error below projection tolerances.
                while si < n_samp and sample_ts[si] <= t_new + 1e-15 * max(1.0, abs(t_new)):
                    ts = sample_ts[si]
                    th = (ts - t) / h
                    h00 = (1.0 + 2.0 * th) * (1.0 - th) ** 2
                    h10 = th * (1.0 - th) ** 2
                    h01 = th * th * (3.0 - 2.0 * th)
                    h11 = th * th * (th - 1.0)
                    for i in range(n):
                        samples[si, i] = (
                            h00 * y[i] + h10 * h * k[0, i] + h01 * ynew[i] + h11 * h * k[6, i]
                        )
                    si += 1
                t = t_new
                for i in range(n):
                    y[i] = ynew[i]
                    k[0, i] = k[6, i]
                n_steps += 1
                if fixed_h <= 0.0:
                    fac = 0.9 * err ** -0.2 if err > 1e-300 else 5.0
                    if fac > 5.0:
                        fac = 5.0
                    h = h * fac
            else:
                n_rejected += 1
                nonfinite_seen = nonfinite_seen or not finite
                if finite:
                    fac = 0.9 * err ** -0.2
                    if fac < 0.2:
                        fac = 0.2
                    h = h * fac
                else:
                    h = 0.25 * h

        while si < n_samp and sample_ts[si] <= t1 + 1e-12 * max(1.0, abs(t1)):
            for i in range(n):
                samples[si, i] = y[i]
            si += 1

        return y, samples, status, n_steps, n_rejected

    return driver


def raise_for_status(status: int, context: str = ""):
    where = f" ({context})" if context else ""
    if status == STATUS_OK:
        return
    if status == STATUS_STEP_UNDERFLOW:
        raise StepSizeUnderflow(f"step size underflow{where}")
    if status == STATUS_NON_FINITE:
        raise NonFinite(f"non-finite state encountered{where}")
    raise RuntimeError(f"step budget exhausted{where}")
