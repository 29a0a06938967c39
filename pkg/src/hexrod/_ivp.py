"""Adaptive Dormand-Prince 5(4) march of the 18-component rod state.

The rod equilibrium ODE is integrated thousands of times per solve (six
legs x 43 residual evaluations per Jacobian), so the stepper is written
in numba-compatible form and jitted when numba is available.  The state
vector is y = [p(3), R row-major(9), n(3), m(3)]; the constant problem
data travels in a flat pack:

    pack = [kse_inv(3), kbt_inv(3), v_star(3), u_star(3), f(3)]

with kse_inv/kbt_inv the inverse diagonals of the shear-extension and
bending-torsion stiffness matrices and f the distributed load (N/m,
world frame).

Status codes returned by the march: 0 ok, 1 step-size underflow or step
budget exhausted, 2 non-finite state encountered.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda func: func

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1
STATUS_NON_FINITE = 2

# Dormand-Prince 5(4) tableau (the classic RK45 pair).
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                                49.0 / 176.0, -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                                -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)

# Dense-output polynomial coefficients (quartic in the step fraction).
_P = np.array([
    [1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0,
     -12715105075.0 / 11282082432.0],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0,
     87487479700.0 / 32700410799.0],
    [0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0,
     -10690763975.0 / 1880347072.0],
    [0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0,
     701980252875.0 / 199316789632.0],
    [0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0,
     -1453857185.0 / 822651844.0],
    [0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0,
     69997945.0 / 29380423.0],
])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_MAX_STEPS = 1_000_000


@njit(cache=True)
def _rhs(y, pack, out):
    """Rod equilibrium right-hand side; writes dy/ds into out."""
    # Body-frame strains from the inverted constitutive law.
    rtn0 = y[3] * y[12] + y[6] * y[13] + y[9] * y[14]
    rtn1 = y[4] * y[12] + y[7] * y[13] + y[10] * y[14]
    rtn2 = y[5] * y[12] + y[8] * y[13] + y[11] * y[14]
    rtm0 = y[3] * y[15] + y[6] * y[16] + y[9] * y[17]
    rtm1 = y[4] * y[15] + y[7] * y[16] + y[10] * y[17]
    rtm2 = y[5] * y[15] + y[8] * y[16] + y[11] * y[17]
    v0 = pack[0] * rtn0 + pack[6]
    v1 = pack[1] * rtn1 + pack[7]
    v2 = pack[2] * rtn2 + pack[8]
    u0 = pack[3] * rtm0 + pack[9]
    u1 = pack[4] * rtm1 + pack[10]
    u2 = pack[5] * rtm2 + pack[11]
    # p' = R v
    out[0] = y[3] * v0 + y[4] * v1 + y[5] * v2
    out[1] = y[6] * v0 + y[7] * v1 + y[8] * v2
    out[2] = y[9] * v0 + y[10] * v1 + y[11] * v2
    # R' = R hat(u), row-major rows of R are y[3:6], y[6:9], y[9:12]
    out[3] = y[4] * u2 - y[5] * u1
    out[4] = y[5] * u0 - y[3] * u2
    out[5] = y[3] * u1 - y[4] * u0
    out[6] = y[7] * u2 - y[8] * u1
    out[7] = y[8] * u0 - y[6] * u2
    out[8] = y[6] * u1 - y[7] * u0
    out[9] = y[10] * u2 - y[11] * u1
    out[10] = y[11] * u0 - y[9] * u2
    out[11] = y[9] * u1 - y[10] * u0
    # n' = -f
    out[12] = -pack[12]
    out[13] = -pack[13]
    out[14] = -pack[14]
    # m' = -p' x n
    out[15] = -(out[1] * y[14] - out[2] * y[13])
    out[16] = -(out[2] * y[12] - out[0] * y[14])
    out[17] = -(out[0] * y[13] - out[1] * y[12])


@njit(cache=True)
def march(y0, length, pack, rtol, atol, max_step, first_step, s_samples, samples_out, p_dense):
    """Integrate from s=0 to s=length; fill samples_out at s_samples via dense output.

    s_samples must be sorted ascending within [0, length]; samples_out has
    shape (len(s_samples), 18).  Returns (status, y_final, n_steps).
    """
    n = 18
    y = y0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)
    y_stage = np.empty(n)
    y_new = np.empty(n)

    for i in range(n):
        if not np.isfinite(y[i]):
            return STATUS_NON_FINITE, y, 0

    n_samples = s_samples.shape[0]
    sample_idx = 0
    while sample_idx < n_samples and s_samples[sample_idx] <= 0.0:
        samples_out[sample_idx, :] = y
        sample_idx += 1

    s = 0.0
    h = first_step if first_step > 0.0 else length * 1e-2
    if h > max_step:
        h = max_step
    min_step = 1e-14 * length

    _rhs(y, pack, k1)
    n_steps = 0
    while s < length:
        if n_steps >= _MAX_STEPS:
            return STATUS_STEP_UNDERFLOW, y, n_steps
        if h < min_step:
            return STATUS_STEP_UNDERFLOW, y, n_steps
        if s + h > length:
            h = length - s

        for i in range(n):
            y_stage[i] = y[i] + h * _A21 * k1[i]
        _rhs(y_stage, pack, k2)
        for i in range(n):
            y_stage[i] = y[i] + h * (_A31 * k1[i] + _A32 * k2[i])
        _rhs(y_stage, pack, k3)
        for i in range(n):
            y_stage[i] = y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
        _rhs(y_stage, pack, k4)
        for i in range(n):
            y_stage[i] = y[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
        _rhs(y_stage, pack, k5)
        for i in range(n):
            y_stage[i] = y[i] + h * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i]
                                     + _A64 * k4[i] + _A65 * k5[i])
        _rhs(y_stage, pack, k6)
        for i in range(n):
            y_new[i] = y[i] + h * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i]
                                   + _B5 * k5[i] + _B6 * k6[i])
        _rhs(y_new, pack, k7)

        err_sq = 0.0
        finite = True
        for i in range(n):
            if not np.isfinite(y_new[i]):
                finite = False
                break
            err_i = h * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i]
                         + _E5 * k5[i] + _E6 * k6[i] + _E7 * k7[i])
            ay = abs(y[i])
            ayn = abs(y_new[i])
            scale = atol + rtol * (ay if ay > ayn else ayn)
            ratio = err_i / scale
            err_sq += ratio * ratio
        if not finite:
            return STATUS_NON_FINITE, y, n_steps
        err_norm = np.sqrt(err_sq / n)

        if err_norm <= 1.0:
            s_new = s + h
            # Dense output over the accepted step for any pending samples.
            while sample_idx < n_samples and s_samples[sample_idx] <= s_new:
                theta = (s_samples[sample_idx] - s) / h
                if theta > 1.0:
                    theta = 1.0
                t2 = theta * theta
                t3 = t2 * theta
                t4 = t3 * theta
                for i in range(n):
                    acc = (k1[i] * (p_dense[0, 0] * theta + p_dense[0, 1] * t2
                                    + p_dense[0, 2] * t3 + p_dense[0, 3] * t4)
                           + k3[i] * (p_dense[2, 0] * theta + p_dense[2, 1] * t2
                                      + p_dense[2, 2] * t3 + p_dense[2, 3] * t4)
                           + k4[i] * (p_dense[3, 0] * theta + p_dense[3, 1] * t2
                                      + p_dense[3, 2] * t3 + p_dense[3, 3] * t4)
                           + k5[i] * (p_dense[4, 0] * theta + p_dense[4, 1] * t2
                                      + p_dense[4, 2] * t3 + p_dense[4, 3] * t4)
                           + k6[i] * (p_dense[5, 0] * theta + p_dense[5, 1] * t2
                                      + p_dense[5, 2] * t3 + p_dense[5, 3] * t4)
                           + k7[i] * (p_dense[6, 0] * theta + p_dense[6, 1] * t2
                                      + p_dense[6, 2] * t3 + p_dense[6, 3] * t4))
                    samples_out[sample_idx, i] = y[i] + h * acc
                sample_idx += 1
            s = s_new
            for i in range(n):
                y[i] = y_new[i]
                k1[i] = k7[i]
            if err_norm == 0.0:
                factor = _MAX_FACTOR
            else:
                factor = _SAFETY * err_norm ** -0.2
                if factor > _MAX_FACTOR:
                    factor = _MAX_FACTOR
                elif factor < _MIN_FACTOR:
                    factor = _MIN_FACTOR
            h *= factor
            if h > max_step:
                h = max_step
        else:
            factor = _SAFETY * err_norm ** -0.2
            if factor < _MIN_FACTOR:
                factor = _MIN_FACTOR
            h *= factor
        n_steps += 1

    # Samples exactly at s=length use the final state directly.
    while sample_idx < n_samples:
        samples_out[sample_idx, :] = y
        sample_idx += 1
    return STATUS_OK, y, n_steps


def integrate(y0, length, pack, rtol, atol, max_step=np.inf, first_step=0.0, s_samples=None):
    """Convenience wrapper; returns (status, y_final, samples (n,18), n_steps)."""
    if s_samples is None:
        s_samples = np.empty(0)
    samples_out = np.empty((s_samples.shape[0], 18))
    status, y_final, n_steps = march(
        np.ascontiguousarray(y0, dtype=np.float64), float(length),
        np.ascontiguousarray(pack, dtype=np.float64), float(rtol), float(atol),
        float(max_step), float(first_step),
        np.ascontiguousarray(s_samples, dtype=np.float64), samples_out, _P)
    return status, y_final, samples_out, n_steps
