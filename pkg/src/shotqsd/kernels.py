"""Low-level fixed-step integrators (numba-compiled when available).

The smooth Riccati flow  Qdot = a + b*Q + g*Q^2  is advanced with the
classical 4th-order Runge-Kutta scheme on a uniform grid.  Delta kicks of
the control noise enter exactly as multiplicative phases at their grid
index: Q -> Q*exp(i*x) (and A -> A*exp(-i*x/2), B -> B*exp(+i*x/2) for the
two state components).  Kick indices must be sorted ascending.

The running integral I(t) = int_0^t Q ds is co-integrated as an extra RK4
state (dI/dt = Q), so fidelity exponents inherit the 4th-order accuracy.
The delta kicks contribute nothing to I (Q stays finite across a kick).

Grid values are recorded *post-kick*: out[k] is Q(t_k+) including any kick
at t_k itself.  All kernels release the GIL so thread pools parallelize.
"""

from __future__ import annotations

import numpy as np

try:
    import numba

    NUMBA_AVAILABLE = True

    def _njit(func):
        return numba.njit(cache=True, nogil=True)(func)

except ImportError:  # pragma: no cover - exercised via .py_func in tests
    NUMBA_AVAILABLE = False

    def _njit(func):
        func.py_func = func
        return func

__all__ = ["NUMBA_AVAILABLE", "riccati_rk4", "riccati_rk4_washout", "state_rk4"]

OK = 0
DIVERGED = 1


@_njit
def riccati_rk4(a, b, g, dt, n_steps, kick_idx, kick_x, out_stride, guard):
    """Integrate Q and I = int Q dt; record both every ``out_stride`` steps.

    Returns (q_out, i_out, status, blow_index).  On divergence the outputs
    beyond the blow-up point hold NaN.
    """
    n_out = n_steps // out_stride + 1
    q_out = np.full(n_out, np.nan, dtype=np.complex128)
    i_out = np.full(n_out, np.nan, dtype=np.complex128)
    Q = 0.0 + 0.0j
    I = 0.0 + 0.0j
    ptr = 0
    nk = len(kick_idx)
    status = OK
    blow = -1
    for k in range(n_steps + 1):
        while ptr < nk and kick_idx[ptr] == k:
            x = kick_x[ptr]
            Q = Q * complex(np.cos(x), np.sin(x))
            ptr += 1
        if k % out_stride == 0:
            q_out[k // out_stride] = Q
            i_out[k // out_stride] = I
        if k == n_steps:
            break
        k1 = a + Q * (b + g * Q)
        q2 = Q + 0.5 * dt * k1
        k2 = a + q2 * (b + g * q2)
        q3 = Q + 0.5 * dt * k2
        k3 = a + q3 * (b + g * q3)
        q4 = Q + dt * k3
        k4 = a + q4 * (b + g * q4)
        I = I + dt * Q + dt * dt / 6.0 * (k1 + k2 + k3)
        Q = Q + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if abs(Q) > guard:
            status = DIVERGED
            blow = k + 1
            break
    return q_out, i_out, status, blow


@_njit
def riccati_rk4_washout(a, b, g, omega, dt, n_steps, kick_idx, kick_x, out_stride, guard):
    """Riccati integration plus washout-integrand accumulators.

    Tracks phi(t) = omega*t + sum of kick phases, the pure-phase factor
    N(t) = exp(-i*phi), the survival amplitude of the deterministic
    reduction A(t) = exp(-i*phi/2 - g*I), the slow factor h(t) = -Q*A and
    the running integrals  Inh = int conj(N)*h ds  and  In = int N ds
    (trapezoid with one-sided limits at kicks).

    Returns (q_out, i_out, n_out_arr, h_out, inh_out, in_out, status, blow).
    """
    n_out = n_steps // out_stride + 1
    q_out = np.full(n_out, np.nan, dtype=np.complex128)
    i_out = np.full(n_out, np.nan, dtype=np.complex128)
    n_out_arr = np.full(n_out, np.nan, dtype=np.complex128)
    h_out = np.full(n_out, np.nan, dtype=np.complex128)
    inh_out = np.full(n_out, np.nan, dtype=np.complex128)
    in_out = np.full(n_out, np.nan, dtype=np.complex128)
    Q = 0.0 + 0.0j
    I = 0.0 + 0.0j
    Inh = 0.0 + 0.0j
    In = 0.0 + 0.0j
    phi_kick = 0.0
    ptr = 0
    nk = len(kick_idx)
    status = OK
    blow = -1
    for k in range(n_steps + 1):
        while ptr < nk and kick_idx[ptr] == k:
            x = kick_x[ptr]
            Q = Q * complex(np.cos(x), np.sin(x))
            phi_kick += x
            ptr += 1
        t = k * dt
        phi = omega * t + phi_kick
        N = complex(np.cos(phi), -np.sin(phi))
        A = np.exp(complex(0.0, -0.5 * phi) - g * I)
        h = -Q * A
        if k % out_stride == 0:
            m = k // out_stride
            q_out[m] = Q
            i_out[m] = I
            n_out_arr[m] = N
            h_out[m] = h
            inh_out[m] = Inh
            in_out[m] = In
        if k == n_steps:
            break
        k1 = a + Q * (b + g * Q)
        q2 = Q + 0.5 * dt * k1
        k2 = a + q2 * (b + g * q2)
        q3 = Q + 0.5 * dt * k2
        k3 = a + q3 * (b + g * q3)
        q4 = Q + dt * k3
        k4 = a + q4 * (b + g * q4)
        I_n = I + dt * Q + dt * dt / 6.0 * (k1 + k2 + k3)
        Q_n = Q + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        # pre-kick values at t_{k+1}
        phi_n = omega * (t + dt) + phi_kick
        N_n = complex(np.cos(phi_n), -np.sin(phi_n))
        A_n = np.exp(complex(0.0, -0.5 * phi_n) - g * I_n)
        h_n = -Q_n * A_n
        Inh = Inh + 0.5 * dt * (np.conj(N) * h + np.conj(N_n) * h_n)
        In = In + 0.5 * dt * (N + N_n)
        Q = Q_n
        I = I_n
        if abs(Q) > guard:
            status = DIVERGED
            blow = k + 1
            break
    return q_out, i_out, n_out_arr, h_out, inh_out, in_out, status, blow


@_njit
def state_rk4(a, b, g, omega, dt, n_steps, kick_idx, kick_x, z, out_stride, guard):
    """Co-integrate (Q, A, B) for one trajectory of the linear unraveling.

    A and B are the unnormalized components on the upper and lower level:
        dA/dt = -(i*omega/2 + g*Q) * A
        dB/dt = +(i*omega/2) * B + g * z*(t) * A
    with A(0)=1, B(0)=0.  The environmental noise z* is supplied on the
    grid (length n_steps+1) and evaluated mid-step by linear interpolation.
    Kicks apply A *= exp(-i*x/2), B *= exp(+i*x/2), Q *= exp(i*x).

    Returns (a_out, b_out, status, blow_index).
    """
    n_out = n_steps // out_stride + 1
    a_out = np.full(n_out, np.nan, dtype=np.complex128)
    b_out = np.full(n_out, np.nan, dtype=np.complex128)
    Q = 0.0 + 0.0j
    A = 1.0 + 0.0j
    B = 0.0 + 0.0j
    half_i_omega = complex(0.0, 0.5 * omega)
    ptr = 0
    nk = len(kick_idx)
    status = OK
    blow = -1
    for k in range(n_steps + 1):
        while ptr < nk and kick_idx[ptr] == k:
            x = kick_x[ptr]
            Q = Q * complex(np.cos(x), np.sin(x))
            A = A * complex(np.cos(0.5 * x), -np.sin(0.5 * x))
            B = B * complex(np.cos(0.5 * x), np.sin(0.5 * x))
            ptr += 1
        if k % out_stride == 0:
            a_out[k // out_stride] = A
            b_out[k // out_stride] = B
        if k == n_steps:
            break
        z0 = z[k]
        z1 = z[k + 1]
        zm = 0.5 * (z0 + z1)
        # stage 1
        k1q = a + Q * (b + g * Q)
        k1a = -(half_i_omega + g * Q) * A
        k1b = half_i_omega * B + g * z0 * A
        # stage 2
        q2 = Q + 0.5 * dt * k1q
        a2 = A + 0.5 * dt * k1a
        b2 = B + 0.5 * dt * k1b
        k2q = a + q2 * (b + g * q2)
        k2a = -(half_i_omega + g * q2) * a2
        k2b = half_i_omega * b2 + g * zm * a2
        # stage 3
        q3 = Q + 0.5 * dt * k2q
        a3 = A + 0.5 * dt * k2a
        b3 = B + 0.5 * dt * k2b
        k3q = a + q3 * (b + g * q3)
        k3a = -(half_i_omega + g * q3) * a3
        k3b = half_i_omega * b3 + g * zm * a3
        # stage 4
        q4 = Q + dt * k3q
        a4 = A + dt * k3a
        b4 = B + dt * k3b
        k4q = a + q4 * (b + g * q4)
        k4a = -(half_i_omega + g * q4) * a4
        k4b = half_i_omega * b4 + g * z1 * a4
        Q = Q + dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
        A = A + dt / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        B = B + dt / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
        if abs(Q) > guard:
            status = DIVERGED
            blow = k + 1
            break
    return a_out, b_out, status, blow
