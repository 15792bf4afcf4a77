"""Independent reference solutions used only by the test suite.

The smooth Riccati flow Qdot = a + b*Q + g*Q^2 linearizes through
Q = -udot/(g*u) to the 2x2 linear system d/dt (u, v) = M (u, v) with
M = [[0, 1], [-a*g, b]] and v = udot.  Propagating (u, v) with
scipy.linalg.expm over each inter-kick gap and applying the exact phase
rotation Q -> Q*exp(i*x) at kicks yields a piecewise-exact trajectory
that shares no code with the package's RK4 integrator.  The real part of
int Q over a gap is -(1/g) * ln|u_end/u_start|.
"""

import numpy as np
from scipy.linalg import expm


def mobius_q_reference(a, b, g, kick_times, kick_amps, grid_times):
    """Piecewise-exact Q(grid_times) and int Re Q for an impulsive Riccati flow.

    kick_times must be a subset of grid_times (exact float equality), so
    the comparison against a grid-snapped integrator is kick-placement
    exact.  Grid values are post-kick, matching the integrator contract.
    """
    M = np.array([[0.0, 1.0], [-a * g, b]], dtype=complex)
    q_out = np.empty(len(grid_times), dtype=complex)
    ire_out = np.empty(len(grid_times), dtype=float)
    kicks = {float(t): x for t, x in zip(kick_times, kick_amps)}
    Q = 0.0 + 0.0j
    ire = 0.0
    prev_t = grid_times[0]
    for i, t in enumerate(grid_times):
        if i > 0:
            tau = t - prev_t
            u, v = expm(M * tau) @ np.array([1.0, -g * Q])
            Q = -v / (g * u)
            ire += -np.log(np.abs(u)) / g
            prev_t = t
        if float(t) in kicks:
            Q *= np.exp(1j * kicks[float(t)])
        q_out[i] = Q
        ire_out[i] = ire
    return q_out, ire_out
