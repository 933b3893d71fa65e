"""Pure numpy versions of the compiled kernels (same signatures)."""

import numpy as np


def rk4_linear(P, Q, X0, pw, qw, h, steps):
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    x = np.array(X0, dtype=float)
    traj = np.empty((steps + 1,) + x.shape)
    traj[0] = x

    def rhs(y, a, b):
        return a * (P @ y) + b * (y @ Q)

    for s in range(steps):
        k1 = rhs(x, pw[2 * s], qw[2 * s])
        k2 = rhs(x + 0.5 * h * k1, pw[2 * s + 1], qw[2 * s + 1])
        k3 = rhs(x + 0.5 * h * k2, pw[2 * s + 1], qw[2 * s + 1])
        k4 = rhs(x + h * k3, pw[2 * s + 2], qw[2 * s + 2])
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        traj[s + 1] = x
        if not np.all(np.isfinite(x)):
            return traj, s + 1
    return traj, -1
