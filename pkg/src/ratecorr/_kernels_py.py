"""Pure-NumPy Euler-Maruyama trial kernels; fallback twin of _kernels.pyx.

Each function advances one trial through all time steps given pre-drawn
noise.  A trial's arithmetic is self-contained, so results depend only on
(master seed, trial index) regardless of how trials are scheduled.

Blowup contract: each kernel returns (trajectory, blow_step); blow_step = 0
means the trial completed, otherwise it is the 1-based step at which some
state exceeded the guard and the trajectory is valid only before it.
"""

import numpy as np

# (m, n) with 1 <= m <= n <= 5; fixed ordering shared with the wrapper.
PAIR_INDEX = tuple((m, n) for m in range(1, 6) for n in range(m, 6))

TWO_PI = 2.0 * np.pi


def _sigmoid(v, tmax, slope, vt):
    return tmax * 0.5 * (1.0 + np.tanh(0.5 * slope * (v - vt)))


def exact_path(v0, jm, jz, use_z, i0, s5, use_h, tau, tmax, slope, vt,
               dt, noise, limit):
    """Nonlinear rate equations; noise rows are the pre-scaled s1*dB increments."""
    n_steps = noise.shape[0]
    v = v0.copy()
    traj = np.empty((n_steps + 1, v.size))
    traj[0] = v
    for k in range(n_steps):
        t = k * dt
        j = jm + np.exp(-t) * jz if use_z else jm
        drift = -v / tau + j @ _sigmoid(v, tmax, slope, vt) + i0
        if use_h:
            drift = drift + s5 * np.sin(TWO_PI * t)
        v = v + drift * dt + noise[k]
        if np.abs(v).max() > limit:
            return traj, k + 1
        traj[k + 1] = v
    return traj, 0


def order1_path(y20, jeff, w_src, z_src, h_src, tau, dt, noise, limit):
    """First-order states Y_1..Y_5; jeff = S'(mu) * J, sources pre-scaled.

    noise rows are unit-intensity dB increments (only Y_1 is stochastic);
    w_src = S(mu) * row sums of W/M; z_src[k] = S(mu) * row sum of Z(t_k)/M.
    """
    n_steps, n = noise.shape
    y = np.zeros((5, n))
    y[1] = y20
    traj = np.empty((n_steps + 1, 5, n))
    traj[0] = y
    for k in range(n_steps):
        dy = -y / tau + y @ jeff.T
        dy[2] += w_src
        dy[3] += z_src[k]
        dy[4] += h_src[k]
        y = y + dy * dt
        y[0] = y[0] + noise[k]
        if np.abs(y).max() > limit:
            return traj, k + 1
        traj[k + 1] = y
    return traj, 0


def order2_path(y20, jeff, j2, w_eff, w_src, z_src, zpair, h_src, tau, dt,
                noise, limit):
    """First- plus second-order states Y_m and Y_{m,n}.

    Pair (m, n) integrates S'(mu) J Y_{m,n} + c S''(mu) J (Y_m Y_n) with
    c = 1/2 on the diagonal, plus the matrix-perturbation couplings:
    S'(mu) (W/M) Y_other when 3 is in the pair (w_eff), and
    zpair[k] * jeff Y_other when 4 is in the pair (zpair folds the time
    profile of Z; S' Z(t)/M = zpair(t) * jeff when Z tracks the adjacency).
    """
    n_steps, n = noise.shape
    y = np.zeros((5, n))
    y[1] = y20
    yp = np.zeros((15, n))
    traj = np.empty((n_steps + 1, 20, n))
    traj[0, :5] = y
    traj[0, 5:] = yp
    for k in range(n_steps):
        dy = -y / tau + y @ jeff.T
        dy[2] += w_src
        dy[3] += z_src[k]
        dy[4] += h_src[k]
        dyp = -yp / tau + yp @ jeff.T
        zk = zpair[k]
        for idx, (m, nn) in enumerate(PAIR_INDEX):
            prod = y[m - 1] * y[nn - 1]
            src = (0.5 if m == nn else 1.0) * (j2 @ prod)
            if m == 3 or nn == 3:
                src = src + w_eff @ (y[nn - 1] if m == 3 else y[m - 1])
            if zk != 0.0 and (m == 4 or nn == 4):
                src = src + zk * (jeff @ (y[nn - 1] if m == 4 else y[m - 1]))
            dyp[idx] += src
        y = y + dy * dt
        yp = yp + dyp * dt
        y[0] = y[0] + noise[k]
        if max(np.abs(y).max(), np.abs(yp).max()) > limit:
            return traj, k + 1
        traj[k + 1, :5] = y
        traj[k + 1, 5:] = yp
    return traj, 0
