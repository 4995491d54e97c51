"""Compiled inner loops of the finite-volume solver.

Face arrays have length N + 1; entry k is the face between cells k - 1
and k, so faces 0 and N are the outer boundaries (always zero flux).
"""

import numpy as np
from numba import njit

POWER = 0
SINGULAR = 1

OK = 0
BLOWUP = 1

GUARD = 1e-30
SINGULAR_CAP = 1.0 - 1e-10


@njit(cache=True)
def q_of(law, param, r):
    if law == POWER:
        return r**param
    return param * (r / (1.0 - r) + np.log1p(-r))


@njit(cache=True)
def q_prime_of(law, param, r):
    if law == POWER:
        return param * r ** (param - 1.0)
    return param * r / ((1.0 - r) * (1.0 - r))


@njit(cache=True)
def occupied_window(rho):
    """Cells that can change in one step: the support plus one cell each side."""
    n = rho.shape[0]
    lo = 0
    while lo < n and rho[lo] == 0.0:
        lo += 1
    if lo == n:
        return 0, 0
    hi = n - 1
    while rho[hi] == 0.0:
        hi -= 1
    return max(lo - 1, 0), min(hi + 2, n)


@njit(cache=True)
def face_velocity(rho, v_static, kmat, out):
    """Split drift speeds at every face: out[0] >= 0 carries mass forward from
    the left cell, out[1] <= 0 carries it backward from the right cell.

    Each source cell's interaction contribution is upwinded on its own. For
    an even W the pairwise terms then cancel in the total flux, so the
    barycenter is conserved exactly when V = 0. The convolution only runs
    over occupied cells and faces bounding them; other faces carry no flux.
    """
    n = rho.shape[0]
    for k in range(n + 1):
        v = v_static[k]
        out[0, k] = v if v > 0.0 else 0.0
        out[1, k] = v if v < 0.0 else 0.0
    if kmat.shape[0] > 0:
        lo, hi = occupied_window(rho)
        for k in range(max(lo, 1), min(hi + 1, n)):
            fwd = 0.0
            back = 0.0
            for j in range(lo, hi):
                w = -kmat[k, j] * rho[j]
                if w > 0.0:
                    fwd += w
                else:
                    back += w
            out[0, k] += fwd
            out[1, k] += back
    out[0, 0] = out[1, 0] = 0.0
    out[0, n] = out[1, n] = 0.0


@njit(cache=True)
def stable_dt(rho, vel, h, dim, law, param, cfl, dt_max):
    rmax = 0.0
    for r in rho:
        if r > rmax:
            rmax = r
    vmax = 0.0
    for k in range(vel.shape[1]):
        s = vel[0, k] - vel[1, k]
        if s > vmax:
            vmax = s
    qp = q_prime_of(law, param, rmax) if rmax > 0.0 else 0.0
    dt_diff = h * h / (2.0 * dim * qp + GUARD)
    dt_drift = h / (dim * vmax + GUARD)
    return min(cfl * min(dt_diff, dt_drift), dt_max)


@njit(cache=True)
def apply_step(rho, vel, dt, h, vol, area, law, param, floor, out):
    """Conservative update; returns the mass removed by floor clipping."""
    n = rho.shape[0]
    lo, hi = occupied_window(rho)
    for i in range(n):
        out[i] = rho[i]
    if hi == lo:
        return 0.0
    flux = np.zeros(n + 1)
    q_left = q_of(law, param, rho[lo])
    for k in range(max(lo, 1), min(hi + 1, n)):
        q_right = q_of(law, param, rho[k])
        upwind = vel[0, k] * rho[k - 1] + vel[1, k] * rho[k]
        flux[k] = area[k] * (upwind - (q_right - q_left) / h)
        q_left = q_right
    clipped = 0.0
    for i in range(lo, hi):
        r = rho[i] - dt * (flux[i + 1] - flux[i]) / vol[i]
        if r < floor:
            clipped += r * vol[i]
            r = 0.0
        out[i] = r
    return clipped


@njit(cache=True)
def advance(rho, t, t_end, h, dim, vol, area, v_static, kmat, law, param,
            cfl, floor, dt_max):
    """Step from t to exactly t_end. Returns (rho, steps, clipped, status)."""
    n = rho.shape[0]
    cur = rho.copy()
    nxt = np.empty(n)
    vel = np.empty((2, n + 1))
    steps = 0
    clipped = 0.0
    while t < t_end:
        face_velocity(cur, v_static, kmat, vel)
        dt = stable_dt(cur, vel, h, dim, law, param, cfl, dt_max)
        if t + dt >= t_end or t_end - (t + dt) < 1e-12 * dt:
            dt = t_end - t
            t = t_end
        else:
            t += dt
        clipped += apply_step(cur, vel, dt, h, vol, area, law, param, floor, nxt)
        cur, nxt = nxt, cur
        steps += 1
        if law == SINGULAR:
            for r in cur:
                if r >= SINGULAR_CAP:
                    return cur, steps, clipped, BLOWUP
    return cur, steps, clipped, OK
