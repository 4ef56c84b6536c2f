"""Hot inner loops: integrator chunks, coordination numbers, Metropolis chain.

Every function here is written in the numba-compatible scalar-loop style and
compiled through :func:`ibflow.backend.jit`. With ``IBFLOW_NO_NUMBA=1`` the
identical source runs as plain Python, so both backends produce the same
numbers for the same inputs.

Kernels never draw random numbers themselves; callers pass pre-generated
noise chunks from a seeded numpy Generator, which keeps results reproducible
and independent of the backend.
"""

import math

import numpy as np

from .backend import jit
from .threehole_constants import GAUSSIANS, QUARTIC_COEFF, QUARTIC_Y_OFFSET

_A0, _X0, _Y0 = GAUSSIANS[0]
_A1, _X1, _Y1 = GAUSSIANS[1]
_A2, _X2, _Y2 = GAUSSIANS[2]
_A3, _X3, _Y3 = GAUSSIANS[3]
_Q = QUARTIC_COEFF
_YQ = QUARTIC_Y_OFFSET


def _three_hole_energy(x, y):
    e0 = _A0 * math.exp(-(x - _X0) ** 2 - (y - _Y0) ** 2)
    e1 = _A1 * math.exp(-(x - _X1) ** 2 - (y - _Y1) ** 2)
    e2 = _A2 * math.exp(-(x - _X2) ** 2 - (y - _Y2) ** 2)
    e3 = _A3 * math.exp(-(x - _X3) ** 2 - (y - _Y3) ** 2)
    return e0 + e1 + e2 + e3 + _Q * x ** 4 + _Q * (y - _YQ) ** 4


def _three_hole_grad(x, y):
    gx = 0.0
    gy = 0.0
    e0 = _A0 * math.exp(-(x - _X0) ** 2 - (y - _Y0) ** 2)
    gx += -2.0 * (x - _X0) * e0
    gy += -2.0 * (y - _Y0) * e0
    e1 = _A1 * math.exp(-(x - _X1) ** 2 - (y - _Y1) ** 2)
    gx += -2.0 * (x - _X1) * e1
    gy += -2.0 * (y - _Y1) * e1
    e2 = _A2 * math.exp(-(x - _X2) ** 2 - (y - _Y2) ** 2)
    gx += -2.0 * (x - _X2) * e2
    gy += -2.0 * (y - _Y2) * e2
    e3 = _A3 * math.exp(-(x - _X3) ** 2 - (y - _Y3) ** 2)
    gx += -2.0 * (x - _X3) * e3
    gy += -2.0 * (y - _Y3) * e3
    gx += 4.0 * _Q * x ** 3
    gy += 4.0 * _Q * (y - _YQ) ** 3
    return gx, gy


def _three_hole_chunk(state, noise, frames, stride, dt, c1, c2):
    """Advance BAOAB by ``noise.shape[0]`` steps, recording every ``stride``.

    state holds (x, y, vx, vy, fx, fy) and is updated in place. Returns the
    number of frames written (always frames.shape[0] when shapes line up).
    """
    x = state[0]
    y = state[1]
    vx = state[2]
    vy = state[3]
    fx = state[4]
    fy = state[5]
    half = 0.5 * dt
    idx = 0
    for i in range(noise.shape[0]):
        vx += half * fx
        vy += half * fy
        x += half * vx
        y += half * vy
        vx = c1 * vx + c2 * noise[i, 0]
        vy = c1 * vy + c2 * noise[i, 1]
        x += half * vx
        y += half * vy
        gx, gy = _three_hole_grad(x, y)
        fx = -gx
        fy = -gy
        vx += half * fx
        vy += half * fy
        if (i + 1) % stride == 0:
            frames[idx, 0] = x
            frames[idx, 1] = y
            idx += 1
    state[0] = x
    state[1] = y
    state[2] = vx
    state[3] = vy
    state[4] = fx
    state[5] = fy
    return idx


def _lj_forces(pos, frc, k_conf, r_conf):
    """Lennard-Jones pair forces plus half-harmonic centroid restraint.

    Returns the potential energy. frc is overwritten.
    """
    n = pos.shape[0]
    for i in range(n):
        frc[i, 0] = 0.0
        frc[i, 1] = 0.0
    energy = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            dx = pos[i, 0] - pos[j, 0]
            dy = pos[i, 1] - pos[j, 1]
            r2 = dx * dx + dy * dy
            inv2 = 1.0 / r2
            inv6 = inv2 * inv2 * inv2
            inv12 = inv6 * inv6
            energy += 4.0 * (inv12 - inv6)
            fmag = 24.0 * (2.0 * inv12 - inv6) * inv2
            frc[i, 0] += fmag * dx
            frc[i, 1] += fmag * dy
            frc[j, 0] -= fmag * dx
            frc[j, 1] -= fmag * dy
    cx = 0.0
    cy = 0.0
    for i in range(n):
        cx += pos[i, 0]
        cy += pos[i, 1]
    cx /= n
    cy /= n
    gx_sum = 0.0
    gy_sum = 0.0
    for i in range(n):
        dx = pos[i, 0] - cx
        dy = pos[i, 1] - cy
        d = math.sqrt(dx * dx + dy * dy)
        if d > r_conf:
            mag = k_conf * (d - r_conf)
            energy += 0.5 * k_conf * (d - r_conf) ** 2
            gx = mag * dx / d
            gy = mag * dy / d
            frc[i, 0] -= gx
            frc[i, 1] -= gy
            gx_sum += gx
            gy_sum += gy
    # centroid motion feeds back on every particle
    gx_sum /= n
    gy_sum /= n
    for i in range(n):
        frc[i, 0] += gx_sum
        frc[i, 1] += gy_sum
    return energy


def _lj7_chunk(pos, vel, frc, noise, frames, rejected, stride, dt, c1, c2,
               k_conf, r_conf, r_reject):
    """BAOAB chunk for the LJ cluster; flags frames with escaped particles."""
    n = pos.shape[0]
    half = 0.5 * dt
    idx = 0
    nrec = 0
    for step in range(noise.shape[0]):
        for i in range(n):
            vel[i, 0] += half * frc[i, 0]
            vel[i, 1] += half * frc[i, 1]
            pos[i, 0] += half * vel[i, 0]
            pos[i, 1] += half * vel[i, 1]
        for i in range(n):
            vel[i, 0] = c1 * vel[i, 0] + c2 * noise[step, 2 * i]
            vel[i, 1] = c1 * vel[i, 1] + c2 * noise[step, 2 * i + 1]
            pos[i, 0] += half * vel[i, 0]
            pos[i, 1] += half * vel[i, 1]
        _lj_forces(pos, frc, k_conf, r_conf)
        for i in range(n):
            vel[i, 0] += half * frc[i, 0]
            vel[i, 1] += half * frc[i, 1]
        if (step + 1) % stride == 0:
            cx = 0.0
            cy = 0.0
            for i in range(n):
                cx += pos[i, 0]
                cy += pos[i, 1]
            cx /= n
            cy /= n
            bad = False
            for i in range(n):
                dx = pos[i, 0] - cx
                dy = pos[i, 1] - cy
                if dx * dx + dy * dy > r_reject * r_reject:
                    bad = True
            for i in range(n):
                frames[idx, 2 * i] = pos[i, 0]
                frames[idx, 2 * i + 1] = pos[i, 1]
            rejected[idx] = bad
            if not bad:
                nrec += 1
            idx += 1
    return nrec


def _coordination_chunk(frames, r0, out):
    """Sorted (descending) smooth coordination numbers per frame.

    Switching function 1 / (1 + (r/r0)^8), identical to
    (1 - (r/r0)^8) / (1 - (r/r0)^16) with the removable pole at r = r0 filled.
    """
    m = frames.shape[0]
    n = frames.shape[1] // 2
    for f in range(m):
        for i in range(n):
            out[f, i] = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                dx = frames[f, 2 * i] - frames[f, 2 * j]
                dy = frames[f, 2 * i + 1] - frames[f, 2 * j + 1]
                r = math.sqrt(dx * dx + dy * dy)
                x8 = (r / r0) ** 8
                c = 1.0 / (1.0 + x8)
                out[f, i] += c
                out[f, j] += c
        # insertion sort, descending
        for i in range(1, n):
            key = out[f, i]
            j = i - 1
            while j >= 0 and out[f, j] < key:
                out[f, j + 1] = out[f, j]
                j -= 1
            out[f, j + 1] = key
    return m


def _metropolis_chunk(pos, tau, temp, proposals, log_unif, out):
    """Random-walk Metropolis on the unnormalized tilted-Gaussian log density.

    log target = tau * |z| - |z|^2 / (2 T). Returns accepted-move count.
    """
    x = pos[0]
    y = pos[1]
    r = math.sqrt(x * x + y * y)
    logp = tau * r - r * r / (2.0 * temp)
    acc = 0
    for i in range(proposals.shape[0]):
        xn = x + proposals[i, 0]
        yn = y + proposals[i, 1]
        rn = math.sqrt(xn * xn + yn * yn)
        logpn = tau * rn - rn * rn / (2.0 * temp)
        if log_unif[i] < logpn - logp:
            x = xn
            y = yn
            logp = logpn
            acc += 1
        out[i, 0] = x
        out[i, 1] = y
    pos[0] = x
    pos[1] = y
    return acc


three_hole_energy_scalar = jit(_three_hole_energy)
three_hole_grad_scalar = jit(_three_hole_grad)
three_hole_chunk = jit(_three_hole_chunk)
lj_forces = jit(_lj_forces)
lj7_chunk = jit(_lj7_chunk)
coordination_chunk = jit(_coordination_chunk)
metropolis_chunk = jit(_metropolis_chunk)

# compiled chunk kernels call the compiled helpers through these names
if three_hole_chunk is not _three_hole_chunk:
    _three_hole_grad = three_hole_grad_scalar  # noqa: F811
    _lj_forces = lj_forces  # noqa: F811


def three_hole_energy(x, y):
    """Potential energy of the three-hole surface, broadcasting over arrays."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    v = np.zeros(np.broadcast(x, y).shape)
    for a, cx, cy in GAUSSIANS:
        v += a * np.exp(-((x - cx) ** 2) - (y - cy) ** 2)
    v += QUARTIC_COEFF * x ** 4 + QUARTIC_COEFF * (y - QUARTIC_Y_OFFSET) ** 4
    if v.ndim == 0:
        return float(v)
    return v


def three_hole_grad(x, y):
    """Gradient (dV/dx, dV/dy), broadcasting over arrays."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    gx = np.zeros(np.broadcast(x, y).shape)
    gy = np.zeros_like(gx)
    for a, cx, cy in GAUSSIANS:
        e = a * np.exp(-((x - cx) ** 2) - (y - cy) ** 2)
        gx += -2.0 * (x - cx) * e
        gy += -2.0 * (y - cy) * e
    gx += 4.0 * QUARTIC_COEFF * x ** 3
    gy += 4.0 * QUARTIC_COEFF * (y - QUARTIC_Y_OFFSET) ** 3
    if gx.ndim == 0:
        return float(gx), float(gy)
    return gx, gy
