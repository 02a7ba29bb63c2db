"""Numba kernels for the XPBD cable solver.

Layout: ``x``/``v`` are ``(cables, particles, 3)``, ``w`` holds inverse masses
``(cables, particles)``; particle 0 of every cable is pinned (``w == 0``).
The platform is a single point body coupled to the last particle of each cable.
"""
import math

import numpy as np
from numba import njit


@njit(cache=True)
def _norm3(a0, a1, a2):
    return math.sqrt(a0 * a0 + a1 * a1 + a2 * a2)


@njit(cache=True)
def distance_residual_max(x, seg_rest):
    C, n = x.shape[0], x.shape[1]
    worst = 0.0
    for c in range(C):
        for k in range(n - 1):
            d = _norm3(x[c, k + 1, 0] - x[c, k, 0], x[c, k + 1, 1] - x[c, k, 1], x[c, k + 1, 2] - x[c, k, 2])
            r = abs(d - seg_rest[c])
            if r > worst:
                worst = r
    return worst


@njit(cache=True)
def step_kernel(x, v, w, rest, target, speed, linear_mass, compliance, anchors, offsets, xp, vp, wp,
                has_platform, gravity, dt, substeps, iterations, velocity_retention, residuals):
    """Advance the scene by ``dt``; ``residuals[s, it]`` receives the max distance
    residual after iteration ``it`` of substep ``s``.

    ``rest`` (total cable length) moves toward ``target`` at ``speed`` m/s, updated
    every substep; particle masses follow the reeled-out length.
    """
    C, n = x.shape[0], x.shape[1]
    h = dt / substeps
    prev = np.empty_like(x)
    prev_p = np.empty(3)
    lam = np.zeros((C, n - 1))
    seg_rest = np.empty(C)
    seg_alpha = np.empty(C)
    for s in range(substeps):
        for c in range(C):
            gap = target[c] - rest[c]
            lim = speed[c] * h
            if gap > lim:
                gap = lim
            elif gap < -lim:
                gap = -lim
            rest[c] += gap
            seg_rest[c] = rest[c] / (n - 1)
            seg_alpha[c] = compliance * seg_rest[c]
            w_free = 1.0 / (linear_mass * seg_rest[c])
            for k in range(n):
                if w[c, k] > 0.0:
                    w[c, k] = w_free
        # prediction
        for c in range(C):
            for k in range(n):
                for j in range(3):
                    prev[c, k, j] = x[c, k, j]
                if w[c, k] > 0.0:
                    for j in range(3):
                        v[c, k, j] += gravity[j] * h
                        x[c, k, j] += v[c, k, j] * h
        for j in range(3):
            prev_p[j] = xp[j]
        if has_platform:
            for j in range(3):
                vp[j] += gravity[j] * h
                xp[j] += vp[j] * h
        lam[:, :] = 0.0

        for it in range(iterations):
            for c in range(C):
                alpha_t = seg_alpha[c] / (h * h)
                l0 = seg_rest[c]
                # distance constraints, anchor to platform
                for k in range(n - 1):
                    wa = w[c, k]
                    wb = w[c, k + 1]
                    ws = wa + wb
                    if ws == 0.0:
                        continue
                    d0 = x[c, k, 0] - x[c, k + 1, 0]
                    d1 = x[c, k, 1] - x[c, k + 1, 1]
                    d2 = x[c, k, 2] - x[c, k + 1, 2]
                    dist = _norm3(d0, d1, d2)
                    if dist < 1e-12:
                        continue
                    cval = dist - l0
                    dlam = (-cval - alpha_t * lam[c, k]) / (ws + alpha_t)
                    lam[c, k] += dlam
                    s0 = dlam / dist
                    x[c, k, 0] += wa * s0 * d0
                    x[c, k, 1] += wa * s0 * d1
                    x[c, k, 2] += wa * s0 * d2
                    x[c, k + 1, 0] -= wb * s0 * d0
                    x[c, k + 1, 1] -= wb * s0 * d1
                    x[c, k + 1, 2] -= wb * s0 * d2
                # long-range tethers: particle k can be no farther than k*l0 from the anchor
                for k in range(2, n):
                    if w[c, k] == 0.0:
                        continue
                    d0 = x[c, k, 0] - x[c, 0, 0]
                    d1 = x[c, k, 1] - x[c, 0, 1]
                    d2 = x[c, k, 2] - x[c, 0, 2]
                    dist = _norm3(d0, d1, d2)
                    lim = k * l0
                    if dist > lim:
                        f = (dist - lim) / dist
                        x[c, k, 0] -= f * d0
                        x[c, k, 1] -= f * d1
                        x[c, k, 2] -= f * d2
            if has_platform:
                # platform tethers: attachment point inside each cable's reach
                for c in range(C):
                    reach = seg_rest[c] * (n - 1)
                    d0 = xp[0] + offsets[c, 0] - anchors[c, 0]
                    d1 = xp[1] + offsets[c, 1] - anchors[c, 1]
                    d2 = xp[2] + offsets[c, 2] - anchors[c, 2]
                    dist = _norm3(d0, d1, d2)
                    if dist > reach:
                        f = (dist - reach) / dist
                        xp[0] -= f * d0
                        xp[1] -= f * d1
                        xp[2] -= f * d2
                # attachment: last particle coincides with platform + offset
                for c in range(C):
                    wl = w[c, n - 1]
                    ws = wl + wp
                    if ws == 0.0:
                        continue
                    for j in range(3):
                        gap = x[c, n - 1, j] - (xp[j] + offsets[c, j])
                        x[c, n - 1, j] -= wl / ws * gap
                        xp[j] += wp / ws * gap
            residuals[s, it] = distance_residual_max(x, seg_rest)

        # velocity update and damping
        for c in range(C):
            for k in range(n):
                if w[c, k] > 0.0:
                    for j in range(3):
                        v[c, k, j] = (x[c, k, j] - prev[c, k, j]) / h * velocity_retention
                else:
                    for j in range(3):
                        v[c, k, j] = 0.0
        if has_platform:
            for j in range(3):
                vp[j] = (xp[j] - prev_p[j]) / h * velocity_retention
