"""Compiled inner loops: projective orbits and renormalised SL(2,R) products."""

import math

import numba
import numpy as np


@numba.njit(cache=True, nogil=True)
def projective_orbit(a, b, c, d, theta0):
    """Angles of ``M_{t-1} ... M_0 (cos th, sin th)`` for ``t = 0..L``; matrices are ``(S, L)`` arrays."""
    S, L = a.shape
    out = np.empty((S, L + 1))
    for s in range(S):
        th = theta0[s]
        out[s, 0] = th
        for t in range(L):
            x = math.cos(th)
            y = math.sin(th)
            u = a[s, t] * x + b[s, t] * y
            v = c[s, t] * x + d[s, t] * y
            th = math.atan2(v, u) % math.pi
            if th >= math.pi:
                th = 0.0
            out[s, t + 1] = th
    return out


@numba.njit(cache=True, nogil=True)
def _top_singular(p, q, r, s):
    f = p * p + q * q + r * r + s * s
    det = p * s - q * r
    disc = f * f - 4.0 * det * det
    if disc < 0.0:
        disc = 0.0
    return math.sqrt(0.5 * (f + math.sqrt(disc)))


@numba.njit(cache=True, nogil=True)
def norm_product(a, b, c, d, state, log_scale, counter, renorm_every):
    """Left-multiply ``state`` by the step matrices, renormalising as it goes.

    ``state`` is ``(S, 4)`` (row-major 2x2), ``log_scale`` accumulates the logs of
    factored-out norms, ``counter`` the number of steps taken so far. Each step
    matrix is rescaled to determinant one before use; every ``renorm_every``
    steps the running norm is factored out of the product.
    """
    S, L = a.shape
    for s in range(S):
        p, q, r, w = state[s, 0], state[s, 1], state[s, 2], state[s, 3]
        acc = log_scale[s]
        cnt = counter[s]
        for t in range(L):
            A, B, C, D = a[s, t], b[s, t], c[s, t], d[s, t]
            det = A * D - B * C
            if det > 0.0 and det != 1.0:
                k = 1.0 / math.sqrt(det)
                A *= k
                B *= k
                C *= k
                D *= k
            p, q, r, w = A * p + B * r, A * q + B * w, C * p + D * r, C * q + D * w
            cnt += 1
            if cnt % renorm_every == 0:
                n = _top_singular(p, q, r, w)
                acc += math.log(n)
                p /= n
                q /= n
                r /= n
                w /= n
        state[s, 0], state[s, 1], state[s, 2], state[s, 3] = p, q, r, w
        log_scale[s] = acc
        counter[s] = cnt


@numba.njit(cache=True, nogil=True)
def top_singular(m):
    out = np.empty(m.shape[0])
    for i in range(m.shape[0]):
        out[i] = _top_singular(m[i, 0], m[i, 1], m[i, 2], m[i, 3])
    return out
