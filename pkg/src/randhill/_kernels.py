"""Compiled inner loops.

All kernels release the GIL so trials can run on worker threads.  Matrix
products are kept as four parallel arrays (one entry per lane); the scale
factors removed by renormalisation are multiplied into ``acc`` and moved
into the log accumulator ``logn`` only when ``acc`` leaves [1e-150, 1e150],
which keeps one ``log`` call out of every step without changing semantics.
"""
from __future__ import annotations

import math

import numba
import numpy as np

_FLUSH_HI = 1e150
_FLUSH_LO = 1e-150


def fixed_af_coefficients(af) -> np.ndarray:
    """Per-lane coefficients of the cycle matrix as affine functions of q.

    ``m11 = m22 = C - q*A``, ``m12 = B - q*D``, ``m21 = E - q*G`` follow from
    multiplying out ``F(pi/2) K(q) F(pi/2)``.
    """
    af = np.atleast_1d(np.asarray(af, dtype=float))
    w = np.sqrt(af)
    c = np.cos(0.5 * np.pi * w)
    s = np.sin(0.5 * np.pi * w)
    return np.ascontiguousarray(
        np.stack([c * c - s * s, s * c / w, 2.0 * c * s / w, s * s / af, -2.0 * w * s * c, c * c])
    )


@numba.njit(nogil=True, cache=True)
def advance_fixed(coef, qlo, qspan, u, a, acc, logn):
    """Absorb ``len(u)`` cycles into every lane (state arrays updated in place)."""
    n_lanes = coef.shape[1]
    C = coef[0]
    A = coef[1]
    B = coef[2]
    D = coef[3]
    E = coef[4]
    G = coef[5]
    a11 = a[0]
    a12 = a[1]
    a21 = a[2]
    a22 = a[3]
    for k in range(u.shape[0]):
        uk = u[k]
        for j in range(n_lanes):
            q = qlo[j] + qspan[j] * uk
            m11 = C[j] - q * A[j]
            m12 = B[j] - q * D[j]
            m21 = E[j] - q * G[j]
            x11 = a11[j]
            x12 = a12[j]
            x21 = a21[j]
            x22 = a22[j]
            b11 = m11 * x11 + m12 * x21
            b12 = m11 * x12 + m12 * x22
            b21 = m21 * x11 + m11 * x21
            b22 = m21 * x12 + m11 * x22
            m = max(max(abs(b11), abs(b12)), max(abs(b21), abs(b22)))
            a11[j] = b11 / m
            a12[j] = b12 / m
            a21[j] = b21 / m
            a22[j] = b22 / m
            s = acc[j] * m
            if s > _FLUSH_HI or s < _FLUSH_LO:
                logn[j] += math.log(s)
                s = 1.0
            acc[j] = s


@numba.njit(nogil=True, cache=True)
def advance_varying(af, q, a, acc, logn):
    """Single lane with per-cycle ``af`` (trig evaluated every cycle)."""
    a11 = a[0, 0]
    a12 = a[1, 0]
    a21 = a[2, 0]
    a22 = a[3, 0]
    s_acc = acc[0]
    lg = logn[0]
    for k in range(q.shape[0]):
        w = math.sqrt(af[k])
        c = math.cos(0.5 * math.pi * w)
        s = math.sin(0.5 * math.pi * w)
        qk = q[k]
        m11 = c * c - s * s - qk * (s * c / w)
        m12 = 2.0 * c * s / w - qk * (s * s / af[k])
        m21 = -2.0 * w * s * c - qk * (c * c)
        b11 = m11 * a11 + m12 * a21
        b12 = m11 * a12 + m12 * a22
        b21 = m21 * a11 + m11 * a21
        b22 = m21 * a12 + m11 * a22
        m = max(max(abs(b11), abs(b12)), max(abs(b21), abs(b22)))
        a11 = b11 / m
        a12 = b12 / m
        a21 = b21 / m
        a22 = b22 / m
        s_acc = s_acc * m
        if s_acc > _FLUSH_HI or s_acc < _FLUSH_LO:
            lg += math.log(s_acc)
            s_acc = 1.0
    a[0, 0] = a11
    a[1, 0] = a12
    a[2, 0] = a21
    a[3, 0] = a22
    acc[0] = s_acc
    logn[0] = lg


@numba.njit(nogil=True, cache=True)
def rk4_piecewise(y, v, seg_len, seg_k2, seg_steps):
    """Fixed-step RK4 for ``y'' = -k2 * y`` over consecutive constant-coefficient segments."""
    for i in range(seg_len.shape[0]):
        n = seg_steps[i]
        if n == 0:
            continue
        h = seg_len[i] / n
        k2 = seg_k2[i]
        for _ in range(n):
            k1y = v
            k1v = -k2 * y
            y2 = y + 0.5 * h * k1y
            v2 = v + 0.5 * h * k1v
            k2y = v2
            k2v = -k2 * y2
            y3 = y + 0.5 * h * k2y
            v3 = v + 0.5 * h * k2v
            k3y = v3
            k3v = -k2 * y3
            y4 = y + h * k3y
            v4 = v + h * k3v
            k4y = v4
            k4v = -k2 * y4
            y = y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
            v = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return y, v


@numba.njit(nogil=True, cache=True)
def map_trajectory(af, q, y, v, out):
    """Iterate one trajectory through ``len(q)`` cycles.

    ``out[k] = log|1 - q_k y/V|`` with ``(y, V)`` taken just before kick k.
    Returns the final (rescaled) state and the index of the first cycle with
    ``V == 0`` before the kick, or -1.
    """
    w = math.sqrt(af)
    c = math.cos(0.5 * math.pi * w)
    s = math.sin(0.5 * math.pi * w)
    for k in range(q.shape[0]):
        y1 = c * y + s * v / w
        v1 = -w * s * y + c * v
        if v1 == 0.0:
            return y, v, k
        out[k] = math.log(abs(1.0 - q[k] * y1 / v1))
        v1 = v1 - q[k] * y1
        y = c * y1 + s * v1 / w
        v = -w * s * y1 + c * v1
        m = max(abs(y), abs(v))
        y = y / m
        v = v / m
    return y, v, -1
