"""Compiled inner loops for the classical flow (Gauss collocation stepping).

Everything here works on batches: ``y`` has shape (n_orbits, 4) for plain
flow or (n_orbits, 8) when the tangent vector rides along.  The stage
equations are solved by fixed-point iteration; a step whose iteration fails
to converge (or whose accepted state leaves the atomic disk) is retried at
half the step size, recursively down to ``h / 2**14``.

Status codes: 0 = ok, 1 = step-size underflow, 2 = non-finite state.
"""

import numpy as np
from numba import njit

_STAGE_TOL = 1e-13
_MAX_ITER = 40
_MAX_HALVINGS = 14


@njit(cache=True)
def _rhs(y, out, omega, omega0, gamma, with_tangent):
    n = y.shape[0]
    for i in range(n):
        q = y[i, 0]
        p = y[i, 1]
        Q = y[i, 2]
        P = y[i, 3]
        r2 = Q * Q + P * P
        u = 1.0 - 0.25 * r2
        if u < 1e-14:
            u = 1e-14
        s = np.sqrt(u)
        h_q = omega * q + 2.0 * gamma * Q * s
        h_Q = omega0 * Q + 2.0 * gamma * q * s - 0.5 * gamma * q * Q * Q / s
        h_P = omega0 * P - 0.5 * gamma * q * Q * P / s
        out[i, 0] = omega * p
        out[i, 1] = -h_q
        out[i, 2] = h_P
        out[i, 3] = -h_Q
        if with_tangent:
            s3 = s * s * s
            h_qQ = 2.0 * gamma * (s - Q * Q / (4.0 * s))
            h_qP = -0.5 * gamma * Q * P / s
            h_QQ = omega0 - gamma * q * (1.5 * Q / s + Q * Q * Q / (8.0 * s3))
            h_QP = -gamma * q * (0.5 * P / s + Q * Q * P / (8.0 * s3))
            h_PP = omega0 - gamma * q * Q * (0.5 / s + P * P / (8.0 * s3))
            dq = y[i, 4]
            dp = y[i, 5]
            dQ = y[i, 6]
            dP = y[i, 7]
            out[i, 4] = omega * dp
            out[i, 5] = -omega * dq - h_qQ * dQ - h_qP * dP
            out[i, 6] = h_qP * dq + h_QP * dQ + h_PP * dP
            out[i, 7] = -h_qQ * dq - h_QQ * dQ - h_QP * dP


@njit(cache=True)
def _energy(y, out, omega, omega0, gamma):
    n = y.shape[0]
    for i in range(n):
        q = y[i, 0]
        p = y[i, 1]
        Q = y[i, 2]
        P = y[i, 3]
        r2 = Q * Q + P * P
        u = 1.0 - 0.25 * r2
        if u < 0.0:
            u = 0.0
        out[i] = (0.5 * omega * (q * q + p * p) + 0.5 * omega0 * r2 - omega0
                  + 2.0 * gamma * q * Q * np.sqrt(u))


@njit(cache=True)
def _try_step(y, h, A, B, with_tangent, omega, omega0, gamma,
              k, k_new, stage, y_new):
    n, d = y.shape
    ns = A.shape[0]
    _rhs(y, k_new[0], omega, omega0, gamma, with_tangent)
    scale = 1.0
    for a in range(n):
        for b in range(d):
            v = abs(k_new[0, a, b])
            if v > scale:
                scale = v
            for i in range(ns):
                k[i, a, b] = k_new[0, a, b]
    converged = False
    for _ in range(_MAX_ITER):
        for i in range(ns):
            for a in range(n):
                for b in range(d):
                    acc = 0.0
                    for jj in range(ns):
                        acc += A[i, jj] * k[jj, a, b]
                    stage[a, b] = y[a, b] + h * acc
            _rhs(stage, k_new[i], omega, omega0, gamma, with_tangent)
        delta = 0.0
        for i in range(ns):
            for a in range(n):
                for b in range(d):
                    dv = abs(k_new[i, a, b] - k[i, a, b])
                    if dv > delta:
                        delta = dv
                    k[i, a, b] = k_new[i, a, b]
        if not np.isfinite(delta):
            return False
        if delta < _STAGE_TOL * scale:
            converged = True
            break
    if not converged:
        return False
    for a in range(n):
        for b in range(d):
            acc = 0.0
            for i in range(ns):
                acc += B[i] * k[i, a, b]
            y_new[a, b] = y[a, b] + h * acc
    for a in range(n):
        r2 = y_new[a, 2] * y_new[a, 2] + y_new[a, 3] * y_new[a, 3]
        if not np.isfinite(r2) or r2 > 4.0 - 1e-10:
            return False
    return True


@njit(cache=True)
def _advance(y, h, A, B, with_tangent, omega, omega0, gamma,
             k, k_new, stage, y_new):
    """Advance exactly h with local step halving; mutates y in place."""
    n, d = y.shape
    done = 0.0
    cur = h
    halvings = 0
    while done < h * (1.0 - 1e-14):
        if cur > h - done:
            cur = h - done
        ok = _try_step(y, cur, A, B, with_tangent, omega, omega0, gamma,
                       k, k_new, stage, y_new)
        if ok:
            for a in range(n):
                for b in range(d):
                    y[a, b] = y_new[a, b]
            done += cur
        else:
            cur *= 0.5
            halvings += 1
            if halvings > _MAX_HALVINGS:
                return 1
    return 0


@njit(cache=True)
def _run(y, h, n_steps, sample_every, with_tangent, omega, omega0, gamma,
         samples, drift):
    """March n_steps, recording every sample_every-th state and the running
    per-orbit max energy deviation (checked on every accepted step)."""
    n, d = y.shape
    ns = 4
    k = np.empty((ns, n, d))
    k_new = np.empty((ns, n, d))
    stage = np.empty((n, d))
    y_new = np.empty((n, d))
    e0 = np.empty(n)
    e = np.empty(n)
    _energy(y, e0, omega, omega0, gamma)
    kept = 1
    for a in range(n):
        for b in range(d):
            samples[0, a, b] = y[a, b]
    for istep in range(1, n_steps + 1):
        status = _advance(y, h, _GA, _GB, with_tangent, omega, omega0, gamma,
                          k, k_new, stage, y_new)
        if status != 0:
            return status, kept
        _energy(y, e, omega, omega0, gamma)
        for a in range(n):
            dv = abs(e[a] - e0[a])
            if dv > drift[a]:
                drift[a] = dv
        if istep % sample_every == 0 or istep == n_steps:
            if kept < samples.shape[0]:
                for a in range(n):
                    for b in range(d):
                        samples[kept, a, b] = y[a, b]
                kept += 1
    return 0, kept


@njit(cache=True)
def _segments(y, h, steps_per_seg, n_seg, omega, omega0, gamma, logs):
    """Tangent-map run: renormalize the tangent half of y after every
    segment, accumulating log stretches into logs (n_orbits, n_seg)."""
    n, d = y.shape
    ns = 4
    k = np.empty((ns, n, d))
    k_new = np.empty((ns, n, d))
    stage = np.empty((n, d))
    y_new = np.empty((n, d))
    for seg in range(n_seg):
        for _ in range(steps_per_seg):
            status = _advance(y, h, _GA, _GB, True, omega, omega0, gamma,
                              k, k_new, stage, y_new)
            if status != 0:
                return status
        for a in range(n):
            acc = 0.0
            for b in range(4, 8):
                acc += y[a, b] * y[a, b]
            nrm = np.sqrt(acc)
            logs[a, seg] = np.log(nrm)
            for b in range(4, 8):
                y[a, b] /= nrm
    return 0


def _gauss_tableau(stages: int = 4):
    """Butcher tableau of the ``stages``-point Gauss-Legendre collocation
    method (order 2 * stages), built numerically from the Legendre nodes."""
    x, w = np.polynomial.legendre.leggauss(stages)
    c = 0.5 * (x + 1.0)
    b = 0.5 * w
    a = np.zeros((stages, stages))
    for jcol in range(stages):
        others = np.delete(c, jcol)
        ell = np.polynomial.polynomial.Polynomial.fromroots(others)
        ell = ell / ell(c[jcol])
        integ = ell.integ()
        a[:, jcol] = integ(c) - integ(0.0)
    return np.ascontiguousarray(a), np.ascontiguousarray(b), c


_GA, _GB, _GC = _gauss_tableau(4)
