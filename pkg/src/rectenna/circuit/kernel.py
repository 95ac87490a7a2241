"""Compiled modified-nodal-analysis kernels.

Unknown vector layout: node voltages first, then branch currents (voltage
sources, then inductors). Index -1 denotes ground. All element currents follow
the passive convention: positive current flows from the first terminal through
the element to the second terminal.
"""
import math

import numpy as np
from numba import njit

from ..diode import depletion, junction

MODE_DC = 0
MODE_BE = 1
MODE_TRAP = 2

OK = 0
NO_CONVERGENCE = 1
SINGULAR = 2


@njit(cache=True)
def _v(x, i):
    return 0.0 if i < 0 else x[i]


@njit(cache=True)
def _stamp_g(J, a, b, g):
    if a >= 0:
        J[a, a] += g
    if b >= 0:
        J[b, b] += g
    if a >= 0 and b >= 0:
        J[a, b] -= g
        J[b, a] -= g


@njit(cache=True)
def _stamp_i(F, a, b, i):
    if a >= 0:
        F[a] += i
    if b >= 0:
        F[b] -= i


@njit(cache=True)
def _wave(p, t, scale):
    # p = [dc, amplitude, omega, phase]
    return scale * (p[0] + p[1] * math.sin(p[2] * t + p[3]))


@njit(cache=True)
def assemble(x, t, mode, h, gmin, scale, n_nodes,
             ri, rv, ci, cv, li, lv, vi, vv, ii, iv, di, dv,
             xp, capip, dqp, dicp, J, F):
    """Fill the Newton Jacobian ``J`` and residual ``F`` at ``x``.

    ``xp``, ``capip``, ``dqp`` and ``dicp`` are the previous time point's
    solution, capacitor currents, diode charges and diode displacement currents.
    """
    J[:, :] = 0.0
    F[:] = 0.0
    for n in range(n_nodes):
        J[n, n] += gmin
        F[n] += gmin * x[n]
    for e in range(rv.shape[0]):
        a, b = ri[e, 0], ri[e, 1]
        g = rv[e]
        _stamp_g(J, a, b, g)
        _stamp_i(F, a, b, g * (_v(x, a) - _v(x, b)))
    if mode != MODE_DC:
        for e in range(cv.shape[0]):
            a, b = ci[e, 0], ci[e, 1]
            vd = _v(x, a) - _v(x, b)
            vdp = _v(xp, a) - _v(xp, b)
            if mode == MODE_BE:
                geq = cv[e] / h
                i = geq * (vd - vdp)
            else:
                geq = 2.0 * cv[e] / h
                i = geq * (vd - vdp) - capip[e]
            _stamp_g(J, a, b, geq)
            _stamp_i(F, a, b, i)
    for e in range(lv.shape[0]):
        a, b, k = li[e, 0], li[e, 1], li[e, 2]
        ik = x[k]
        if a >= 0:
            J[a, k] += 1.0
            F[a] += ik
        if b >= 0:
            J[b, k] -= 1.0
            F[b] -= ik
        if a >= 0:
            J[k, a] += 1.0
        if b >= 0:
            J[k, b] -= 1.0
        vd = _v(x, a) - _v(x, b)
        if mode == MODE_DC:
            F[k] = vd
        elif mode == MODE_BE:
            r = lv[e] / h
            J[k, k] -= r
            F[k] = vd - r * (ik - xp[k])
        else:
            r = 2.0 * lv[e] / h
            J[k, k] -= r
            F[k] = vd + (_v(xp, a) - _v(xp, b)) - r * (ik - xp[k])
    for e in range(vv.shape[0]):
        a, b, k = vi[e, 0], vi[e, 1], vi[e, 2]
        ik = x[k]
        if a >= 0:
            J[a, k] += 1.0
            F[a] += ik
            J[k, a] += 1.0
        if b >= 0:
            J[b, k] -= 1.0
            F[b] -= ik
            J[k, b] -= 1.0
        F[k] = _v(x, a) - _v(x, b) - _wave(vv[e], t, scale)
    for e in range(iv.shape[0]):
        _stamp_i(F, ii[e, 0], ii[e, 1], _wave(iv[e], t, scale))
    for e in range(dv.shape[0]):
        a, b = di[e, 0], di[e, 1]
        p = dv[e]
        vd = _v(x, a) - _v(x, b)
        i, g = junction(vd, p[0], p[1], p[2], p[3], p[4])
        if mode != MODE_DC:
            q, c = depletion(vd, p[5], p[6], p[7])
            if mode == MODE_BE:
                i += (q - dqp[e]) / h
                g += c / h
            else:
                i += 2.0 * (q - dqp[e]) / h - dicp[e]
                g += 2.0 * c / h
        _stamp_g(J, a, b, g)
        _stamp_i(F, a, b, i)


@njit(cache=True)
def lu_solve(A, rhs):
    """Gaussian elimination with partial pivoting; returns (x, ok)."""
    n = A.shape[0]
    M = A.copy()
    y = rhs.copy()
    scale = 0.0
    for i in range(n):
        for j in range(n):
            s = abs(M[i, j])
            if s > scale:
                scale = s
    for col in range(n):
        piv = col
        best = abs(M[col, col])
        for r in range(col + 1, n):
            if abs(M[r, col]) > best:
                best = abs(M[r, col])
                piv = r
        if best <= 1e-22 * scale or best == 0.0:
            return y, False
        if piv != col:
            for j in range(n):
                tmp = M[col, j]
                M[col, j] = M[piv, j]
                M[piv, j] = tmp
            tmp = y[col]
            y[col] = y[piv]
            y[piv] = tmp
        for r in range(col + 1, n):
            f = M[r, col] / M[col, col]
            if f != 0.0:
                for j in range(col, n):
                    M[r, j] -= f * M[col, j]
                y[r] -= f * y[col]
    for r in range(n - 1, -1, -1):
        s = y[r]
        for j in range(r + 1, n):
            s -= M[r, j] * y[j]
        y[r] = s / M[r, r]
    for r in range(n):
        if not math.isfinite(y[r]) or abs(y[r]) > 1e15:
            return y, False
    return y, True


@njit(cache=True)
def newton(x, t, mode, h, gmin, scale, n_nodes,
           ri, rv, ci, cv, li, lv, vi, vv, ii, iv, di, dv,
           xp, capip, dqp, dicp, maxit, abstol, reltol, vntol):
    """Damped Newton-Raphson solve of one operating/time point.

    Returns ``(status, iterations, residual_inf_norm)``; ``x`` is updated in
    place. Junction-voltage updates are clamped to ``2*N*Vt`` per iteration.
    """
    n = x.shape[0]
    J = np.zeros((n, n))
    F = np.zeros(n)
    small = False
    res = np.inf
    for it in range(maxit + 1):
        assemble(x, t, mode, h, gmin, scale, n_nodes, ri, rv, ci, cv, li, lv, vi, vv,
                 ii, iv, di, dv, xp, capip, dqp, dicp, J, F)
        res = 0.0
        for r in range(n):
            if abs(F[r]) > res:
                res = abs(F[r])
        if it > 0 and small and res < abstol:
            return OK, it, res
        if it == maxit:
            break
        dx, ok = lu_solve(J, -F)
        if not ok:
            return SINGULAR, it, res
        alpha = 1.0
        for e in range(dv.shape[0]):
            a, b = di[e, 0], di[e, 1]
            dvj = (0.0 if a < 0 else dx[a]) - (0.0 if b < 0 else dx[b])
            lim = 2.0 * dv[e, 1] * dv[e, 2]
            if abs(dvj) * alpha > lim:
                alpha = lim / abs(dvj)
        small = alpha == 1.0
        for r in range(n):
            step = alpha * dx[r]
            x[r] += step
            if abs(step) > reltol * abs(x[r]) + vntol:
                small = False
    return NO_CONVERGENCE, maxit, res


@njit(cache=True)
def element_states(x, mode, h, ci, cv, di, dv, xp, capip, dqp, dicp, capi, dq, dic):
    """Capacitor currents, diode charges and displacement currents at ``x``."""
    for e in range(cv.shape[0]):
        a, b = ci[e, 0], ci[e, 1]
        vd = _v(x, a) - _v(x, b)
        vdp = _v(xp, a) - _v(xp, b)
        if mode == MODE_BE:
            capi[e] = cv[e] / h * (vd - vdp)
        elif mode == MODE_TRAP:
            capi[e] = 2.0 * cv[e] / h * (vd - vdp) - capip[e]
        else:
            capi[e] = 0.0
    for e in range(dv.shape[0]):
        a, b = di[e, 0], di[e, 1]
        vd = _v(x, a) - _v(x, b)
        q, c = depletion(vd, dv[e, 5], dv[e, 6], dv[e, 7])
        dq[e] = q
        if mode == MODE_BE:
            dic[e] = (q - dqp[e]) / h
        elif mode == MODE_TRAP:
            dic[e] = 2.0 * (q - dqp[e]) / h - dicp[e]
        else:
            dic[e] = 0.0


@njit(cache=True)
def run_steps(x0, capi0, dq0, dic0, t0, h, nsteps, first_be, gmin, n_nodes,
              ri, rv, ci, cv, li, lv, vi, vv, ii, iv, di, dv,
              maxit, abstol, reltol, vntol):
    """Integrate ``nsteps`` fixed steps from the state at ``t0``.

    Returns sample arrays including the starting point (row 0), the Newton
    iteration count per step, a status code and the time of failure.
    """
    n = x0.shape[0]
    nc = cv.shape[0]
    nd = dv.shape[0]
    X = np.empty((nsteps + 1, n))
    CI = np.empty((nsteps + 1, nc))
    DQ = np.empty((nsteps + 1, nd))
    DI = np.empty((nsteps + 1, nd))
    iters = np.zeros(nsteps, dtype=np.int64)
    X[0] = x0
    CI[0] = capi0
    DQ[0] = dq0
    DI[0] = dic0
    x = x0.copy()
    for s in range(nsteps):
        t = t0 + (s + 1) * h
        mode = MODE_BE if (first_be and s == 0) else MODE_TRAP
        if s >= 1:
            for r in range(n):
                x[r] = 2.0 * X[s, r] - X[s - 1, r]
        status, it, res = newton(x, t, mode, h, gmin, 1.0, n_nodes, ri, rv, ci, cv, li, lv,
                                 vi, vv, ii, iv, di, dv, X[s], CI[s], DQ[s], DI[s],
                                 maxit, abstol, reltol, vntol)
        if status != OK:
            # retry from the last accepted point instead of the predictor
            x[:] = X[s]
            status, it2, res = newton(x, t, mode, h, gmin, 1.0, n_nodes, ri, rv, ci, cv, li,
                                      lv, vi, vv, ii, iv, di, dv, X[s], CI[s], DQ[s], DI[s],
                                      maxit, abstol, reltol, vntol)
            it += it2
            if status != OK:
                return X[:s + 1], CI[:s + 1], DQ[:s + 1], DI[:s + 1], iters[:s], status, t, res
        iters[s] = it
        X[s + 1] = x
        element_states(x, mode, h, ci, cv, di, dv, X[s], CI[s], DQ[s], DI[s],
                       CI[s + 1], DQ[s + 1], DI[s + 1])
    return X, CI, DQ, DI, iters, OK, t0 + nsteps * h, 0.0
