# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: objective evaluation, 2-D Nelder-Mead and the range-rate chain.

Must stay operation-for-operation identical to ``_purepy`` so both backends
return the same floats.
"""

from libc.math cimport sqrt, fabs, isfinite

import numpy as np

cdef double EPS = 2.220446049250313e-16


cdef double _trilat_cost(const double[::1] ax, const double[::1] ay, const double[::1] d,
                         double x, double y) noexcept nogil:
    cdef Py_ssize_t i, n = ax.shape[0]
    cdef double s = 0.0, dx, dy, r
    for i in range(n):
        dx = x - ax[i]
        dy = y - ay[i]
        r = sqrt(dx * dx + dy * dy) - d[i]
        s += r * r
    return s


cdef double _tdoa_cost(const double[::1] ax, const double[::1] ay, const double[::1] dd,
                       double x, double y) noexcept nogil:
    cdef Py_ssize_t i, n = ax.shape[0]
    cdef double s = 0.0, dx, dy, r, r1
    dx = x - ax[0]
    dy = y - ay[0]
    r1 = sqrt(dx * dx + dy * dy)
    for i in range(1, n):
        dx = x - ax[i]
        dy = y - ay[i]
        r = sqrt(dx * dx + dy * dy) - r1 - dd[i]
        s += r * r
    return s


cdef inline double _cost(int kind, const double[::1] ax, const double[::1] ay,
                         const double[::1] v, double x, double y) noexcept nogil:
    if kind == 0:
        return _trilat_cost(ax, ay, v, x, y)
    return _tdoa_cost(ax, ay, v, x, y)


cdef inline double _initial_step(double x, double min_step) noexcept nogil:
    cdef double s = 0.05 * fabs(x)
    return s if s > min_step else min_step


cdef tuple _nelder_mead(int kind, const double[::1] ax, const double[::1] ay, const double[::1] v,
                        double x0, double y0, double xtol, double ftol, int max_iter,
                        double min_step):
    cdef double px[3]
    cdef double py[3]
    cdef double fv[3]
    cdef double tx, ty, tf, cx, cy, xr, yr, fr, xe, ye, fe, xc, yc, fc, tolf, tolx, dmax
    cdef int i, j, it = 0
    cdef bint converged = False, shrink

    px[0] = x0; py[0] = y0
    px[1] = x0 + _initial_step(x0, min_step); py[1] = y0
    px[2] = x0; py[2] = y0 + _initial_step(y0, min_step)
    for i in range(3):
        fv[i] = _cost(kind, ax, ay, v, px[i], py[i])
        if not isfinite(fv[i]):
            return (px[i], py[i], fv[i], 0, False, False)

    while True:
        # insertion sort by objective; ties keep earlier vertex first
        for i in range(1, 3):
            tx = px[i]; ty = py[i]; tf = fv[i]
            j = i - 1
            while j >= 0 and fv[j] > tf:
                px[j + 1] = px[j]; py[j + 1] = py[j]; fv[j + 1] = fv[j]
                j -= 1
            px[j + 1] = tx; py[j + 1] = ty; fv[j + 1] = tf

        tolf = 10.0 * EPS * fabs(fv[0])
        if ftol > tolf:
            tolf = ftol
        tolx = 10.0 * EPS * (fabs(px[0]) if fabs(px[0]) > fabs(py[0]) else fabs(py[0]))
        if xtol > tolx:
            tolx = xtol
        dmax = 0.0
        for i in range(1, 3):
            if fabs(px[i] - px[0]) > dmax:
                dmax = fabs(px[i] - px[0])
            if fabs(py[i] - py[0]) > dmax:
                dmax = fabs(py[i] - py[0])
        if fabs(fv[2] - fv[0]) <= tolf and dmax <= tolx:
            converged = True
            break
        if it >= max_iter:
            break
        it += 1

        cx = (px[0] + px[1]) / 2.0
        cy = (py[0] + py[1]) / 2.0
        xr = 2.0 * cx - px[2]
        yr = 2.0 * cy - py[2]
        fr = _cost(kind, ax, ay, v, xr, yr)
        shrink = False
        if fr < fv[0]:
            xe = 3.0 * cx - 2.0 * px[2]
            ye = 3.0 * cy - 2.0 * py[2]
            fe = _cost(kind, ax, ay, v, xe, ye)
            if fe < fr:
                px[2] = xe; py[2] = ye; fv[2] = fe
            else:
                px[2] = xr; py[2] = yr; fv[2] = fr
        elif fr < fv[1]:
            px[2] = xr; py[2] = yr; fv[2] = fr
        elif fr < fv[2]:
            xc = 1.5 * cx - 0.5 * px[2]
            yc = 1.5 * cy - 0.5 * py[2]
            fc = _cost(kind, ax, ay, v, xc, yc)
            if fc <= fr:
                px[2] = xc; py[2] = yc; fv[2] = fc
            else:
                shrink = True
        else:
            xc = 0.5 * cx + 0.5 * px[2]
            yc = 0.5 * cy + 0.5 * py[2]
            fc = _cost(kind, ax, ay, v, xc, yc)
            if fc < fv[2]:
                px[2] = xc; py[2] = yc; fv[2] = fc
            else:
                shrink = True
        if shrink:
            for i in range(1, 3):
                px[i] = px[0] + 0.5 * (px[i] - px[0])
                py[i] = py[0] + 0.5 * (py[i] - py[0])
                fv[i] = _cost(kind, ax, ay, v, px[i], py[i])
        for i in range(3):
            if not isfinite(fv[i]):
                return (px[i], py[i], fv[i], it, False, False)

    return (px[0], py[0], fv[0], it, converged, True)


def trilateration_cost(ax, ay, d, double x, double y):
    return _trilat_cost(np.ascontiguousarray(ax, dtype=np.float64),
                        np.ascontiguousarray(ay, dtype=np.float64),
                        np.ascontiguousarray(d, dtype=np.float64), x, y)


def tdoa_cost(ax, ay, dd, double x, double y):
    return _tdoa_cost(np.ascontiguousarray(ax, dtype=np.float64),
                      np.ascontiguousarray(ay, dtype=np.float64),
                      np.ascontiguousarray(dd, dtype=np.float64), x, y)


def nelder_mead_trilateration(ax, ay, d, double x0, double y0, double xtol, double ftol,
                              int max_iter, double min_step):
    """Returns ``(x, y, cost, iterations, converged, finite)``."""
    return _nelder_mead(0, np.ascontiguousarray(ax, dtype=np.float64),
                        np.ascontiguousarray(ay, dtype=np.float64),
                        np.ascontiguousarray(d, dtype=np.float64),
                        x0, y0, xtol, ftol, max_iter, min_step)


def nelder_mead_tdoa(ax, ay, dd, double x0, double y0, double xtol, double ftol,
                     int max_iter, double min_step):
    """``ax[0], ay[0]`` is the reference receiver; ``dd[0]`` is ignored."""
    return _nelder_mead(1, np.ascontiguousarray(ax, dtype=np.float64),
                        np.ascontiguousarray(ay, dtype=np.float64),
                        np.ascontiguousarray(dd, dtype=np.float64),
                        x0, y0, xtol, ftol, max_iter, min_step)


def range_rate_mask(t, d, double max_rate):
    """Chain filter anchored on the last accepted sample."""
    cdef const double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef const double[::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef Py_ssize_t n = tv.shape[0], i, last = 0
    keep = np.zeros(n, dtype=np.bool_)
    cdef unsigned char[::1] k = keep.view(np.uint8)
    cdef double dt, dd
    if n == 0:
        return keep
    k[0] = 1
    for i in range(1, n):
        dt = tv[i] - tv[last]
        dd = fabs(dv[i] - dv[last])
        if dd <= max_rate * dt:
            k[i] = 1
            last = i
    return keep
