"""Pure-Python twin of ``_ckernels``; used when the extension is not built.

Operation order mirrors the Cython source line by line.
"""

import math

import numpy as np

EPS = 2.220446049250313e-16


def _trilat_cost(ax, ay, d, x, y):
    s = 0.0
    for xi, yi, di in zip(ax, ay, d):
        dx = x - xi
        dy = y - yi
        r = math.sqrt(dx * dx + dy * dy) - di
        s += r * r
    return s


def _tdoa_cost(ax, ay, dd, x, y):
    dx = x - ax[0]
    dy = y - ay[0]
    r1 = math.sqrt(dx * dx + dy * dy)
    s = 0.0
    for i in range(1, len(ax)):
        dx = x - ax[i]
        dy = y - ay[i]
        r = math.sqrt(dx * dx + dy * dy) - r1 - dd[i]
        s += r * r
    return s


def _initial_step(x, min_step):
    s = 0.05 * abs(x)
    return s if s > min_step else min_step


def _nelder_mead(cost, x0, y0, xtol, ftol, max_iter, min_step):
    px = [x0, x0 + _initial_step(x0, min_step), x0]
    py = [y0, y0, y0 + _initial_step(y0, min_step)]
    fv = [cost(px[i], py[i]) for i in range(3)]
    for i in range(3):
        if not math.isfinite(fv[i]):
            return (px[i], py[i], fv[i], 0, False, False)

    it = 0
    converged = False
    while True:
        for i in range(1, 3):
            tx, ty, tf = px[i], py[i], fv[i]
            j = i - 1
            while j >= 0 and fv[j] > tf:
                px[j + 1], py[j + 1], fv[j + 1] = px[j], py[j], fv[j]
                j -= 1
            px[j + 1], py[j + 1], fv[j + 1] = tx, ty, tf

        tolf = max(ftol, 10.0 * EPS * abs(fv[0]))
        tolx = max(xtol, 10.0 * EPS * max(abs(px[0]), abs(py[0])))
        dmax = 0.0
        for i in range(1, 3):
            dmax = max(dmax, abs(px[i] - px[0]), abs(py[i] - py[0]))
        if abs(fv[2] - fv[0]) <= tolf and dmax <= tolx:
            converged = True
            break
        if it >= max_iter:
            break
        it += 1

        cx = (px[0] + px[1]) / 2.0
        cy = (py[0] + py[1]) / 2.0
        xr = 2.0 * cx - px[2]
        yr = 2.0 * cy - py[2]
        fr = cost(xr, yr)
        shrink = False
        if fr < fv[0]:
            xe = 3.0 * cx - 2.0 * px[2]
            ye = 3.0 * cy - 2.0 * py[2]
            fe = cost(xe, ye)
            if fe < fr:
                px[2], py[2], fv[2] = xe, ye, fe
            else:
                px[2], py[2], fv[2] = xr, yr, fr
        elif fr < fv[1]:
            px[2], py[2], fv[2] = xr, yr, fr
        elif fr < fv[2]:
            xc = 1.5 * cx - 0.5 * px[2]
            yc = 1.5 * cy - 0.5 * py[2]
            fc = cost(xc, yc)
            if fc <= fr:
                px[2], py[2], fv[2] = xc, yc, fc
            else:
                shrink = True
        else:
            xc = 0.5 * cx + 0.5 * px[2]
            yc = 0.5 * cy + 0.5 * py[2]
            fc = cost(xc, yc)
            if fc < fv[2]:
                px[2], py[2], fv[2] = xc, yc, fc
            else:
                shrink = True
        if shrink:
            for i in range(1, 3):
                px[i] = px[0] + 0.5 * (px[i] - px[0])
                py[i] = py[0] + 0.5 * (py[i] - py[0])
                fv[i] = cost(px[i], py[i])
        for i in range(3):
            if not math.isfinite(fv[i]):
                return (px[i], py[i], fv[i], it, False, False)

    return (px[0], py[0], fv[0], it, converged, True)


def _floats(a):
    return [float(v) for v in np.asarray(a, dtype=np.float64).ravel()]


def trilateration_cost(ax, ay, d, x, y):
    return _trilat_cost(_floats(ax), _floats(ay), _floats(d), float(x), float(y))


def tdoa_cost(ax, ay, dd, x, y):
    return _tdoa_cost(_floats(ax), _floats(ay), _floats(dd), float(x), float(y))


def nelder_mead_trilateration(ax, ay, d, x0, y0, xtol, ftol, max_iter, min_step):
    ax, ay, d = _floats(ax), _floats(ay), _floats(d)
    return _nelder_mead(lambda x, y: _trilat_cost(ax, ay, d, x, y),
                        float(x0), float(y0), xtol, ftol, int(max_iter), min_step)


def nelder_mead_tdoa(ax, ay, dd, x0, y0, xtol, ftol, max_iter, min_step):
    ax, ay, dd = _floats(ax), _floats(ay), _floats(dd)
    return _nelder_mead(lambda x, y: _tdoa_cost(ax, ay, dd, x, y),
                        float(x0), float(y0), xtol, ftol, int(max_iter), min_step)


def range_rate_mask(t, d, max_rate):
    t = _floats(t)
    d = _floats(d)
    keep = np.zeros(len(t), dtype=bool)
    if not t:
        return keep
    keep[0] = True
    last = 0
    for i in range(1, len(t)):
        dt = t[i] - t[last]
        dd = abs(d[i] - d[last])
        if dd <= max_rate * dt:
            keep[i] = True
            last = i
    return keep
