"""One-dimensional minimizers used by the transform engine and the gap lab.

The vectorized routines run one independent problem per array element, so
a whole grid of inner problems costs one numpy pass per iteration.
"""

from __future__ import annotations

import math

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0  # 1/phi, about 0.618


def golden_section(f, lo, hi, tol=1e-8, max_iter=200):
    """Minimize a unimodal scalar function on [lo, hi].

    Returns (x, f(x), iterations).  The endpoints are compared with the
    interior estimate at the end, so a minimum sitting on the boundary is
    returned exactly rather than to within ``tol``.
    """
    a, b = float(lo), float(hi)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while b - a > tol and it < max_iter:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        it += 1
    x, fx = (c, fc) if fc <= fd else (d, fd)
    for end in (float(lo), float(hi)):
        fe = f(end)
        if fe <= fx:
            x, fx = end, fe
    return x, fx, it


def golden_section_vec(f, lo, hi, tol=1e-8, max_iter=200, check_ends=True):
    """Elementwise golden-section search on arrays of brackets.

    ``f`` must map an array of abscissae (same shape as ``lo``) to values.
    Returns (x, fx, a, b) where [a, b] is the final bracket.
    """
    a = np.array(lo, dtype=float)
    b = np.array(hi, dtype=float)
    lo0, hi0 = a.copy(), b.copy()
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if np.all(b - a <= tol):
            break
        left = fc <= fd
        # shrink to [a, d] where left, [c, b] elsewhere
        na = np.where(left, a, c)
        nb = np.where(left, d, b)
        nc = np.where(left, nb - INV_PHI * (nb - na), d)
        nd = np.where(left, c, na + INV_PHI * (nb - na))
        fnew = f(np.where(left, nc, nd))
        fc, fd = np.where(left, fnew, fd), np.where(left, fc, fnew)
        a, b, c, d = na, nb, nc, nd
    x = np.where(fc <= fd, c, d)
    fx = np.minimum(fc, fd)
    if check_ends:
        for end in (lo0, hi0):
            fe = f(end)
            better = fe <= fx
            x = np.where(better, end, x)
            fx = np.where(better, fe, fx)
    return x, fx, a, b


def safeguarded_newton(df, d2f, x, a, b, tol=1e-12, max_iter=60):
    """Elementwise Newton iteration on df = 0 kept inside [a, b].

    Steps that leave the bracket or meet non-positive curvature fall back
    to bisection of the bracket, which is updated from the sign of df.
    Returns (x, |df(x)|, iterations used).
    """
    x = np.array(x, dtype=float)
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    g = df(x)
    it = 0
    while it < max_iter:
        done = np.abs(g) <= tol
        if np.all(done):
            break
        a = np.where(g < 0, x, a)
        b = np.where(g > 0, x, b)
        h = d2f(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x - g / h
        bad = ~np.isfinite(xn) | (h <= 0) | (xn <= a) | (xn >= b)
        xn = np.where(bad, 0.5 * (a + b), xn)
        x = np.where(done, x, xn)
        g = df(x)
        it += 1
        if np.all(b - a <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(x))):
            break
    return x, np.abs(g), it


def bisect_root(df, a, b, tol=1e-15, max_iter=200):
    """Elementwise bisection on a sign change of df over [a, b]."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        g = df(m)
        a = np.where(g < 0, m, a)
        b = np.where(g < 0, b, m)
        if np.all(b - a <= tol * np.maximum(1.0, np.abs(m))):
            break
    return 0.5 * (a + b)


def bracket_by_doubling(df, shape=(), start=1.0, limit=64.0):
    """Grow [-B, B] until df(-B) <= 0 <= df(B) or B reaches ``limit``.

    Works elementwise on arrays of the given shape.  Returns
    (B, lower_ok, upper_ok); a False flag means df keeps its sign up to the
    limit on that side, so the infimum is only approached there.
    """
    B = np.full(shape, float(start))
    while True:
        lower_ok = df(-B) <= 0
        upper_ok = df(B) >= 0
        grow = ~(lower_ok & upper_ok) & (B < limit)
        if not np.any(grow):
            return B, lower_ok, upper_ok
        B = np.where(grow, np.minimum(2 * B, limit), B)
