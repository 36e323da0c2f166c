"""Independent reference solutions used by the tests.

ODE shooting for bound levels, and adaptive scipy quadrature for double
integrals.  Nothing here imports the package.
"""

import math

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq


def potential(kind, eps):
    if kind == "exact":
        return lambda x: 1.0 / x
    if kind == "softcore":
        return lambda x: 1.0 / (x + eps)
    if kind == "rounded":
        return lambda x: 1.0 / math.hypot(x, eps)
    return lambda x: 1.0 / max(x, eps)


def shoot(abs_e, lam, kind="exact", eps=None, parity="odd", radius=None):
    """Scaled psi(radius) for -psi'' - lam V psi = -|E| psi, started at the origin with parity data."""
    v = potential(kind, eps)
    a = math.sqrt(abs_e)
    radius = radius or 30.0 / a
    x0 = 1e-10 if kind == "exact" else 0.0
    y = np.array([x0 - lam * x0 * x0 / 2, 1.0 - lam * x0] if parity == "odd" else [1.0, 0.0])
    edges = [x0, *([eps] if kind == "cutoff" and eps < radius else []), radius]
    for lo, hi in zip(edges[:-1], edges[1:]):
        sol = solve_ivp(lambda x, s: [s[1], (abs_e - lam * v(x)) * s[0]], (lo, hi), y,
                        method="DOP853", rtol=1e-12, atol=1e-14 * max(1.0, abs(y).max()))
        y = sol.y[:, -1]
    return y[0] * math.exp(-a * radius)


def shooting_levels(lam, kind="exact", eps=None, parity="odd", lo=1e-3, hi=10.0, samples=80):
    """All levels with |E| in (lo, hi), deepest first, from sign changes of the shot solution."""
    radius = 30.0 / math.sqrt(lo)
    grid = np.geomspace(lo, hi, samples)
    vals = [shoot(e, lam, kind, eps, parity, radius) for e in grid]
    roots = []
    for e1, e2, f1, f2 in zip(grid, grid[1:], vals, vals[1:]):
        if f1 * f2 < 0:
            roots.append(brentq(lambda e: shoot(e, lam, kind, eps, parity, radius), e1, e2,
                                xtol=1e-15, rtol=1e-12))
    return sorted((-r for r in roots))


def triangle_square_integral(k, breaks=(), outer=(0, 1e-6, 1e-4, 1e-3, 1e-2, 0.1, 0.3, 1, 3, 10, 30, 100, 1e3, 1e4, 1e5, math.inf)):
    """Integral of k(x, y)^2 over the positive quadrant for symmetric k, by nested adaptive quad."""

    def inner(x):
        # the kernel is concentrated within a few units of the diagonal
        cuts = sorted({0.0, x, *(p for p in breaks if 0 < p < x), *(x - d for d in (1, 4, 16, 64) if d < x)})
        return sum(quad(lambda y: k(x, y) ** 2, a, b, limit=200, epsabs=1e-15, epsrel=1e-12)[0]
                   for a, b in zip(cuts[:-1], cuts[1:]))

    total = sum(quad(inner, a, b, limit=400, epsabs=1e-15, epsrel=1e-11)[0]
                for a, b in zip(outer[:-1], outer[1:]))
    return 2.0 * total


def dirichlet_green(x, y, a=1.0):
    return math.exp(-a * abs(x - y)) * -math.expm1(-2 * a * min(x, y)) / (2 * a)
