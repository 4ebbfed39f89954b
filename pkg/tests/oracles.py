"""Reference computations that do not touch the package's solvers.

Pigou and Braess costs are written out by hand; equilibria come from brute
force grids or scipy's scalar minimiser.
"""

import numpy as np
from scipy.optimize import brentq, minimize_scalar


def pigou_cost(f_bottom, p):
    """(top cost, bottom cost)"""
    return 1.0, f_bottom**p


def pigou_sc(f_bottom, p, demand=1.0):
    return (demand - f_bottom) * 1.0 + f_bottom * f_bottom**p


def pigou_potential(f_bottom, p, demand=1.0):
    return (demand - f_bottom) + f_bottom ** (p + 1) / (p + 1)


def braess_loads(upper, zig, lower):
    """Edge loads (e1 O-A, e2 A-D, e3 O-B, e4 B-D, e5 A-B)."""
    return np.array([upper + zig, upper, lower, lower + zig, zig])


def braess_sc(upper, zig, lower, p):
    f = braess_loads(upper, zig, lower)
    c = np.array([f[0] ** p, 1.0, 1.0, f[3] ** p, 0.0])
    return float((f * c).sum())


def braess_potential(upper, zig, lower, p):
    f = braess_loads(upper, zig, lower)
    return f[0] ** (p + 1) / (p + 1) + f[1] + f[2] + f[3] ** (p + 1) / (p + 1)


def simplex3(step):
    n = round(1 / step)
    for a in range(n + 1):
        for b in range(n + 1 - a):
            yield a / n, b / n, (n - a - b) / n


def grid_argmin(fun, step):
    best = min(simplex3(step), key=lambda pt: fun(*pt))
    return best, fun(*best)


def pigou_best_response(others_bottom, own_demand, p):
    """Bottom flow minimising x (x+g)^p + (d - x) on [0, d]."""
    res = minimize_scalar(
        lambda x: x * (x + others_bottom) ** p + (own_demand - x),
        bounds=(0.0, own_demand),
        method="bounded",
        options={"xatol": 1e-12},
    )
    # the bounded method never lands exactly on an endpoint
    cands = [0.0, own_demand, res.x]
    return min(cands, key=lambda x: x * (x + others_bottom) ** p + (own_demand - x))


def pigou_symmetric_nce(p, R):
    """Per-controller bottom flow solving (Rx)^p + p x (Rx)^(p-1) = 1."""
    return brentq(lambda x: (R * x) ** p + p * x * (R * x) ** (p - 1) - 1.0, 1e-12, 1.0 / R if R > 1 else 1.0, xtol=1e-15)


def pigou_unilateral_scan(bottoms, shares, p, r, resolution=1e-3):
    """Grid minimum of controller r's cost with others' bottom flows fixed."""
    g = sum(bottoms) - bottoms[r]
    d = shares[r]
    n = max(1, int(round(d / resolution)))
    xs = np.linspace(0.0, d, n + 1)
    costs = xs * (xs + g) ** p + (d - xs)
    return float(costs.min()), float(xs[1] - xs[0]) if n else 0.0


def pigou_two_type_sc(top_only, p=1):
    """ICUE of Pigou where a mass ``top_only`` can only use the top edge."""
    free = 1.0 - top_only
    res = minimize_scalar(
        lambda f: pigou_potential(f, p), bounds=(0.0, free), method="bounded", options={"xatol": 1e-13}
    )
    f = min([0.0, free, res.x], key=lambda v: pigou_potential(v, p))
    return pigou_sc(f, p), f
