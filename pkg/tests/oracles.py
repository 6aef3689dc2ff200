"""Independent oracles used by the test suite.

Everything here is built only on `eval_field` (or raw polynomial evaluation),
never on the closed forms under test, so each check has two genuinely
separate routes to the same number.
"""

from __future__ import annotations

import math

import numpy as np

from filippov_harvest import PsiMode, eval_field
from filippov_harvest.equilibria import CubicCoeffs


def bisect(f, lo: float, hi: float, iterations: int = 80) -> float:
    f_lo = f(lo)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if f_lo * f_mid <= 0.0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)


def cubic_roots_scan(coeffs: CubicCoeffs, lo: float, hi: float,
                     subsamples: int = 512) -> list[float]:
    """All simple real roots of the cubic in (lo, hi) by sign-change bisection.

    Breakpoints combine a uniform scan with the zeros of the derivative
    (quadratic formula), so well-separated roots cannot be skipped.
    """
    points = set(np.linspace(lo, hi, subsamples))
    a, b, c = 3.0 * coeffs.a3, 2.0 * coeffs.a2, coeffs.a1
    disc = b * b - 4.0 * a * c
    if disc >= 0.0 and a != 0.0:
        for crit in ((-b - math.sqrt(disc)) / (2.0 * a),
                     (-b + math.sqrt(disc)) / (2.0 * a)):
            if lo < crit < hi:
                points.add(crit)
    grid = sorted(points)
    roots = []
    values = [coeffs(x) for x in grid]
    for (x0, f0), (x1, f1) in zip(zip(grid, values), zip(grid[1:], values[1:])):
        if f0 == 0.0:
            roots.append(x0)
        elif f0 * f1 < 0.0:
            roots.append(bisect(coeffs, x0, x1))
    if values[-1] == 0.0:
        roots.append(grid[-1])
    deduped = []
    for root in sorted(roots):
        if not deduped or abs(root - deduped[-1]) > 1e-9 * max(1.0, abs(root)):
            deduped.append(root)
    return deduped


def fd_jacobian(state, params, mode: PsiMode, h: float = 1e-6) -> np.ndarray:
    """Central finite differences of eval_field."""
    x, y = state
    jac = np.empty((2, 2))
    for col, (dx, dy) in enumerate(((h * max(1.0, abs(x)), 0.0),
                                    (0.0, h * max(1.0, abs(y))))):
        step = dx or dy
        plus = eval_field((x + dx, y + dy), params, mode)
        minus = eval_field((x - dx, y - dy), params, mode)
        jac[0, col] = (plus.dx_dt - minus.dx_dt) / (2.0 * step)
        jac[1, col] = (plus.dy_dt - minus.dy_dt) / (2.0 * step)
    return jac


def convex_sliding_flow(y: float, params) -> float:
    """Predator velocity of the Filippov convex combination at (S, y), built
    from eval_field alone (the weight comes from the raw normal velocities)."""
    f1 = eval_field((params.S, y), params, PsiMode.NONHARVEST)
    f2 = eval_field((params.S, y), params, PsiMode.HARVEST)
    lam = f2.dx_dt / (f2.dx_dt - f1.dx_dt)
    return lam * f1.dy_dt + (1.0 - lam) * f2.dy_dt


def convex_sliding_root(params, y_lo: float, y_hi: float) -> float:
    """Bisection root of the convex sliding flow on (y_lo, y_hi)."""
    eps = 1e-12 * max(1.0, y_hi)
    return bisect(lambda y: convex_sliding_flow(y, params), y_lo + eps, y_hi - eps)


def brute_trajectory(initial, params, t_end: float, dt: float = 5e-4):
    """Blind fixed-step RK4 with naive switching by the sign of x - S.

    Chatters across the manifold instead of sliding, which still converges to
    the same attractors; used as a cross-check on the event-driven engine.
    """
    z = np.array(initial, dtype=float)

    def field(zz):
        mode = PsiMode.HARVEST if zz[0] > params.S else PsiMode.NONHARVEST
        return np.array(eval_field(np.maximum(zz, 0.0), params, mode))

    steps = int(round(t_end / dt))
    for _ in range(steps):
        k1 = field(z)
        k2 = field(z + 0.5 * dt * k1)
        k3 = field(z + 0.5 * dt * k2)
        k4 = field(z + dt * k3)
        z = z + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return z


def random_params(rng, base, spread: float = 0.3, s_value: float | None = None):
    """Random valid parameter set near `base` (multiplicative perturbation)."""
    from dataclasses import replace

    factors = {name: float(rng.uniform(1.0 - spread, 1.0 + spread))
               for name in ("r1", "k1", "p", "b", "q1", "E", "r2", "k2", "e", "q2")}
    m = float(np.clip(base.m * rng.uniform(1.0 - spread, 1.0 + spread), 0.02, 0.95))
    values = {name: getattr(base, name) * factor for name, factor in factors.items()}
    values["m"] = m
    values["S"] = s_value if s_value is not None else base.S
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return replace(base, **values)
