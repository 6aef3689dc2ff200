"""Equilibria of the two smooth subsystems and their classification.

Setting the active field to zero and eliminating the predator density reduces
the interior-equilibrium condition to a real cubic in the prey density x.  The
cubic never involves the threshold S, so a prey root x* is regular or virtual
purely by which side of S it falls on.  Boundary equilibria and tangent points
both live on x = S at the sliding bounds.
"""

from __future__ import annotations

import logging
import math
from dataclasses import replace
from typing import NamedTuple

import numpy as np

from .errors import ParameterError
from .model import ModelParams, PsiMode, State, eval_field, field_jacobian, _rhs
from .records import (EquilibriumKind, EquilibriumRecord, Placement, Stability,
                      TangentPointRecord, Visibility)
from .sliding import sliding_bounds

log = logging.getLogger(__name__)

#: Interior equilibria must satisfy this cubic residual (relative to max(1,|a0|)).
RESIDUAL_TOL = 1e-9

#: |x* - S| below this counts as an on-manifold (boundary) equilibrium.
BOUNDARY_TOL = 1e-9

#: Absolute tolerance on the boundary-equilibrium defining conditions.
BOUNDARY_CONDITION_TOL = 1e-8

#: Eigenvalue real parts within this of zero give an inconclusive verdict.
EIGEN_TOL = 1e-8


def _cbrt(v: float) -> float:
    return math.copysign(abs(v) ** (1.0 / 3.0), v)


class CubicCoeffs(NamedTuple):
    """Coefficients of a3*x^3 + a2*x^2 + a1*x + a0 = 0 (a3 > 0 always)."""

    a0: float
    a1: float
    a2: float
    a3: float

    def __call__(self, x: float) -> float:
        return ((self.a3 * x + self.a2) * x + self.a1) * x + self.a0

    def derivative(self, x: float) -> float:
        return (3.0 * self.a3 * x + 2.0 * self.a2) * x + self.a1


def cubic_coefficients(params: ModelParams, mode: PsiMode) -> CubicCoeffs:
    """Prey-equation cubic for the interior equilibria of the chosen field."""
    psi = PsiMode(mode).psi
    one_m = 1.0 - params.m
    r1_eff = params.r1 - psi * params.q1 * params.E
    r2_eff = params.r2 - psi * params.q2 * params.E
    k1, k2, r1, r2, p, b, e = (params.k1, params.k2, params.r1, params.r2,
                               params.p, params.b, params.e)
    a0 = k1 * k2 * p * one_m * r2_eff - k1 * r2 * r1_eff
    a1 = (r1 * r2
          - 2.0 * k1 * r2 * r1_eff * b * one_m
          + k1 * k2 * p * one_m**2 * (b * r2_eff + e * p))
    a2 = 2.0 * r1 * r2 * b * one_m - k1 * r2 * b**2 * one_m**2 * r1_eff
    a3 = r1 * r2 * b**2 * one_m**2
    return CubicCoeffs(a0=a0, a1=a1, a2=a2, a3=a3)


def descartes_certified(coeffs: CubicCoeffs) -> bool:
    """True when the sign pattern guarantees a unique positive root.

    With a3 > 0, the qualifying patterns are a0 < 0 together with any of
    (a1 < 0, a2 < 0), (a1 < 0, a2 > 0) or (a1 > 0, a2 > 0) - exactly one sign
    change.  The remaining pattern (a1 > 0, a2 < 0) has three changes and can
    hide one or three positive roots.
    """
    if not coeffs.a0 < 0.0:
        return False
    return ((coeffs.a1 < 0.0 and coeffs.a2 < 0.0)
            or (coeffs.a1 < 0.0 and coeffs.a2 > 0.0)
            or (coeffs.a1 > 0.0 and coeffs.a2 > 0.0))


def solve_cubic(coeffs: CubicCoeffs) -> list[float]:
    """All real roots, ascending, via the trigonometric/Cardano closed forms.

    Each candidate gets a Newton polish against the original cubic, which both
    tightens the closed-form evaluation and absorbs the mild conditioning loss
    when the depressed cubic is nearly degenerate.
    """
    a0, a1, a2, a3 = coeffs
    if a3 == 0.0:
        raise ParameterError("leading cubic coefficient vanished; parameters degenerate")
    # Monic then depressed form t^3 + pt + q with x = t - b2/3.
    b2 = a2 / a3
    b1 = a1 / a3
    b0 = a0 / a3
    p = b1 - b2 * b2 / 3.0
    q = 2.0 * b2**3 / 27.0 - b2 * b1 / 3.0 + b0
    shift = -b2 / 3.0
    discriminant = -4.0 * p**3 - 27.0 * q * q
    scale = max(1.0, abs(p)**1.5, abs(q))
    candidates: list[float]
    if abs(p) < 1e-14 * scale and abs(q) < 1e-14 * scale:
        candidates = [shift]
    elif discriminant > 1e-13 * scale * scale:
        # Three distinct real roots.
        amp = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * q / (amp * p)  # == cos(3*theta), clamp for safety
        arg = min(1.0, max(-1.0, arg))
        theta = math.acos(arg) / 3.0
        candidates = [amp * math.cos(theta - 2.0 * math.pi * k / 3.0) + shift
                      for k in range(3)]
    else:
        # One real root (or a near-double pair handled by the polish/dedupe).
        half_q = -q / 2.0
        root_term = math.sqrt(max(0.0, q * q / 4.0 + p**3 / 27.0))
        u = _cbrt(half_q + root_term)
        v = _cbrt(half_q - root_term)
        candidates = [u + v + shift]
        if abs(discriminant) <= 1e-13 * scale * scale and p != 0.0:
            candidates.append(-3.0 * q / (2.0 * p) + shift)  # the (near-)double root

    target = 1e-13 * max(1.0, abs(a0))
    polished = []
    for x in candidates:
        for _ in range(8):
            fx = coeffs(x)
            if abs(fx) <= target:
                break
            dfx = coeffs.derivative(x)
            if dfx == 0.0:
                break
            x -= fx / dfx
        polished.append(x)
    polished.sort()
    roots: list[float] = []
    for x in polished:
        if not roots or abs(x - roots[-1]) > 1e-9 * max(1.0, abs(x)):
            roots.append(x)
    return roots


def equilibrium_y(x: float, params: ModelParams, mode: PsiMode) -> float:
    """Predator density paired with a prey root x of the equilibrium cubic."""
    psi = PsiMode(mode).psi
    one_m = 1.0 - params.m
    return ((params.r1 - psi * params.q1 * params.E - params.r1 * x / params.k1)
            * (1.0 + params.b * one_m * x) / (params.p * one_m))


def _sorted_eigenvalues(jac: np.ndarray) -> tuple[complex, complex]:
    eigs = sorted(np.linalg.eigvals(jac), key=lambda z: (z.real, z.imag))
    return complex(eigs[0]), complex(eigs[1])


def _stability_from_eigenvalues(eigs: tuple[complex, complex]) -> Stability:
    max_re = max(z.real for z in eigs)
    if abs(max_re) < EIGEN_TOL:
        return Stability.INCONCLUSIVE
    return Stability.STABLE if max_re < 0.0 else Stability.UNSTABLE


def _placement(x: float, params: ModelParams, mode: PsiMode) -> Placement:
    if abs(x - params.S) < BOUNDARY_TOL:
        return Placement.ON_BOUNDARY
    if mode is PsiMode.NONHARVEST:
        return Placement.REGULAR if x < params.S else Placement.VIRTUAL
    return Placement.REGULAR if x > params.S else Placement.VIRTUAL


def interior_equilibria(params: ModelParams, mode: PsiMode) -> list[EquilibriumRecord]:
    """Positive interior equilibria of the chosen field, ascending in x.

    Prey roots whose paired predator density is nonpositive do not correspond
    to equilibria of the biological system and are discarded with a diagnostic.
    """
    mode = PsiMode(mode)
    coeffs = cubic_coefficients(params, mode)
    certified = descartes_certified(coeffs)
    records = []
    for x in solve_cubic(coeffs):
        if x <= 0.0:
            continue
        y = equilibrium_y(x, params, mode)
        if y <= 0.0:
            log.debug("discarding cubic root x=%.8g with nonpositive predator "
                      "density y=%.8g (mode=%s)", x, y, mode.label)
            continue
        residual = abs(coeffs(x))
        if residual > RESIDUAL_TOL * max(1.0, abs(coeffs.a0)):
            log.warning("cubic root x=%.8g has residual %.3e; skipping", x, residual)
            continue
        state = State(x, y)
        eigs = _sorted_eigenvalues(field_jacobian(state, params, mode))
        records.append(EquilibriumRecord(
            location=state,
            mode=mode,
            kind=EquilibriumKind.INTERIOR,
            placement=_placement(x, params, mode),
            stability=_stability_from_eigenvalues(eigs),
            eigenvalues=eigs,
            certified_unique=certified,
        ))
    return records


def jacobian(eq, params: ModelParams, mode: PsiMode) -> np.ndarray:
    """Jacobian of the field at an interior equilibrium.

    The matrix is defined everywhere (see `field_jacobian`), but its use for a
    stability verdict presumes an equilibrium, so non-equilibrium input is
    rejected.
    """
    velocity = eval_field(eq, params, mode)
    if math.hypot(*velocity) > RESIDUAL_TOL:
        raise ParameterError(
            f"state {tuple(eq)} is not an equilibrium of the {PsiMode(mode).label} "
            f"field (|F| = {math.hypot(*velocity):.3e})")
    return field_jacobian(eq, params, mode)


def local_stability_condition(eq, params: ModelParams) -> bool:
    """Sufficient condition for local asymptotic stability of an interior
    equilibrium: prey self-limitation dominates the response curvature term.
    The Jacobian eigenvalue test remains the authoritative verdict."""
    x, y = eq
    one_m = 1.0 - params.m
    denom = 1.0 + params.b * one_m * x
    return params.r1 / params.k1 > params.b * params.p * one_m**2 * y / denom**2


def global_stability_condition(eq, params: ModelParams) -> bool:
    """Sufficient condition for global asymptotic stability; implies the local
    condition (same bound with the denominator not squared)."""
    x, y = eq
    one_m = 1.0 - params.m
    denom = 1.0 + params.b * one_m * x
    return params.r1 / params.k1 > params.b * params.p * one_m**2 * y / denom


def classify_equilibrium(record: EquilibriumRecord, params: ModelParams) -> EquilibriumRecord:
    """Re-derive the regular/virtual/on-boundary placement of an interior record."""
    if record.kind is not EquilibriumKind.INTERIOR:
        raise ParameterError("placement classification applies to interior equilibria")
    placement = _placement(record.x, params, record.mode)
    if placement == record.placement:
        return record
    return replace(record, placement=placement)


def semi_trivial_equilibria(params: ModelParams, mode: PsiMode) -> list[EquilibriumRecord]:
    """Trivial and axis equilibria of the chosen field.

    The prey-axis state exists when growth outpaces harvesting (r1 > psi*q1*E),
    the predator-axis state when r2 > psi*q2*E; entries failing positivity are
    omitted.
    """
    mode = PsiMode(mode)
    psi = mode.psi
    records = [_axis_record(State(0.0, 0.0), params, mode, EquilibriumKind.TRIVIAL)]
    prey = params.k1 * (params.r1 - psi * params.q1 * params.E) / params.r1
    if prey > 0.0:
        records.append(_axis_record(State(prey, 0.0), params, mode,
                                    EquilibriumKind.SEMI_TRIVIAL))
    predator = params.k2 * (params.r2 - psi * params.q2 * params.E) / params.r2
    if predator > 0.0:
        records.append(_axis_record(State(0.0, predator), params, mode,
                                    EquilibriumKind.SEMI_TRIVIAL))
    return records


def _axis_record(state: State, params: ModelParams, mode: PsiMode,
                 kind: EquilibriumKind) -> EquilibriumRecord:
    eigs = _sorted_eigenvalues(field_jacobian(state, params, mode))
    return EquilibriumRecord(
        location=state,
        mode=mode,
        kind=kind,
        placement=Placement.NOT_APPLICABLE,
        stability=_stability_from_eigenvalues(eigs),
        eigenvalues=eigs,
    )


def boundary_equilibria(params: ModelParams,
                        tol: float = BOUNDARY_CONDITION_TOL) -> list[EquilibriumRecord]:
    """Equilibria of either field that sit exactly on the manifold x = S.

    The candidate locations are the sliding bounds: the non-harvesting field
    can only vanish on x = S at the upper bound (where its normal velocity is
    already zero) and the harvesting field at the lower bound.  The defining
    scalar condition for each is the vanishing of the corresponding predator
    velocity there.
    """
    bounds = sliding_bounds(params)
    one_m = 1.0 - params.m
    response = params.e * params.p * one_m * params.S / (1.0 + params.b * one_m * params.S)
    records = []
    cond_upper = (params.r2 / params.k2 * (params.k2 - bounds.y_upper) + response)
    if abs(cond_upper) < tol and bounds.y_upper > 0.0:
        records.append(_boundary_record(State(params.S, bounds.y_upper), params,
                                        PsiMode.NONHARVEST))
    cond_lower = (params.r2 / params.k2 * (params.k2 - bounds.y_lower) + response
                  - params.q2 * params.E)
    if abs(cond_lower) < tol and bounds.y_lower > 0.0:
        records.append(_boundary_record(State(params.S, bounds.y_lower), params,
                                        PsiMode.HARVEST))
    return records


def _boundary_record(state: State, params: ModelParams, mode: PsiMode) -> EquilibriumRecord:
    eigs = _sorted_eigenvalues(field_jacobian(state, params, mode))
    return EquilibriumRecord(
        location=state,
        mode=mode,
        kind=EquilibriumKind.BOUNDARY,
        placement=Placement.ON_BOUNDARY,
        stability=_stability_from_eigenvalues(eigs),
        eigenvalues=eigs,
    )


def tangent_points(params: ModelParams) -> list[TangentPointRecord]:
    """Both tangent points with their visibility.

    At a tangent point the prey velocity of the owning field vanishes, so the
    orbit's excursion off the manifold is governed by the curvature
    d^2x/dt^2 = (df/dy) * dy/dt there.  The prey-velocity cross-derivative
    df/dy is negative, so the sign of the predator velocity decides the side:
    the upper tangent point is visible to the non-harvesting field when its
    orbit curves back into x < S, the lower one is visible to the harvesting
    field when its orbit curves into x > S.
    """
    if params.S >= params.k1:
        raise ParameterError(
            f"tangent points require S < k1 (got S={params.S}, k1={params.k1})")
    bounds = sliding_bounds(params)
    records = []
    for y, mode in ((bounds.y_upper, PsiMode.NONHARVEST),
                    (bounds.y_lower, PsiMode.HARVEST)):
        dy_dt = _rhs(params.S, y, params, mode.psi)[1]
        one_m = 1.0 - params.m
        df_dy = -params.p * one_m * params.S / (1.0 + params.b * one_m * params.S)
        curvature = df_dy * dy_dt
        if mode is PsiMode.NONHARVEST:
            visible = curvature < 0.0  # orbit stays in x < S
        else:
            visible = curvature > 0.0  # orbit stays in x > S
        records.append(TangentPointRecord(
            location=State(params.S, y),
            field=mode,
            visibility=Visibility.VISIBLE if visible else Visibility.INVISIBLE,
        ))
    return records
