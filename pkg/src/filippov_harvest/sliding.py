"""Dynamics on the switching manifold x = S.

The two smooth fields meet along the vertical line x = S.  With P(z) = x - S,
the normal projections sigma_1 = <grad P, F_nonharvest> and
sigma_2 = <grad P, F_harvest> classify every manifold point: trajectories
cross where the projections share a sign and slide where they oppose.  The
attracting sliding segment is the predator-density interval (y_lower, y_upper)
on x = S.  On it the motion follows the convex (Filippov) combination
lambda*F_nonharvest + (1-lambda)*F_harvest with lambda chosen so the
x-component vanishes; solving d(x-S)/dt = 0 for the harvesting intensity and
substituting it back (equivalent-control form) yields the same scalar flow
phi(y) for the predator density.  The zero of phi inside the segment is the
pseudo-equilibrium.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

from .errors import NumericsError, ParameterError
from .model import ModelParams, State
from .records import EquilibriumKind, EquilibriumRecord, Placement, Stability

log = logging.getLogger(__name__)

#: Absolute tolerance on sigma values for "tangent point" classification.
TANGENCY_TOL = 1e-12

#: |phi'(y1)| below this is reported as inconclusive rather than resolved.
STABILITY_TOL = 1e-8

#: Pseudo-equilibrium denominator magnitudes below this are degenerate.
DEGENERATE_TOL = 1e-12


class ManifoldRegime(Enum):
    CROSSING = "crossing"
    ATTRACTING_SLIDING = "attracting_sliding"
    ESCAPING_SLIDING = "escaping_sliding"
    TANGENCY_1 = "tangency_1"
    TANGENCY_2 = "tangency_2"


@dataclass(frozen=True)
class SlidingBounds:
    """Predator densities delimiting the sliding segment on x = S.

    The width y_upper - y_lower equals q1*E*(1+b*(1-m)*S)/(p*(1-m)) and is
    always positive; the segment is empty when it lies below y = 0.
    """

    y_lower: float
    y_upper: float

    @property
    def is_empty(self) -> bool:
        return self.y_upper <= max(0.0, self.y_lower)

    @property
    def width(self) -> float:
        return self.y_upper - self.y_lower

    def contains(self, y: float, closed: bool = True) -> bool:
        if closed:
            return self.y_lower <= y <= self.y_upper
        return self.y_lower < y < self.y_upper


def sliding_bounds(params: ModelParams) -> SlidingBounds:
    """Closed-form bounds of the sliding segment; empty when S >= k1."""
    pw = params.p * (1.0 - params.m)
    scale = (1.0 + params.b * (1.0 - params.m) * params.S) / (params.k1 * pw)
    top = params.r1 * (params.k1 - params.S)
    return SlidingBounds(
        y_lower=(top - params.q1 * params.E * params.k1) * scale,
        y_upper=top * scale,
    )


def sigma_pair(y: float, params: ModelParams) -> tuple[float, float]:
    """Normal velocities (sigma_1, sigma_2) of the two fields at (S, y).

    sigma_2 = sigma_1 - q1*E*S identically: harvesting only shifts the prey
    velocity down by the constant prey catch at x = S.
    """
    if y < 0.0:
        raise ParameterError(f"predator density must be nonnegative, got {y}")
    S = params.S
    pw = params.p * (1.0 - params.m)
    sigma1 = S * (params.r1 * (1.0 - S / params.k1)
                  - pw * y / (1.0 + params.b * (1.0 - params.m) * S))
    return sigma1, sigma1 - params.q1 * params.E * S


def classify_manifold_point(y: float, params: ModelParams,
                            tol: float = TANGENCY_TOL) -> ManifoldRegime:
    """Regime of the manifold point (S, y) by the signs of (sigma_1, sigma_2)."""
    sigma1, sigma2 = sigma_pair(y, params)
    if abs(sigma1) < tol:
        return ManifoldRegime.TANGENCY_1
    if abs(sigma2) < tol:
        return ManifoldRegime.TANGENCY_2
    if sigma1 * sigma2 > 0.0:
        return ManifoldRegime.CROSSING
    if sigma1 > 0.0:
        return ManifoldRegime.ATTRACTING_SLIDING
    # sigma_1 < 0 < sigma_2 cannot occur here (sigma_2 < sigma_1 always);
    # kept for completeness of the regime vocabulary.
    return ManifoldRegime.ESCAPING_SLIDING


def _require_segment(params: ModelParams) -> SlidingBounds:
    bounds = sliding_bounds(params)
    if bounds.is_empty:
        raise NumericsError(
            f"sliding segment is empty for S={params.S} (y_upper={bounds.y_upper:.6g})")
    return bounds


def filippov_lambda(y: float, params: ModelParams) -> float:
    """Convex weight of the non-harvesting field in the sliding combination.

    Affine in y and equal to sigma_2/(sigma_2 - sigma_1); evaluated in the
    endpoint-exact form (y - y_lower)/(y_upper - y_lower) so that the weight
    is exactly 0 at the lower bound and exactly 1 at the upper bound.
    """
    bounds = _require_segment(params)
    if not bounds.contains(y):
        raise ParameterError(
            f"y={y} lies outside the closed sliding segment "
            f"[{bounds.y_lower:.6g}, {bounds.y_upper:.6g}]")
    return (y - bounds.y_lower) / bounds.width


def _phi_coefficients(params: ModelParams) -> tuple[float, float]:
    """phi(y) = y*(A + B*y): linear and quadratic coefficients of the sliding flow."""
    S = params.S
    pw = params.p * (1.0 - params.m)
    denom = 1.0 + params.b * (1.0 - params.m) * S
    ratio = params.q2 / params.q1
    a = (params.r2
         + params.e * pw * S / denom
         - ratio * params.r1 * (1.0 - S / params.k1))
    b = -params.r2 / params.k2 + ratio * pw / denom
    return a, b


def _phi(y: float, params: ModelParams) -> float:
    a, b = _phi_coefficients(params)
    return y * (a + b * y)


def sliding_flow(y: float, params: ModelParams) -> float:
    """Predator velocity dy/dt on the sliding segment (x pinned to S).

    Equals the y-component of the convex combination
    lambda*F_nonharvest + (1-lambda)*F_harvest at (S, y).
    """
    bounds = _require_segment(params)
    if not bounds.contains(y):
        raise ParameterError(
            f"y={y} lies outside the closed sliding segment "
            f"[{bounds.y_lower:.6g}, {bounds.y_upper:.6g}]")
    return _phi(y, params)


def sliding_flow_derivative(y: float, params: ModelParams) -> float:
    """Analytic d(phi)/dy; phi is quadratic so this is exact."""
    a, b = _phi_coefficients(params)
    return a + 2.0 * b * y


def pseudo_equilibrium_y(params: ModelParams) -> float:
    """Closed-form predator density of the sliding-flow equilibrium.

    Returned regardless of whether it lies inside the sliding segment, so
    callers can use it diagnostically; raises on a degenerate denominator.
    """
    S = params.S
    one_m = 1.0 - params.m
    bws = params.b * one_m * S
    numerator = (params.q2 * params.k2 * params.r1 * (params.k1 - S) * (1.0 + bws)
                 - params.q1 * params.k1 * params.k2
                 * (params.r2 + (params.r2 * params.b + params.e * params.p) * one_m * S))
    denominator = (params.q2 * params.k1 * params.k2 * params.p * one_m
                   - params.q1 * params.k1 * params.r2 * (1.0 + bws))
    if abs(denominator) < DEGENERATE_TOL:
        raise NumericsError(
            f"pseudo-equilibrium denominator is degenerate ({denominator:.3e})")
    return numerator / denominator


def pseudo_equilibrium(params: ModelParams) -> EquilibriumRecord | None:
    """Pseudo-equilibrium (S, y1) if y1 falls strictly inside the sliding
    segment; None otherwise (call `pseudo_equilibrium_y` for the raw value)."""
    y1 = pseudo_equilibrium_y(params)
    bounds = sliding_bounds(params)
    if bounds.is_empty or not bounds.contains(y1, closed=False):
        log.debug("pseudo-equilibrium y1=%.8g outside sliding segment [%.8g, %.8g]",
                  y1, bounds.y_lower, bounds.y_upper)
        return None
    return EquilibriumRecord(
        location=State(params.S, y1),
        mode=None,
        kind=EquilibriumKind.PSEUDO,
        placement=Placement.NOT_APPLICABLE,
        stability=pseudo_stability(params),
    )


def pseudo_stability(params: ModelParams) -> Stability:
    """Sign of d(phi)/dy at the pseudo-equilibrium: negative means stable.

    Uses the analytic derivative of the quadratic flow; a central finite
    difference at step 1e-6*max(1, y1) guards against formula drift and any
    disagreement is logged.  |phi'| below 1e-8 is reported inconclusive.
    """
    y1 = pseudo_equilibrium_y(params)
    bounds = _require_segment(params)
    if not bounds.contains(y1, closed=False):
        raise NumericsError(
            f"pseudo-equilibrium y1={y1:.8g} lies outside the sliding segment")
    slope = sliding_flow_derivative(y1, params)
    step = 1e-6 * max(1.0, abs(y1))
    fd = (_phi(y1 + step, params) - _phi(y1 - step, params)) / (2.0 * step)
    if abs(slope - fd) > 1e-6 * max(1.0, abs(slope)):
        log.warning("analytic phi'(y1)=%.8g disagrees with finite difference %.8g",
                    slope, fd)
    if abs(slope) < STABILITY_TOL:
        return Stability.INCONCLUSIVE
    return Stability.STABLE if slope < 0.0 else Stability.UNSTABLE
