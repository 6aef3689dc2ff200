"""Planar predator-prey model with prey refuge and threshold-triggered harvesting.

The state is z = (x, y): prey density x and predator density y.  Prey grow
logistically and are consumed through a saturating (Holling type II) response
from which a fraction m of the prey population is sheltered, so only (1-m)x
is exposed to predation.  The predator is a generalist: it grows logistically
on alternative food and gains a conversion term from predation.  Linear
harvesting of both species (catchabilities q1, q2, effort E) is applied only
while the prey density exceeds a threshold S:

    dx/dt = r1*x*(1 - x/k1) - p*(1-m)*x*y / (1 + b*(1-m)*x) - psi*q1*E*x
    dy/dt = r2*y*(1 - y/k2) + e*p*(1-m)*x*y / (1 + b*(1-m)*x) - psi*q2*E*y

with psi = 0 for x < S and psi = 1 for x > S.  The line x = S is the
switching manifold; the sliding dynamics on it live in `sliding`.

Everything here is a pure function of its inputs; `ModelParams` is immutable
and can be shared freely across threads or processes.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple

import numpy as np

from .errors import ParameterError

#: JSON serialization order for ModelParams.
PARAM_KEYS = ("r1", "k1", "m", "p", "b", "q1", "E", "r2", "k2", "e", "q2", "S")


class PsiMode(IntEnum):
    """Active smooth field: psi = 0 (no harvesting) or psi = 1 (harvesting)."""

    NONHARVEST = 0
    HARVEST = 1

    @property
    def psi(self) -> int:
        return int(self.value)

    @property
    def label(self) -> str:
        return "nonharvest" if self is PsiMode.NONHARVEST else "harvest"


class State(NamedTuple):
    """Prey/predator density pair; both components are nonnegative."""

    x: float
    y: float


class Velocity(NamedTuple):
    dx_dt: float
    dy_dt: float


@dataclass(frozen=True)
class ModelParams:
    """All model constants plus the harvesting threshold S.

    r1, r2   intrinsic growth rates [1/time]
    k1, k2   carrying capacities [density]
    p        maximum predation rate [1/(density*time)]
    m        refuge fraction, 0 < m < 1
    b        handling-time coefficient [1/density]
    e        conversion rate of consumed prey to predator biomass
    q1, q2   catchability coefficients
    E        harvesting effort
    S        prey-density threshold that switches harvesting on

    q_i and E only ever enter as the products q1*E and q2*E, which act as
    effective per-capita mortality rates [1/time]; no unit algebra is
    enforced on the individual factors.
    """

    r1: float
    k1: float
    m: float
    p: float
    b: float
    q1: float
    E: float
    r2: float
    k2: float
    e: float
    q2: float
    S: float

    def __post_init__(self):
        for name in PARAM_KEYS:
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ParameterError(f"parameter {name!r} must be a number, got {value!r}")
            if not math.isfinite(value):
                raise ParameterError(f"parameter {name!r} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        for name in PARAM_KEYS:
            if name == "m":
                continue
            if getattr(self, name) <= 0.0:
                raise ParameterError(f"parameter {name!r} must be strictly positive")
        if not 0.0 < self.m < 1.0:
            raise ParameterError(f"refuge fraction m must lie in (0, 1), got {self.m}")
        if self.S >= self.k1:
            warnings.warn(
                f"threshold S={self.S} is not below the prey capacity k1={self.k1}; "
                "the sliding segment on x=S is empty",
                stacklevel=2,
            )

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {key: getattr(self, key) for key in PARAM_KEYS}

    @classmethod
    def from_dict(cls, data: dict) -> "ModelParams":
        if not isinstance(data, dict):
            raise ParameterError(f"expected a flat JSON object, got {type(data).__name__}")
        missing = [k for k in PARAM_KEYS if k not in data]
        if missing:
            raise ParameterError(f"missing parameter field(s): {', '.join(missing)}")
        extra = [k for k in data if k not in PARAM_KEYS]
        if extra:
            raise ParameterError(f"unknown parameter field(s): {', '.join(sorted(extra))}")
        return cls(**{k: data[k] for k in PARAM_KEYS})

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        return cls.from_dict(json.loads(text))


def _preset(r1, k1, m, p, b, q1, E, r2, k2, e, q2, S) -> ModelParams:
    return ModelParams(r1=r1, k1=k1, m=m, p=p, b=b, q1=q1, E=E,
                       r2=r2, k2=k2, e=e, q2=q2, S=S)


#: Built-in parameter sets.  A1 exhibits the boundary-collision cascade as S
#: varies (default S=0.25 sits in the stable-pseudo-equilibrium window);
#: A2 with S=4 is bistable (two coexisting regular equilibria).
PRESETS: dict[str, ModelParams] = {
    "A1": _preset(r1=0.9, k1=2.0, m=0.2, p=0.6, b=0.4, q1=0.2, E=1.0,
                  r2=0.8, k2=1.5, e=0.6, q2=0.1, S=0.25),
    "A2": _preset(r1=2.3, k1=9.0, m=0.15, p=0.2, b=0.04, q1=0.1, E=1.0,
                  r2=1.2, k2=7.0, e=0.5, q2=0.2, S=4.0),
}


def _check_state(x: float, y: float) -> None:
    if x < 0.0 or y < 0.0:
        raise ParameterError(f"state components must be nonnegative, got ({x}, {y})")
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ParameterError(f"state components must be finite, got ({x}, {y})")


def _rhs(x: float, y: float, params: ModelParams, psi: int) -> tuple[float, float]:
    """Raw field evaluation without validation; hot path for the integrator."""
    pw = params.p * (1.0 - params.m)
    response = pw * x / (1.0 + params.b * (1.0 - params.m) * x)
    dx = params.r1 * x * (1.0 - x / params.k1) - response * y - psi * params.q1 * params.E * x
    dy = params.r2 * y * (1.0 - y / params.k2) + params.e * response * y - psi * params.q2 * params.E * y
    return dx, dy


def eval_field(state, params: ModelParams, mode: PsiMode) -> Velocity:
    """Evaluate the active smooth vector field at a nonnegative state."""
    x, y = state
    _check_state(x, y)
    return Velocity(*_rhs(x, y, params, PsiMode(mode).psi))


def switching_value(state, params: ModelParams) -> float:
    """Signed distance x - S to the switching manifold.

    Negative in the non-harvesting region, positive in the harvesting region,
    zero on the manifold itself.
    """
    return state[0] - params.S


def field_jacobian(state, params: ModelParams, mode: PsiMode) -> np.ndarray:
    """Analytic Jacobian of the active field; valid at any nonnegative state."""
    x, y = state
    _check_state(x, y)
    psi = PsiMode(mode).psi
    pw = params.p * (1.0 - params.m)
    bw = params.b * (1.0 - params.m)
    denom = 1.0 + bw * x
    j11 = (params.r1 * (1.0 - 2.0 * x / params.k1)
           - pw * y / denom**2
           - psi * params.q1 * params.E)
    j12 = -pw * x / denom
    j21 = params.e * pw * y / denom**2
    j22 = (params.r2 * (1.0 - 2.0 * y / params.k2)
           + params.e * pw * x / denom
           - psi * params.q2 * params.E)
    return np.array([[j11, j12], [j21, j22]])
