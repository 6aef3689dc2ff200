"""Record types describing equilibria and tangent points of the switched system."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .model import PsiMode, State


class EquilibriumKind(Enum):
    TRIVIAL = "trivial"
    SEMI_TRIVIAL = "semi_trivial"
    INTERIOR = "interior"
    PSEUDO = "pseudo"
    BOUNDARY = "boundary"


class Placement(Enum):
    """Position of a smooth-field equilibrium relative to its own region of
    validity: regular (inside), virtual (outside), or on the manifold."""

    REGULAR = "regular"
    VIRTUAL = "virtual"
    ON_BOUNDARY = "on_boundary"
    NOT_APPLICABLE = "n/a"


class Stability(Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    INCONCLUSIVE = "inconclusive"


class Visibility(Enum):
    VISIBLE = "visible"
    INVISIBLE = "invisible"


@dataclass(frozen=True)
class EquilibriumRecord:
    """A located equilibrium with its field membership and classification.

    `mode` is None for the pseudo-equilibrium, which belongs to the sliding
    flow rather than to either smooth field.  `eigenvalues` carries the
    Jacobian spectrum for smooth-field equilibria and is None for the
    pseudo-equilibrium (whose stability comes from the scalar sliding flow).
    """

    location: State
    mode: PsiMode | None
    kind: EquilibriumKind
    placement: Placement = Placement.NOT_APPLICABLE
    stability: Stability = Stability.INCONCLUSIVE
    eigenvalues: tuple[complex, complex] | None = None
    certified_unique: bool = False

    @property
    def x(self) -> float:
        return self.location.x

    @property
    def y(self) -> float:
        return self.location.y


@dataclass(frozen=True)
class TangentPointRecord:
    """A point of the manifold where one field is tangent to it (sigma_i = 0).

    The point at the upper sliding bound belongs to the non-harvesting field,
    the one at the lower bound to the harvesting field.  Visible means the
    grazing orbit of that field stays inside the field's own region.
    """

    location: State
    field: PsiMode
    visibility: Visibility
