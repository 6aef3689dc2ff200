"""Two-parameter bifurcation scans, boundary-collision location, and basins.

The equilibrium cubic does not involve the threshold S, so a (S, p) scan
solves the cubic once per p-column and derives every cell's regular/virtual
placement by comparing the fixed prey roots against the cell's S.  The
pseudo-equilibrium existence and stability along a column are closed forms
in S and are evaluated vectorized.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from joblib import Parallel, delayed

from .equilibria import interior_equilibria
from .errors import NumericsError, ParameterError
from .integrate import SimOptions, default_attractors, simulate
from .model import ModelParams, PsiMode
from .records import EquilibriumRecord, Stability
from .sliding import DEGENERATE_TOL, STABILITY_TOL

log = logging.getLogger(__name__)

#: Basin cell labels.
BASIN_LABELS = ("ER1", "ER2", "PSEUDO", "UNDETERMINED")

_STABILITY_CHAR = {Stability.STABLE: "S", Stability.UNSTABLE: "U",
                   Stability.INCONCLUSIVE: "I"}


@dataclass(frozen=True)
class AxisSpec:
    """Inclusive linspace specification of one grid axis."""

    name: str
    start: float
    stop: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ParameterError(f"axis {self.name!r} needs at least 2 samples")
        if not self.stop > self.start >= 0.0:
            raise ParameterError(f"axis {self.name!r} range must be nonnegative and increasing")

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.n)


@dataclass(frozen=True)
class RegionCode:
    """Classification of one (S, p) cell.

    Placement and stability strings carry one character per interior
    equilibrium of the mode, ascending in the prey coordinate (R/V/B and
    S/U/I respectively), so cells outside the Descartes-certified region can
    report all their roots.  `status` is "ok" or "undetermined".
    """

    n_nonharvest: int
    n_harvest: int
    placements_nonharvest: str
    placements_harvest: str
    stabilities_nonharvest: str
    stabilities_harvest: str
    pseudo_exists: bool
    pseudo_stability: str  # "S", "U", "I" or "-" when absent
    status: str = "ok"

    @classmethod
    def undetermined(cls) -> "RegionCode":
        return cls(0, 0, "", "", "", "", False, "-", status="undetermined")

    @property
    def both_exist(self) -> bool:
        return self.n_nonharvest > 0 and self.n_harvest > 0


@dataclass
class GridResult:
    """Row-major grid payload with its axis specifications and provenance."""

    axes: tuple[AxisSpec, ...]
    cells: list
    provenance: dict

    def __post_init__(self):
        expected = math.prod(axis.n for axis in self.axes)
        if len(self.cells) != expected:
            raise ParameterError(
                f"cell count {len(self.cells)} does not match grid shape {expected}")

    def cell(self, *indices):
        flat = 0
        for axis, idx in zip(self.axes, indices):
            flat = flat * axis.n + idx
        return self.cells[flat]

    def __eq__(self, other):
        if not isinstance(other, GridResult):
            return NotImplemented
        return (self.axes == other.axes and self.cells == other.cells
                and self.provenance == other.provenance)


def _column_roots(params: ModelParams, mode: PsiMode):
    """Interior-equilibrium data for one p-column; S-independent."""
    records = interior_equilibria(params, mode)
    xs = np.array([r.x for r in records])
    stab = "".join(_STABILITY_CHAR[r.stability] for r in records)
    return xs, stab


def _placement_chars(xs: np.ndarray, s_value: float, mode: PsiMode,
                     boundary_tol: float = 1e-9) -> str:
    chars = []
    for x in xs:
        if abs(x - s_value) < boundary_tol:
            chars.append("B")
        elif (x < s_value) == (mode is PsiMode.NONHARVEST):
            chars.append("R")
        else:
            chars.append("V")
    return "".join(chars)


def _pseudo_column(params: ModelParams, s_values: np.ndarray):
    """Vectorized pseudo-equilibrium existence/stability along an S column.

    Returns (exists, stability_char, valid) arrays; `valid` is False where
    the closed-form denominator degenerates.
    """
    one_m = 1.0 - params.m
    pw = params.p * one_m
    bws = params.b * one_m * s_values
    top = params.r1 * (params.k1 - s_values)
    scale = (1.0 + bws) / (params.k1 * pw)
    y_upper = top * scale
    y_lower = (top - params.q1 * params.E * params.k1) * scale
    numerator = (params.q2 * params.k2 * params.r1 * (params.k1 - s_values) * (1.0 + bws)
                 - params.q1 * params.k1 * params.k2
                 * (params.r2 + (params.r2 * params.b + params.e * params.p) * one_m * s_values))
    denominator = (params.q2 * params.k1 * params.k2 * pw
                   - params.q1 * params.k1 * params.r2 * (1.0 + bws))
    valid = np.abs(denominator) >= DEGENERATE_TOL
    y1 = np.divide(numerator, denominator, out=np.full_like(s_values, np.nan),
                   where=valid)
    nonempty = y_upper > np.maximum(0.0, y_lower)
    exists = valid & nonempty & (y_lower < y1) & (y1 < y_upper)
    slope = (-params.r2 / params.k2
             + (params.q2 / params.q1) * pw / (1.0 + bws)) * y1
    stability = np.where(np.abs(slope) < STABILITY_TOL, "I",
                         np.where(slope < 0.0, "S", "U"))
    return exists, stability, valid


def scan_sp_plane(base: ModelParams, s_range: tuple[float, float],
                  p_range: tuple[float, float], resolution) -> GridResult:
    """Classify every cell of an (S, p) grid into a RegionCode.

    `resolution` is an int (same for both axes) or an (n_s, n_p) pair.
    Per-cell failures are marked "undetermined" rather than aborting the scan.
    """
    n_s, n_p = (resolution, resolution) if isinstance(resolution, int) else resolution
    if s_range[0] <= 0.0 or p_range[0] <= 0.0:
        raise ParameterError("parameter scan ranges must be strictly positive")
    s_axis = AxisSpec("S", s_range[0], s_range[1], n_s)
    p_axis = AxisSpec("p", p_range[0], p_range[1], n_p)
    s_values = s_axis.values()
    columns: list[list[RegionCode]] = []
    for p_value in p_axis.values():
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")  # S > k1 cells are legitimate here
                params = replace(base, p=float(p_value))
            xs_nh, stab_nh = _column_roots(params, PsiMode.NONHARVEST)
            xs_h, stab_h = _column_roots(params, PsiMode.HARVEST)
            exists, pseudo_stab, valid = _pseudo_column(params, s_values)
        except Exception:
            log.exception("scan column p=%g failed; marking undetermined", p_value)
            columns.append([RegionCode.undetermined()] * n_s)
            continue
        column = []
        for i, s_value in enumerate(s_values):
            if not valid[i]:
                column.append(RegionCode.undetermined())
                continue
            column.append(RegionCode(
                n_nonharvest=len(xs_nh),
                n_harvest=len(xs_h),
                placements_nonharvest=_placement_chars(xs_nh, s_value, PsiMode.NONHARVEST),
                placements_harvest=_placement_chars(xs_h, s_value, PsiMode.HARVEST),
                stabilities_nonharvest=stab_nh,
                stabilities_harvest=stab_h,
                pseudo_exists=bool(exists[i]),
                pseudo_stability=str(pseudo_stab[i]) if exists[i] else "-",
            ))
        columns.append(column)
    # Row-major over (S, p): cell index = i_s * n_p + i_p.
    cells = [columns[j][i] for i in range(n_s) for j in range(n_p)]
    return GridResult(
        axes=(s_axis, p_axis),
        cells=cells,
        provenance={"kind": "regions", "params": base.to_dict()},
    )


def both_exist_area_fraction(grid: GridResult) -> float:
    """Fraction of cells where interior equilibria of both modes exist."""
    total = len(grid.cells)
    hits = sum(1 for c in grid.cells
               if isinstance(c, RegionCode) and c.both_exist)
    return hits / total


def existence_boundary_p(base: ModelParams, mode: PsiMode,
                         p_bracket: tuple[float, float] | None = None,
                         tol: float = 1e-5) -> float:
    """Supremum predation rate below which the mode's interior equilibrium
    exists, located by bisection on the existence predicate.

    Without an explicit bracket, the search starts from the base p (falling
    back to a small value) and doubles upward until existence fails.
    """
    def exists(p_value: float) -> bool:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            params = replace(base, p=p_value)
        return len(interior_equilibria(params, mode)) > 0

    if p_bracket is not None:
        lo, hi = p_bracket
        if not exists(lo) or exists(hi):
            raise NumericsError(
                f"no existence sign change over bracket ({lo}, {hi}) for mode "
                f"{PsiMode(mode).label}")
    else:
        lo = base.p if exists(base.p) else 1e-6
        if not exists(lo):
            raise NumericsError(
                f"no interior equilibrium at the bracket base p={lo}")
        hi = max(2.0 * lo, 1e-3)
        for _ in range(60):
            if not exists(hi):
                break
            lo, hi = hi, 2.0 * hi
        else:
            raise NumericsError("existence did not fail within the expanded bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if exists(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def equilibrium_curve(base: ModelParams, mode: PsiMode,
                      p_range: tuple[float, float], samples: int,
                      max_jump: float | None = None) -> list[tuple[float, float]]:
    """Prey coordinate of the interior equilibrium as a function of p.

    Existence gaps appear as NaN entries; jumps larger than `max_jump`
    (default 5% of k1 between consecutive samples) are logged as continuity
    violations and usually indicate a root-branch switch.
    """
    if samples < 2:
        raise ParameterError("equilibrium_curve needs at least 2 samples")
    if max_jump is None:
        max_jump = 0.05 * base.k1
    curve: list[tuple[float, float]] = []
    previous: float | None = None
    for p_value in np.linspace(p_range[0], p_range[1], samples):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            params = replace(base, p=float(p_value))
        records = interior_equilibria(params, mode)
        if not records:
            if previous is not None:
                log.warning("existence gap in x*(p) at p=%.6g (mode=%s)",
                            p_value, PsiMode(mode).label)
            curve.append((float(p_value), math.nan))
            previous = None
            continue
        if previous is None:
            chosen = next((r for r in records if r.certified_unique), records[0])
        else:
            chosen = min(records, key=lambda r: abs(r.x - previous))
        if previous is not None and abs(chosen.x - previous) > max_jump:
            log.warning("continuity violation in x*(p) at p=%.6g: jump %.3g",
                        p_value, abs(chosen.x - previous))
        curve.append((float(p_value), chosen.x))
        previous = chosen.x
    return curve


@dataclass(frozen=True)
class BoundaryBifurcation:
    """An interior equilibrium colliding with the manifold as S varies."""

    S: float
    mode: PsiMode
    eigenvalues: tuple[complex, complex]
    observed_type: str  # "focus" (complex pair), "node" (real pair), "degenerate"


def _eigen_type(eigenvalues: tuple[complex, complex]) -> str:
    if any(abs(z.imag) > 1e-10 for z in eigenvalues):
        return "focus"
    if all(abs(z.real) > 1e-10 for z in eigenvalues):
        return "node"
    return "degenerate"


def locate_boundary_bifurcations(base: ModelParams,
                                 s_range: tuple[float, float],
                                 tol: float = 1e-6) -> list[BoundaryBifurcation]:
    """S values in `s_range` where an interior equilibrium sits on x = S.

    The prey root of each mode does not depend on S, so each collision is the
    root itself; it is still located by bisection on x*(S) - S so the search
    stays valid if the model ever gains S-dependent equilibria.
    """
    s_lo, s_hi = s_range
    if not s_hi > s_lo > 0.0:
        raise ParameterError("s_range must be positive and increasing")
    found = []
    for mode in PsiMode:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            probe = replace(base, S=s_lo)
        for record in interior_equilibria(probe, mode):
            x_star = record.x
            if not s_lo <= x_star <= s_hi:
                continue

            def gap(s_value: float) -> float:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    params = replace(base, S=s_value)
                candidates = [r.x for r in interior_equilibria(params, mode)]
                if not candidates:
                    return math.nan
                nearest = min(candidates, key=lambda x: abs(x - x_star))
                return nearest - s_value

            lo = max(s_lo, x_star - 0.05 * base.k1)
            hi = min(s_hi, x_star + 0.05 * base.k1)
            g_lo, g_hi = gap(lo), gap(hi)
            if math.isnan(g_lo) or math.isnan(g_hi) or g_lo * g_hi > 0.0:
                # Collision sits at a bracket edge; fall back to the root itself.
                collision = x_star
            else:
                while hi - lo > tol:
                    mid = 0.5 * (lo + hi)
                    if gap(mid) > 0.0:
                        lo = mid
                    else:
                        hi = mid
                collision = 0.5 * (lo + hi)
            found.append(BoundaryBifurcation(
                S=collision,
                mode=mode,
                eigenvalues=record.eigenvalues,
                observed_type=_eigen_type(record.eigenvalues),
            ))
    found.sort(key=lambda rec: rec.S)
    return found


def _basin_label_map(attractors: list[EquilibriumRecord]) -> dict[int, str]:
    labels = {}
    for record in attractors:
        if record.mode is PsiMode.NONHARVEST:
            labels[id(record)] = "ER1"
        elif record.mode is PsiMode.HARVEST:
            labels[id(record)] = "ER2"
        else:
            labels[id(record)] = "PSEUDO"
    return labels


def _basin_row(x0: float, y_values: np.ndarray, params: ModelParams,
               sim: SimOptions, attractors: list[EquilibriumRecord]) -> list[str]:
    labels = _basin_label_map(attractors)
    row = []
    for y0 in y_values:
        try:
            trajectory = simulate((x0, float(y0)), params, sim, attractors=attractors)
            row.append(labels.get(id(trajectory.attractor), "UNDETERMINED"))
        except NumericsError:
            row.append("UNDETERMINED")
    return row


def compute_basins(base: ModelParams, x_range: tuple[float, float],
                   y_range: tuple[float, float], resolution,
                   sim: SimOptions | None = None, n_jobs: int = -1) -> GridResult:
    """Label every grid initial condition with the attractor it reaches.

    Labels are ER1 (non-harvesting regular equilibrium), ER2 (harvesting),
    PSEUDO, or UNDETERMINED (not resolved by t_end, including orbits that
    settle on axis states).  Rows are distributed across worker processes and
    gathered in row-major order.
    """
    n_x, n_y = (resolution, resolution) if isinstance(resolution, int) else resolution
    x_axis = AxisSpec("x0", x_range[0], x_range[1], n_x)
    y_axis = AxisSpec("y0", y_range[0], y_range[1], n_y)
    if sim is None:
        sim = SimOptions(t_end=200.0, rtol=1e-6, atol=1e-9,
                         attractor_radius=1e-3, attractor_dwell=1.0)
    attractors = default_attractors(base)
    stable_regular = [r for r in attractors
                      if r.mode is not None and r.stability is Stability.STABLE]
    if len(stable_regular) < 2:
        log.info("fewer than two stable regular equilibria; single-attractor labeling")
    y_values = y_axis.values()
    rows = Parallel(n_jobs=n_jobs)(
        delayed(_basin_row)(float(x0), y_values, base, sim, attractors)
        for x0 in x_axis.values())
    cells = [label for row in rows for label in row]
    undetermined = sum(1 for c in cells if c == "UNDETERMINED")
    if undetermined > 0.01 * len(cells):
        warnings.warn(
            f"{undetermined}/{len(cells)} basin cells undetermined; "
            "consider a larger t_end", stacklevel=2)
    return GridResult(
        axes=(x_axis, y_axis),
        cells=cells,
        provenance={"kind": "basins", "params": base.to_dict(),
                    "t_end": sim.t_end, "rtol": sim.rtol, "atol": sim.atol,
                    "attractor_radius": sim.attractor_radius,
                    "attractor_dwell": sim.attractor_dwell},
    )


def scan_m_sweep(base: ModelParams, m_values, s_range: tuple[float, float],
                 p_range: tuple[float, float], resolution) -> list[GridResult]:
    """One (S, p) region scan per refuge fraction in `m_values`."""
    results = []
    for m_value in m_values:
        if not 0.0 < m_value < 1.0:
            raise ParameterError(f"refuge fraction m={m_value} outside (0, 1)")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            params = replace(base, m=float(m_value))
        grid = scan_sp_plane(params, s_range, p_range, resolution)
        grid.provenance["m"] = float(m_value)
        results.append(grid)
    return results
