"""Event-driven integration of the switched predator-prey flow.

Smooth arcs inside either region are advanced with an adaptive embedded
Runge-Kutta 4(5) pair (`scipy.integrate.solve_ivp`); a sign change of the
switching value x - S inside a step is localized by the solver's bracketing
root-finder down to the event tolerance.  The localized manifold point is
then classified: in the crossing region the state is placed one event
tolerance into the destination region and the other smooth field takes over;
on the attracting sliding segment the prey density is pinned exactly to S
and the scalar sliding flow phi(y) is integrated until y leaves the segment
(continuing in the field whose tangency bound was reached) or an attractor
is confirmed.

Attractor termination is dwell-based: entering a ball of the configured
radius around a candidate equilibrium starts a clock, and the run stops once
the state has remained inside for the dwell time.  The exit test uses a
marginally larger radius so restarts never sit exactly on an event surface.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import solve_ivp

from .equilibria import interior_equilibria
from .errors import AmbiguousAttractorError, NumericsError, ParameterError
from .model import ModelParams, PsiMode, State, _rhs
from .records import EquilibriumRecord, Placement
from .sliding import (ManifoldRegime, _phi_coefficients, classify_manifold_point,
                      pseudo_equilibrium, sigma_pair, sliding_bounds)

log = logging.getLogger(__name__)

#: Hard cap on engine iterations; hitting it indicates runaway chattering.
MAX_STEPS = 200_000


class Regime(Enum):
    FLOW_S1 = "flow_s1"
    FLOW_S2 = "flow_s2"
    SLIDING = "sliding"


class SegmentEvent(Enum):
    CROSSING = "crossing"
    SLIDING_ENTRY = "sliding_entry"
    SLIDING_EXIT = "sliding_exit"
    TIME_LIMIT = "time_limit"
    ATTRACTOR_REACHED = "attractor_reached"


@dataclass
class SimOptions:
    """Integration controls.

    The defaults favor accuracy; grid scans pass looser copies.  The event
    tolerance bounds |x - S| at localized manifold hits and sets the nudge
    distance into the destination region after a crossing.
    """

    t_end: float = 500.0
    rtol: float = 1e-8
    atol: float = 1e-10
    event_tol: float = 1e-9
    first_step: float | None = None
    max_step: float = math.inf
    attractor_radius: float = 1e-4
    attractor_dwell: float = 2.0

    def __post_init__(self):
        for name in ("t_end", "rtol", "atol", "event_tol",
                     "attractor_radius", "attractor_dwell", "max_step"):
            if not getattr(self, name) > 0.0:
                raise ParameterError(f"simulation option {name!r} must be positive")
        if self.first_step is not None and not self.first_step > 0.0:
            raise ParameterError("simulation option 'first_step' must be positive")


@dataclass
class Segment:
    """One regime stretch of a trajectory and the event that ended it."""

    regime: Regime
    times: np.ndarray
    states: np.ndarray  # shape (n, 2)
    event: SegmentEvent


@dataclass
class Trajectory:
    segments: list[Segment]
    attractor: EquilibriumRecord | None
    params: ModelParams
    options: SimOptions

    @property
    def times(self) -> np.ndarray:
        return np.concatenate([seg.times for seg in self.segments])

    @property
    def states(self) -> np.ndarray:
        return np.concatenate([seg.states for seg in self.segments])

    @property
    def final_time(self) -> float:
        return float(self.segments[-1].times[-1])

    @property
    def final_state(self) -> State:
        return State(*self.segments[-1].states[-1])

    @property
    def terminal_event(self) -> SegmentEvent:
        return self.segments[-1].event


def default_attractors(params: ModelParams) -> list[EquilibriumRecord]:
    """Candidate long-run states: regular (or on-manifold) interior equilibria
    of both fields plus the pseudo-equilibrium when it exists."""
    records = []
    for mode in PsiMode:
        records.extend(r for r in interior_equilibria(params, mode)
                       if r.placement in (Placement.REGULAR, Placement.ON_BOUNDARY))
    pseudo = pseudo_equilibrium(params)
    if pseudo is not None:
        records.append(pseudo)
    return records


def simulate(initial, params: ModelParams, options: SimOptions | None = None,
             attractors: list[EquilibriumRecord] | None = None) -> Trajectory:
    """Integrate the switched system from `initial` until t_end, an attractor
    dwell, or a numerical failure.

    When `attractors` is None the candidates from `default_attractors` are
    used; pass an explicit (possibly empty) list to override - grid scans do,
    to avoid recomputing equilibria per cell.
    """
    opts = options if options is not None else SimOptions()
    x0, y0 = float(initial[0]), float(initial[1])
    if x0 < 0.0 or y0 < 0.0:
        raise ParameterError(f"initial state must be nonnegative, got ({x0}, {y0})")
    if attractors is None:
        attractors = default_attractors(params)
    engine = _Engine(params, opts, list(attractors))
    trajectory = engine.run(np.array([x0, y0]))
    violations = check_boundedness(trajectory, params)
    for message in violations:
        log.warning("boundedness monitor: %s", message)
    return trajectory


class _Engine:
    def __init__(self, params: ModelParams, opts: SimOptions,
                 attractors: list[EquilibriumRecord]):
        self.params = params
        self.opts = opts
        self.attractors = attractors
        self.centers = [np.array([rec.x, rec.y]) for rec in attractors]
        self.radius_in = opts.attractor_radius
        # Slightly larger exit radius so a post-exit restart is never exactly
        # on the entry surface (which would re-trigger the event at t0).
        self.radius_out = opts.attractor_radius * (1.0 + 1e-6)
        self.segments: list[Segment] = []
        self._cur_regime: Regime | None = None
        self._cur_times: list[np.ndarray] = []
        self._cur_states: list[np.ndarray] = []
        self.active: tuple[int, float] | None = None
        self.reached: EquilibriumRecord | None = None

    # -- sample bookkeeping -------------------------------------------------

    def _append(self, regime: Regime, times: np.ndarray, states: np.ndarray) -> None:
        if (states < -self.opts.atol).any():
            raise NumericsError(
                "population went negative beyond the absolute tolerance; "
                "tighten the integration tolerances")
        states = np.maximum(states, 0.0)
        if self._cur_regime is None:
            self._cur_regime = regime
        if self._cur_times and times.size and times[0] <= self._cur_times[-1][-1]:
            times = times[1:]
            states = states[1:]
        if times.size:
            self._cur_times.append(times)
            self._cur_states.append(states)

    def _close(self, event: SegmentEvent, fallback: tuple[float, np.ndarray] | None = None) -> None:
        if not self._cur_times:
            if fallback is None:
                raise NumericsError("attempted to close an empty segment")
            t, z = fallback
            self._cur_times.append(np.array([t]))
            self._cur_states.append(np.array([z]))
        self.segments.append(Segment(
            regime=self._cur_regime,
            times=np.concatenate(self._cur_times),
            states=np.concatenate(self._cur_states),
            event=event,
        ))
        self._cur_regime = None
        self._cur_times = []
        self._cur_states = []

    # -- attractor dwell ------------------------------------------------------

    def _stop_time(self, now: float) -> tuple[float, bool]:
        if self.active is None:
            return self.opts.t_end, False
        target = self.active[1] + self.opts.attractor_dwell
        if target <= self.opts.t_end:
            return target, True
        return self.opts.t_end, False

    def _initial_ball(self, z: np.ndarray) -> None:
        dists = [float(np.hypot(*(z - c))) for c in self.centers]
        inside = [i for i, d in enumerate(dists) if d <= self.radius_in]
        if inside:
            self.active = (min(inside, key=lambda i: dists[i]), 0.0)

    def _ball_events(self, position_of):
        """Terminal events for candidate-ball entry (inactive) or exit (active).

        `position_of` maps the solver state vector to the (x, y) plane; the
        sliding integrator passes a 1-D state with x pinned to S.
        """
        events = []
        mapping = {}
        if self.active is None:
            for i, center in enumerate(self.centers):
                def enter(tt, zz, c=center, r=self.radius_in):
                    xx, yy = position_of(zz)
                    return (xx - c[0])**2 + (yy - c[1])**2 - r * r
                enter.terminal = True
                enter.direction = -1.0
                mapping[len(events)] = i
                events.append(enter)
        else:
            center = self.centers[self.active[0]]

            def leave(tt, zz, c=center, r=self.radius_out):
                xx, yy = position_of(zz)
                return (xx - c[0])**2 + (yy - c[1])**2 - r * r
            leave.terminal = True
            leave.direction = 1.0
            mapping[len(events)] = self.active[0]
            events.append(leave)
        return events, mapping

    # -- main loop ------------------------------------------------------------

    def run(self, z0: np.ndarray) -> Trajectory:
        params, opts = self.params, self.opts
        self._initial_ball(z0)
        sv = z0[0] - params.S
        if abs(sv) <= opts.event_tol:
            t, z, regime, done = self._handle_manifold(0.0, z0[1], incoming=None)
        elif sv < 0.0:
            t, z, regime, done = 0.0, z0, Regime.FLOW_S1, False
        else:
            t, z, regime, done = 0.0, z0, Regime.FLOW_S2, False
        steps = 0
        while not done:
            steps += 1
            if steps > MAX_STEPS:
                raise NumericsError("integration exceeded the segment budget; "
                                    "likely chattering at an event surface")
            if regime is Regime.SLIDING:
                t, z, regime, done = self._slide(t, z)
            else:
                t, z, regime, done = self._flow(t, z, regime)
        return Trajectory(segments=self.segments, attractor=self.reached,
                          params=params, options=opts)

    def _finish(self, t: float, z: np.ndarray, dwell_done: bool):
        if dwell_done:
            self.reached = self.attractors[self.active[0]]
            self._close(SegmentEvent.ATTRACTOR_REACHED, fallback=(t, z))
        else:
            self._close(SegmentEvent.TIME_LIMIT, fallback=(t, z))
        return t, z, None, True

    def _check_solution(self, sol) -> None:
        if sol.status == -1:
            raise NumericsError(f"integration failed: {sol.message}")
        if not np.isfinite(sol.y).all():
            raise NumericsError("non-finite values in trajectory samples")

    def _flow(self, t: float, z: np.ndarray, regime: Regime):
        params, opts = self.params, self.opts
        psi = 0 if regime is Regime.FLOW_S1 else 1
        S = params.S
        z = np.maximum(z, 0.0)

        def rhs(tt, zz):
            return _rhs(zz[0], zz[1], params, psi)

        def cross(tt, zz):
            return zz[0] - S
        cross.terminal = True
        cross.direction = 1.0 if regime is Regime.FLOW_S1 else -1.0

        ball_events, mapping = self._ball_events(lambda zz: (zz[0], zz[1]))
        events = [cross] + ball_events
        t_stop, dwell_done = self._stop_time(t)
        if t_stop <= t:
            self._append(regime, np.array([t]), np.array([z]))
            return self._finish(t, z, dwell_done)
        sol = solve_ivp(rhs, (t, t_stop), z, method="RK45", events=events,
                        rtol=opts.rtol, atol=opts.atol,
                        max_step=opts.max_step, first_step=opts.first_step)
        self._check_solution(sol)
        self._append(regime, sol.t, sol.y.T)
        if sol.status == 0:
            return self._finish(t_stop, sol.y[:, -1], dwell_done)
        fired = min(((te[0], i) for i, te in enumerate(sol.t_events) if te.size))
        t_ev, idx = fired
        z_ev = sol.y_events[idx][0]
        if idx == 0:
            return self._handle_manifold(t_ev, z_ev[1], incoming=regime)
        if self.active is None:
            self.active = (mapping[idx - 1], t_ev)
        else:
            self.active = None
        return t_ev, z_ev, regime, False

    def _handle_manifold(self, t: float, y_m: float, incoming: Regime | None):
        params, opts = self.params, self.opts
        S = params.S
        y_m = max(y_m, 0.0)  # event localization can undershoot by one ulp
        regime_class = classify_manifold_point(y_m, params)
        if regime_class is ManifoldRegime.ATTRACTING_SLIDING:
            if incoming is not None:
                self._close(SegmentEvent.SLIDING_ENTRY)
            return t, np.array([S, y_m]), Regime.SLIDING, False
        if regime_class is ManifoldRegime.CROSSING:
            sigma1, _ = sigma_pair(y_m, params)
            if sigma1 > 0.0:
                dest, x_new = Regime.FLOW_S2, S + opts.event_tol
            else:
                dest, x_new = Regime.FLOW_S1, S - opts.event_tol
            if incoming is not None:
                self._close(SegmentEvent.CROSSING)
            return t, np.array([x_new, y_m]), dest, False
        if regime_class is ManifoldRegime.ESCAPING_SLIDING:
            raise NumericsError(
                "escaping sliding region encountered; impossible for this model "
                "(sigma_2 = sigma_1 - q1*E*S)")
        # Tangency graze: continue in the incoming field without closing the
        # segment; an initial condition placed exactly at a tangency follows
        # the push of the non-vanishing field instead.
        log.info("tangency graze at (S, %.8g) [%s]", y_m, regime_class.value)
        if incoming is None:
            sigma1, sigma2 = sigma_pair(y_m, params)
            push = sigma2 if regime_class is ManifoldRegime.TANGENCY_1 else sigma1
            incoming = Regime.FLOW_S2 if push > 0.0 else Regime.FLOW_S1
        x_new = S - opts.event_tol if incoming is Regime.FLOW_S1 else S + opts.event_tol
        return t, np.array([x_new, y_m]), incoming, False

    def _slide(self, t: float, z: np.ndarray):
        params, opts = self.params, self.opts
        S = params.S
        bounds = sliding_bounds(params)
        a_coef, b_coef = _phi_coefficients(params)

        def rhs(tt, yv):
            y = yv[0]
            return (y * (a_coef + b_coef * y),)

        def exit_top(tt, yv):
            return yv[0] - bounds.y_upper
        exit_top.terminal = True
        exit_top.direction = 1.0

        def exit_bottom(tt, yv):
            return yv[0] - bounds.y_lower
        exit_bottom.terminal = True
        exit_bottom.direction = -1.0

        ball_events, mapping = self._ball_events(lambda yv: (S, yv[0]))
        events = [exit_top, exit_bottom] + ball_events
        t_stop, dwell_done = self._stop_time(t)
        if t_stop <= t:
            self._append(Regime.SLIDING, np.array([t]), np.array([[S, z[1]]]))
            return self._finish(t, np.array([S, z[1]]), dwell_done)
        sol = solve_ivp(rhs, (t, t_stop), [z[1]], method="RK45", events=events,
                        rtol=opts.rtol, atol=opts.atol,
                        max_step=opts.max_step, first_step=opts.first_step)
        self._check_solution(sol)
        states = np.column_stack([np.full_like(sol.t, S), sol.y[0]])
        self._append(Regime.SLIDING, sol.t, states)
        if sol.status == 0:
            return self._finish(t_stop, np.array([S, sol.y[0, -1]]), dwell_done)
        fired = min(((te[0], i) for i, te in enumerate(sol.t_events) if te.size))
        t_ev, idx = fired
        y_ev = float(sol.y_events[idx][0][0])
        if idx == 0:  # left through the upper tangency: the non-harvest field
            self._close(SegmentEvent.SLIDING_EXIT)
            return t_ev, np.array([S - opts.event_tol, y_ev]), Regime.FLOW_S1, False
        if idx == 1:  # left through the lower tangency: the harvest field
            self._close(SegmentEvent.SLIDING_EXIT)
            return t_ev, np.array([S + opts.event_tol, y_ev]), Regime.FLOW_S2, False
        if self.active is None:
            self.active = (mapping[idx - 2], t_ev)
        else:
            self.active = None
        return t_ev, np.array([S, y_ev]), Regime.SLIDING, False


# -- diagnostics -------------------------------------------------------------


def lyapunov_value(state, eq, params: ModelParams) -> float:
    """Weighted entropy-like distance of `state` from the interior equilibrium
    `eq`; nonnegative and zero only at the equilibrium itself."""
    x, y = float(state[0]), float(state[1])
    xs, ys = float(eq[0]), float(eq[1])
    if x <= 0.0 or y <= 0.0:
        raise ParameterError(f"Lyapunov value requires a strictly positive state, got ({x}, {y})")
    if xs <= 0.0 or ys <= 0.0:
        raise ParameterError("Lyapunov value requires a strictly positive equilibrium")
    weight = 1.0 + params.b * (1.0 - params.m) * xs
    return (params.e * (x - xs - xs * math.log(x / xs))
            + weight * (y - ys - ys * math.log(y / ys)))


def detect_attractor(trajectory: Trajectory, candidates: list[EquilibriumRecord],
                     radius: float, dwell: float) -> EquilibriumRecord | None:
    """Candidate the trajectory tail has stayed within `radius` of for at
    least `dwell` time units; None when unresolved.

    Raises `AmbiguousAttractorError` when two candidates are simultaneously
    within the radius at a checked sample - the caller must shrink the radius.
    """
    if radius <= 0.0 or dwell <= 0.0:
        raise ParameterError("attractor radius and dwell must be positive")
    if not candidates:
        return None
    times = trajectory.times
    states = trajectory.states
    window_start = times[-1] - dwell
    if window_start < times[0]:
        return None
    start_idx = int(np.searchsorted(times, window_start, side="right")) - 1
    tail = states[max(start_idx, 0):]
    within = []
    for rec in candidates:
        center = np.array([rec.x, rec.y])
        dist = np.hypot(tail[:, 0] - center[0], tail[:, 1] - center[1])
        within.append(dist <= radius)
    within = np.array(within)
    simultaneous = within.sum(axis=0)
    if (simultaneous > 1).any():
        raise AmbiguousAttractorError(
            "two candidate attractors within the detection radius; shrink it")
    covered = within.all(axis=1)
    hits = np.nonzero(covered)[0]
    if hits.size == 0:
        return None
    return candidates[int(hits[0])]


def boundedness_limits(params: ModelParams) -> tuple[float, float]:
    """Eventual upper bounds (prey, predator) implied by the growth terms.

    The predator bound uses the decay constant gamma = min(e*q1*E, q2*E),
    i.e. the smaller of the effective per-capita harvest rates weighted by
    the biomass conversion; see README for why this pairing is the sensible
    reading of the combined-biomass argument.
    """
    pw = params.p * (1.0 - params.m)
    bw = params.b * (1.0 - params.m)
    no_harvest = (params.k2 / params.r2) * (
        params.r2 + params.e * pw * params.k1 / (1.0 + bw * params.k1))
    gamma = min(params.q1 * params.E * params.e, params.q2 * params.E)
    harvest = (params.r1 * params.k1 * params.e + params.r2 * params.k2) / (4.0 * gamma)
    return params.k1, max(no_harvest, harvest)


def check_boundedness(trajectory: Trajectory, params: ModelParams,
                      burn_in: float | None = None, slack: float = 1e-6) -> list[str]:
    """Violations of the eventual bounds over the trajectory tail."""
    times = trajectory.times
    states = trajectory.states
    if burn_in is None:
        burn_in = 0.5 * times[-1]
    mask = times >= burn_in
    if not mask.any():
        return []
    x_limit, y_limit = boundedness_limits(params)
    violations = []
    x_max = float(states[mask, 0].max())
    if x_max > x_limit + slack:
        violations.append(f"prey density {x_max:.8g} exceeds eventual bound {x_limit:.8g}")
    y_max = float(states[mask, 1].max())
    if y_max > y_limit + slack:
        violations.append(f"predator density {y_max:.8g} exceeds eventual bound {y_limit:.8g}")
    return violations
