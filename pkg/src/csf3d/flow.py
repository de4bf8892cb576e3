"""Explicit time integration of curve shortening flow.

Two right-hand sides are supported:

* physical mode, ``du/dt = u' x (u'' x u') / |u'|^4`` (equal to ``H nu``);
* rescaled mode, ``dv/dtau = v/2 + v' x (v'' x v') / |v'|^4``.

The combined cross-product form is used instead of ``H * nu`` so the
velocity stays well defined (zero) where ``u''`` is parallel to ``u'``.
Steps are classical RK4 with a parabolic step bound ``dt ~ h^2``.
"""

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .errors import CSFError, InvalidArgumentError, StepFailureError
from .geometry import DiscreteCurve

log = logging.getLogger(__name__)

# |rk4 stability interval on the negative real axis| / pi^2
RK4_PARABOLIC = 0.25
MAX_HALVINGS = 20


class Mode(str, enum.Enum):
    PHYSICAL = "physical"
    RESCALED = "rescaled"


@dataclass(frozen=True)
class StepControl:
    safety: float = 0.9
    dt_min: float = 1e-12
    redistribute_every: int = 0
    scheme: str = "spectral"
    filter_order: int = 36

    def __post_init__(self):
        if not 0.0 < self.safety <= 1.0:
            raise InvalidArgumentError(f"safety must lie in (0, 1], got {self.safety}")
        if not self.dt_min > 0.0:
            raise InvalidArgumentError(f"dt_min must be positive, got {self.dt_min}")
        if self.redistribute_every < 0:
            raise InvalidArgumentError("redistribute_every must be >= 0")
        if self.filter_order < 0:
            raise InvalidArgumentError("filter_order must be >= 0")
        geometry._check_scheme(self.scheme)

    @classmethod
    def for_mode(cls, mode, **kwargs):
        """Defaults per mode: redistribute every 10 steps in physical mode only."""
        kwargs.setdefault("redistribute_every", 10 if Mode(mode) is Mode.PHYSICAL else 0)
        return cls(**kwargs)


@dataclass(frozen=True)
class FlowState:
    curve: DiscreteCurve
    clock: float = 0.0
    mode: Mode = Mode.PHYSICAL
    steps: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))


@dataclass(frozen=True)
class StopRule:
    """Termination conditions for :func:`run`; at least one must be set.

    In rescaled mode ``clock`` is an absolute ``tau``.
    """

    clock: float = None
    max_curvature: float = None
    max_steps: int = None

    def __post_init__(self):
        if self.clock is None and self.max_curvature is None and self.max_steps is None:
            raise InvalidArgumentError("StopRule needs a clock limit, a curvature threshold or a step limit")
        if self.max_steps is not None and self.max_steps < 0:
            raise InvalidArgumentError("max_steps must be >= 0")


@dataclass
class Trajectory:
    snapshots: list = field(default_factory=list)
    stop_reason: str = ""

    @property
    def clocks(self):
        return np.array([s.clock for s in self.snapshots])

    @property
    def mode(self):
        return self.snapshots[0].mode

    def __len__(self):
        return len(self.snapshots)


class _Eval:
    """Right-hand side plus by-products of one derivative pass."""

    __slots__ = ("vel", "speed", "curv")

    def __init__(self, nodes, mode, scheme):
        d1, d2 = geometry.derivatives(nodes, scheme)
        s = geometry._checked_speed(d1)
        s2 = s * s
        # u' x (u'' x u') expanded as u''|u'|^2 - u'(u'.u'')
        dot = np.einsum("ij,ij->i", d1, d2)
        perp = d2 * s2[:, None] - d1 * dot[:, None]
        self.vel = perp / (s2 * s2)[:, None]
        if mode is Mode.RESCALED:
            self.vel += 0.5 * nodes
        self.speed = s
        self.curv = geometry._norm(perp) / (s2 * s2)


def _rhs(nodes, mode, scheme):
    return _Eval(nodes, mode, scheme).vel


def rhs_physical(curve, scheme="spectral"):
    """Per-node velocity ``u' x (u'' x u') / |u'|^4`` of the physical flow."""
    return _rhs(curve.nodes, Mode.PHYSICAL, scheme)


def rhs_rescaled(curve, scheme="spectral"):
    """Per-node velocity of the rescaled flow, ``v/2`` plus the physical term."""
    return _rhs(curve.nodes, Mode.RESCALED, scheme)


def _raw_dt(ev, control):
    n = ev.speed.shape[0]
    h = float(np.min(ev.speed)) * 2.0 * np.pi / n
    vmax = float(np.sqrt(np.max(np.einsum("ij,ij->i", ev.vel, ev.vel))))
    q = RK4_PARABOLIC * h
    return control.safety * q * h / (1.0 + vmax * q)


def _stable_dt(ev, control):
    return max(_raw_dt(ev, control), control.dt_min)


def stable_dt(curve, control, mode=Mode.PHYSICAL):
    """Explicit step bound ``safety * (h^2/4) / (1 + max|rhs| * h/4)``.

    ``h`` is the smallest local arclength spacing ``|u'| 2 pi / n``.  The
    factor 1/4 keeps ``dt * pi^2 / h^2`` (the stiffest spectral mode) inside
    the RK4 stability interval.  Clamped below by ``control.dt_min``.
    """
    mode = Mode(mode)
    return _stable_dt(_Eval(curve.nodes, mode, control.scheme), control)


def _advance(nodes, dt, mode, control, steps, k1=None):
    """One RK4 step (plus optional redistribution); returns (nodes, _Eval)."""
    scheme = control.scheme
    try:
        if k1 is None:
            k1 = _rhs(nodes, mode, scheme)
        k2 = _rhs(nodes + 0.5 * dt * k1, mode, scheme)
        k3 = _rhs(nodes + 0.5 * dt * k2, mode, scheme)
        k4 = _rhs(nodes + dt * k3, mode, scheme)
    except CSFError as exc:
        raise StepFailureError(f"stage evaluation failed: {exc}") from exc
    new = nodes + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(new)):
        raise StepFailureError("non-finite node values after step")
    if scheme == "spectral":
        new = geometry.spectral_filter(new, control.filter_order)
    if control.redistribute_every and (steps + 1) % control.redistribute_every == 0:
        try:
            new = geometry.resample_uniform_arclength(DiscreteCurve(new)).nodes
        except CSFError as exc:
            raise StepFailureError(f"redistribution failed: {exc}") from exc
    try:
        ev = _Eval(new, mode, scheme)
    except CSFError as exc:
        raise StepFailureError(str(exc)) from exc
    return new, ev


def step(state, dt, control):
    """Advance ``state`` by one RK4 step of size ``dt``.

    After the update the curve is re-sampled uniformly in arclength when
    ``control.redistribute_every`` divides the new step count.

    Raises
    ------
    StepFailureError
        If the new curve is non-finite or irregular; callers typically halve
        ``dt`` and retry.
    """
    if dt < 0:
        raise InvalidArgumentError("dt must be non-negative")
    if dt == 0:
        return state
    new, _ = _advance(state.curve.nodes, dt, state.mode, control, state.steps)
    return FlowState(DiscreteCurve(new), state.clock + dt, state.mode, state.steps + 1)


def _hit_curvature(ev, stop):
    return stop.max_curvature is not None and float(np.max(ev.curv)) >= stop.max_curvature


def run(state, stop, control, *, sample_dt=None, sample_every=1, dt_max=None):
    """Integrate from ``state`` until a stop condition fires.

    Parameters
    ----------
    state : FlowState
    stop : StopRule
    control : StepControl
    sample_dt : float, optional
        Record snapshots on the uniform clock grid ``clock0 + j*sample_dt``.
        Each interval is split into equal sub-steps no larger than the stable
        step (and ``dt_max``).  Stop conditions are evaluated at interval ends.
    sample_every : int
        Without ``sample_dt``: keep every ``sample_every``-th accepted step.
        The final state is always kept.
    dt_max : float, optional
        Upper bound on the step size.

    Returns
    -------
    Trajectory
        Snapshots in clock order plus one of the stop reasons
        ``"clock-limit"``, ``"curvature-threshold"``, ``"max-steps"`` or
        ``"blow-up"`` (the stable step or repeated halving fell below
        ``control.dt_min``).
    """
    if sample_dt is not None:
        return _run_sampled(state, stop, control, float(sample_dt), dt_max)
    return _run_adaptive(state, stop, control, int(sample_every), dt_max)


def _pre_check(state, ev, stop):
    if stop.max_steps is not None and stop.max_steps <= 0:
        return "max-steps"
    if stop.clock is not None and state.clock >= stop.clock:
        return "clock-limit"
    if _hit_curvature(ev, stop):
        return "curvature-threshold"
    return None


def _run_adaptive(state, stop, control, sample_every, dt_max):
    traj = Trajectory([state])
    mode = state.mode
    ev = _Eval(state.curve.nodes, mode, control.scheme)
    reason = _pre_check(state, ev, stop)
    nodes, clock, steps = state.curve.nodes, state.clock, state.steps
    taken = 0
    while reason is None:
        dt = _raw_dt(ev, control)
        if dt < control.dt_min:
            reason = "blow-up"
            break
        if dt_max is not None:
            dt = min(dt, dt_max)
        last = False
        if stop.clock is not None and clock + dt >= stop.clock:
            dt, last = stop.clock - clock, True
        accepted = False
        for _ in range(MAX_HALVINGS + 1):
            try:
                new, new_ev = _advance(nodes, dt, mode, control, steps, ev.vel)
                accepted = True
                break
            except StepFailureError as exc:
                log.debug("step failure at clock %.6g (dt=%.3g): %s", clock, dt, exc)
                dt *= 0.5
                last = False
                if dt < control.dt_min:
                    break
        if not accepted:
            reason = "blow-up"
            break
        nodes, ev, steps, taken = new, new_ev, steps + 1, taken + 1
        clock = stop.clock if last else clock + dt
        if last:
            reason = "clock-limit"
        elif _hit_curvature(ev, stop):
            reason = "curvature-threshold"
        elif stop.max_steps is not None and taken >= stop.max_steps:
            reason = "max-steps"
        if reason is not None or taken % sample_every == 0:
            traj.snapshots.append(FlowState(DiscreteCurve(nodes), clock, mode, steps))
    if traj.snapshots[-1].steps != steps:
        traj.snapshots.append(FlowState(DiscreteCurve(nodes), clock, mode, steps))
    traj.stop_reason = reason
    return traj


def _substep(nodes, ev, dt, mode, control, steps):
    """One accepted step of at most ``dt``; returns (nodes, ev, dt_taken) or None."""
    for _ in range(MAX_HALVINGS + 1):
        try:
            new, new_ev = _advance(nodes, dt, mode, control, steps, ev.vel)
            return new, new_ev, dt
        except StepFailureError as exc:
            log.debug("step failure (dt=%.3g): %s", dt, exc)
            dt *= 0.5
            if dt < control.dt_min:
                return None
    return None


def _run_sampled(state, stop, control, sample_dt, dt_max):
    if not sample_dt > 0:
        raise InvalidArgumentError("sample_dt must be positive")
    traj = Trajectory([state])
    mode = state.mode
    ev = _Eval(state.curve.nodes, mode, control.scheme)
    reason = _pre_check(state, ev, stop)
    nodes, steps = state.curve.nodes, state.steps
    clock0 = state.clock
    j = 0
    taken = 0
    while reason is None:
        target = clock0 + (j + 1) * sample_dt
        if stop.clock is not None and target > stop.clock + 1e-9 * sample_dt:
            reason = "clock-limit"
            break
        # sub-steps split the remaining interval evenly under the current bound,
        # so a curve that stays smooth gets equal sub-steps
        remaining = sample_dt
        y, y_ev, s = nodes, ev, steps
        while remaining > 1e-12 * sample_dt:
            bound = _raw_dt(y_ev, control)
            if bound < control.dt_min:
                reason = "blow-up"
                break
            if dt_max is not None:
                bound = min(bound, dt_max)
            dt = remaining / max(1, math.ceil(remaining / bound * (1 - 1e-12)))
            out = _substep(y, y_ev, dt, mode, control, s)
            if out is None:
                reason = "blow-up"
                break
            y, y_ev, taken_dt = out
            remaining = remaining - taken_dt if taken_dt < remaining else 0.0
            s += 1
        if reason is not None:
            break
        taken += s - steps
        nodes, ev, steps, j = y, y_ev, s, j + 1
        traj.snapshots.append(FlowState(DiscreteCurve(nodes), target, mode, steps))
        if stop.clock is not None and target >= stop.clock - 1e-9 * sample_dt:
            reason = "clock-limit"
        elif _hit_curvature(ev, stop):
            reason = "curvature-threshold"
        elif stop.max_steps is not None and taken >= stop.max_steps:
            reason = "max-steps"
    traj.stop_reason = reason
    return traj
