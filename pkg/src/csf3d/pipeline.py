"""Simulation and verification workflows shared by the CLI and the tests."""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import functionals, geometry, rescale
from .flow import FlowState, Mode, StepControl, StopRule, run
from .scenarios import ScenarioSpec, make_curve

log = logging.getLogger(__name__)


def control_for(cfg, mode):
    """Step control for ``mode`` from the config's ``control.*`` keys."""
    keys = ("safety", "dt_min", "scheme", "filter_order", "redistribute_every")
    ctl = cfg.section("control")
    return StepControl.for_mode(mode, **{k: ctl[k] for k in keys if k in ctl})


def simulate(cfg):
    """Run the scenario in its own mode; returns the trajectory."""
    spec = cfg.scenario
    state = FlowState(make_curve(spec), 0.0, spec.mode)
    control = control_for(cfg, spec.mode)
    if spec.mode is Mode.RESCALED:
        return run(state, cfg.stop, control, sample_dt=cfg.snapshot_dtau)
    return run(state, cfg.stop, control, sample_every=cfg.snapshot_every)


def trajectory_rows(traj, scheme="spectral"):
    """``(clock, length, max_curvature, min_speed)`` per snapshot."""
    rows = []
    for snap in traj.snapshots:
        d1, d2 = geometry.derivatives(snap.curve.nodes, scheme)
        s = geometry._norm(d1)
        h = geometry._norm(geometry._cross(d2, d1)) / s**3
        rows.append((snap.clock, float(np.mean(s) * 2.0 * np.pi), float(h.max()), float(s.min())))
    return rows


def estimate_for(spec, cfg):
    """Physical run of ``spec`` (at ``rescale.n`` nodes) and its blow-up estimate."""
    rs = cfg.section("rescale")
    coarse = ScenarioSpec(spec.name, spec.params, int(rs["n"]), Mode.PHYSICAL)
    control = control_for(cfg, Mode.PHYSICAL)
    traj = run(
        FlowState(make_curve(coarse), 0.0, Mode.PHYSICAL),
        StopRule(max_curvature=float(rs["stop_curvature"])),
        control,
    )
    log.info("estimation run: %d snapshots, stop=%s", len(traj), traj.stop_reason)
    return rescale.estimate_singularity(traj, onset=float(rs["onset"]), scheme=control.scheme)


@dataclass
class RescaledStart:
    state: FlowState
    workflow: str
    T: float = None
    p: np.ndarray = None
    estimate: rescale.SingularityEstimate = None

    def describe(self):
        out = {"workflow": self.workflow, "tau0": self.state.clock}
        if self.T is not None:
            out["T_used"] = self.T
            out["p_used"] = [float(c) for c in self.p]
        if self.estimate is not None:
            out["T_est"] = self.estimate.T_est
            out["p_est"] = [float(c) for c in self.estimate.p_est]
            out["fit_residual"] = self.estimate.fit_residual
            out["samples_used"] = self.estimate.samples_used
        return out


def rescaled_start(cfg, estimate=None):
    """Initial rescaled state for the identity check.

    ``direct`` takes the scenario curve as ``v`` at ``tau = 0``.
    ``estimate`` runs the physical flow to estimate ``(T, p)`` (unless
    ``rescale.T`` is given), multiplies ``T`` by ``rescale.T_factor`` and
    rescales the same initial curve at ``t = 0``.
    """
    spec = cfg.scenario
    rs = cfg.section("rescale")
    workflow = rs["workflow"]
    if workflow == "auto":
        workflow = "direct" if spec.mode is Mode.RESCALED else "estimate"
    curve0 = make_curve(spec)
    if workflow == "direct":
        return RescaledStart(FlowState(curve0, 0.0, Mode.RESCALED), workflow)
    if rs.get("T") is not None:
        T = float(rs["T"])
        p = np.array([float(rs.get(k) or 0.0) for k in ("px", "py", "pz")])
    else:
        if estimate is None:
            estimate = estimate_for(spec, cfg)
        T, p = estimate.T_est, estimate.p_est
    T *= float(rs["T_factor"])
    v0, tau0 = rescale.to_rescaled(curve0, 0.0, T, p)
    return RescaledStart(FlowState(v0, tau0, Mode.RESCALED), workflow, T, np.asarray(p, float), estimate)


@dataclass
class IdentityResult:
    trajectory: object
    reports: list
    max_abs_residual: float
    max_rel_residual: float
    corollary2_ok: bool
    worst_margin: float
    tolerance: float
    extra: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.max_rel_residual <= self.tolerance and self.corollary2_ok

    def verdict(self):
        return {
            "pass": bool(self.passed),
            "max_abs_residual": self.max_abs_residual,
            "max_rel_residual": self.max_rel_residual,
            "tolerance": self.tolerance,
            "corollary2": {"pass": bool(self.corollary2_ok), "worst_margin": self.worst_margin},
            "snapshots": len(self.trajectory),
            "stop_reason": self.trajectory.stop_reason,
            **self.extra,
        }


def verify_identity(state, tau_span, dtau, control, tolerance=1e-3, max_curvature=None):
    """Integrate the rescaled flow on a uniform ``tau`` grid and check the energy balance."""
    stop = StopRule(clock=state.clock + tau_span, max_curvature=max_curvature)
    traj = run(state, stop, control, sample_dt=dtau)
    reports = functionals.identity_residual(traj, control.scheme)
    res = np.array([abs(r.residual) for r in reports])
    rel = res / np.array([r.E for r in reports])
    ok, margin = functionals.corollary2_check(reports)
    return IdentityResult(traj, reports, float(res.max()), float(rel.max()), ok, margin, tolerance)


def verify_from_config(cfg, dtau=None, start=None):
    """Rescaled start (estimated if needed) followed by :func:`verify_identity`."""
    if start is None:
        start = rescaled_start(cfg)
    stop_curv = cfg.stop.max_curvature if cfg.stop is not None else None
    result = verify_identity(
        start.state,
        float(cfg.section("rescale")["tau_span"]),
        cfg.snapshot_dtau if dtau is None else dtau,
        control_for(cfg, Mode.RESCALED),
        float(cfg.section("verify")["tolerance"]),
        stop_curv,
    )
    result.extra.update(start.describe())
    return result, start


def observed_orders(residuals, floor=1e-12):
    """``log2`` ratios of successive residuals; ``"saturated"`` at the roundoff floor."""
    out = []
    for coarse, fine in zip(residuals[:-1], residuals[1:]):
        if coarse <= floor or fine <= floor:
            out.append("saturated")
        else:
            out.append(float(np.log2(coarse / fine)))
    return out
