"""Gaussian-weighted length and its dissipation terms along the rescaled flow.

For a rescaled curve ``v`` with weight ``w = exp(-|v|^2/4) |v'|``:

    E  = int w dx
    Pi = 1/4 int (v . gamma)^2 w dx
    D  = int (dv/dtau . nu)^2 w dx,   dv/dtau . nu = (v . nu)/2 + H

Along solutions of the rescaled flow ``dE/dtau = -Pi - D``; the functions
below evaluate each term by periodic trapezoid quadrature and check the
balance on sampled trajectories.
"""

from dataclasses import dataclass

import numpy as np

from . import geometry
from .errors import InvalidTrajectoryError
from .flow import Mode


@dataclass(frozen=True)
class EnergyReport:
    tau: float
    E: float
    Pi: float
    D: float
    dE_dtau_fd: float
    residual: float


def _weight(nodes, speed):
    return np.exp(-0.25 * geometry._dot(nodes, nodes)) * speed


def _quad(values):
    return np.mean(values, axis=-1) * 2.0 * np.pi


def energy(curve, scheme="spectral"):
    return float(_quad(_weight(curve.nodes, geometry.speed(curve, scheme))))


def binormal_dissipation(curve, scheme="spectral"):
    fr = geometry.frenet_frame(curve, scheme)
    vg = geometry._dot(curve.nodes, fr.binormal)
    return float(_quad(0.25 * vg**2 * _weight(curve.nodes, fr.speed)))


def normal_dissipation(curve, scheme="spectral"):
    fr = geometry.frenet_frame(curve, scheme)
    vn = 0.5 * geometry._dot(curve.nodes, fr.normal) + fr.curvature
    return float(_quad(vn**2 * _weight(curve.nodes, fr.speed)))


def _terms(nodes, scheme):
    fr = geometry.frenet_from_derivatives(*geometry.derivatives(nodes, scheme))
    w = _weight(nodes, fr.speed)
    vg = geometry._dot(nodes, fr.binormal)
    vn = 0.5 * geometry._dot(nodes, fr.normal) + fr.curvature
    return np.stack([_quad(w), _quad(0.25 * vg**2 * w), _quad(vn**2 * w)], axis=-1)


def terms(curve, scheme="spectral"):
    """``(E, Pi, D)`` from a single derivative and frame evaluation."""
    return tuple(float(v) for v in _terms(curve.nodes, scheme))


def terms_along(curves, scheme="spectral", chunk=512):
    """``(E, Pi, D)`` rows for a sequence of curves with equal node counts."""
    out = []
    for i in range(0, len(curves), chunk):
        stack = np.stack([c.nodes for c in curves[i : i + chunk]])
        out.append(_terms(stack, scheme))
    return np.concatenate(out, axis=0)


def identity_residual(trajectory, scheme="spectral", rtol=1e-6):
    """Energy balance at every interior snapshot of a rescaled trajectory.

    ``dE/dtau`` is the centred difference of ``E`` between neighbouring
    snapshots, so the snapshots must be uniformly spaced in ``tau``.

    Raises
    ------
    InvalidTrajectoryError
        Fewer than three snapshots, a physical-mode trajectory, or
        non-uniform spacing.
    """
    snaps = trajectory.snapshots
    if len(snaps) < 3:
        raise InvalidTrajectoryError(f"need at least 3 snapshots, got {len(snaps)}")
    if any(s.mode is not Mode.RESCALED for s in snaps):
        raise InvalidTrajectoryError("identity check needs a rescaled-mode trajectory")
    taus = np.array([s.clock for s in snaps])
    gaps = np.diff(taus)
    dtau = gaps.mean()
    if not dtau > 0 or np.max(np.abs(gaps - dtau)) > rtol * dtau:
        raise InvalidTrajectoryError("snapshots are not uniformly spaced in tau")
    vals = terms_along([s.curve for s in snaps], scheme)
    E = vals[:, 0]
    reports = []
    for k in range(1, len(snaps) - 1):
        dE = (E[k + 1] - E[k - 1]) / (taus[k + 1] - taus[k - 1])
        _, Pi, D = vals[k]
        reports.append(EnergyReport(float(taus[k]), float(E[k]), float(Pi), float(D), float(dE), float(dE + Pi + D)))
    return reports


def corollary2_check(reports):
    """Check ``Pi <= -dE/dtau`` at every report.

    Each report gets slack ``max(1e-6 E, 10 |residual|)``.  Returns
    ``(passed, worst_margin)`` with ``worst_margin = min(-dE/dtau - Pi)``.
    """
    ok = True
    worst = np.inf
    for r in reports:
        margin = -r.dE_dtau_fd - r.Pi
        worst = min(worst, margin)
        if margin < -max(1e-6 * r.E, 10.0 * abs(r.residual)):
            ok = False
    return ok, float(worst)
