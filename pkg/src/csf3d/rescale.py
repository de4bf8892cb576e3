"""Blow-up time estimation and the parabolic change of variables.

With singular time ``T`` and singular point ``p``,

    tau = -log(T - t),        v = (u - p) / sqrt(T - t).

For a type-I singularity ``max H^2 ~ 1 / (2 (T - t))``, so ``1 / (2 max H^2)``
is asymptotically linear in ``t`` with root ``T``; for shrinking circles the
relation is exact.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import geometry
from .errors import InsufficientDataError, InvalidArgumentError, InvalidTimeError
from .flow import Mode
from .geometry import DiscreteCurve

MIN_SAMPLES = 8
DEFAULT_ONSET = 5.0


@dataclass(frozen=True)
class SingularityEstimate:
    T_est: float
    p_est: np.ndarray
    fit_residual: float
    samples_used: int


def estimate_singularity(trajectory, onset=DEFAULT_ONSET, scheme="spectral"):
    """Fit ``1/(2 max H^2)`` linearly in ``t`` over snapshots with ``max H >= onset``.

    The blow-up time is the root of the fitted line and the singular point is
    the position of the maximum-curvature node of the last snapshot.

    Raises
    ------
    InsufficientDataError
        Fewer than eight qualifying snapshots, or a fit that does not place
        the blow-up after the last sample.
    """
    if trajectory.mode is not Mode.PHYSICAL:
        raise InvalidArgumentError("singularity estimation needs a physical-mode trajectory")
    curv = geometry.curvature_along([s.curve for s in trajectory.snapshots], scheme)
    hmax = curv.max(axis=1)
    keep = hmax >= onset
    ts = trajectory.clocks[keep]
    ys = 1.0 / (2.0 * hmax[keep] ** 2)
    if len(ts) < MIN_SAMPLES:
        raise InsufficientDataError(
            f"only {len(ts)} snapshots with max curvature >= {onset:g}; need {MIN_SAMPLES}"
        )
    slope, intercept = np.polyfit(ts, ys, 1)
    resid = ys - (slope * ts + intercept)
    if not slope < 0:
        raise InsufficientDataError(f"curvature is not growing along the fitted window (slope {slope:g})")
    T_est = -intercept / slope
    if not T_est > ts[-1]:
        raise InsufficientDataError(f"fitted blow-up time {T_est:g} precedes the last sample {ts[-1]:g}")
    last = trajectory.snapshots[-1].curve
    i = int(np.argmax(curv[-1]))
    return SingularityEstimate(
        T_est=float(T_est),
        p_est=np.array(last.nodes[i]),
        fit_residual=float(np.sqrt(np.mean(resid**2))),
        samples_used=len(ts),
    )


def to_rescaled(curve, t, T, p):
    """Map a physical curve at time ``t`` to ``(v, tau)``."""
    if not t < T:
        raise InvalidTimeError(f"rescaling needs t < T (t={t!r}, T={T!r})")
    gap = T - t
    v = (curve.nodes - np.asarray(p, dtype=float)) / math.sqrt(gap)
    return DiscreteCurve(v), -math.log(gap)


def from_rescaled(curve, tau, T, p):
    """Inverse of :func:`to_rescaled`; returns ``(u, t)``."""
    gap = math.exp(-tau)
    u = curve.nodes * math.sqrt(gap) + np.asarray(p, dtype=float)
    return DiscreteCurve(u), T - gap
