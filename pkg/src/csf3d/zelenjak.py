"""Pointwise checks of the weight ``F(xi, eta) = |eta| exp(-|xi|^2/4)``.

``xi`` stands for a curve point and ``eta`` for its parameter derivative.
With ``rho = F`` the weight satisfies

* ``D^2_eta F = rho |eta|^-4 (|eta|^2 I - eta eta^T)``;
* ``grad_xi F - M^T eta = -(rho/2) (xi - (xi.eta/|eta|^2) eta)`` where
  ``M[j, i] = d^2 F / (d xi_j d eta_i)``;
* for an orthonormal pair ``nu``, ``gamma`` orthogonal to ``eta``,
  ``-(rho/4)(xi.nu)^2 - [-(rho/4)|xi|^2 + (rho/4)(xi.eta)^2/|eta|^2]
  = (rho/4)(xi.gamma)^2 >= 0``.

Each ``*_check`` compares a central finite-difference evaluation with the
closed form.  The curvature terms ``-(H rho/2) xi.nu`` that appear on both
sides of the inequality cancel and are not evaluated.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, InvalidFrameError

FRAME_TOL = 1e-12
XI_MAX = 3.0
ETA_RANGE = (0.5, 2.0)


def _vec(v):
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise InvalidArgumentError(f"expected a 3-vector, got shape {v.shape}")
    return v


def _nonzero_eta(eta):
    eta = _vec(eta)
    if not np.linalg.norm(eta) > 0:
        raise InvalidArgumentError("eta must be nonzero")
    return eta


def weight_F(xi, eta):
    eta = _nonzero_eta(eta)
    xi = _vec(xi)
    return float(np.linalg.norm(eta) * np.exp(-0.25 * xi.dot(xi)))


def _F(xi, eta):
    return np.sqrt(eta.dot(eta)) * np.exp(-0.25 * xi.dot(xi))


def _default_step(eta):
    return 1e-4 * max(1.0, float(np.linalg.norm(eta)))


def hessian_eta_fd(xi, eta, h=None):
    """Central-difference Hessian of ``F`` in ``eta``."""
    xi, eta = _vec(xi), _nonzero_eta(eta)
    h = _default_step(eta) if h is None else h
    e = np.eye(3) * h
    f0 = _F(xi, eta)
    out = np.empty((3, 3))
    for i in range(3):
        out[i, i] = (_F(xi, eta + e[i]) - 2.0 * f0 + _F(xi, eta - e[i])) / (h * h)
        for j in range(i + 1, 3):
            out[i, j] = out[j, i] = (
                _F(xi, eta + e[i] + e[j])
                - _F(xi, eta + e[i] - e[j])
                - _F(xi, eta - e[i] + e[j])
                + _F(xi, eta - e[i] - e[j])
            ) / (4.0 * h * h)
    return out


def hessian_closed_form(xi, eta):
    xi, eta = _vec(xi), _nonzero_eta(eta)
    rho = _F(xi, eta)
    n2 = eta.dot(eta)
    return rho / n2**2 * (n2 * np.eye(3) - np.outer(eta, eta))


def hessian_identity_check(xi, eta, h=None):
    """Max absolute entry difference between FD and closed-form ``D^2_eta F``.

    The default step is ``1e-4 max(1, |eta|)``.
    """
    return float(np.max(np.abs(hessian_eta_fd(xi, eta, h) - hessian_closed_form(xi, eta))))


def gradient_vector_fd(xi, eta, h=None):
    """``grad_xi F - M^T eta`` with every derivative by central differences."""
    xi, eta = _vec(xi), _nonzero_eta(eta)
    h = _default_step(eta) if h is None else h
    e = np.eye(3) * h
    grad = np.array([(_F(xi + e[i], eta) - _F(xi - e[i], eta)) / (2.0 * h) for i in range(3)])
    # mixed[j, i] = d^2 F / (d xi_j d eta_i)
    mixed = np.empty((3, 3))
    for j in range(3):
        for i in range(3):
            mixed[j, i] = (
                _F(xi + e[j], eta + e[i])
                - _F(xi + e[j], eta - e[i])
                - _F(xi - e[j], eta + e[i])
                + _F(xi - e[j], eta - e[i])
            ) / (4.0 * h * h)
    return grad - mixed.T @ eta


def gradient_vector_closed_form(xi, eta):
    xi, eta = _vec(xi), _nonzero_eta(eta)
    rho = _F(xi, eta)
    return -0.5 * rho * (xi - xi.dot(eta) / eta.dot(eta) * eta)


def gradient_vector_identity(xi, eta, h=None):
    """Max component difference between FD and closed-form gradient vectors."""
    return float(np.max(np.abs(gradient_vector_fd(xi, eta, h) - gradient_vector_closed_form(xi, eta))))


@dataclass(frozen=True)
class PointFrame:
    """A point ``xi`` with derivative ``eta`` and unit vectors ``nu``, ``gamma``.

    ``nu``, ``eta`` and ``gamma`` must be mutually orthogonal.
    """

    xi: np.ndarray
    eta: np.ndarray
    nu: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        for name in ("xi", "eta", "nu", "gamma"):
            try:
                object.__setattr__(self, name, _vec(getattr(self, name)))
            except InvalidArgumentError as exc:
                raise InvalidFrameError(f"{name}: {exc}") from None
        if not np.linalg.norm(self.eta) > 0:
            raise InvalidFrameError("eta must be nonzero")
        for name in ("nu", "gamma"):
            if abs(np.linalg.norm(getattr(self, name)) - 1.0) > FRAME_TOL:
                raise InvalidFrameError(f"{name} is not a unit vector")
        that = self.eta / np.linalg.norm(self.eta)
        for a, b in (("nu", that), ("gamma", that)):
            if abs(getattr(self, a).dot(b)) > FRAME_TOL:
                raise InvalidFrameError(f"{a} is not orthogonal to eta")
        if abs(self.nu.dot(self.gamma)) > FRAME_TOL:
            raise InvalidFrameError("nu is not orthogonal to gamma")


def inequality_gap(frame):
    """``(lhs, rhs, gap)`` of the weighted inequality at one point.

    ``lhs = -(rho/4)(xi.nu)^2`` and
    ``rhs = -(rho/4)|xi|^2 + (rho/4)(xi.eta)^2/|eta|^2``; the gap
    ``lhs - rhs`` equals ``(rho/4)(xi.gamma)^2``.
    """
    xi, eta = frame.xi, frame.eta
    rho = _F(xi, eta)
    lhs = -0.25 * rho * xi.dot(frame.nu) ** 2
    rhs = -0.25 * rho * xi.dot(xi) + 0.25 * rho * xi.dot(eta) ** 2 / eta.dot(eta)
    return float(lhs), float(rhs), float(lhs - rhs)


def pythagoras_check(xi, frame):
    """``| |xi|^2 - (xi.nu)^2 - (xi.eta)^2/|eta|^2 - (xi.gamma)^2 |``."""
    xi = _vec(xi)
    eta = frame.eta
    parts = xi.dot(frame.nu) ** 2 + xi.dot(eta) ** 2 / eta.dot(eta) + xi.dot(frame.gamma) ** 2
    return float(abs(xi.dot(xi) - parts))


def random_xi(rng, xi_max=XI_MAX):
    d = rng.standard_normal(3)
    d /= np.linalg.norm(d)
    return d * xi_max * rng.uniform() ** (1.0 / 3.0)


def random_eta(rng, eta_range=ETA_RANGE):
    d = rng.standard_normal(3)
    return d / np.linalg.norm(d) * rng.uniform(*eta_range)


def random_frame(rng, xi_max=XI_MAX, eta_range=ETA_RANGE):
    """A random :class:`PointFrame`: orthonormal triple from a QR factorization."""
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    eta = q[:, 0] * rng.uniform(*eta_range)
    return PointFrame(random_xi(rng, xi_max), eta, q[:, 1], q[:, 2])


def run_checks(samples, seed, tolerances=None):
    """Worst normalised deviations of all four checks over random samples.

    Deviations are scaled as in the tolerances: Hessian by ``rho/|eta|``,
    gradient vector and gap mismatch by ``rho``, Pythagoras by
    ``max(1, |xi|^2)``.  ``gap_min`` is the smallest ``gap/rho`` seen.
    """
    tol = dict(DEFAULT_TOLERANCES)
    if tolerances:
        tol.update(tolerances)
    rng = np.random.default_rng(seed)
    worst = {"hessian": 0.0, "gradient_vector": 0.0, "inequality_gap": 0.0, "pythagoras": 0.0}
    gap_min = np.inf
    for _ in range(samples):
        frame = random_frame(rng)
        xi, eta = frame.xi, frame.eta
        rho = _F(xi, eta)
        ne = np.linalg.norm(eta)
        worst["hessian"] = max(worst["hessian"], hessian_identity_check(xi, eta) / (rho / ne))
        worst["gradient_vector"] = max(worst["gradient_vector"], gradient_vector_identity(xi, eta) / rho)
        _, _, gap = inequality_gap(frame)
        worst["inequality_gap"] = max(worst["inequality_gap"], abs(gap - 0.25 * rho * xi.dot(frame.gamma) ** 2) / rho)
        gap_min = min(gap_min, gap / rho)
        worst["pythagoras"] = max(worst["pythagoras"], pythagoras_check(xi, frame) / max(1.0, xi.dot(xi)))
    worst = {k: float(v) for k, v in worst.items()}
    passed = {k: bool(worst[k] <= tol[k]) for k in worst}
    passed["inequality_gap"] = passed["inequality_gap"] and bool(gap_min >= 0.0)
    return {
        "samples": samples,
        "seed": seed,
        "worst": worst,
        "gap_min": float(gap_min),
        "tolerances": tol,
        "passed": passed,
        "ok": all(passed.values()),
    }


DEFAULT_TOLERANCES = {
    "hessian": 1e-6,
    "gradient_vector": 1e-6,
    "inequality_gap": 1e-12,
    "pythagoras": 1e-12,
}
