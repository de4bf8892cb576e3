"""Named initial curves and closed-form circle solutions."""

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .errors import CSFError, InvalidArgumentError, PastSingularityError, ScenarioError
from .flow import Mode
from .geometry import DiscreteCurve

MAX_REJECTIONS = 1000


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    params: dict = field(default_factory=dict)
    n: int = 128
    mode: Mode = Mode.PHYSICAL

    def __post_init__(self):
        try:
            object.__setattr__(self, "mode", Mode(self.mode))
        except ValueError:
            raise ScenarioError(f"unknown mode {self.mode!r}") from None


def _circle(x, r, cx, cy, cz):
    return np.stack([cx + r * np.cos(x), cy + r * np.sin(x), np.full_like(x, cz)], axis=1)


def _ellipse(x, a, b):
    return np.stack([a * np.cos(x), b * np.sin(x), np.zeros_like(x)], axis=1)


def _offset_circle(x, r, c):
    return _circle(x, r, 0.0, 0.0, c)


def warp_parameter(x, b):
    """Circle automorphism ``x -> x + 2 arg(1 - b e^{-ix})``, ``|b| < 1``.

    Its derivative ``(1 - b^2) / (1 - 2 b cos x + b^2)`` is positive, and the
    Fourier coefficients of a curve composed with it decay like ``b^k``.
    """
    return x + 2.0 * np.arctan2(b * np.sin(x), 1.0 - b * np.cos(x))


def _twisted_circle(x, eps, warp):
    if not abs(warp) < 1:
        raise ScenarioError("twisted_circle warp must satisfy |warp| < 1")
    y = warp_parameter(x, warp) if warp else x
    return np.stack([np.cos(y), np.sin(y), eps * np.sin(2.0 * y)], axis=1)


def _random_perturbation(rng, x, m, sigma, amp, dims):
    out = np.zeros((x.size, 3))
    for k in range(1, m + 1):
        a = rng.standard_normal(3)
        b = rng.standard_normal(3)
        scale = amp * math.exp(-sigma * k)
        out[:, :dims] += scale * (np.outer(np.cos(k * x), a) + np.outer(np.sin(k * x), b))[:, :dims]
    return out


def _acceptable(nodes):
    d1, d2 = geometry.derivatives(nodes)
    speed = geometry._norm(d1)
    return speed.min() >= 0.1 and geometry._norm(geometry._cross(d2, d1)).min() >= 1e-3


def _fourier_family(x, seed, m, sigma, amp, dims):
    base = _circle(x, 1.0, 0.0, 0.0, 0.0)
    seed = int(seed)
    for attempt in range(MAX_REJECTIONS):
        rng = np.random.default_rng(seed + attempt)
        nodes = base + _random_perturbation(rng, x, int(m), sigma, amp, dims)
        if _acceptable(nodes):
            return nodes
    raise ScenarioError(f"no acceptable curve after {MAX_REJECTIONS} seeds starting at {seed}")


def _fourier_random(x, seed, m, sigma, amp):
    return _fourier_family(x, seed, m, sigma, amp, 3)


def _planar_random(x, seed, m, sigma, amp):
    return _fourier_family(x, seed, m, sigma, amp, 2)


# name -> (generator, defaults, required keys)
REGISTRY = {
    "circle": (_circle, {"r": 1.0, "cx": 0.0, "cy": 0.0, "cz": 0.0}, ()),
    "ellipse": (_ellipse, {"a": 1.0, "b": 0.6}, ()),
    "offset_circle": (_offset_circle, {"r": 1.0, "c": 0.5}, ()),
    "twisted_circle": (_twisted_circle, {"eps": 0.2, "warp": 0.0}, ()),
    "fourier_random": (_fourier_random, {"m": 5, "sigma": 1.0, "amp": 0.3}, ("seed",)),
    "planar_random": (_planar_random, {"m": 5, "sigma": 1.0, "amp": 0.3}, ("seed",)),
}


def scenario_names():
    return sorted(REGISTRY)


def scenario_params(name):
    """Defaults and required keys for a registered scenario."""
    try:
        _, defaults, required = REGISTRY[name]
    except KeyError:
        raise ScenarioError(f"unknown scenario {name!r}; known: {', '.join(scenario_names())}") from None
    return dict(defaults), tuple(required)


def resolve_params(spec):
    defaults, required = scenario_params(spec.name)
    unknown = set(spec.params) - set(defaults) - set(required)
    if unknown:
        raise ScenarioError(f"unknown parameters for {spec.name}: {', '.join(sorted(unknown))}")
    missing = [k for k in required if k not in spec.params]
    if missing:
        raise ScenarioError(f"missing parameters for {spec.name}: {', '.join(missing)}")
    params = dict(defaults)
    params.update(spec.params)
    return params


def make_curve(spec):
    """Deterministic initial curve for ``spec``."""
    gen = REGISTRY.get(spec.name, (None,))[0]
    params = resolve_params(spec)
    if gen is None:  # unreachable: resolve_params validated the name
        raise ScenarioError(spec.name)
    try:
        return DiscreteCurve(gen(geometry.parameter_grid(spec.n), **params))
    except ScenarioError:
        raise
    except CSFError as exc:
        raise ScenarioError(f"{spec.name}: {exc}") from exc


def circle_oracle(r0, t):
    """Radius ``sqrt(r0^2 - 2t)`` of a circle shrinking under the physical flow."""
    if not t < 0.5 * r0 * r0:
        raise PastSingularityError(f"t={t!r} is at or past the extinction time {0.5 * r0 * r0!r}")
    return math.sqrt(r0 * r0 - 2.0 * t)


def rescaled_circle_ode(R):
    """Radial velocity ``R/2 - 1/R`` of an origin-centred circle in rescaled mode."""
    if not R > 0:
        raise InvalidArgumentError("radius must be positive")
    return 0.5 * R - 1.0 / R


def rescaled_circle_radius(R0, dtau):
    """Solution of ``dR/dtau = R/2 - 1/R``: ``R^2 = 2 + (R0^2 - 2) e^{dtau}``."""
    r2 = 2.0 + (R0 * R0 - 2.0) * math.exp(dtau)
    if not r2 > 0:
        raise PastSingularityError("rescaled circle has collapsed")
    return math.sqrt(r2)
