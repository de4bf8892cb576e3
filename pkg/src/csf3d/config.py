"""Flat ``key = value`` run configuration with dotted section keys.

Example::

    # twisted circle, identity check
    scenario.name = twisted_circle
    scenario.eps = 0.2
    scenario.n = 256
    snapshot_dtau = 1e-4
    rescale.tau_span = 1.0

Values are parsed as int, float, bool (``true``/``false``) or left as
strings.  ``--set KEY=VALUE`` overrides use the same syntax.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, CSFError
from .flow import StepControl, StopRule
from .scenarios import ScenarioSpec, resolve_params, scenario_params

SCENARIO_FIELDS = {"name", "n", "mode"}

TOP_LEVEL = {
    "snapshot_dtau": 1e-3,
    "snapshot_every": 1,
    "output_dir": "runs",
    "emit_plots": False,
    "seed": 0,
}

SECTION_DEFAULTS = {
    "control": {"safety": 0.9, "dt_min": 1e-12, "scheme": "spectral", "filter_order": 36},
    "stop": {},
    "rescale": {
        "workflow": "auto",
        "onset": 5.0,
        "stop_curvature": 50.0,
        "n": 64,
        "T_factor": 1.0,
        "tau_span": 1.0,
    },
    "verify": {"tolerance": 1e-3},
    "zelenjak": {"samples": 100},
    "convergence": {"levels": 3},
    "snapshots": {"stride": 0},
}

SECTION_KEYS = {
    "control": {"safety", "dt_min", "redistribute_every", "scheme", "filter_order"},
    "stop": {"clock", "max_curvature", "max_steps"},
    "rescale": {"workflow", "onset", "stop_curvature", "n", "T", "px", "py", "pz", "T_factor", "tau_span"},
    "verify": {"tolerance"},
    "zelenjak": {"samples", "tolerance", "hessian", "gradient_vector", "inequality_gap", "pythagoras"},
    "convergence": {"levels"},
    "snapshots": {"stride"},
}


def parse_value(text):
    text = text.strip()
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("none", "null", ""):
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_text(text, source="<config>"):
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected KEY = VALUE, got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = parse_value(value)
    return out


def parse_overrides(items):
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = parse_value(value)
    return out


def load_file(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_text(text, str(path))


@dataclass
class RunConfig:
    scenario: ScenarioSpec
    control: StepControl
    stop: StopRule
    snapshot_dtau: float
    snapshot_every: int
    output_dir: Path
    emit_plots: bool
    seed: int
    sections: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def section(self, name):
        return self.sections.get(name, {})


def _number(key, value, kind=float):
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    return float(value)


def build(flat, require_stop=False):
    """Validate a flat key map and assemble a :class:`RunConfig`.

    Raises
    ------
    ConfigError
        Unknown keys, wrong types or out-of-range values.
    """
    flat = dict(flat)
    sections = {k: dict(v) for k, v in SECTION_DEFAULTS.items()}
    scenario_fields = {"n": 128, "mode": "physical"}
    params = {}
    top = dict(TOP_LEVEL)
    for key, value in flat.items():
        if "." not in key:
            if key not in TOP_LEVEL:
                raise ConfigError(f"unknown config key {key!r}")
            top[key] = value
            continue
        sec, sub = key.split(".", 1)
        if sec == "scenario":
            if sub in SCENARIO_FIELDS:
                scenario_fields[sub] = value
            else:
                params[sub] = value
        elif sec in SECTION_KEYS:
            if sub not in SECTION_KEYS[sec]:
                raise ConfigError(f"unknown config key {key!r}")
            sections[sec][sub] = value
        else:
            raise ConfigError(f"unknown config section in {key!r}")

    if "name" not in scenario_fields:
        raise ConfigError("scenario.name is required")
    n = _number("scenario.n", scenario_fields["n"], int)
    if n < 16 or n & (n - 1):
        raise ConfigError(f"scenario.n must be a power of two >= 16, got {n}")
    try:
        spec = ScenarioSpec(
            str(scenario_fields["name"]),
            params,
            _number("scenario.n", scenario_fields["n"], int),
            scenario_fields["mode"],
        )
        _, required = scenario_params(spec.name)
        if "seed" in required and "seed" not in params:
            spec = ScenarioSpec(spec.name, {**params, "seed": _number("seed", top["seed"], int)}, spec.n, spec.mode)
        resolve_params(spec)
    except CSFError as exc:
        raise ConfigError(str(exc)) from exc

    ctl = sections["control"]
    try:
        control = StepControl.for_mode(
            spec.mode,
            **{k: ctl[k] for k in ("safety", "dt_min", "scheme", "filter_order", "redistribute_every") if k in ctl},
        )
    except (CSFError, TypeError) as exc:
        raise ConfigError(f"control: {exc}") from exc

    st = sections["stop"]
    stop = None
    if st or require_stop:
        try:
            stop = StopRule(
                clock=None if st.get("clock") is None else _number("stop.clock", st["clock"]),
                max_curvature=None if st.get("max_curvature") is None else _number("stop.max_curvature", st["max_curvature"]),
                max_steps=None if st.get("max_steps") is None else _number("stop.max_steps", st["max_steps"], int),
            )
        except CSFError as exc:
            raise ConfigError(f"stop: {exc}") from exc

    dtau = _number("snapshot_dtau", top["snapshot_dtau"])
    if not (dtau > 0 and math.isfinite(dtau)):
        raise ConfigError(f"snapshot_dtau must be positive, got {top['snapshot_dtau']!r}")
    every = _number("snapshot_every", top["snapshot_every"], int)
    if every < 1:
        raise ConfigError("snapshot_every must be >= 1")

    rs = sections["rescale"]
    if rs["workflow"] not in ("auto", "direct", "estimate"):
        raise ConfigError(f"rescale.workflow must be auto, direct or estimate, got {rs['workflow']!r}")
    for key in ("onset", "stop_curvature", "T_factor", "tau_span"):
        if not _number(f"rescale.{key}", rs[key]) > 0:
            raise ConfigError(f"rescale.{key} must be positive")
    _number("rescale.n", rs["n"], int)
    if _number("verify.tolerance", sections["verify"]["tolerance"]) < 0:
        raise ConfigError("verify.tolerance must be >= 0")
    if _number("convergence.levels", sections["convergence"]["levels"], int) < 2:
        raise ConfigError("convergence.levels must be >= 2")
    if _number("zelenjak.samples", sections["zelenjak"]["samples"], int) < 1:
        raise ConfigError("zelenjak.samples must be >= 1")
    if _number("snapshots.stride", sections["snapshots"]["stride"], int) < 0:
        raise ConfigError("snapshots.stride must be >= 0")

    return RunConfig(
        scenario=spec,
        control=control,
        stop=stop,
        snapshot_dtau=dtau,
        snapshot_every=every,
        output_dir=Path(str(top["output_dir"])),
        emit_plots=bool(top["emit_plots"]),
        seed=_number("seed", top["seed"], int),
        sections=sections,
        raw=flat,
    )


def effective_flat(cfg):
    """Every setting of ``cfg`` (defaults included) as a flat key map.

    Feeding the result back through :func:`build` reproduces ``cfg``.
    """
    out = {
        "scenario.name": cfg.scenario.name,
        "scenario.n": cfg.scenario.n,
        "scenario.mode": cfg.scenario.mode.value,
    }
    for key, value in sorted(resolve_params(cfg.scenario).items()):
        out[f"scenario.{key}"] = value
    out.update(
        {
            "snapshot_dtau": cfg.snapshot_dtau,
            "snapshot_every": cfg.snapshot_every,
            "output_dir": str(cfg.output_dir),
            "emit_plots": cfg.emit_plots,
            "seed": cfg.seed,
        }
    )
    for sec in sorted(cfg.sections):
        for key, value in sorted(cfg.sections[sec].items()):
            if value is not None:
                out[f"{sec}.{key}"] = value
    return out


def format_flat(flat):
    """Render a flat key map in the config-file syntax."""
    return "".join(f"{k} = {v}\n" for k, v in flat.items())
