"""Experiment configuration: a strict, sectioned ``key = value`` text format.

Example::

    [system]
    extent = 8
    spin = 1
    J = 1.0
    K = 2.0

    [tip]
    norm_p = 1, 2, 4

    [time]
    stop = 20
    count = 2001

Lists are comma separated; spins may be written as fractions (``1/2``).
Site indices are 0-based. Unknown sections or keys are errors, and every
problem found is reported, not only the first.
"""

import configparser
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib.resources import files
from typing import Optional

import numpy as np

from .bounds import KINDS as BOUND_KINDS
from .errors import ConfigError

REQUIRED = object()


@dataclass
class SystemSettings:
    extent: tuple
    spins: tuple
    J: float
    K: float = 0.0
    B: tuple = (0.0, 0.0, 0.0)
    g_factor: float = 2.0

    @property
    def n_sites(self):
        return math.prod(self.extent)


@dataclass
class TipSettings:
    norms: tuple = ()
    site: int = 0
    m_tip: tuple = (0.0, 0.0, 1.0)
    # raw Tersoff-Hamann parameters; used instead of ``norms`` when g is set
    g: Optional[float] = None
    current: float = 1.0
    polarization: float = 1.0
    kappa: float = 0.0
    height: float = 0.0


@dataclass
class ThermalSettings:
    temperature: Optional[float] = 0.5
    beta: Optional[float] = None


@dataclass
class TimeGrid:
    stop: float
    count: int
    start: float = 0.0

    def grid(self):
        return np.linspace(self.start, self.stop, self.count)


@dataclass
class BoundSettings:
    kinds: tuple = ("new_B_1d",)
    threshold: float = 0.05
    clamp: bool = True
    xi: Optional[float] = None
    source: int = 0
    target: Optional[int] = None
    tol: float = 1e-12


@dataclass
class DynamicsSettings:
    observe_site: Optional[int] = None
    epsilon: float = 0.01
    method: str = "auto"
    norms: tuple = ()
    velocity_sites: tuple = ()


@dataclass
class OutputSettings:
    dir: str = "out"
    svg: bool = False


@dataclass
class ExperimentConfig:
    system: SystemSettings
    time: TimeGrid
    tip: TipSettings = field(default_factory=TipSettings)
    thermal: ThermalSettings = field(default_factory=ThermalSettings)
    bounds: BoundSettings = field(default_factory=BoundSettings)
    dynamics: DynamicsSettings = field(default_factory=DynamicsSettings)
    output: OutputSettings = field(default_factory=OutputSettings)
    defaults_applied: list = field(default_factory=list, compare=False)

    @property
    def target(self):
        return self.system.n_sites - 1 if self.bounds.target is None else self.bounds.target

    @property
    def observe_site(self):
        return self.system.n_sites - 1 if self.dynamics.observe_site is None else self.dynamics.observe_site

    @property
    def exact_norms(self):
        return self.dynamics.norms or self.tip.norms


# -- value parsers -----------------------------------------------------------


def _float(text):
    v = float(text)
    if math.isnan(v):
        raise ValueError("nan is not allowed")
    return v


def _opt_float(text):
    return None if text.strip().lower() in ("auto", "none", "") else _float(text)


def _opt_int(text):
    return None if text.strip().lower() in ("auto", "none", "last", "") else int(text)


def _list(parse):
    def inner(text):
        items = [x.strip() for x in text.split(",") if x.strip()]
        return tuple(parse(x) for x in items)

    return inner


def _spin(text):
    s = Fraction(text.strip())
    if (2 * s).denominator != 1 or s <= 0:
        raise ValueError(f"{text!r} is not a positive half-integer")
    return float(s)


def _vec3(text):
    v = _list(_float)(text)
    if len(v) != 3:
        raise ValueError(f"expected 3 components, got {len(v)}")
    return v


def _bool(text):
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"{text!r} is not a boolean")


def _kind(text):
    if text not in BOUND_KINDS:
        raise ValueError(f"unknown bound kind {text!r} (choose from {', '.join(BOUND_KINDS)})")
    return text


def _method(text):
    if text not in ("auto", "dense", "krylov"):
        raise ValueError(f"method must be auto, dense or krylov, got {text!r}")
    return text


# section -> key -> (dataclass field, parser, default); REQUIRED marks mandatory keys
SCHEMA = {
    "system": {
        "extent": ("extent", _list(int), REQUIRED),
        "spin": ("spins", _list(_spin), REQUIRED),
        "J": ("J", _float, REQUIRED),
        "K": ("K", _float, 0.0),
        "B": ("B", _vec3, (0.0, 0.0, 0.0)),
        "g_factor": ("g_factor", _float, 2.0),
    },
    "tip": {
        "norm_p": ("norms", _list(_float), ()),
        "site": ("site", int, 0),
        "m_tip": ("m_tip", _vec3, (0.0, 0.0, 1.0)),
        "g": ("g", _opt_float, None),
        "current": ("current", _float, 1.0),
        "polarization": ("polarization", _float, 1.0),
        "kappa": ("kappa", _float, 0.0),
        "height": ("height", _float, 0.0),
    },
    "thermal": {
        "temperature_K": ("temperature", _opt_float, 0.5),
        "beta": ("beta", _opt_float, None),
    },
    "time": {
        "start": ("start", _float, 0.0),
        "stop": ("stop", _float, REQUIRED),
        "count": ("count", int, REQUIRED),
    },
    "bounds": {
        "kinds": ("kinds", _list(_kind), ("new_B_1d",)),
        "threshold": ("threshold", _float, 0.05),
        "clamp": ("clamp", _bool, True),
        "xi": ("xi", _opt_float, None),
        "source": ("source", int, 0),
        "target": ("target", _opt_int, None),
        "tol": ("tol", _float, 1e-12),
    },
    "dynamics": {
        "observe_site": ("observe_site", _opt_int, None),
        "epsilon": ("epsilon", _float, 0.01),
        "method": ("method", _method, "auto"),
        "norm_p": ("norms", _list(_float), ()),
        "velocity_sites": ("velocity_sites", _list(int), ()),
    },
    "output": {
        "dir": ("dir", str, "out"),
        "svg": ("svg", _bool, False),
    },
}

SECTION_TYPES = {
    "system": SystemSettings,
    "tip": TipSettings,
    "thermal": ThermalSettings,
    "time": TimeGrid,
    "bounds": BoundSettings,
    "dynamics": DynamicsSettings,
    "output": OutputSettings,
}


def _reader():
    cp = configparser.ConfigParser(
        interpolation=None,
        strict=True,
        comment_prefixes=("#", ";"),
        inline_comment_prefixes=("#",),
        empty_lines_in_values=False,
        default_section="__no_default__",
    )
    cp.optionxform = str
    return cp


def _syntax_errors(exc):
    if isinstance(exc, configparser.ParsingError):
        return [f"line {lineno}: syntax error near {line.strip()!r}" for lineno, line in exc.errors]
    lineno = getattr(exc, "lineno", None)
    msg = exc.message if hasattr(exc, "message") else str(exc)
    msg = msg.splitlines()[0]
    return [f"line {lineno}: {msg}" if lineno else msg]


def parse_config(text):
    """Parse and validate configuration text into an ExperimentConfig.

    Raises ConfigError listing every syntax or semantic problem.
    """
    cp = _reader()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(_syntax_errors(exc)) from None
    errors, defaults, values = [], [], {}
    for section in cp.sections():
        if section not in SCHEMA:
            errors.append(f"unknown section [{section}]")
    for section, keys in SCHEMA.items():
        given = cp[section] if cp.has_section(section) else {}
        for key in given:
            if key not in keys:
                errors.append(f"unknown key {section}.{key}")
        kwargs = {}
        for key, (attr, parse, default) in keys.items():
            if key in given:
                try:
                    kwargs[attr] = parse(given[key])
                except (ValueError, ZeroDivisionError) as exc:
                    errors.append(f"{section}.{key}: {exc}")
            elif default is REQUIRED:
                errors.append(f"missing required key {section}.{key}")
            else:
                kwargs[attr] = default
                defaults.append(f"{section}.{key}")
        values[section] = kwargs
    if errors:
        raise ConfigError(errors)
    specs = {name: SECTION_TYPES[name](**kw) for name, kw in values.items()}
    if "thermal.beta" not in defaults and "thermal.temperature_K" in defaults:
        specs["thermal"].temperature = None
        defaults.remove("thermal.temperature_K")
    cfg = ExperimentConfig(**specs, defaults_applied=defaults)
    errors = validate(cfg)
    if errors:
        raise ConfigError(errors)
    return cfg


def validate(cfg):
    """Check config values against the preconditions of the modules they feed."""
    errors = []
    sysc = cfg.system
    if not 1 <= len(sysc.extent) <= 2:
        errors.append("system.extent: only 1-D and 2-D lattices are supported")
    if any(e < 1 for e in sysc.extent):
        errors.append("system.extent: extents must be positive")
    if not sysc.spins:
        errors.append("system.spin: at least one spin value is required")
    n = sysc.n_sites

    def site(name, i):
        if i is not None and not 0 <= i < n:
            errors.append(f"{name}: site {i} outside lattice of {n} sites")

    site("tip.site", cfg.tip.site)
    site("bounds.source", cfg.bounds.source)
    site("bounds.target", cfg.bounds.target)
    site("dynamics.observe_site", cfg.dynamics.observe_site)
    for i in cfg.dynamics.velocity_sites:
        site("dynamics.velocity_sites", i)
    if cfg.bounds.source == cfg.target:
        errors.append("bounds.source and bounds.target must differ")
    m = cfg.tip.m_tip
    if abs(math.sqrt(sum(c * c for c in m)) - 1.0) > 1e-12:
        errors.append("tip.m_tip: must be a unit vector")
    if any(p < 0 for p in cfg.tip.norms):
        errors.append("tip.norm_p: tip norms must be nonnegative")
    if cfg.tip.g is not None and cfg.tip.norms:
        errors.append("tip: give either norm_p or the raw parameters (g, current, ...), not both")
    if not -1.0 <= cfg.tip.polarization <= 1.0:
        errors.append("tip.polarization: must lie in [-1, 1]")
    extra = set(cfg.dynamics.norms) - set(cfg.tip.norms)
    if cfg.dynamics.norms and cfg.tip.norms and extra:
        errors.append(f"dynamics.norm_p: {sorted(extra)} not listed in tip.norm_p")
    th = cfg.thermal
    if th.beta is not None and th.temperature is not None:
        errors.append("thermal: give either temperature_K or beta, not both")
    if th.temperature is not None and th.temperature <= 0:
        errors.append("thermal.temperature_K: must be positive")
    if th.beta is not None and th.beta < 0:
        errors.append("thermal.beta: must be nonnegative")
    tg = cfg.time
    if tg.count < 2:
        errors.append("time.count: need at least 2 samples")
    if tg.start < 0 or tg.stop <= tg.start:
        errors.append("time: need 0 <= start < stop")
    b = cfg.bounds
    if not 0 < b.threshold < 1:
        errors.append("bounds.threshold: must lie in (0, 1)")
    if b.xi is not None and b.xi <= 0:
        errors.append("bounds.xi: must be positive (or auto)")
    if b.tol <= 0:
        errors.append("bounds.tol: must be positive")
    if cfg.dynamics.epsilon <= 0:
        errors.append("dynamics.epsilon: must be positive")
    return errors


def _fmt_value(v):
    if v is None:
        return "auto"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_fmt_value(x) for x in v)
    return str(v)


def format_config(cfg):
    """Render a config as text that ``parse_config`` reads back to an equal config."""
    lines = []
    for section, keys in SCHEMA.items():
        settings = getattr(cfg, section)
        lines.append(f"[{section}]")
        for key, (attr, _, _) in keys.items():
            v = getattr(settings, attr)
            if section == "system" and key == "spin":
                v = ", ".join(str(Fraction(s)) for s in v)
            elif section == "thermal" and v is None:
                continue
            elif section == "tip" and key == "g" and v is None:
                continue
            else:
                v = _fmt_value(v)
            lines.append(f"{key} = {v}")
        lines.append("")
    return "\n".join(lines)


def required_keys():
    return [f"{s}.{k}" for s, keys in SCHEMA.items() for k, (_, _, d) in keys.items() if d is REQUIRED]


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def preset_text(name):
    return files("lrlab").joinpath("presets", f"{name}.cfg").read_text(encoding="utf-8")
