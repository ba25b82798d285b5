"""Scenario configuration files.

INI-style sections parsed with :mod:`configparser`; see the README for the
full key reference. Errors carry the line number of the offending entry.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .msgdist import (
    Deterministic,
    Exponential,
    Lognormal,
    MessageSizeDistribution,
    load_empirical,
    lognormal_from_moments,
)
from .queueing import LinkParams
from .segmentation import DEFAULT_EPS_REL, DEFAULT_N_MAX
from .simulator import SimConfig
from .sweep import log_grid

__all__ = ["UNIT_FACTORS", "Config", "parse_capacity", "parse_config", "load_config", "format_config"]

#: bytes per second for one unit
UNIT_FACTORS = {"bps": 1 / 8, "kbps": 1e3 / 8, "Mbps": 1e6 / 8, "Gbps": 1e9 / 8, "Bps": 1.0}

_CAPACITY_RE = re.compile(r"^\s*([0-9][0-9.]*(?:[eE][+-]?[0-9]+)?)\s*([A-Za-z]+)\s*$")

_DIST_KEYS = {
    "deterministic": ("size",),
    "exponential": ("mean",),
    "lognormal": ("mu", "sigma"),
    "lognormal_from_moments": ("mean", "std"),
    "empirical": ("path",),
}
_SECTIONS = {
    "distribution": {"kind", "size", "mean", "mu", "sigma", "std", "path"},
    "link": {"capacity", "header"},
    "traffic": {"lambda"},
    "payload": {"ell_d", "min", "max", "points_per_decade"},
    "tolerance": {"eps_rel", "n_max"},
    "sim": {"warmup_messages", "measured_messages", "replications", "base_seed", "confidence_level"},
}


@dataclass(frozen=True)
class Config:
    dist_kind: str
    dist_params: tuple[tuple[str, str], ...]
    distribution: MessageSizeDistribution = field(compare=False)
    capacity_value: float
    capacity_unit: str
    header: float
    lambdas: tuple[float, ...]
    ell_d: float | None = None
    grid_min: float | None = None
    grid_max: float | None = None
    points_per_decade: int | None = None
    eps_rel: float = DEFAULT_EPS_REL
    n_max: int = DEFAULT_N_MAX
    sim: SimConfig | None = None

    @property
    def link(self) -> LinkParams:
        return LinkParams(self.capacity_value * UNIT_FACTORS[self.capacity_unit], self.header)

    @property
    def grid(self) -> tuple[float, ...] | None:
        if self.grid_min is None:
            return None
        return log_grid(self.grid_min, self.grid_max, self.points_per_decade)


def parse_capacity(text: str) -> tuple[float, str]:
    """``"54 Mbps"`` -> ``(54.0, "Mbps")``."""
    m = _CAPACITY_RE.match(text)
    if not m or m.group(2) not in UNIT_FACTORS:
        raise ValueError(f"capacity must look like '<number> <{'|'.join(UNIT_FACTORS)}>', got {text!r}")
    value = float(m.group(1))
    if not value > 0:
        raise ValueError("capacity must be positive")
    return value, m.group(2)


def _line_index(text):
    index, section = {}, None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("["):
            section = line.strip("[] ").lower()
            index[(section, None)] = lineno
        elif section is not None:
            key = re.split(r"[=:]", line, maxsplit=1)[0].strip().lower()
            index[(section, key)] = lineno
    return index


def parse_config(text: str, base_dir=".") -> Config:
    """Parse configuration text; relative empirical paths resolve against ``base_dir``."""
    lines = _line_index(text)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], getattr(exc, "lineno", None)) from None

    def err(msg, section, key=None):
        return ConfigError(msg, lines.get((section, key)) or lines.get((section, None)))

    for section in parser.sections():
        if section not in _SECTIONS:
            raise err(f"unknown section [{section}]", section)
        for key in parser[section]:
            if key not in _SECTIONS[section]:
                raise err(f"unknown key {key!r} in [{section}]", section, key)
    for section in ("distribution", "link", "traffic"):
        if section not in parser:
            raise ConfigError(f"missing required section [{section}]")

    def get(section, key, conv=float, default=None, required=True):
        if section not in parser or key not in parser[section]:
            if required and default is None:
                raise err(f"missing key {key!r} in [{section}]", section)
            return default
        raw = parser[section][key]
        try:
            value = conv(raw)
        except (TypeError, ValueError) as exc:
            raise err(f"bad value for {key}: {exc}", section, key) from None
        if isinstance(value, float) and not math.isfinite(value):
            raise err(f"{key} must be finite", section, key)
        return value

    # distribution
    kind = get("distribution", "kind", str).strip().lower()
    if kind not in _DIST_KEYS:
        raise err(f"unknown distribution kind {kind!r}; expected one of {sorted(_DIST_KEYS)}", "distribution", "kind")
    params = tuple((k, parser["distribution"][k].strip()) for k in _DIST_KEYS[kind] if k in parser["distribution"])
    missing = [k for k in _DIST_KEYS[kind] if k not in dict(params)]
    if missing:
        raise err(f"{kind} distribution needs {', '.join(missing)}", "distribution", "kind")
    extra = set(parser["distribution"]) - {"kind", *_DIST_KEYS[kind]}
    if extra:
        key = sorted(extra)[0]
        raise err(f"key {key!r} does not apply to a {kind} distribution", "distribution", key)
    try:
        if kind == "deterministic":
            dist = Deterministic(get("distribution", "size"))
        elif kind == "exponential":
            dist = Exponential(get("distribution", "mean"))
        elif kind == "lognormal":
            dist = Lognormal(get("distribution", "mu"), get("distribution", "sigma"))
        elif kind == "lognormal_from_moments":
            dist = Lognormal(*lognormal_from_moments(get("distribution", "mean"), get("distribution", "std")))
        else:
            path = Path(dict(params)["path"])
            dist = load_empirical(path if path.is_absolute() else Path(base_dir) / path)
    except (ValueError, OSError) as exc:
        raise err(str(exc), "distribution", params[0][0]) from None

    try:
        cap_value, cap_unit = parse_capacity(parser["link"].get("capacity", ""))
    except ValueError as exc:
        raise err(str(exc), "link", "capacity") from None
    header = get("link", "header", default=0.0)
    if header < 0:
        raise err("header must be >= 0", "link", "header")

    lambdas = get("traffic", "lambda", lambda s: tuple(float(x) for x in s.split(",")))
    if any(not (lam > 0 and math.isfinite(lam)) for lam in lambdas):
        raise err("lambda must be positive", "traffic", "lambda")

    ell_d = get("payload", "ell_d", required=False)
    if ell_d is not None and not ell_d > 0:
        raise err("ell_d must be positive", "payload", "ell_d")
    gmin = get("payload", "min", required=False)
    gmax = get("payload", "max", required=False)
    ppd = get("payload", "points_per_decade", int, required=False)
    if (gmin is None) != (gmax is None):
        raise err("grid needs both min and max", "payload", "min" if gmin is None else "max")
    if gmin is not None:
        ppd = 10 if ppd is None else ppd
        if not (0 < gmin < gmax) or ppd < 1:
            raise err("grid needs 0 < min < max and points_per_decade >= 1", "payload", "min")

    eps_rel = get("tolerance", "eps_rel", default=DEFAULT_EPS_REL)
    if not 0 < eps_rel < 1:
        raise err("eps_rel must lie in (0, 1)", "tolerance", "eps_rel")
    n_max = get("tolerance", "n_max", int, default=DEFAULT_N_MAX)
    if n_max < 1:
        raise err("n_max must be >= 1", "tolerance", "n_max")

    sim = None
    if "sim" in parser:
        defaults = SimConfig()
        try:
            sim = SimConfig(
                warmup_messages=get("sim", "warmup_messages", int, defaults.warmup_messages),
                measured_messages=get("sim", "measured_messages", int, defaults.measured_messages),
                replications=get("sim", "replications", int, defaults.replications),
                base_seed=get("sim", "base_seed", int, defaults.base_seed),
                confidence_level=get("sim", "confidence_level", float, defaults.confidence_level),
            )
        except ValueError as exc:
            key = next((k for k in _SECTIONS["sim"] if k in str(exc)), None)
            raise err(str(exc), "sim", key) from None

    return Config(
        dist_kind=kind,
        dist_params=params,
        distribution=dist,
        capacity_value=cap_value,
        capacity_unit=cap_unit,
        header=header,
        lambdas=lambdas,
        ell_d=ell_d,
        grid_min=gmin,
        grid_max=gmax,
        points_per_decade=ppd if gmin is not None else None,
        eps_rel=eps_rel,
        n_max=n_max,
        sim=sim,
    )


def load_config(path) -> Config:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, base_dir=path.parent)


def format_config(cfg: Config) -> str:
    """Serialize a :class:`Config` back to file syntax."""
    r = repr
    out = ["[distribution]", f"kind = {cfg.dist_kind}"]
    out += [f"{k} = {v}" for k, v in cfg.dist_params]
    out += ["", "[link]", f"capacity = {r(cfg.capacity_value)} {cfg.capacity_unit}", f"header = {r(cfg.header)}"]
    out += ["", "[traffic]", "lambda = " + ", ".join(r(x) for x in cfg.lambdas)]
    payload = []
    if cfg.ell_d is not None:
        payload.append(f"ell_d = {r(cfg.ell_d)}")
    if cfg.grid_min is not None:
        payload += [f"min = {r(cfg.grid_min)}", f"max = {r(cfg.grid_max)}", f"points_per_decade = {cfg.points_per_decade}"]
    if payload:
        out += ["", "[payload]", *payload]
    out += ["", "[tolerance]", f"eps_rel = {r(cfg.eps_rel)}", f"n_max = {cfg.n_max}"]
    if cfg.sim is not None:
        s = cfg.sim
        out += [
            "",
            "[sim]",
            f"warmup_messages = {s.warmup_messages}",
            f"measured_messages = {s.measured_messages}",
            f"replications = {s.replications}",
            f"base_seed = {s.base_seed}",
            f"confidence_level = {r(s.confidence_level)}",
        ]
    return "\n".join(out) + "\n"
