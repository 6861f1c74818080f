"""Scenario configuration: a line-oriented key = value format with sections.

Unknown sections or keys are rejected so typos fail loudly; durations accept
plain seconds or s/m/h/d/w suffixes (e.g. ``ttls = 1d,2d,4d,1w,3w``).
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field

from .social import AnalyticsParams
from .types import ConfigError

DEFAULT_TTLS = [86400, 172800, 345600, 604800, 1814400]
DEFAULT_SEEDS = list(range(1, 11))

_SUFFIX = {"s": 1, "m": 60, "h": 3600, "d": 86400, "w": 604800}


def parse_duration(text: str) -> int:
    text = text.strip()
    mult = 1
    if text and text[-1].lower() in _SUFFIX:
        mult = _SUFFIX[text[-1].lower()]
        text = text[:-1]
    try:
        value = int(text)
    except ValueError:
        raise ValueError(f"bad duration {text!r}") from None
    return value * mult


def format_duration(seconds: int) -> str:
    for suffix in ("w", "d", "h", "m"):
        unit = _SUFFIX[suffix]
        if seconds and seconds % unit == 0:
            return f"{seconds // unit}{suffix}"
    return str(seconds)


def _parse_int(text: str) -> int:
    return int(text)


def _parse_float(text: str) -> float:
    return float(text)


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"bad boolean {text!r}")


def _parse_int_list(text: str) -> list[int]:
    out: list[int] = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if ".." in token:
            lo, hi = token.split("..", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(token))
    return out


def _parse_duration_list(text: str) -> list[int]:
    return [parse_duration(tok) for tok in text.split(",") if tok.strip()]


def _parse_str_list(text: str) -> list[str]:
    return [tok.strip() for tok in text.split(",") if tok.strip()]


def _parse_hop_limit(text: str) -> int | None:
    if text.strip().lower() in ("unlimited", "none", "inf"):
        return None
    return int(text)


def _parse_pairs(text: str) -> str | int:
    if text.strip().lower() == "all":
        return "all"
    return int(text)


@dataclass
class ScenarioConfig:
    name: str
    end_time: int
    contact_source: dict
    workload: dict
    roster_path: str | None = None
    warmup: int = 0
    tick: int = 2
    buffer_capacity: int = 2_000_000
    bandwidth: int = 1_375_000
    hop_limit: int | None = None
    ttls: list[int] = field(default_factory=lambda: list(DEFAULT_TTLS))
    seeds: list[int] = field(default_factory=lambda: list(DEFAULT_SEEDS))
    protocols: list[str] = field(default_factory=lambda: ["epidemic"])
    output_dir: str = "out"
    analytics: AnalyticsParams = field(default_factory=AnalyticsParams)
    protocol_params: dict = field(default_factory=dict)


_PROTOCOL_KEYS = {
    "epidemic": {},
    "prophet": {
        "p_init": _parse_float,
        "beta": _parse_float,
        "gamma": _parse_float,
        "aging_interval": parse_duration,
    },
    "spray_and_wait": {"copies": _parse_int, "binary": _parse_bool},
    "spray_and_focus": {"copies": _parse_int, "focus_threshold": parse_duration},
    "ebr": {"copies": _parse_int, "window": parse_duration, "alpha": _parse_float},
    "label": {},
    "simbet": {"similarity_weight": _parse_float, "betweenness_weight": _parse_float},
    "bubble_rap": {},
    "peoplerank": {"damping": _parse_float},
    "dlife": {},
    "dlifecomm": {},
}

_SCENARIO_KEYS = {
    "name": str,
    "end_time": parse_duration,
    "warmup": parse_duration,
    "tick": parse_duration,
    "buffer_capacity": _parse_int,
    "bandwidth": _parse_int,
    "hop_limit": _parse_hop_limit,
    "ttls": _parse_duration_list,
    "seeds": _parse_int_list,
    "protocols": _parse_str_list,
    "output_dir": str,
}

_CONTACT_KEYS = {
    "trace": {"path": str},
    "random_waypoint": {
        "nodes": _parse_int,
        "width": _parse_float,
        "height": _parse_float,
        "speed_min": _parse_float,
        "speed_max": _parse_float,
        "pause_min": parse_duration,
        "pause_max": parse_duration,
        "radio_range": _parse_float,
    },
    "community": {
        "groups": _parse_int,
        "group_size": _parse_int,
        "venues": _parse_int,
        "work_start": parse_duration,
        "work_hours": parse_duration,
        "start_jitter": parse_duration,
        "evening_prob": _parse_float,
        "evening_min": parse_duration,
        "evening_max": parse_duration,
        "shared_home": _parse_bool,
    },
}

_WORKLOAD_KEYS = {
    "file": {"path": str},
    "generate": {
        "per_day": _parse_int,
        "size_min": _parse_int,
        "size_max": _parse_int,
        "pairs": _parse_pairs,
        "seed": _parse_int,
    },
}

_ANALYTICS_KEYS = {
    "familiar_threshold": parse_duration,
    "kclique_k": _parse_int,
    "centrality_window": parse_duration,
    "daily_samples": _parse_int,
    "tecd_duration_scale": _parse_int,
}


def _read_section(parser, section: str, keyspec: dict, where: str) -> dict:
    out = {}
    for key, raw in parser.items(section):
        if key not in keyspec:
            raise ConfigError(f"[{where}] unknown key {key!r}")
        try:
            out[key] = keyspec[key](raw)
        except ValueError as exc:
            raise ConfigError(f"[{where}] {key}: {exc}") from None
    return out


def load_config(path: str) -> ScenarioConfig:
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    parser.optionxform = str  # keys are case-sensitive
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh, source=path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    base = os.path.dirname(os.path.abspath(path))

    known = {"scenario", "contacts", "roster", "workload", "analytics"}
    for section in parser.sections():
        if section in known or section.startswith("protocol."):
            continue
        raise ConfigError(f"unknown section [{section}]")
    if "scenario" not in parser:
        raise ConfigError("missing [scenario] section")
    if "contacts" not in parser:
        raise ConfigError("missing [contacts] section")

    sc = _read_section(parser, "scenario", _SCENARIO_KEYS, "scenario")
    if "end_time" not in sc:
        raise ConfigError("[scenario] end_time is required")

    raw_contacts = dict(parser.items("contacts"))
    source = raw_contacts.pop("source", None)
    if source is None:
        raise ConfigError("[contacts] source is required")
    if source not in _CONTACT_KEYS:
        raise ConfigError(f"[contacts] unknown source {source!r}")
    contact_source = {"source": source}
    spec = _CONTACT_KEYS[source]
    for key, raw in raw_contacts.items():
        if key not in spec:
            raise ConfigError(f"[contacts] unknown key {key!r} for source {source}")
        try:
            contact_source[key] = spec[key](raw)
        except ValueError as exc:
            raise ConfigError(f"[contacts] {key}: {exc}") from None
    if source == "trace":
        if "path" not in contact_source:
            raise ConfigError("[contacts] path is required for trace source")
        contact_source["path"] = _resolve(base, contact_source["path"])

    roster_path = None
    if "roster" in parser:
        roster = _read_section(parser, "roster", {"path": str}, "roster")
        if "path" in roster:
            roster_path = _resolve(base, roster["path"])
    if source == "trace" and roster_path is None:
        raise ConfigError("[roster] path is required for trace contact source")

    if "workload" in parser:
        raw_wl = dict(parser.items("workload"))
        wl_source = raw_wl.pop("source", None)
        if wl_source is None:
            raise ConfigError("[workload] source is required")
        if wl_source not in _WORKLOAD_KEYS:
            raise ConfigError(f"[workload] unknown source {wl_source!r}")
        workload = {"source": wl_source}
        spec = _WORKLOAD_KEYS[wl_source]
        for key, raw in raw_wl.items():
            if key not in spec:
                raise ConfigError(f"[workload] unknown key {key!r} for source {wl_source}")
            try:
                workload[key] = spec[key](raw)
            except ValueError as exc:
                raise ConfigError(f"[workload] {key}: {exc}") from None
        if wl_source == "file":
            if "path" not in workload:
                raise ConfigError("[workload] path is required for file source")
            workload["path"] = _resolve(base, workload["path"])
    else:
        workload = {"source": "generate"}

    analytics = AnalyticsParams()
    if "analytics" in parser:
        vals = _read_section(parser, "analytics", _ANALYTICS_KEYS, "analytics")
        mapping = {
            "familiar_threshold": "familiar_threshold",
            "kclique_k": "clique_k",
            "centrality_window": "centrality_window",
            "daily_samples": "daily_samples",
            "tecd_duration_scale": "duration_scale",
        }
        for key, value in vals.items():
            setattr(analytics, mapping[key], value)

    protocol_params: dict[str, dict] = {}
    for section in parser.sections():
        if not section.startswith("protocol."):
            continue
        proto = section.split(".", 1)[1]
        if proto not in _PROTOCOL_KEYS:
            raise ConfigError(f"unknown protocol section [{section}]")
        protocol_params[proto] = _read_section(parser, section, _PROTOCOL_KEYS[proto], section)

    cfg = ScenarioConfig(
        name=sc.get("name", "scenario"),
        end_time=sc["end_time"],
        warmup=sc.get("warmup", 0),
        tick=sc.get("tick", 2),
        buffer_capacity=sc.get("buffer_capacity", 2_000_000),
        bandwidth=sc.get("bandwidth", 1_375_000),
        hop_limit=sc.get("hop_limit", None),
        ttls=sc.get("ttls", list(DEFAULT_TTLS)),
        seeds=sc.get("seeds", list(DEFAULT_SEEDS)),
        protocols=sc.get("protocols", ["epidemic"]),
        output_dir=sc.get("output_dir", "out"),
        contact_source=contact_source,
        roster_path=roster_path,
        workload=workload,
        analytics=analytics,
        protocol_params=protocol_params,
    )
    _validate(cfg)
    return cfg


def _resolve(base: str, path: str) -> str:
    full = path if os.path.isabs(path) else os.path.join(base, path)
    if not os.path.isfile(full):
        raise ConfigError(f"referenced file does not exist: {full}")
    return os.path.abspath(full)


def _validate(cfg: ScenarioConfig) -> None:
    if cfg.end_time < 1:
        raise ConfigError("[scenario] end_time must be positive")
    if cfg.warmup < 0 or cfg.warmup >= cfg.end_time:
        raise ConfigError("[scenario] warmup must be in [0, end_time)")
    if cfg.tick < 1:
        raise ConfigError("[scenario] tick must be >= 1")
    if cfg.buffer_capacity < 1:
        raise ConfigError("[scenario] buffer_capacity must be positive")
    if cfg.bandwidth < 1:
        raise ConfigError("[scenario] bandwidth must be positive")
    if cfg.hop_limit is not None and cfg.hop_limit < 1:
        raise ConfigError("[scenario] hop_limit must be >= 1 or 'unlimited'")
    if not cfg.ttls or any(t < 1 for t in cfg.ttls):
        raise ConfigError("[scenario] ttls must all be positive")
    if not cfg.seeds:
        raise ConfigError("[scenario] seeds must be non-empty")
    if len(set(cfg.seeds)) != len(cfg.seeds):
        raise ConfigError("[scenario] seeds must be distinct")
    if not cfg.protocols:
        raise ConfigError("[scenario] protocols must be non-empty")
    for proto in cfg.protocols:
        if proto not in _PROTOCOL_KEYS:
            raise ConfigError(f"[scenario] unknown protocol {proto!r}")
    for proto in cfg.protocol_params:
        if proto not in _PROTOCOL_KEYS:
            raise ConfigError(f"unknown protocol section [protocol.{proto}]")
    wl = cfg.workload
    if wl["source"] == "generate":
        if wl.get("per_day", 500) < 0:
            raise ConfigError("[workload] per_day must be >= 0")
        smin = wl.get("size_min", 1000)
        smax = wl.get("size_max", 100_000)
        if smin < 1 or smax < smin:
            raise ConfigError("[workload] bad size range")
    if cfg.analytics.clique_k < 2:
        raise ConfigError("[analytics] kclique_k must be >= 2")
    if cfg.analytics.daily_samples < 1 or 86400 % cfg.analytics.daily_samples:
        raise ConfigError("[analytics] daily_samples must divide one day")
    if cfg.analytics.duration_scale < 1:
        raise ConfigError("[analytics] tecd_duration_scale must be >= 1")


def dump_config(cfg: ScenarioConfig) -> str:
    """Serialize to the canonical text form; load(dump(cfg)) == cfg."""
    lines = ["[scenario]"]
    lines.append(f"name = {cfg.name}")
    lines.append(f"end_time = {cfg.end_time}")
    lines.append(f"warmup = {cfg.warmup}")
    lines.append(f"tick = {cfg.tick}")
    lines.append(f"buffer_capacity = {cfg.buffer_capacity}")
    lines.append(f"bandwidth = {cfg.bandwidth}")
    lines.append(f"hop_limit = {'unlimited' if cfg.hop_limit is None else cfg.hop_limit}")
    lines.append("ttls = " + ",".join(str(t) for t in cfg.ttls))
    lines.append("seeds = " + ",".join(str(s) for s in cfg.seeds))
    lines.append("protocols = " + ",".join(cfg.protocols))
    lines.append(f"output_dir = {cfg.output_dir}")
    lines.append("")
    lines.append("[contacts]")
    lines.append(f"source = {cfg.contact_source['source']}")
    for key in sorted(cfg.contact_source):
        if key != "source":
            lines.append(f"{key} = {cfg.contact_source[key]}")
    if cfg.roster_path is not None:
        lines.append("")
        lines.append("[roster]")
        lines.append(f"path = {cfg.roster_path}")
    lines.append("")
    lines.append("[workload]")
    lines.append(f"source = {cfg.workload['source']}")
    for key in sorted(cfg.workload):
        if key != "source":
            lines.append(f"{key} = {cfg.workload[key]}")
    a = cfg.analytics
    lines.append("")
    lines.append("[analytics]")
    lines.append(f"familiar_threshold = {a.familiar_threshold}")
    lines.append(f"kclique_k = {a.clique_k}")
    lines.append(f"centrality_window = {a.centrality_window}")
    lines.append(f"daily_samples = {a.daily_samples}")
    lines.append(f"tecd_duration_scale = {a.duration_scale}")
    for proto in sorted(cfg.protocol_params):
        params = cfg.protocol_params[proto]
        if not params:
            continue
        lines.append("")
        lines.append(f"[protocol.{proto}]")
        for key in sorted(params):
            lines.append(f"{key} = {params[key]}")
    return "\n".join(lines) + "\n"
