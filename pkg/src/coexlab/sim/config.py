"""Scenario description and its INI file format.

A scenario file looks like::

    [scenario]
    duration_s = 60
    sample_rate_hz = 192
    seed = 7

    [lteu]
    duty_cycle = 0.5
    period_ms = 40

    [ap.1]
    distance_feet = 6
    sight = NLOS

    [change_points]
    # time_s = number of active APs from then on
    20.0 = 1

Optional keys: ``site_seed``, ``initial_ap_count``, ``sense_window_s`` and
``ac_window_us`` under ``[scenario]``; ``traffic`` (``FullBuffer`` or
``Streaming``), ``offered_load``, ``burst_on_s`` and ``burst_off_s`` under
each ``[ap.N]``; any
:class:`PathLossParams` field under ``[channel]``.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .channel import PathLossParams

MAX_APS = 5
TRAFFIC_TYPES = ("FullBuffer", "Streaming")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ApSpec:
    distance_feet: float
    sight: str = "NLOS"
    traffic: str = "FullBuffer"
    # fraction of wall-clock airtime requested by a Streaming AP
    offered_load: float = 0.3
    # Streaming sources alternate exponential on/off bursts; 0 disables this
    burst_on_s: float = 0.0
    burst_off_s: float = 0.0

    def __post_init__(self):
        if not self.distance_feet > 0:
            raise ConfigError(f"distance_feet must be positive, got {self.distance_feet}")
        if self.sight.upper() not in ("LOS", "NLOS"):
            raise ConfigError(f"sight must be LOS or NLOS, got {self.sight!r}")
        object.__setattr__(self, "sight", self.sight.upper())
        if self.traffic not in TRAFFIC_TYPES:
            raise ConfigError(f"traffic must be one of {TRAFFIC_TYPES}, got {self.traffic!r}")
        if not 0 < self.offered_load <= 1:
            raise ConfigError("offered_load must be in (0, 1]")
        if self.burst_on_s < 0 or self.burst_off_s < 0:
            raise ConfigError("burst durations must be nonnegative")
        if (self.burst_on_s > 0) != (self.burst_off_s > 0):
            raise ConfigError("burst_on_s and burst_off_s must both be set or both be 0")

    @property
    def bursty(self) -> bool:
        return self.burst_on_s > 0


@dataclass(frozen=True)
class LteuSpec:
    duty_cycle: float = 0.5
    period_ms: float = 40.0

    def __post_init__(self):
        if not 0 < self.duty_cycle <= 1:
            raise ConfigError(f"duty_cycle must be in (0, 1], got {self.duty_cycle}")
        if not self.period_ms > 0:
            raise ConfigError("period_ms must be positive")


@dataclass(frozen=True)
class ChangePoint:
    time_s: float
    new_ap_count: int


@dataclass(frozen=True)
class ScenarioConfig:
    ap_list: tuple[ApSpec, ...] = ()
    lteu: LteuSpec = LteuSpec()
    duration_s: float = 60.0
    sample_rate_hz: float = 192.0
    seed: int = 0
    # static placement shadowing; fixed for a given lab layout
    site_seed: int = 0
    change_points: tuple[ChangePoint, ...] = ()
    initial_ap_count: int | None = None
    sense_window_s: float | None = None
    ac_window_us: float | None = None
    channel: PathLossParams = field(default_factory=PathLossParams)

    def __post_init__(self):
        object.__setattr__(self, "ap_list", tuple(self.ap_list))
        object.__setattr__(self, "change_points", tuple(self.change_points))
        if len(self.ap_list) > MAX_APS:
            raise ConfigError(f"at most {MAX_APS} APs, got {len(self.ap_list)}")
        if not self.duration_s > 0:
            raise ConfigError("duration_s must be positive")
        if not self.sample_rate_hz > 0:
            raise ConfigError("sample_rate_hz must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.sense_window_s is not None and not self.sense_window_s > 0:
            raise ConfigError("sense_window_s must be positive")
        if self.ac_window_us is not None and not self.ac_window_us > 0:
            raise ConfigError("ac_window_us must be positive")
        if self.initial_ap_count is not None and not 0 <= self.initial_ap_count <= len(self.ap_list):
            raise ConfigError("initial_ap_count outside [0, len(ap_list)]")
        last = -1.0
        for cp in self.change_points:
            if cp.time_s <= last:
                raise ConfigError("change_points must be strictly increasing in time")
            if not 0 <= cp.new_ap_count <= len(self.ap_list):
                raise ConfigError(f"change point count {cp.new_ap_count} outside [0, {len(self.ap_list)}]")
            last = cp.time_s

    @property
    def window_s(self) -> float:
        return self.sense_window_s if self.sense_window_s is not None else 1.0 / self.sample_rate_hz

    @property
    def ac_window(self) -> float:
        """Correlator window in microseconds; one sample period unless set."""
        return self.ac_window_us if self.ac_window_us is not None else 1e6 / self.sample_rate_hz

    @property
    def start_count(self) -> int:
        return len(self.ap_list) if self.initial_ap_count is None else self.initial_ap_count

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


def _num(value: str) -> float | int:
    try:
        return int(value)
    except ValueError:
        return float(value)


def load_scenario(path: str | Path) -> ScenarioConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read scenario file {path}")
    return scenario_from_parser(parser)


def scenario_from_parser(parser: configparser.ConfigParser) -> ScenarioConfig:
    try:
        kw: dict = {}
        if parser.has_section("scenario"):
            sec = parser["scenario"]
            known = {"duration_s", "sample_rate_hz", "seed", "site_seed", "initial_ap_count",
                     "sense_window_s", "ac_window_us"}
            for key, value in sec.items():
                if key not in known:
                    raise ConfigError(f"unknown key [scenario] {key}")
                kw[key] = _num(value)
        if parser.has_section("lteu"):
            sec = parser["lteu"]
            kw["lteu"] = LteuSpec(duty_cycle=sec.getfloat("duty_cycle", 0.5),
                                  period_ms=sec.getfloat("period_ms", 40.0))
        aps = []
        ap_sections = sorted((s for s in parser.sections() if s.startswith("ap.")),
                             key=lambda s: int(s.split(".", 1)[1]))
        for name in ap_sections:
            sec = parser[name]
            aps.append(ApSpec(distance_feet=sec.getfloat("distance_feet"),
                              sight=sec.get("sight", "NLOS"),
                              traffic=sec.get("traffic", "FullBuffer"),
                              offered_load=sec.getfloat("offered_load", 0.3),
                              burst_on_s=sec.getfloat("burst_on_s", 0.0),
                              burst_off_s=sec.getfloat("burst_off_s", 0.0)))
            extra = set(sec.keys()) - {"distance_feet", "sight", "traffic", "offered_load", "burst_on_s",
                                       "burst_off_s"}
            if extra:
                raise ConfigError(f"unknown key [{name}] {sorted(extra)[0]}")
        kw["ap_list"] = tuple(aps)
        if parser.has_section("change_points"):
            cps = [ChangePoint(float(k), int(v)) for k, v in parser["change_points"].items()]
            kw["change_points"] = tuple(sorted(cps, key=lambda c: c.time_s))
        if parser.has_section("channel"):
            fields = {f.name for f in dataclasses.fields(PathLossParams)}
            ch = {}
            for key, value in parser["channel"].items():
                if key not in fields:
                    raise ConfigError(f"unknown key [channel] {key}")
                ch[key] = float(value)
            kw["channel"] = PathLossParams(**ch)
        return ScenarioConfig(**kw)
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc


def dump_scenario(cfg: ScenarioConfig, path: str | Path) -> None:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    sc = {"duration_s": repr(cfg.duration_s), "sample_rate_hz": repr(cfg.sample_rate_hz),
          "seed": str(cfg.seed), "site_seed": str(cfg.site_seed)}
    if cfg.initial_ap_count is not None:
        sc["initial_ap_count"] = str(cfg.initial_ap_count)
    if cfg.sense_window_s is not None:
        sc["sense_window_s"] = repr(cfg.sense_window_s)
    if cfg.ac_window_us is not None:
        sc["ac_window_us"] = repr(cfg.ac_window_us)
    parser["scenario"] = sc
    parser["lteu"] = {"duty_cycle": repr(cfg.lteu.duty_cycle), "period_ms": repr(cfg.lteu.period_ms)}
    for i, ap in enumerate(cfg.ap_list, start=1):
        parser[f"ap.{i}"] = {"distance_feet": repr(ap.distance_feet), "sight": ap.sight,
                             "traffic": ap.traffic, "offered_load": repr(ap.offered_load),
                             "burst_on_s": repr(ap.burst_on_s), "burst_off_s": repr(ap.burst_off_s)}
    if cfg.change_points:
        parser["change_points"] = {repr(cp.time_s): str(cp.new_ap_count) for cp in cfg.change_points}
    parser["channel"] = {f.name: repr(getattr(cfg.channel, f.name)) for f in dataclasses.fields(PathLossParams)}
    with open(path, "w") as fh:
        parser.write(fh)
