"""Campaign configuration: YAML in, dataclasses out, and back again."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

import yaml

from .channel_model import DEFAULT_BIN_WIDTH_NS, Environment
from .geometry import Antenna, InternalReflection, MaterialSpec, Polarization, SetupGeometry


class ConfigError(ValueError):
    """Configuration could not be parsed; the message names the offending key or line."""


@dataclass(frozen=True)
class Thresholds:
    spread_db: float = 1.0
    std_db: float = 1.1
    detection_margin_db: float = 20.0


@dataclass(frozen=True)
class Sounder:
    bin_width_ns: float = DEFAULT_BIN_WIDTH_NS
    transmit_power_dbm: float = 0.0
    noise: bool = True


@dataclass(frozen=True)
class Scenario:
    name: str
    tx_antenna: str
    rx_antenna: str
    distances: tuple[float, ...]
    tx_height: float
    clearance: float
    polarization_pairs: tuple[tuple[Polarization, Polarization], ...] = (
        (Polarization.V, Polarization.V),
        (Polarization.V, Polarization.H),
    )
    mut: Optional[MaterialSpec] = None


@dataclass(frozen=True)
class CampaignConfig:
    frequency: float
    antennas: tuple[Antenna, ...]
    environment: Environment
    scenarios: tuple[Scenario, ...]
    thresholds: Thresholds = field(default_factory=Thresholds)
    sounder: Sounder = field(default_factory=Sounder)

    def antenna(self, name: str) -> Antenna:
        for a in self.antennas:
            if a.name == name:
                return a
        raise KeyError(name)

    def scenario(self, name: str) -> Scenario:
        for s in self.scenarios:
            if s.name == name:
                return s
        raise KeyError(name)

    def setup_for(self, scenario: Scenario, distance: float, *, with_mut: bool = True) -> SetupGeometry:
        return SetupGeometry(
            frequency=self.frequency,
            tr_separation=distance,
            tx_height=scenario.tx_height,
            clearance_above_and_sides=scenario.clearance,
            tx_antenna=self.antenna(scenario.tx_antenna),
            rx_antenna=self.antenna(scenario.rx_antenna),
            mut=scenario.mut if with_mut else None,
        )

    def environment_for(self, scenario: Scenario, seed: int) -> Environment:
        ceiling = self.environment.ceiling_height
        if ceiling is None:
            ceiling = scenario.tx_height + scenario.clearance
        return replace(self.environment, ceiling_height=ceiling, rng_seed=seed)


# -- parsing ---------------------------------------------------------------


class _Node:
    """Mapping wrapper that tracks its key path for error messages."""

    def __init__(self, data: Any, path: str):
        if not isinstance(data, dict):
            raise ConfigError(f"{path or 'config'}: expected a mapping")
        self.data = data
        self.path = path
        self.used: set[str] = set()

    def _key(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def has(self, key: str) -> bool:
        return self.data.get(key) is not None

    def raw(self, key: str, default: Any = ...) -> Any:
        self.used.add(key)
        if key not in self.data or self.data[key] is None:
            if default is ...:
                raise ConfigError(f"{self._key(key)}: missing required key")
            return default
        return self.data[key]

    def num(self, key: str, default: Any = ...) -> Any:
        value = self.raw(key, default)
        if value is None or (value is default and default is not ...):
            return value
        if isinstance(value, bool):
            raise ConfigError(f"{self._key(key)}: expected a number, got {value!r}")
        try:
            # PyYAML leaves forms like 73.5e9 as strings
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{self._key(key)}: expected a number, got {value!r}") from None

    def text(self, key: str, default: Any = ...) -> Any:
        value = self.raw(key, default)
        if value is default and default is not ...:
            return value
        return str(value)

    def flag(self, key: str, default: bool) -> bool:
        value = self.raw(key, default)
        if not isinstance(value, bool):
            raise ConfigError(f"{self._key(key)}: expected true/false, got {value!r}")
        return value

    def child(self, key: str, default: Any = ...) -> Optional["_Node"]:
        value = self.raw(key, default)
        if value is None:
            return None
        return _Node(value, self._key(key))

    def items(self, key: str) -> list["_Node"]:
        value = self.raw(key)
        if not isinstance(value, list):
            raise ConfigError(f"{self._key(key)}: expected a list")
        return [_Node(v, f"{self._key(key)}[{i}]") for i, v in enumerate(value)]

    def finish(self) -> None:
        unknown = sorted(set(self.data) - self.used)
        if unknown:
            raise ConfigError(f"{self._key(unknown[0])}: unknown key")


def _wrap(path: str, fn, *args):
    try:
        return fn(*args)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _parse_antenna(node: _Node) -> Antenna:
    hpbw = node.num("hpbw_deg", None)
    az = node.num("hpbw_azimuth_deg", hpbw)
    el = node.num("hpbw_elevation_deg", hpbw)
    if az is None or el is None:
        raise ConfigError(f"{node.path}: give hpbw_deg or both hpbw_azimuth_deg/hpbw_elevation_deg")
    ant = _wrap(
        node.path,
        Antenna,
        node.text("name"),
        node.num("aperture_m"),
        az,
        el,
        node.num("gain_dbi"),
        node.num("xpd_leakage_db", 30.0),
        node.text("polarization", "V"),
    )
    node.finish()
    return ant


def _parse_mut(node: _Node) -> MaterialSpec:
    ir = None
    ir_node = node.child("internal_reflection", None)
    if ir_node is not None:
        ir = _wrap(
            ir_node.path,
            InternalReflection,
            ir_node.num("relative_permittivity"),
            ir_node.num("interface_reflection_db"),
        )
        ir_node.finish()
    mut = _wrap(
        node.path,
        MaterialSpec,
        node.text("name"),
        node.num("thickness_cm"),
        node.num("insertion_loss_db"),
        node.num("extent_height_m"),
        node.num("extent_width_m"),
        ir,
    )
    node.finish()
    return mut


def _parse_pairs(node: _Node) -> tuple[tuple[Polarization, Polarization], ...]:
    raw = node.raw("polarization_pairs", ["VV", "VH"])
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{node.path}.polarization_pairs: expected a non-empty list")
    pairs = []
    for i, item in enumerate(raw):
        text = str(item).replace("-", "").strip().upper()
        if len(text) != 2 or any(c not in "VH" for c in text):
            raise ConfigError(
                f"{node.path}.polarization_pairs[{i}]: expected VV, VH, HV or HH, got {item!r}"
            )
        pairs.append((Polarization(text[0]), Polarization(text[1])))
    return tuple(pairs)


def _parse_scenario(node: _Node, antenna_names: set[str]) -> Scenario:
    name = node.text("name")
    tx = node.text("tx_antenna")
    rx = node.text("rx_antenna")
    for key, value in (("tx_antenna", tx), ("rx_antenna", rx)):
        if value not in antenna_names:
            raise ConfigError(f"{node.path}.{key}: undeclared antenna {value!r}")
    raw_d = node.raw("distances_m")
    if not isinstance(raw_d, list) or not raw_d:
        raise ConfigError(f"{node.path}.distances_m: expected a non-empty list")
    try:
        distances = tuple(float(d) for d in raw_d)
    except (TypeError, ValueError):
        raise ConfigError(f"{node.path}.distances_m: expected numbers") from None
    if any(d <= 0 for d in distances):
        raise ConfigError(f"{node.path}.distances_m: distances must be positive")
    if len(set(distances)) != len(distances):
        raise ConfigError(f"{node.path}.distances_m: duplicate distance")
    height = node.num("tx_height_m")
    clearance = node.num("clearance_m", height)
    pairs = _parse_pairs(node)
    mut_node = node.child("mut", None)
    mut = _parse_mut(mut_node) if mut_node is not None else None
    node.finish()
    return Scenario(name, tx, rx, distances, height, clearance, pairs, mut)


def parse_config(text: str) -> CampaignConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}: " if mark else ""
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"{where}{problem}") from None
    root = _Node(data if data is not None else {}, "")
    frequency = root.num("frequency_hz")
    if not frequency > 0:
        raise ConfigError("frequency_hz: must be positive")

    antennas = tuple(_parse_antenna(n) for n in root.items("antennas"))
    names = [a.name for a in antennas]
    if len(set(names)) != len(names):
        raise ConfigError("antennas: duplicate antenna name")

    env_node = root.child("environment", {})
    environment = _wrap(
        "environment",
        Environment,
        env_node.num("ground_reflection_db", 3.0),
        env_node.num("ceiling_height_m", None),
        env_node.num("ceiling_reflection_db", 3.0),
        env_node.num("wall_clearance_m", None),
        env_node.num("noise_floor_dbm", -100.0),
        int(env_node.num("rng_seed", 0)),
        env_node.num("reflection_xpd_db", 15.0),
    )
    env_node.finish()

    snd = root.child("sounder", {})
    sounder = Sounder(
        snd.num("bin_width_ns", DEFAULT_BIN_WIDTH_NS),
        snd.num("transmit_power_dbm", 0.0),
        snd.flag("noise", True),
    )
    if not sounder.bin_width_ns > 0:
        raise ConfigError("sounder.bin_width_ns: must be positive")
    snd.finish()

    thr = root.child("thresholds", {})
    thresholds = Thresholds(
        thr.num("spread_db", 1.0), thr.num("std_db", 1.1), thr.num("detection_margin_db", 20.0)
    )
    thr.finish()

    if not isinstance(root.raw("scenarios", []), list) or not root.raw("scenarios", []):
        raise ConfigError("scenarios: no scenarios")
    scenarios = tuple(_parse_scenario(n, set(names)) for n in root.items("scenarios"))
    snames = [s.name for s in scenarios]
    if len(set(snames)) != len(snames):
        raise ConfigError("scenarios: duplicate scenario name")
    root.finish()
    return CampaignConfig(frequency, antennas, environment, scenarios, thresholds, sounder)


def load_config(path: str | Path) -> CampaignConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        return parse_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


# -- serialization ---------------------------------------------------------


def config_to_dict(cfg: CampaignConfig) -> dict:
    def mut_dict(m: MaterialSpec) -> dict:
        out = {
            "name": m.name,
            "thickness_cm": m.thickness,
            "insertion_loss_db": m.insertion_loss,
            "extent_height_m": m.extent_height,
            "extent_width_m": m.extent_width,
        }
        if m.internal_reflection is not None:
            out["internal_reflection"] = {
                "relative_permittivity": m.internal_reflection.relative_permittivity,
                "interface_reflection_db": m.internal_reflection.interface_reflection,
            }
        return out

    env = cfg.environment
    return {
        "frequency_hz": cfg.frequency,
        "antennas": [
            {
                "name": a.name,
                "aperture_m": a.aperture_largest_dim,
                "hpbw_azimuth_deg": a.hpbw_azimuth,
                "hpbw_elevation_deg": a.hpbw_elevation,
                "gain_dbi": a.gain,
                "xpd_leakage_db": a.xpd_leakage,
                "polarization": a.polarization.value,
            }
            for a in cfg.antennas
        ],
        "environment": {
            "ground_reflection_db": env.ground_reflection,
            "ceiling_height_m": env.ceiling_height,
            "ceiling_reflection_db": env.ceiling_reflection,
            "wall_clearance_m": env.wall_clearance,
            "noise_floor_dbm": env.noise_floor,
            "rng_seed": env.rng_seed,
            "reflection_xpd_db": env.reflection_xpd,
        },
        "sounder": {
            "bin_width_ns": cfg.sounder.bin_width_ns,
            "transmit_power_dbm": cfg.sounder.transmit_power_dbm,
            "noise": cfg.sounder.noise,
        },
        "thresholds": {
            "spread_db": cfg.thresholds.spread_db,
            "std_db": cfg.thresholds.std_db,
            "detection_margin_db": cfg.thresholds.detection_margin_db,
        },
        "scenarios": [
            {
                "name": s.name,
                "tx_antenna": s.tx_antenna,
                "rx_antenna": s.rx_antenna,
                "distances_m": list(s.distances),
                "tx_height_m": s.tx_height,
                "clearance_m": s.clearance,
                "polarization_pairs": [t.value + r.value for t, r in s.polarization_pairs],
                "mut": mut_dict(s.mut) if s.mut is not None else None,
            }
            for s in cfg.scenarios
        ],
    }


def dump_config(cfg: CampaignConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False)


def config_digest(cfg: CampaignConfig) -> str:
    canonical = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
