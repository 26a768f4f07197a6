"""Audit configuration: a JSON document validated against the data schema.

Relative paths resolve against the config file's directory. A section or
indicator is enabled by being present.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from .errors import ConfigError

INDICATORS = ("ims", "dcr", "ks", "adversarial_accuracy", "tcap", "mmd", "seed_based")
ATTACKS = ("singling_out", "linkage", "inference", "mia_distance", "shadow_mia", "canary_recovery")
TOP_LEVEL = ("paths", "splits", "distance", "indicators", "anonymity", "attacks", "generator")


@dataclass(frozen=True)
class SplitConfig:
    fraction: float
    seed: int


@dataclass
class AuditConfig:
    base_dir: Path
    real: Path
    synthetic: Optional[Path] = None
    schema: Optional[Path] = None
    holdout: Optional[SplitConfig] = None
    control: Optional[SplitConfig] = None
    distance: Dict[str, Any] = field(default_factory=dict)
    indicators: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    anonymity: Optional[Dict[str, Any]] = None
    attacks: Optional[Dict[str, Any]] = None
    generator: Optional[Dict[str, Any]] = None
    raw: Dict[str, Any] = field(default_factory=dict)

    @property
    def suite(self) -> List[Dict[str, Any]]:
        return list((self.attacks or {}).get("suite", []))


def _need(doc: dict, key: str, where: str):
    if key not in doc:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return doc[key]


def _seed(doc: dict, where: str) -> int:
    s = _need(doc, "seed", where)
    if not isinstance(s, int) or isinstance(s, bool) or s < 0:
        raise ConfigError(f"{where}: seed must be a nonnegative integer")
    return s


def _split(doc, where) -> Optional[SplitConfig]:
    if doc is None:
        return None
    f = _need(doc, "fraction", where)
    if not isinstance(f, (int, float)) or not 0.0 < f < 1.0:
        raise ConfigError(f"{where}: fraction must lie in (0, 1)")
    return SplitConfig(float(f), _seed(doc, where))


def parse_config(doc: dict, base_dir: Path) -> AuditConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(doc) - set(TOP_LEVEL))
    if unknown:
        raise ConfigError(f"unknown config sections {unknown}")
    paths = _need(doc, "paths", "config")
    real = _need(paths, "real", "paths")

    def resolve(p):
        return None if p is None else (base_dir / p).resolve()

    splits = doc.get("splits", {})
    indicators = doc.get("indicators", {})
    bad = sorted(set(indicators) - set(INDICATORS))
    if bad:
        raise ConfigError(f"unknown indicators {bad}")
    for name in ("ks", "mmd"):
        if name in indicators:
            _seed(indicators[name], f"indicators.{name}")
    attacks = doc.get("attacks")
    if attacks is not None:
        if attacks.get("suite"):
            _seed(attacks, "attacks")
        for i, item in enumerate(attacks.get("suite", [])):
            kind = _need(item, "kind", f"attacks.suite[{i}]")
            if kind not in ATTACKS:
                raise ConfigError(f"attacks.suite[{i}]: unknown attack {kind!r}")
    generator = doc.get("generator")
    if generator is not None:
        _need(generator, "kind", "generator")
        _seed(generator, "generator")
    anonymity = doc.get("anonymity")
    if anonymity is not None:
        _need(anonymity, "quasi_identifiers", "anonymity")
        pd = anonymity.get("plausible_deniability")
        if pd is not None:
            _need(pd, "k", "anonymity.plausible_deniability")
            _need(pd, "gamma", "anonymity.plausible_deniability")
    if paths.get("synthetic") is None and generator is None:
        raise ConfigError("give either paths.synthetic or a generator section")
    return AuditConfig(
        base_dir=base_dir,
        real=resolve(real),
        synthetic=resolve(paths.get("synthetic")),
        schema=resolve(paths.get("schema")),
        holdout=_split(splits.get("holdout"), "splits.holdout"),
        control=_split(splits.get("control"), "splits.control"),
        distance=dict(doc.get("distance", {})),
        indicators={k: dict(v or {}) for k, v in indicators.items()},
        anonymity=anonymity,
        attacks=attacks,
        generator=generator,
        raw=doc,
    )


def load_config(path) -> AuditConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(doc, path.resolve().parent)


def referenced_attributes(cfg: AuditConfig) -> List[tuple]:
    """(where, attribute) pairs the config names, for checking against the schema."""
    refs = []
    tc = cfg.indicators.get("tcap")
    if tc:
        refs += [("indicators.tcap.keys", a) for a in tc.get("keys", [])]
        if "target" in tc:
            refs.append(("indicators.tcap.target", tc["target"]))
    if cfg.anonymity:
        refs += [("anonymity.quasi_identifiers", a) for a in cfg.anonymity["quasi_identifiers"]]
        if cfg.anonymity.get("sensitive"):
            refs.append(("anonymity.sensitive", cfg.anonymity["sensitive"]))
    for i, item in enumerate(cfg.suite):
        for key in ("aux_a", "aux_b", "known"):
            refs += [(f"attacks.suite[{i}].{key}", a) for a in item.get(key) or []]
        if "secret" in item:
            refs.append((f"attacks.suite[{i}].secret", item["secret"]))
    return refs
