"""Flat ``key = value`` run configuration.

One setting per line, ``#`` starts a comment, repeated keys build lists.
Subjects and presets use dotted keys::

    atlas = atlas.nii
    tract = tract.nii
    subject.sub-001.truth = sub-001/truth.nii
    subject.sub-001.pred.unet = sub-001/unet.nii
    preset.aw.method = agreement_window
    preset.aw.members = unet
    preset.aw.members = vnet
    preset.aw.window = 3
    preset.aw.tau = 0.5
    preset.sr.method = regionwise
    preset.sr.region = R1+R4:aw
    preset.sr.region = R2:stack
    preset.sr.region = R3:unet_only

Relative paths are resolved against the config file's directory.
"""
from __future__ import annotations

import os
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from .atlas import RegionSet
from .errors import ConfigError
from .fuse import FusionSpec
from .tractload import CONVENTIONS, SeverityThresholds


def parse_pairs(text: str) -> list[tuple[str, str]]:
    pairs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        pairs.append((key, value))
    return pairs


def read_pairs(path) -> list[tuple[str, str]]:
    return parse_pairs(Path(path).read_text(encoding="utf-8"))


@dataclass
class SubjectEntry:
    id: str
    truth: Path | None = None
    predictions: dict = field(default_factory=dict)

    def paths(self):
        return ([self.truth] if self.truth else []) + list(self.predictions.values())


@dataclass
class Preset:
    name: str
    method: str
    fusion: FusionSpec | None = None
    regions: tuple = ()  # (RegionSet, preset name) pairs for regionwise presets


@dataclass
class RunConfig:
    subjects: dict
    presets: dict
    atlas: Path | None = None
    tract: Path | None = None
    thresholds: SeverityThresholds = field(default_factory=SeverityThresholds)
    side_convention: str = "neurological"
    out: Path = Path("voxfuse-out")
    jobs: int = 1
    source: Path | None = None

    def subject(self, sid: str) -> SubjectEntry:
        if sid not in self.subjects:
            raise ConfigError(f"subject {sid!r} not found in config")
        return self.subjects[sid]

    def preset(self, name: str) -> Preset:
        if name not in self.presets:
            raise ConfigError(f"preset {name!r} not found; available: {', '.join(sorted(self.presets))}")
        return self.presets[name]

    def members_of(self, name: str, _seen=()) -> set:
        """Model ids a preset needs, following regionwise references."""
        p = self.preset(name)
        if p.method == "regionwise":
            if name in _seen:
                raise ConfigError(f"preset {name!r} refers to itself")
            out = set()
            for _, ref in p.regions:
                out |= self.members_of(ref, _seen + (name,))
            return out
        return set(p.fusion.members)

    def missing_paths(self, subjects=None) -> list[Path]:
        paths = [p for p in (self.atlas, self.tract) if p is not None]
        for sid in subjects if subjects is not None else self.subjects:
            paths += self.subjects[sid].paths()
        return [p for p in paths if not p.exists()]

    def validate(self, subjects=None) -> None:
        """Check presets resolve and referenced files exist (``FileNotFoundError``)."""
        for name in self.presets:
            self.members_of(name)
            p = self.presets[name]
            for _, ref in p.regions:
                if self.presets[ref].method == "regionwise":
                    raise ConfigError(f"preset {name!r}: regionwise presets cannot be nested")
            if p.method == "regionwise" and self.atlas is None:
                raise ConfigError(f"preset {name!r} is regionwise but no atlas is configured")
        missing = self.missing_paths(subjects)
        if missing:
            raise FileNotFoundError(f"missing input file: {missing[0]}")


def _one(values, key, cast=str):
    if len(values) > 1:
        raise ConfigError(f"key {key!r} given {len(values)} times")
    try:
        return cast(values[0])
    except ValueError:
        raise ConfigError(f"bad value for {key!r}: {values[0]!r}") from None


def build_config(pairs, base: Path = Path(".")) -> RunConfig:
    grouped = defaultdict(list)
    for k, v in pairs:
        grouped[k].append(v)

    def path(v):
        p = Path(os.path.expanduser(v))
        return p if p.is_absolute() else base / p

    subjects: dict = {}
    preset_keys: dict = defaultdict(lambda: defaultdict(list))
    cfg = RunConfig(subjects={}, presets={})
    t1 = t2 = None
    measure = "raw"
    for key, values in grouped.items():
        parts = key.split(".")
        if parts[0] == "subject":
            if len(parts) < 3:
                raise ConfigError(f"bad subject key {key!r}")
            sid = parts[1]
            entry = subjects.setdefault(sid, SubjectEntry(sid))
            if parts[2:] == ["truth"]:
                entry.truth = path(_one(values, key))
            elif parts[2] == "pred" and len(parts) == 4:
                entry.predictions[parts[3]] = path(_one(values, key))
            else:
                raise ConfigError(f"bad subject key {key!r}")
        elif parts[0] == "preset":
            if len(parts) != 3:
                raise ConfigError(f"bad preset key {key!r}")
            preset_keys[parts[1]][parts[2]].extend(values)
        elif key == "atlas":
            cfg.atlas = path(_one(values, key))
        elif key == "tract":
            cfg.tract = path(_one(values, key))
        elif key == "out":
            cfg.out = path(_one(values, key))
        elif key == "jobs":
            cfg.jobs = _one(values, key, int)
        elif key == "side_convention":
            cfg.side_convention = _one(values, key)
            if cfg.side_convention not in CONVENTIONS:
                raise ConfigError(f"side_convention must be one of {CONVENTIONS}")
        elif key == "threshold_t1":
            t1 = _one(values, key, float)
        elif key == "threshold_t2":
            t2 = _one(values, key, float)
        elif key == "threshold_measure":
            measure = _one(values, key)
        else:
            raise ConfigError(f"unknown config key {key!r}")

    defaults = SeverityThresholds()
    cfg.thresholds = SeverityThresholds(
        t1 if t1 is not None else defaults.t1,
        t2 if t2 is not None else defaults.t2,
        measure,
        published=False,
    )
    cfg.subjects = dict(sorted(subjects.items()))
    cfg.presets = {name: _build_preset(name, keys) for name, keys in sorted(preset_keys.items())}
    for p in cfg.presets.values():
        for _, ref in p.regions:
            if ref not in cfg.presets:
                raise ConfigError(f"preset {p.name!r} refers to unknown preset {ref!r}")
    return cfg


def _build_preset(name, keys) -> Preset:
    known = {"method", "members", "window", "tau", "stride", "region"}
    unknown = set(keys) - known
    if unknown:
        raise ConfigError(f"preset {name!r}: unknown field(s) {sorted(unknown)}")
    if "method" not in keys:
        raise ConfigError(f"preset {name!r} has no method")
    method = _one(keys["method"], f"preset.{name}.method")
    if method == "regionwise":
        regions = []
        for item in keys.get("region", []):
            if ":" not in item:
                raise ConfigError(f"preset {name!r}: region entries look like 'R1+R4:preset', got {item!r}")
            rs, ref = item.split(":", 1)
            regions.append((RegionSet.parse(rs.strip()), ref.strip()))
        if not regions:
            raise ConfigError(f"regionwise preset {name!r} lists no regions")
        return Preset(name, method, regions=tuple(regions))
    members = [m.strip() for v in keys.get("members", []) for m in v.split(",") if m.strip()]
    kw = {}
    if "window" in keys:
        kw["window_size"] = _one(keys["window"], f"preset.{name}.window", int)
    if "tau" in keys:
        kw["overlap_threshold"] = _one(keys["tau"], f"preset.{name}.tau", float)
    if "stride" in keys:
        kw["stride"] = _one(keys["stride"], f"preset.{name}.stride", int)
    return Preset(name, method, fusion=FusionSpec(method, tuple(members), **kw))


def load_config(path) -> RunConfig:
    path = Path(path)
    cfg = build_config(read_pairs(path), path.parent)
    cfg.source = path
    return cfg
