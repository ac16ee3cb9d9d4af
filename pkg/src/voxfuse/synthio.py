"""Materialise a synthetic cohort on disk.

Writes ``atlas``, ``tract``, per-subject ``truth`` and one file per synthetic
model, a ``manifest.tsv`` (subject, role, path, seed) and a ``voxfuse.cfg``
run configuration with stacking, agreement-window, single-model and
region-wise presets.
"""
from __future__ import annotations

import dataclasses
from pathlib import Path

from . import niftio
from .config import read_pairs
from .errors import ConfigError
from .rng import derive_seed
from .synthgen import CohortSpec, make_atlas, make_subject, make_tract

_INT = ("n_subjects", "seed", "n_models", "fp_blob_count")
_FLOAT = ("boundary_jitter", "fp_blob_radius", "dropout")


def _triple(value, cast):
    parts = [p for p in value.replace("x", ",").split(",") if p.strip()]
    if len(parts) != 3:
        raise ConfigError(f"expected three comma-separated values, got {value!r}")
    return tuple(cast(p) for p in parts)


def load_synth_spec(path=None, seed: int | None = None) -> CohortSpec:
    kw = {}
    if path is not None:
        for key, value in read_pairs(path):
            try:
                if key in _INT:
                    kw[key] = int(value)
                elif key in _FLOAT:
                    kw[key] = float(value)
                elif key == "shape":
                    kw[key] = _triple(value, int)
                elif key == "spacing":
                    kw[key] = _triple(value, float)
                elif key == "radius_range":
                    lo, hi = (float(v) for v in value.split(","))
                    kw[key] = (lo, hi)
                elif key == "models":
                    kw[key] = tuple(v.strip() for v in value.split(",") if v.strip())
                else:
                    raise ConfigError(f"unknown synth key {key!r}")
            except ValueError:
                raise ConfigError(f"bad value for {key!r}: {value!r}") from None
    if seed is not None:
        kw["seed"] = seed
    if "models" in kw and "n_models" not in kw:
        kw["n_models"] = len(kw["models"])
    spec = CohortSpec(**kw)
    if spec.n_subjects < 1 or spec.n_models < 1:
        raise ConfigError("n_subjects and n_models must be >= 1")
    return spec


def run_config_text(spec: CohortSpec, subjects: list, ext: str) -> str:
    models = spec.model_names
    lines = [
        "# generated by voxfuse synth",
        f"atlas = atlas.{ext}",
        f"tract = tract.{ext}",
        "out = results",
        "side_convention = neurological",
        "",
    ]
    for sid in subjects:
        lines.append(f"subject.{sid}.truth = {sid}/truth.{ext}")
        lines += [f"subject.{sid}.pred.{m} = {sid}/{m}.{ext}" for m in models]
    lines += ["", "preset.stack.method = stack", f"preset.stack.members = {','.join(models)}"]
    lines += [
        "preset.aw.method = agreement_window",
        f"preset.aw.members = {','.join(models)}",
        "preset.aw.window = 3",
        "preset.aw.tau = 0.5",
        "preset.aw.stride = 1",
    ]
    for m in models:
        lines += [f"preset.single_{m}.method = stack", f"preset.single_{m}.members = {m}"]
    lines += [
        "preset.regionwise.method = regionwise",
        "preset.regionwise.region = R1+R4:aw",
        "preset.regionwise.region = R2:stack",
        "preset.regionwise.region = R3:aw",
    ]
    return "\n".join(lines) + "\n"


def write_cohort(spec: CohortSpec, out_dir, fmt: str = "nii") -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    atlas = make_atlas(spec.shape, spec.spacing)
    tract = make_tract(atlas)
    rows = [("subject", "role", "path", "seed")]
    niftio.save(atlas, out / f"atlas.{fmt}")
    niftio.save(tract, out / f"tract.{fmt}")
    rows += [("-", "atlas", f"atlas.{fmt}", "-"), ("-", "tract", f"tract.{fmt}", "-")]
    sids = []
    for i in range(spec.n_subjects):
        subj = make_subject(spec, i, atlas)
        sids.append(subj.id)
        (out / subj.id).mkdir(exist_ok=True)
        niftio.save(subj.lesion, out / subj.id / f"truth.{fmt}")
        rows.append((subj.id, "truth", f"{subj.id}/truth.{fmt}", str(derive_seed(spec.seed, i))))
        for name, pred in subj.predictions.items():
            niftio.save(pred, out / subj.id / f"{name}.{fmt}")
            rows.append((subj.id, name, f"{subj.id}/{name}.{fmt}", str(subj.noise[name].seed)))
    manifest = out / "manifest.tsv"
    params = "\n".join(f"# {k} = {v}" for k, v in dataclasses.asdict(spec).items())
    with open(manifest, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(params + "\n")
        fh.write("\n".join("\t".join(r) for r in rows) + "\n")
    with open(out / "voxfuse.cfg", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(run_config_text(spec, sids, fmt))
    return manifest
