"""Per-subject orchestration and cohort reports."""
from __future__ import annotations

import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__, niftio
from .atlas import compose_regionwise
from .config import RunConfig
from .errors import UndefinedReferenceError, VoxfuseError
from .fuse import fuse_apply
from .metrics import lesion_volume, mean_excluding, overlap_metrics, percent_error
from .tractload import CATEGORIES, categorize, side_loads, dominant_side

log = logging.getLogger(__name__)

ROW_FIELDS = (
    "subject", "preset", "status",
    "dsc", "iou", "precision", "recall",
    "lv_true_mm3", "lv_pred_mm3", "er_lv",
    "side", "ll_true_cc", "ll_pred_cc", "er_ll",
    "lln_true", "lln_pred", "er_lln",
    "category_true", "category_pred", "note",
)
SUMMARY_FIELDS = (
    "preset", "n_subjects", "n_errors",
    "mean_dsc", "mean_iou", "mean_precision", "mean_recall",
    "mean_er_lv", "excluded_lv", "mean_er_ll", "excluded_ll", "mean_er_lln", "excluded_lln",
)
COMPARE_FIELDS = ("rank", "preset", "mean_dsc", "mean_er_lv", "mean_er_ll", "excluded_ll")


def fmt(value) -> str:
    """CSV cell: 6 significant digits for reals, blank for undefined."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return "" if math.isnan(value) else format(value, ".6g")
    return str(value)


def fused_prediction(cfg: RunConfig, name: str, preds: dict, atlas=None, jobs: int = 1):
    preset = cfg.preset(name)
    if preset.method == "regionwise":
        parts = [(rs, fused_prediction(cfg, ref, preds, atlas, jobs)) for rs, ref in preset.regions]
        return compose_regionwise(parts, atlas)
    return fuse_apply(preset.fusion, preds, jobs=jobs)


def _er(pred, true):
    try:
        return percent_error(pred, true)
    except UndefinedReferenceError:
        return None


def evaluate_prediction(pred, truth, tract, cfg: RunConfig) -> dict:
    """Metric columns of one report row (everything except subject/preset/status)."""
    m = overlap_metrics(pred, truth)
    lv_t, lv_p = lesion_volume(truth), lesion_volume(pred)
    row = dict(
        dsc=m.dsc, iou=m.iou, precision=m.precision, recall=m.recall,
        lv_true_mm3=lv_t, lv_pred_mm3=lv_p, er_lv=_er(lv_p, lv_t),
    )
    if tract is not None:
        t_loads = side_loads(truth, tract, cfg.side_convention)
        side = dominant_side(t_loads)
        p_loads = side_loads(pred, tract, cfg.side_convention)
        (t_raw, t_norm), (p_raw, p_norm) = t_loads[side], p_loads[side]
        idx = 0 if cfg.thresholds.measure == "raw" else 1
        row.update(
            side=side, ll_true_cc=t_raw, ll_pred_cc=p_raw, er_ll=_er(p_raw, t_raw),
            lln_true=t_norm, lln_pred=p_norm,
            er_lln=None if math.isnan(t_norm) else _er(p_norm, t_norm),
        )
        t_val, p_val = t_loads[side][idx], p_loads[side][idx]
        if not (math.isnan(t_val) or math.isnan(p_val)):
            row.update(category_true=categorize(t_val, cfg.thresholds), category_pred=categorize(p_val, cfg.thresholds))
    return row


def evaluate_subject(cfg: RunConfig, sid: str, presets, atlas, tract) -> list[dict]:
    entry = cfg.subject(sid)
    try:
        if entry.truth is None:
            raise VoxfuseError(f"subject {sid} has no truth mask")
        truth = niftio.load(entry.truth, "binary")
        needed = set().union(*(cfg.members_of(p) for p in presets))
        missing = sorted(needed - set(entry.predictions))
        if missing:
            raise VoxfuseError(f"subject {sid} lacks prediction(s) for {', '.join(missing)}")
        preds = {k: niftio.load(entry.predictions[k], "binary") for k in sorted(needed)}
    except (VoxfuseError, OSError) as exc:
        log.warning("subject %s: %s", sid, exc)
        return [dict(subject=sid, preset=p, status="error", note=str(exc)) for p in presets]

    rows = []
    for name in presets:
        row = dict(subject=sid, preset=name)
        try:
            pred = fused_prediction(cfg, name, preds, atlas)
            row.update(evaluate_prediction(pred, truth, tract, cfg))
        except (VoxfuseError, OSError) as exc:
            log.warning("subject %s, preset %s: %s", sid, name, exc)
            row.update(status="error", note=str(exc))
            rows.append(row)
            continue
        undefined = [k for k in ("er_lv", "er_ll") if k in row and row[k] is None]
        if "er_ll" not in row:
            undefined = [k for k in ("er_lv",) if row[k] is None]
        row["status"] = "excluded" if undefined else "ok"
        if undefined:
            row["note"] = "undefined reference for " + ", ".join(undefined)
        rows.append(row)
    return rows


@dataclass
class CohortReport:
    rows: list
    summary: list = field(default_factory=list)
    confusion: dict = field(default_factory=dict)
    thresholds_note: str = ""

    def csv_text(self) -> str:
        return _csv(ROW_FIELDS, self.rows)

    def summary_csv_text(self) -> str:
        return _csv(SUMMARY_FIELDS, self.summary)

    def confusion_csv_text(self) -> str:
        rows = [
            dict(preset=p, category_true=t, category_pred=q, count=n)
            for p, tally in self.confusion.items()
            for (t, q), n in tally.items()
        ]
        return _csv(("preset", "category_true", "category_pred", "count"), rows)

    def text(self) -> str:
        parts = [
            text_table(ROW_FIELDS[:-1], self.rows),
            "",
            text_table(SUMMARY_FIELDS, self.summary),
        ]
        for preset, tally in self.confusion.items():
            parts += ["", f"category agreement ({preset}): rows = truth, columns = prediction"]
            grid = [dict(truth=t, **{q: tally[(t, q)] for q in CATEGORIES}) for t in CATEGORIES]
            parts.append(text_table(("truth",) + CATEGORIES, grid))
        if self.thresholds_note:
            parts += ["", self.thresholds_note]
        return "\n".join(parts) + "\n"


def _csv(fields, rows) -> str:
    # fixed header, LF endings, '.' decimals
    buf = io.StringIO()
    buf.write(",".join(fields) + "\n")
    for r in rows:
        buf.write(",".join(_csv_cell(fmt(r.get(f))) for f in fields) + "\n")
    return buf.getvalue()


def _csv_cell(s: str) -> str:
    if any(c in s for c in ',"\n'):
        return '"' + s.replace('"', '""') + '"'
    return s


def text_table(fields, rows) -> str:
    cells = [list(fields)] + [[fmt(r.get(f)) for f in fields] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(fields))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def summarize(rows, presets) -> tuple[list, dict]:
    summary, confusion = [], {}
    for name in presets:
        mine = [r for r in rows if r["preset"] == name]
        good = [r for r in mine if r["status"] != "error"]
        s = dict(preset=name, n_subjects=len(mine), n_errors=len(mine) - len(good))
        for key in ("dsc", "iou", "precision", "recall"):
            s[f"mean_{key}"] = mean_excluding(r.get(key) for r in good)[0]
        for key, excl in (("er_lv", "excluded_lv"), ("er_ll", "excluded_ll"), ("er_lln", "excluded_lln")):
            s[f"mean_{key}"], s[excl] = mean_excluding(r.get(key) for r in good)
        summary.append(s)
        tally = {(t, q): 0 for t in CATEGORIES for q in CATEGORIES}
        for r in good:
            if r.get("category_true"):
                tally[(r["category_true"], r["category_pred"])] += 1
        confusion[name] = tally
    return summary, confusion


def load_shared(cfg: RunConfig):
    atlas = niftio.load(cfg.atlas, "atlas") if cfg.atlas else None
    tract = niftio.load(cfg.tract, "weighted") if cfg.tract else None
    return atlas, tract


def evaluate_cohort(cfg: RunConfig, presets=None, jobs: int | None = None) -> CohortReport:
    presets = sorted(presets or cfg.presets)
    for p in presets:
        cfg.members_of(p)
    atlas, tract = load_shared(cfg)
    jobs = max(1, int(jobs or cfg.jobs))
    sids = sorted(cfg.subjects)
    if jobs == 1:
        per_subject = [evaluate_subject(cfg, s, presets, atlas, tract) for s in sids]
    else:
        with ThreadPoolExecutor(jobs) as pool:
            per_subject = list(pool.map(lambda s: evaluate_subject(cfg, s, presets, atlas, tract), sids))
    rows = [r for block in per_subject for r in block]
    summary, confusion = summarize(rows, presets)
    t = cfg.thresholds
    note = f"severity thresholds ({t.measure} load): t1={fmt(t.t1)}, t2={fmt(t.t2)}"
    note += " [published values]" if t.published else " [toolkit defaults, not published values]"
    return CohortReport(rows, summary, confusion, note)


def compare_presets(report: CohortReport) -> list[dict]:
    """Presets ranked by mean ER LL, then mean DSC (descending), then name."""

    def key(s):
        ll = s["mean_er_ll"]
        return (math.inf if math.isnan(ll) else ll, -s["mean_dsc"] if not math.isnan(s["mean_dsc"]) else math.inf, s["preset"])

    ranked = sorted(report.summary, key=key)
    return [
        dict(rank=i + 1, preset=s["preset"], mean_dsc=s["mean_dsc"], mean_er_lv=s["mean_er_lv"],
             mean_er_ll=s["mean_er_ll"], excluded_ll=s["excluded_ll"])
        for i, s in enumerate(ranked)
    ]


def fuse_subject(cfg: RunConfig, preset: str, sid: str, out_dir: Path, jobs: int = 1) -> Path:
    """Fuse one subject's predictions and write ``<out>/<subject>/<preset>.nii`` plus a JSON sidecar."""
    entry = cfg.subject(sid)
    needed = sorted(cfg.members_of(preset))
    missing = [m for m in needed if m not in entry.predictions]
    if missing:
        raise VoxfuseError(f"subject {sid} has no prediction for {', '.join(missing)}")
    paths = {m: entry.predictions[m] for m in needed}
    for p in paths.values():
        if not Path(p).exists():
            raise FileNotFoundError(f"missing input file: {p}")
    preds = {m: niftio.load(p, "binary") for m, p in paths.items()}
    atlas = niftio.load(cfg.atlas, "atlas") if cfg.preset(preset).method == "regionwise" else None
    fused = fused_prediction(cfg, preset, preds, atlas, jobs)
    target = Path(out_dir) / sid / f"{preset}.nii"
    target.parent.mkdir(parents=True, exist_ok=True)
    niftio.write_volume(fused, target)
    sidecar = dict(
        tool="voxfuse",
        version=__version__,
        subject=sid,
        preset=preset,
        spec=_preset_record(cfg, preset),
        inputs={m: str(p) for m, p in paths.items()},
        atlas=str(cfg.atlas) if atlas is not None else None,
        output=str(target),
        voxels=fused.count,
    )
    target.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return target


def _preset_record(cfg, name):
    p = cfg.preset(name)
    if p.method == "regionwise":
        return dict(method="regionwise", regions={rs.name: _preset_record(cfg, ref) | {"preset": ref} for rs, ref in p.regions})
    f = p.fusion
    rec = dict(method=f.method, members=list(f.members))
    if f.method == "agreement_window":
        rec.update(window_size=f.window_size, overlap_threshold=f.overlap_threshold, stride=f.stride)
    return rec
