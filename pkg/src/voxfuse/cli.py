"""``voxfuse`` command line.

Exit codes: 0 success, 1 usage, 2 data error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__, kernels, niftio
from .config import load_config
from .errors import VoxfuseError
from .pipeline import COMPARE_FIELDS, _csv, compare_presets, evaluate_cohort, fuse_subject, text_table
from .synthio import load_synth_spec, write_cohort

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("voxfuse")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="voxfuse", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"voxfuse {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, preset_many=False):
        sp.add_argument("--config", required=True, type=Path, help="run configuration file")
        sp.add_argument("--out", type=Path, help="output directory (overrides the config)")
        sp.add_argument("--jobs", type=int, help="parallel workers (overrides the config)")
        if preset_many:
            sp.add_argument("--preset", action="append", help="preset name; repeat for several")

    sp = sub.add_parser("fuse", help="fuse one subject's predictions with a preset")
    common(sp)
    sp.add_argument("--preset", required=True)
    sp.add_argument("--subject", required=True)

    sp = sub.add_parser("evaluate", help="evaluate every subject under every (or the chosen) preset")
    common(sp, preset_many=True)

    sp = sub.add_parser("compare", help="rank presets by mean lesion-load error")
    common(sp, preset_many=True)

    sp = sub.add_parser("synth", help="generate a synthetic cohort")
    sp.add_argument("--config", type=Path, help="synthetic cohort spec (key = value)")
    sp.add_argument("--out", type=Path, required=True, help="output directory")
    sp.add_argument("--seed", type=int, help="override the cohort seed")
    sp.add_argument("--format", choices=("nii", "vxf"), default="nii", help="volume file format")

    sp = sub.add_parser("info", help="show version and kernel backend, plus a volume header if given")
    sp.add_argument("path", nargs="?", type=Path)
    sp.add_argument("--config", type=Path)
    return p


def _setup_logging():
    level = os.environ.get("VOXFUSE_LOG", "warn").lower()
    levels = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def cmd_fuse(args) -> int:
    cfg = load_config(args.config)
    cfg.preset(args.preset)
    cfg.subject(args.subject)
    out = fuse_subject(cfg, args.preset, args.subject, args.out or cfg.out, args.jobs or cfg.jobs)
    print(out)
    return EXIT_OK


def _presets(cfg, names):
    names = names or sorted(cfg.presets)
    for n in names:
        cfg.preset(n)
    return names


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config)
    cfg.validate(subjects=[])
    report = evaluate_cohort(cfg, _presets(cfg, args.preset), args.jobs)
    out = args.out or cfg.out
    _write(out / "evaluate.csv", report.csv_text())
    _write(out / "summary.csv", report.summary_csv_text())
    _write(out / "confusion.csv", report.confusion_csv_text())
    text = report.text()
    _write(out / "evaluate.txt", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = load_config(args.config)
    cfg.validate(subjects=[])
    report = evaluate_cohort(cfg, _presets(cfg, args.preset), args.jobs)
    ranking = compare_presets(report)
    out = args.out or cfg.out
    _write(out / "compare.csv", _csv(COMPARE_FIELDS, ranking))
    text = text_table(COMPARE_FIELDS, ranking) + "\n"
    _write(out / "compare.txt", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = load_synth_spec(args.config, seed=args.seed)
    manifest = write_cohort(spec, args.out, fmt=args.format)
    print(manifest)
    return EXIT_OK


def cmd_info(args) -> int:
    print(f"voxfuse {__version__}")
    print(f"kernel backend: {kernels.BACKEND}")
    if args.config:
        cfg = load_config(args.config)
        print(f"config: {args.config}: {len(cfg.subjects)} subject(s), presets: {', '.join(cfg.presets) or '-'}")
    if args.path:
        if str(args.path).endswith(".vxf"):
            vol = niftio.read_raw(args.path)
            print(f"{args.path}: VXF1 {vol.kind} dims={vol.dims} spacing={vol.spacing}")
        else:
            hdr, order = niftio.parse_header(args.path.read_bytes()[: niftio.HEADER_SIZE])
            name = niftio.DATATYPES[int(hdr["datatype"])][0]
            print(f"{args.path}: NIfTI-1 {'little' if order == '<' else 'big'}-endian {name}")
            print(f"  dim={[int(d) for d in hdr['dim']]}")
            print(f"  pixdim={[float(d) for d in hdr['pixdim']]}")
            print(f"  vox_offset={float(hdr['vox_offset'])} scl_slope={float(hdr['scl_slope'])} "
                  f"scl_inter={float(hdr['scl_inter'])}")
    return EXIT_OK


COMMANDS = {"fuse": cmd_fuse, "evaluate": cmd_evaluate, "compare": cmd_compare, "synth": cmd_synth, "info": cmd_info}


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    if getattr(args, "jobs", None) is not None and args.jobs < 1:
        parser.error("--jobs must be >= 1")
    try:
        return COMMANDS[args.command](args)
    except VoxfuseError as exc:
        print(f"voxfuse: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"voxfuse: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
