"""Command-line entry point.

Exit codes: 0 success, 1 processing failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

from . import __version__
from .analysis import downscale_noise_report, shuffle_variance_report
from .codec import ENCODER_ENV, external_commands
from .config import ConfigError, PipelineConfig, load_config
from .core import HIST_BINS, merge_stats, residual, stats
from .io import discover_clips, read_y4m, write_png_dir
from .pipeline import PipelinePlan, degrade_dataset
from .rng import SeededRng
from .theorem import BUILTIN_MODELS, builtin_problem, gap_slope, verify_theorem

log = logging.getLogger("videodeg")

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2
STATS_COLUMNS = ("clip", "sample_count", "mean", "variance", "std", "histogram")


class UsageError(Exception):
    pass


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_config(args) -> PipelineConfig:
    cfg = PipelineConfig() if args.config is None else load_config(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if getattr(args, "clamp_mode", None):
        changes["clamp_each_stage"] = args.clamp_mode == "each"
    return cfg.replace(**changes) if changes else cfg


def _aligned_entries(clean_dir: str, other_dir: str):
    clean = {e.name: e for e in discover_clips(clean_dir)}
    other = {e.name: e for e in discover_clips(other_dir)}
    if not clean:
        raise UsageError(f"no clips found in {clean_dir}")
    if set(clean) != set(other):
        missing = sorted(set(clean) ^ set(other))
        raise UsageError(f"clip trees are not aligned; unmatched clips: {missing}")
    return [(clean[n], other[n]) for n in sorted(clean)]


def _load_pair(a, b):
    ca, cb = a.load(), b.load()
    if ca.frames.shape != cb.frames.shape:
        raise UsageError(f"clip {a.name}: shapes differ {ca.frames.shape} vs {cb.frames.shape}")
    return ca, cb


def cmd_degrade(args) -> int:
    if args.config is None:
        raise UsageError("degrade needs --config")
    config = _load_config(args)
    entries = discover_clips(args.input)
    if not entries:
        raise UsageError(f"no clips found in {args.input}")
    out_root = Path(args.output)
    out_root.mkdir(parents=True, exist_ok=True)

    sizes = {}

    def sink(index, name, clip):
        entry = entries[index]
        sizes[index] = (clip.height, clip.width)
        write_png_dir(clip, out_root / name, entry.frame_names(len(clip)))

    result = degrade_dataset(
        [e.load for e in entries],
        config,
        names=[e.name for e in entries],
        jobs=args.jobs,
        sink=sink,
    )
    manifest = result.manifest
    for entry, record in zip(entries, manifest["clips"]):
        record["source"] = str(entry.path.relative_to(Path(args.input))) if entry.path != Path(args.input) else "."
        if record["status"] == "ok":
            record["frames"] = entry.frame_names(record["n_frames"])
            _record_external_commands(record, *sizes.get(record["index"], (0, 0)))
    (out_root / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    for name in result.failures:
        log.error("clip %s failed", name)
    return EXIT_FAILURE if result.failures else EXIT_OK


def _record_external_commands(record: dict, height: int, width: int) -> None:
    # the builtin path is fully described by the plan; external runs also keep the tool invocation
    plan = PipelinePlan.from_dict(record["plan"])
    for stage in plan.stages:
        spec = stage.spec_for(0)
        if stage.kind == "video" and spec.backend == "external":
            record.setdefault("external_commands", []).append(
                external_commands(f"${ENCODER_ENV}", spec, height + height % 2, width + width % 2, "<tmpdir>")
            )


def cmd_stats(args) -> int:
    rows = []
    parts = []
    for clean_entry, deg_entry in _aligned_entries(args.clean, args.degraded):
        clean, degraded = _load_pair(clean_entry, deg_entry)
        s = stats(residual(degraded, clean), bins=args.bins)
        parts.append(s)
        rows.append((clean_entry.name, s))
    rows.append(("__aggregate__", merge_stats(parts)))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(STATS_COLUMNS)
    for name, s in rows:
        w.writerow([name, s.sample_count, repr(s.mean), repr(s.variance), repr(s.std), " ".join(map(str, s.histogram))])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_downscale_report(args) -> int:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("clip", "scale", "mode", "psnr_db"))
    pooled: dict[float, list[tuple[float, int]]] = {}
    for clean_entry, deg_entry in _aligned_entries(args.clean, args.degraded):
        clean, degraded = _load_pair(clean_entry, deg_entry)
        report = downscale_noise_report(clean, degraded, args.scales, args.mode)
        for scale, value in report.rows:
            w.writerow([clean_entry.name, repr(scale), args.mode, repr(value)])
            mse = 0.0 if math.isinf(value) else 10 ** (-value / 10)
            pooled.setdefault(scale, []).append((mse, clean.frames.size))
    for scale, items in pooled.items():
        total = sum(n for _, n in items)
        mse = sum(m * n for m, n in items) / total
        value = math.inf if mse == 0 else 10 * math.log10(1 / mse)
        w.writerow(["__aggregate__", repr(scale), args.mode, repr(value)])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _load_single_clip(path: str):
    p = Path(path)
    if p.is_file():
        return read_y4m(p)
    entries = discover_clips(p)
    if not entries:
        raise UsageError(f"no clip found at {path}")
    if len(entries) > 1:
        log.warning("using first clip %s of %d under %s", entries[0].name, len(entries), path)
    return entries[0].load()


def cmd_shuffle_variance(args) -> int:
    config = _load_config(args)
    clip = _load_single_clip(args.clean)
    report = shuffle_variance_report(clip, config, args.n_pipelines, seed=args.seed)
    _emit(report.to_csv(), args.out)
    summary = report.to_dict()
    summary.pop("shuffled_std")
    summary.pop("fixed_std")
    sys.stderr.write(json.dumps(summary, indent=2) + "\n")
    return EXIT_OK


def cmd_verify_theorem(args) -> int:
    model, dataset = builtin_problem(args.model, seed=args.seed, n_points=args.points)
    checks = []
    for eta in args.eta:
        # common random numbers across eta: each run restarts the same stream
        rng = SeededRng(args.seed).spawn("verify", args.model)
        checks.append(
            verify_theorem(model, dataset, eta, args.n_mc, rng, sampler=args.sampler, curvature_weight=args.curvature_weight)
        )
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("model", "eta", "lhs", "rhs", "abs_gap", "stderr"))
    for c in checks:
        w.writerow([args.model, repr(c.eta), repr(c.lhs), repr(c.rhs), repr(c.abs_gap), repr(c.stderr)])
    _emit(buf.getvalue(), args.out)

    if args.model == "linear":
        ok = all(c.abs_gap < 3 * c.stderr or c.abs_gap == 0 for c in checks)
        sys.stderr.write(f"linear gap within 3 standard errors: {ok}\n")
    elif len(checks) >= 2:
        slope = gap_slope(checks)
        ok = slope >= 2.5
        sys.stderr.write(f"log-log gap slope {slope:.3f} (need >= 2.5): {ok}\n")
    else:
        ok = True
    return EXIT_OK if ok else EXIT_FAILURE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="videodeg", description="Randomized video degradation toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the seed (accepted by every command)")
    common.add_argument("--jobs", type=int, default=1, help="clip-level worker threads")
    common.add_argument("--out", default=None, help="write the report here instead of stdout")

    p = sub.add_parser("degrade", parents=[common], help="degrade every clip under INPUT")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--config", default=None)
    p.add_argument("--clamp-mode", choices=("each", "final"), default=None)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("stats", parents=[common], help="residual statistics per clip")
    p.add_argument("clean")
    p.add_argument("degraded")
    p.add_argument("--bins", type=int, default=HIST_BINS)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("downscale-report", parents=[common], help="PSNR after downscaling both trees")
    p.add_argument("clean")
    p.add_argument("degraded")
    p.add_argument("--scales", type=_float_list, default=[1.0, 0.5, 0.25])
    p.add_argument("--mode", choices=("area", "bilinear", "bicubic"), default="area")
    p.set_defaults(func=cmd_downscale_report)

    p = sub.add_parser("shuffle-variance", parents=[common], help="residual std under shuffled vs fixed order")
    p.add_argument("clean", help="a PNG clip directory, a tree of clips, or a .y4m file")
    p.add_argument("--config", default=None)
    p.add_argument("--clamp-mode", choices=("each", "final"), default=None)
    p.add_argument("--n-pipelines", type=int, default=200)
    p.set_defaults(func=cmd_shuffle_variance)

    p = sub.add_parser("verify-theorem", parents=[common], help="check the noise-regularization expansion")
    p.add_argument("--model", choices=BUILTIN_MODELS, default="linear")
    p.add_argument("--eta", type=_float_list, default=[0.1, 0.05, 0.025])
    p.add_argument("--n-mc", type=int, default=100_000)
    p.add_argument("--points", type=int, default=8)
    p.add_argument("--sampler", choices=("matched", "plain"), default="matched")
    p.add_argument("--curvature-weight", type=float, default=1.0)
    p.set_defaults(func=cmd_verify_theorem)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "verify-theorem" and args.seed is None:
        args.seed = 0
    if args.jobs < 1:
        parser.error("--jobs must be at least 1")
    try:
        return args.func(args)
    except (UsageError, ConfigError, FileNotFoundError, NotADirectoryError) as exc:
        sys.stderr.write(f"videodeg {args.command}: {exc}\n")
        return EXIT_USAGE
    except Exception as exc:
        log.exception("%s failed", args.command)
        sys.stderr.write(f"videodeg {args.command}: {exc}\n")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
