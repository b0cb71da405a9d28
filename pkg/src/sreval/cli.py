"""Batch command-line entry points.

Subcommands: fidelity, traditional, metrics, counterexample, pairs,
serve, report. Dataset layout comes from a JSON manifest; images are
linked across directories by filename stem. All outputs are deterministic
for fixed inputs and seeds.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import counterexample as cx
from . import iqa
from .campaign import Campaign, CampaignConfig, EventLog
from .fidelity import FidelitySearchConfig, fidelity, summarize_db
from .image import load_image, save_png
from .report import correlation_table, db_summary, format_db, method_table
from .resample import DownsampleMethod
from .study import (
    filter_pairs_by_method,
    generate_pairs,
    metric_hvs_correlation,
    preference_counts,
    run_study,
)

_IMAGE_SUFFIXES = (".png", ".pgm")


class CliError(Exception):
    pass


class RunManifest:
    """Dataset layout: original LR/HR directories plus per-method output dirs."""

    def __init__(self, raw: dict, base: Path):
        def resolve(key):
            value = raw.get(key)
            return None if value is None else (base / value)

        self.lr_dir = resolve("lr_dir")
        self.hr_dir = resolve("hr_dir")
        self.methods = {
            name: base / path for name, path in sorted(raw.get("methods", {}).items())
        }
        self.factor = int(raw.get("factor", 3))
        self.output_dir = resolve("output_dir")
        for label, path in [("lr_dir", self.lr_dir), ("hr_dir", self.hr_dir)] + [
            (f"methods[{n}]", p) for n, p in self.methods.items()
        ]:
            if path is not None and not path.is_dir():
                raise CliError(f"manifest {label}: {path} is not a directory")

    @classmethod
    def load(cls, path) -> "RunManifest":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read manifest {path}: {exc}") from exc
        return cls(raw, path.parent)


def index_dir(directory: Path) -> dict[str, Path]:
    """Stem -> file for the supported image types; collisions are fatal."""
    out: dict[str, Path] = {}
    for path in sorted(directory.iterdir()):
        if path.suffix.lower() not in _IMAGE_SUFFIXES or not path.is_file():
            continue
        if path.stem in out:
            raise CliError(f"stem collision in {directory}: {out[path.stem]} vs {path}")
        out[path.stem] = path
    return out


def _write_json(payload: dict, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _output_dir(args, manifest: RunManifest | None = None) -> Path:
    out = args.output or (manifest.output_dir if manifest else None) or "sreval-out"
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _search_config(args, manifest: RunManifest) -> FidelitySearchConfig:
    return FidelitySearchConfig(
        radius=args.radius,
        border=args.border,
        factor=args.factor or manifest.factor,
    )


def _per_method_scan(manifest: RunManifest, reference_dir: Path):
    """Yield (method, method_index, reference_index); empty dirs are errors."""
    if not manifest.methods:
        raise CliError("manifest lists no method directories")
    ref_index = index_dir(reference_dir)
    if not ref_index:
        raise CliError(f"no images in {reference_dir}")
    for method, directory in manifest.methods.items():
        yield method, index_dir(directory), ref_index


def cmd_fidelity(args) -> int:
    manifest = RunManifest.load(args.manifest)
    if manifest.lr_dir is None:
        raise CliError("manifest needs lr_dir for fidelity evaluation")
    cfg = _search_config(args, manifest)
    out_dir = _output_dir(args, manifest)
    failures = 0
    methods_payload: dict[str, dict] = {}
    for method, method_index, lr_index in _per_method_scan(manifest, manifest.lr_dir):
        results = []
        errors = []
        if not method_index:
            errors.append({"image": None, "error": f"empty method directory {manifest.methods[method]}"})
        else:
            for stem in sorted(lr_index):
                try:
                    hr_path = method_index.get(stem)
                    if hr_path is None:
                        raise CliError(f"no result for {stem!r} in {manifest.methods[method]}")
                    res = fidelity(
                        load_image(hr_path), load_image(lr_index[stem]), cfg, jobs=args.jobs
                    )
                except (CliError, ValueError, OSError) as exc:
                    errors.append({"image": stem, "error": str(exc)})
                    continue
                results.append({"image": stem, **res.to_json_dict()})
        failures += len(errors)
        payload: dict = {"results": results, "errors": errors}
        if results:
            payload["summary"] = db_summary(
                [math.inf if r["fd_db"] == "inf" else r["fd_db"] for r in results]
            )
        methods_payload[method] = payload
    report = {"kind": "fidelity", "factor": cfg.factor, "methods": methods_payload}
    _write_json(report, out_dir / "fidelity.json")
    means = {
        m: p["summary"]["mean_db"] for m, p in methods_payload.items() if "summary" in p
    }
    print(method_table(sorted(manifest.methods), fidelity_db=means))
    for method, payload in methods_payload.items():
        for err in payload["errors"]:
            print(f"error [{method}] {err['image']}: {err['error']}", file=sys.stderr)
    return 1 if failures else 0


def cmd_traditional(args) -> int:
    manifest = RunManifest.load(args.manifest)
    if manifest.hr_dir is None:
        raise CliError("manifest needs hr_dir for traditional evaluation")
    out_dir = _output_dir(args, manifest)
    failures = 0
    methods_payload: dict[str, dict] = {}
    for method, method_index, hr_index in _per_method_scan(manifest, manifest.hr_dir):
        results = []
        errors = []
        if not method_index:
            errors.append({"image": None, "error": f"empty method directory {manifest.methods[method]}"})
        else:
            for stem in sorted(hr_index):
                try:
                    sr_path = method_index.get(stem)
                    if sr_path is None:
                        raise CliError(f"no result for {stem!r} in {manifest.methods[method]}")
                    value = iqa.psnr(load_image(hr_index[stem]), load_image(sr_path))
                except (CliError, ValueError, OSError) as exc:
                    errors.append({"image": stem, "error": str(exc)})
                    continue
                results.append({"image": stem, "psnr_db": "inf" if math.isinf(value) else value})
        failures += len(errors)
        payload: dict = {"results": results, "errors": errors}
        if results:
            payload["summary"] = db_summary(
                [math.inf if r["psnr_db"] == "inf" else r["psnr_db"] for r in results]
            )
        methods_payload[method] = payload
    report = {"kind": "traditional", "methods": methods_payload}
    _write_json(report, out_dir / "traditional.json")
    means = {
        m: p["summary"]["mean_db"] for m, p in methods_payload.items() if "summary" in p
    }
    print(method_table(sorted(manifest.methods), traditional_db=means))
    for method, payload in methods_payload.items():
        for err in payload["errors"]:
            print(f"error [{method}] {err['image']}: {err['error']}", file=sys.stderr)
    return 1 if failures else 0


_NATIVE_METRICS = {
    "psnr": (iqa.psnr, iqa.HIGHER),
    "ssim": (iqa.ssim, iqa.HIGHER),
    "uqi": (iqa.uqi, iqa.HIGHER),
}


def cmd_metrics(args) -> int:
    manifest = RunManifest.load(args.manifest)
    if manifest.hr_dir is None:
        raise CliError("manifest needs hr_dir (reference images) for metric scoring")
    wanted = [m.strip() for m in args.metrics.split(",") if m.strip()]
    unknown = [m for m in wanted if m not in _NATIVE_METRICS]
    if unknown:
        raise CliError(f"unknown metrics {unknown}; native metrics: {sorted(_NATIVE_METRICS)}")
    out_dir = _output_dir(args, manifest)
    scores: list[iqa.MetricScore] = []
    failures = 0
    for method, method_index, hr_index in _per_method_scan(manifest, manifest.hr_dir):
        for stem in sorted(hr_index):
            sr_path = method_index.get(stem)
            if sr_path is None:
                print(f"error [{method}] {stem}: missing result", file=sys.stderr)
                failures += 1
                continue
            try:
                ref = load_image(hr_index[stem])
                img = load_image(sr_path)
                for name in wanted:
                    fn, polarity = _NATIVE_METRICS[name]
                    scores.append(
                        iqa.MetricScore(name, f"{stem}/{method}", float(fn(ref, img)), polarity)
                    )
            except (ValueError, OSError) as exc:
                print(f"error [{method}] {stem}: {exc}", file=sys.stderr)
                failures += 1
    iqa.save_scores_csv(scores, out_dir / "scores.csv")
    iqa.save_scores_json(scores, out_dir / "scores.json")
    print(f"wrote {len(scores)} scores for {len(wanted)} metrics to {out_dir}")
    return 1 if failures else 0


def cmd_counterexample(args) -> int:
    out_dir = _output_dir(args)
    img = load_image(args.input)
    stem = Path(args.input).stem
    if args.kind == "contrast":
        params = cx.ContrastParams(c=args.c)
        produced = cx.contrast_enhance(img, params)
        max_diff = cx.verify_null_space(img, produced, DownsampleMethod.BOX, 2)
        report = {
            "kind": "contrast",
            "c": args.c,
            "psnr_vs_original": _json_db(iqa.psnr(img, produced)),
            "max_lr_difference": max_diff,
        }
        out_name = f"{stem}_contrast.png"
    else:
        params = cx.WarpParams(max_mv=args.max_mv, axis=args.axis)
        produced = cx.warp_image(img, params)
        report = {
            "kind": "warp",
            "max_mv": args.max_mv,
            "axis": args.axis,
            "psnr_vs_original": _json_db(iqa.psnr(img, produced)),
        }
        out_name = f"{stem}_warp.png"
    if float(produced.data.min()) < 0 or float(produced.data.max()) > 255:
        print(
            "warning: samples outside [0,255]; 8-bit export clamps them, which "
            "voids the exact low-resolution identity",
            file=sys.stderr,
        )
    save_png(produced, out_dir / out_name)
    _write_json(report, out_dir / f"{stem}_{args.kind}_report.json")
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def _json_db(value: float):
    return "inf" if math.isinf(value) else value


def cmd_pairs(args) -> int:
    manifest = RunManifest.load(args.manifest)
    if not manifest.methods:
        raise CliError("manifest lists no method directories")
    if args.images:
        images = [s.strip() for s in args.images.split(",") if s.strip()]
    else:
        if manifest.lr_dir is None:
            raise CliError("need lr_dir (or --images) to enumerate campaign images")
        images = sorted(index_dir(manifest.lr_dir))
    if not images:
        raise CliError("no campaign images found")
    config = CampaignConfig(
        images=tuple(images),
        methods={m: str(p) for m, p in manifest.methods.items()},
        seed=args.seed,
        threshold=args.threshold,
    )
    pairs = generate_pairs(list(config.images), sorted(config.methods), config.seed)
    out_dir = _output_dir(args, manifest)
    _write_json(config.to_json_dict(), out_dir / "campaign.json")
    _write_json(
        {
            "pairs": [
                {
                    "pair_id": p.pair_id,
                    "image": p.image_id,
                    "left": p.method_left,
                    "right": p.method_right,
                }
                for p in pairs
            ]
        },
        out_dir / "pairs.json",
    )
    print(f"{len(images)} images x {len(config.methods)} methods -> {len(pairs)} pairs")
    return 0


def cmd_serve(args) -> int:
    from . import service

    config = CampaignConfig.from_json(args.campaign)
    campaign = Campaign(config, args.log)
    service.run(campaign, host=args.host, port=args.port, ui_dir=args.ui_dir)
    return 0


def _mean_db_by_method(path) -> dict[str, float]:
    raw = json.loads(Path(path).read_text())
    return {
        m: payload["summary"]["mean_db"]
        for m, payload in raw.get("methods", {}).items()
        if "summary" in payload
    }


def cmd_report(args) -> int:
    config = CampaignConfig.from_json(args.campaign)
    pairs = generate_pairs(list(config.images), sorted(config.methods), config.seed)
    events = EventLog(args.log).events
    if not events:
        raise CliError(f"event log {args.log} holds no events")
    study = run_study(pairs, events, threshold=config.threshold)

    scores: list[iqa.MetricScore] = []
    for score_path in args.scores or []:
        scores.extend(iqa.load_external_scores(score_path))
    by_metric: dict[str, dict[str, iqa.MetricScore]] = {}
    for s in scores:
        by_metric.setdefault(s.metric, {})[s.image] = s

    corr_pairs = pairs
    if args.subset_method:
        if args.subset_method not in config.methods:
            raise CliError(f"unknown subset method {args.subset_method!r}")
        corr_pairs = filter_pairs_by_method(pairs, args.subset_method)

    correlations = {}
    if by_metric:
        missing: list[str] = []
        prefs: dict[str, dict[str, iqa.Preference]] = {}
        for metric, table in by_metric.items():
            metric_prefs: dict[str, iqa.Preference] = {}
            for p in corr_pairs:
                left_id = f"{p.image_id}/{p.method_left}"
                right_id = f"{p.image_id}/{p.method_right}"
                if left_id not in table or right_id not in table:
                    missing.extend(
                        i for i in (left_id, right_id) if i not in table
                    )
                    continue
                metric_prefs[p.pair_id] = iqa.metric_preference(
                    table[left_id], table[right_id], epsilon=args.epsilon
                )
            prefs[metric] = metric_prefs
        if missing:
            raise CliError(
                "missing score rows for: " + ", ".join(sorted(set(missing)))
            )
        correlations = metric_hvs_correlation(prefs, corr_pairs, study.gt_step2)

    counts = preference_counts(pairs, study.gt_step2)
    fidelity_means = _mean_db_by_method(args.fidelity_json) if args.fidelity_json else None
    traditional_means = (
        _mean_db_by_method(args.traditional_json) if args.traditional_json else None
    )

    out_dir = _output_dir(args)
    report = {
        "threshold": config.threshold,
        "annotators": sorted({e.annotator for e in events}),
        "outliers": sorted(study.outliers),
        "agreements": {a: study.agreements[a] for a in sorted(study.agreements)},
        "preference_counts": counts,
        "consensus_pairs": len(study.gt_step2.consensus_pairs()),
        "no_consensus_pairs": len(pairs) - len(study.gt_step2.consensus_pairs()),
        "subset_method": args.subset_method,
        "subset_pairs": len(corr_pairs) if args.subset_method else None,
        "correlations": {
            m: {
                "agreement": c.agreement,
                "matches": c.matches,
                "counted": c.counted,
                "excluded": c.excluded,
            }
            for m, c in correlations.items()
        },
    }
    _write_json(report, out_dir / "report.json")

    print(
        method_table(
            sorted(config.methods),
            fidelity_db=fidelity_means,
            preference=counts,
            traditional_db=traditional_means,
        )
    )
    if correlations:
        print()
        print(correlation_table(correlations))
    print()
    print(
        f"outliers removed: {sorted(study.outliers) or 'none'}; "
        f"consensus on {report['consensus_pairs']}/{len(pairs)} pairs"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sreval",
        description="Fidelity and naturalness evaluation for super-resolution results.",
    )
    parser.add_argument("--seed", type=int, default=0, help="campaign / ordering seed")
    parser.add_argument("--factor", type=int, default=None, help="SR scale factor override")
    parser.add_argument("--border", type=int, default=20, help="center-crop border (LR px)")
    parser.add_argument("--radius", type=int, default=10, help="translation search radius")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes")
    parser.add_argument("--output", default=None, help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fidelity", help="transform-search fidelity per SR result")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_fidelity)

    p = sub.add_parser("traditional", help="whole-image PSNR against the originals")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_traditional)

    p = sub.add_parser("metrics", help="native IQA scores for every SR result")
    p.add_argument("--manifest", required=True)
    p.add_argument("--metrics", default="psnr,ssim,uqi")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("counterexample", help="images sharing one LR projection")
    p.add_argument("kind", choices=["warp", "contrast"])
    p.add_argument("--input", required=True)
    p.add_argument("--c", type=float, default=4.0, help="contrast gain")
    p.add_argument("--max-mv", type=float, default=40.0, help="peak warp displacement")
    p.add_argument("--axis", choices=["horizontal", "vertical"], default="horizontal")
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("pairs", help="generate a labeling campaign")
    p.add_argument("--manifest", required=True)
    p.add_argument("--images", default=None, help="comma-separated image ids")
    p.add_argument("--threshold", type=float, default=0.70)
    p.set_defaults(func=cmd_pairs)

    p = sub.add_parser("serve", help="run the annotation service")
    p.add_argument("--campaign", required=True)
    p.add_argument("--log", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8766)
    p.add_argument("--ui-dir", default=None)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("report", help="study analysis and method table")
    p.add_argument("--campaign", required=True)
    p.add_argument("--log", required=True)
    p.add_argument("--scores", action="append", help="external score CSV (repeatable)")
    p.add_argument("--subset-method", default=None)
    p.add_argument("--epsilon", type=float, default=0.0, help="metric tie tolerance")
    p.add_argument("--fidelity-json", default=None)
    p.add_argument("--traditional-json", default=None)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
