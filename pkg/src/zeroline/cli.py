"""Command-line surface: synth, segment, detect, track, score, eval.

Exit codes: 0 success, 2 segmentation failure, 3 schema or validation
error, 4 I/O error, 1 anything else. Stdout carries human-readable text
unless --json is given; diagnostics always go to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .detection import BlobParams, detect_blobs, load_detections, serialize_detections
from .errors import (
    FrameMismatchError,
    InvalidConfigError,
    SchemaViolationError,
    SegmentationFailureError,
    ZerolineError,
)
from .imagecore import GrayImage, annotate, load_image, save_pgm, warp_perspective
from .metrics import DEFAULT_AP_THRESHOLDS, ImageEval, compile_report
from .segmentation import load_template, save_template, segment
from .session import (
    ClickConfig,
    Session,
    append_iteration,
    create_session,
    load_session,
)
from .synthgen import (
    SequenceSpec,
    generate_sequence,
    load_ground_truth,
    render_template,
    save_sequence,
)
from .tracking import DEFAULT_MATCH_THRESHOLD, match_iterations

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_SEGMENTATION = 2
EXIT_SCHEMA = 3
EXIT_IO = 4


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; 2 means segmentation here, so remap."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_SCHEMA, f"{self.prog}: error: {message}\n")


def _cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    template = render_template(args.size, args.mm_per_pixel)
    save_template(template, out / "template.pgm")
    for k in range(args.sequences):
        spec = SequenceSpec(
            seed=args.seed + k,
            iterations=args.iters,
            holes_min=args.holes_min,
            holes_max=args.holes_max,
            hole_radius_px=args.radius,
            perspective_magnitude=args.perspective,
            noise_sigma=args.noise,
            group_center_offset_mm=(args.offset_mm[0], args.offset_mm[1]),
        )
        images, truth = generate_sequence(spec, template)
        save_sequence(out / f"seq_{k + 1:03d}", images, truth, template_ref="../template.pgm")
    if args.json:
        print(json.dumps({"sequences": args.sequences, "out": str(out)}))
    else:
        print(f"wrote {args.sequences} sequences under {out}")
    return EXIT_OK


def _cmd_segment(args) -> int:
    template = load_template(args.template)
    raw = load_image(args.image)
    norm = segment(raw, template)
    if args.out:
        save_pgm(norm.image, args.out)
    result = {
        "homography": norm.homography_raw_to_canonical.as_flat_list(),
        "inlier_count": norm.inlier_count,
        "used_fallback": norm.used_fallback,
    }
    if args.json:
        print(json.dumps(result, indent=2))
    else:
        print(f"registered with {norm.inlier_count} inliers"
              + (" (coarse-crop fallback)" if norm.used_fallback else ""))
        if args.out:
            print(f"normalized image written to {args.out}")
    return EXIT_OK


def _cmd_detect(args) -> int:
    template = load_template(args.template)
    raw = load_image(args.image)
    norm = segment(raw, template)
    params = BlobParams(
        min_area=args.min_area,
        max_area=args.max_area,
        min_circularity=args.min_circularity,
    )
    dets = detect_blobs(norm, params)
    doc = serialize_detections(dets, image_ref=str(args.image), frame="normalized")
    if args.detections_out:
        Path(args.detections_out).write_text(json.dumps(doc, indent=2) + "\n")
    if args.json:
        print(json.dumps(doc, indent=2))
    else:
        print(f"{len(dets)} holes detected")
        for d in dets:
            c = d.bbox.center
            print(f"  ({c.x:7.2f}, {c.y:7.2f})  confidence {d.confidence:.3f}")
    return EXIT_OK


def _load_detections_doc(path: str) -> dict:
    with open(path) as handle:
        try:
            return json.load(handle)
        except json.JSONDecodeError as exc:
            raise SchemaViolationError("$", f"not valid JSON: {exc}") from exc


def _cmd_track(args) -> int:
    template = load_template(args.template)
    if args.new:
        session = create_session(
            args.session,
            session_id=args.session_id or Path(args.session).stem,
            template_ref=str(args.template),
            distance_m=args.distance_m,
            aim_point=template.aim_point,
            click_config=ClickConfig(args.windage_moa, args.elevation_moa),
        )
    else:
        session = load_session(args.session)
    raw = load_image(args.image)
    detections = _load_detections_doc(args.detections) if args.detections else None
    record = append_iteration(
        session,
        raw,
        template,
        path=args.session,
        detections=detections,
        threshold=args.threshold,
        image_ref=str(args.image),
    )
    if args.annotate:
        size = template.canonical_size
        normalized = warp_perspective(raw, record.homography, size, size)
        new_set = set(record.new_hole_indices)
        boxes = [
            (d.bbox, "new" if i in new_set else "prior")
            for i, d in enumerate(record.detections)
        ]
        save_pgm(annotate(normalized, boxes), args.annotate)

    if args.json:
        from .session import _record_to_json

        print(json.dumps(_record_to_json(record), indent=2))
        return EXIT_OK
    print(f"iteration {record.index}: {len(record.detections)} holes")
    print(f"new holes: {len(record.new_hole_indices)}")
    _print_scores(record)
    return EXIT_OK


def _print_scores(record) -> None:
    stats = record.group_stats
    adjustment = record.adjustment
    if stats is None or adjustment is None:
        print("no new holes; no group statistics or adjustment")
        return
    print(f"group center:    ({stats.center_px.x:.2f}, {stats.center_px.y:.2f}) px"
          f"  /  ({stats.center_mm.x:.2f}, {stats.center_mm.y:.2f}) mm")
    print(f"extreme spread:  {stats.extreme_spread_mm:.2f} mm")
    print(f"mean radius:     {stats.mean_radius_mm:.2f} mm")
    print(f"shots:           {stats.count}")
    print(f"windage:         {adjustment.windage_clicks:+d} clicks (+ = right)")
    print(f"elevation:       {adjustment.elevation_clicks:+d} clicks (+ = up)")
    print(f"residual:        ({adjustment.residual_mm[0]:+.3f}, "
          f"{adjustment.residual_mm[1]:+.3f}) mm")


def _cmd_score(args) -> int:
    session = load_session(args.session)
    if not session.iterations:
        raise InvalidConfigError("session has no iterations to score")
    index = args.iteration if args.iteration is not None else len(session.iterations)
    if not 1 <= index <= len(session.iterations):
        raise InvalidConfigError(
            f"iteration {index} out of range 1..{len(session.iterations)}"
        )
    record = session.iterations[index - 1]
    if args.json:
        from .session import _record_to_json

        print(json.dumps(_record_to_json(record), indent=2))
        return EXIT_OK
    print(f"session {session.session_id}, iteration {record.index}")
    _print_scores(record)
    return EXIT_OK


def _parse_thresholds(text: str) -> list[float]:
    """start:step:stop (inclusive), e.g. 0.5:0.05:0.95."""
    parts = text.split(":")
    if len(parts) != 3:
        raise InvalidConfigError(f"thresholds must be start:step:stop, got {text!r}")
    try:
        start, step, stop = (float(p) for p in parts)
    except ValueError as exc:
        raise InvalidConfigError(f"bad threshold number in {text!r}") from exc
    if step <= 0 or stop < start:
        raise InvalidConfigError(f"empty threshold range {text!r}")
    values = []
    k = 0
    while True:
        value = round(start + k * step, 10)
        if value > stop + 1e-9:
            break
        values.append(round(value, 4))
        k += 1
    return values


def _derive_labels(session: Session, threshold: float) -> list[list[int]]:
    """Predicted firing iteration for every detection of every record.

    New detections take their record's index; matched ones inherit the
    label of the accumulated detection they match, so a hole keeps its
    original iteration through later images.
    """
    labels_per_record: list[list[int]] = []
    accumulated = []
    accumulated_labels: list[int] = []
    for record in session.iterations:
        labels = [record.index] * len(record.detections)
        if accumulated:
            result = match_iterations(accumulated, record.detections, threshold)
            for prev_index, curr_index, _ in result.matched:
                labels[curr_index] = accumulated_labels[prev_index]
        for i in record.new_hole_indices:
            labels[i] = record.index
        labels_per_record.append(labels)
        accumulated.extend(record.detections)
        accumulated_labels.extend(labels)
    return labels_per_record


def _cmd_eval(args) -> int:
    pred_root = Path(args.pred)
    truth_root = Path(args.truth)
    truth_dirs = sorted(d for d in truth_root.iterdir() if (d / "truth.json").is_file())
    if not truth_dirs:
        raise SchemaViolationError(str(truth_root), "no sequence directories with truth.json")
    thresholds = (
        _parse_thresholds(args.thresholds) if args.thresholds else list(DEFAULT_AP_THRESHOLDS)
    )

    rows: list[ImageEval] = []
    for truth_dir in truth_dirs:
        session_path = pred_root / truth_dir.name / "session.json"
        if not session_path.is_file():
            raise SchemaViolationError(
                str(session_path), "prediction session missing for this sequence"
            )
        truth = load_ground_truth(truth_dir / "truth.json")
        session = load_session(session_path)
        labels_per_record = _derive_labels(session, DEFAULT_MATCH_THRESHOLD)
        by_basename = {
            Path(record.image_ref).name: (record, labels_per_record[i])
            for i, record in enumerate(session.iterations)
        }
        for meta in truth.images:
            visible = [
                (h.bbox, h.iteration) for h in truth.holes_through(meta.iteration)
            ]
            entry = by_basename.get(Path(meta.file).name)
            if entry is None:
                rows.append(
                    ImageEval(truth_dir.name, meta.iteration, segmented=False, truth=visible)
                )
                continue
            record, labels = entry
            rows.append(
                ImageEval(
                    target_id=truth_dir.name,
                    iteration=meta.iteration,
                    segmented=True,
                    detections=record.detections,
                    labels=labels,
                    truth=visible,
                )
            )

    report = compile_report(rows, thresholds)

    from .report import render_figures, write_report_csv, write_report_json

    report_path = Path(args.report)
    if str(report_path.parent):
        report_path.parent.mkdir(parents=True, exist_ok=True)
    write_report_json(report, report_path)
    write_report_csv(report, report_path.with_suffix(".csv"))
    if not args.no_figures:
        dataset = [(r.detections, [b for b, _ in r.truth]) for r in rows if r.segmented]
        render_figures(report, report_path.parent, dataset, stem=report_path.stem)

    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
        return EXIT_OK
    counts = report.counts
    print(f"evaluated {counts['images']} images / {counts['targets']} targets"
          f" / {counts['holes']} holes")
    print(f"  mAP50:                  {report.map50:.4f}")
    print(f"  mAP50-95:               {report.map50_95:.4f}")
    print(f"  Jaccard (new holes):    {report.jaccard_mean:.4f}")
    print(f"  iteration accuracy:     {report.iteration_classification_accuracy:.4f}")
    print(f"  segmentation accuracy:  {report.segmentation_accuracy:.4f}")
    print(f"  full pipeline accuracy: {report.full_pipeline_accuracy:.4f}")
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="zeroline", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic firing sequences")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--sequences", type=int, default=1)
    p.add_argument("--iters", type=int, default=2)
    p.add_argument("--holes-min", type=int, default=3)
    p.add_argument("--holes-max", type=int, default=4)
    p.add_argument("--radius", type=float, default=5.5)
    p.add_argument("--perspective", type=float, default=0.08)
    p.add_argument("--noise", type=float, default=4.0)
    p.add_argument("--offset-mm", type=float, nargs=2, default=(0.0, 0.0),
                   metavar=("DX", "DY"))
    p.add_argument("--size", type=int, default=800)
    p.add_argument("--mm-per-pixel", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("segment", help="register a photo to the canonical frame")
    p.add_argument("--image", required=True)
    p.add_argument("--template", required=True)
    p.add_argument("--out", help="write the normalized image here (PGM)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("detect", help="find bullet holes in a photo")
    p.add_argument("--image", required=True)
    p.add_argument("--template", required=True)
    p.add_argument("--detections-out", help="write a Detection-File here")
    p.add_argument("--min-area", type=int, default=BlobParams().min_area)
    p.add_argument("--max-area", type=int, default=BlobParams().max_area)
    p.add_argument("--min-circularity", type=float, default=BlobParams().min_circularity)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("track", help="append one firing iteration to a session")
    p.add_argument("--session", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--template", required=True)
    p.add_argument("--detections", help="external Detection-File instead of built-in detector")
    p.add_argument("--threshold", type=float, default=DEFAULT_MATCH_THRESHOLD)
    p.add_argument("--annotate", help="write an annotated normalized image here (PGM)")
    p.add_argument("--new", action="store_true", help="create the session first")
    p.add_argument("--session-id")
    p.add_argument("--distance-m", type=float, default=25.0)
    p.add_argument("--windage-moa", type=float, default=0.5,
                   help="MOA per windage click")
    p.add_argument("--elevation-moa", type=float, default=0.5,
                   help="MOA per elevation click")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_track)

    p = sub.add_parser("score", help="print group stats and adjustment for an iteration")
    p.add_argument("--session", required=True)
    p.add_argument("--iteration", type=int, help="defaults to the last one")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("eval", help="score predicted sessions against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--thresholds", help="AP IoU thresholds as start:step:stop")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SegmentationFailureError as exc:
        print(f"segmentation failed: {exc}", file=sys.stderr)
        for name, info in sorted(exc.diagnostics.items()):
            print(f"  {name}: {info}", file=sys.stderr)
        return EXIT_SEGMENTATION
    except (SchemaViolationError, InvalidConfigError, FrameMismatchError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ZerolineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
