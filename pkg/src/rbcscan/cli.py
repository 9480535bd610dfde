"""Command-line interface.

Subcommands reproduce the package's tables as CSV on stdout or to a
file: ``eval`` scores detection files against annotations, ``analytic``
sweeps the expected-scan-time curves over AP, ``simulate`` runs the
Monte Carlo comparison from a scenario file, ``geometry`` tabulates
projected receiver sizes, and ``augment`` mirror-doubles an annotation
file. Exit codes: 0 success, 1 file or schema error, 2 invariant
violation, 3 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from pathlib import Path

from . import formats, geometry, metrics, scanning
from .errors import DomainError, SchemaError, UsageError

_DEFAULT_DISTANCES_CM = (120.0, 200.0, 250.0, 350.0)
_DEFAULT_RESOLUTIONS = ((1280, 720), (640, 360))


def _fmt(x: float) -> str:
    return format(x, ".12g")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit(2); we want exit 3
        raise UsageError(message)


def _csv_text(header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _write_output(text: str, output: str | None) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8")


def _parse_float_list(raw: str, flag: str) -> list[float]:
    try:
        values = [float(part) for part in raw.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"{flag}: expected comma-separated numbers, got {raw!r}") from None
    if not values:
        raise UsageError(f"{flag}: expected at least one value")
    return values


def _parse_resolutions(raw: str) -> list[tuple[int, int]]:
    out = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            w, h = part.split("x")
            out.append((int(w), int(h)))
        except ValueError:
            raise UsageError(f"--resolutions: expected WxH entries, got {part!r}") from None
    if not out:
        raise UsageError("--resolutions: expected at least one WxH entry")
    return out


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_eval(args: argparse.Namespace) -> int:
    gts = formats.parse_annotations(Path(args.ground_truth).read_text(encoding="utf-8"))
    dets = formats.parse_detections(Path(args.detections).read_text(encoding="utf-8"))
    thresholds = (
        _parse_float_list(args.thresholds, "--thresholds")
        if args.thresholds
        else list(metrics.STANDARD_IOU_THRESHOLDS)
    )
    result = metrics.evaluate(
        dets.detections, gts.objects, thresholds, small_cutoff_px=args.small_cutoff
    )
    rows = [["ap", _fmt(t), _fmt(ap)] for t, ap in result.ap_per_threshold.items()]
    rows.append(["map", "", _fmt(result.map_value)])
    rows.append(["ap_small", "0.5", _fmt(result.ap_small)])
    _write_output(_csv_text(["metric", "iou_threshold", "value"], rows), args.output)
    return 0


def _ap_grid(start: float, stop: float, step: float) -> list[float]:
    if not 0.0 <= start <= 1.0 or not 0.0 <= stop <= 1.0:
        raise UsageError("AP sweep bounds must lie within [0, 1]")
    if stop < start:
        raise UsageError(f"--ap-stop ({stop}) must be >= --ap-start ({start})")
    if start == stop:
        return [round(start, 10)]
    if step <= 0:
        raise UsageError(f"--ap-step must be > 0, got {step}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 10) for i in range(count)]


def cmd_analytic(args: argparse.Namespace) -> int:
    base = scanning.ScanConfig(
        n_cells=args.n_cells, t_scan_s=args.t_scan, t_detect_s=args.t_detect, ap=0.0
    )
    t1 = scanning.t1_analytic(base)
    rows = []
    for ap in _ap_grid(args.ap_start, args.ap_stop, args.ap_step):
        cfg = scanning.ScanConfig(
            n_cells=base.n_cells, t_scan_s=base.t_scan_s, t_detect_s=base.t_detect_s, ap=ap
        )
        rows.append(["curve", _fmt(ap), _fmt(t1), _fmt(scanning.t2_analytic(cfg))])
    ap_star, in_range = scanning.breakeven_ap(base)
    star_cfg = scanning.ScanConfig(
        n_cells=base.n_cells, t_scan_s=base.t_scan_s, t_detect_s=base.t_detect_s, ap=ap_star
    )
    kind = "breakeven" if in_range else "breakeven_clamped"
    rows.append([kind, _fmt(ap_star), _fmt(t1), _fmt(scanning.t2_analytic(star_cfg))])
    _write_output(_csv_text(["kind", "ap", "t1_s", "t2_s"], rows), args.output)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    scenario = formats.parse_scenario(Path(args.scenario).read_text(encoding="utf-8"))
    trials = args.trials if args.trials is not None else scenario.trials
    seed = args.seed if args.seed is not None else scenario.seed
    rows = []
    for name, summary in (
        ("traditional", scanning.simulate_traditional(scenario.scan, seed, trials)),
        ("guided", scanning.simulate_guided(scenario.scan, seed, trials)),
    ):
        rel = abs(summary.mean_time_s - summary.analytic_time_s) / summary.analytic_time_s
        rows.append(
            [
                name,
                str(summary.trials),
                _fmt(summary.mean_time_s),
                _fmt(summary.stderr_s),
                _fmt(summary.analytic_time_s),
                _fmt(rel),
            ]
        )
    header = ["strategy", "trials", "mean_s", "stderr_s", "analytic_s", "relative_error"]
    _write_output(_csv_text(header, rows), args.output)
    return 0


def cmd_geometry(args: argparse.Namespace) -> int:
    if args.focal_px is not None and args.calibrate is not None:
        raise UsageError("--focal-px and --calibrate are mutually exclusive")
    if args.calibrate is not None:
        obj_cm, dist_cm, obs_px = args.calibrate
        focal = geometry.calibrate_focal(obj_cm, dist_cm, obs_px)
    elif args.focal_px is not None:
        focal = args.focal_px
    else:
        focal = geometry.calibrate_focal(14.0, 120.0, 124.0)
    cam = geometry.CameraModel(focal_px=focal, ref_width=args.ref_width, ref_height=args.ref_height)
    spec = geometry.ReceiverSpec(
        width_cm=args.receiver_width_cm, height_cm=args.receiver_height_cm
    )
    distances = (
        _parse_float_list(args.distances, "--distances")
        if args.distances
        else list(_DEFAULT_DISTANCES_CM)
    )
    resolutions = (
        _parse_resolutions(args.resolutions) if args.resolutions else list(_DEFAULT_RESOLUTIONS)
    )
    rows = []
    for dist in distances:
        for w, h in resolutions:
            size = geometry.project_size(cam, spec, dist, w, h)
            ok = geometry.is_detectable(size, args.min_width_px, args.min_height_px)
            rows.append(
                [
                    _fmt(dist),
                    f"{w}x{h}",
                    str(round(size.w_px)),
                    str(round(size.h_px)),
                    str(ok).lower(),
                ]
            )
    header = ["distance_cm", "resolution", "width_px", "height_px", "detectable"]
    _write_output(_csv_text(header, rows), args.output)
    return 0


def cmd_augment(args: argparse.Namespace) -> int:
    af = formats.parse_annotations(Path(args.annotations).read_text(encoding="utf-8"))
    widths = {im.image_id: im.width for im in af.images}
    # Derived ids get a _flip suffix, extended until unique so re-running on
    # already-augmented output keeps quadrupling instead of colliding.
    used: set = {im.image_id for im in af.images}
    derived: dict = {}
    for im in af.images:
        candidate = f"{im.image_id}_flip"
        while candidate in used:
            candidate += "_flip"
        used.add(candidate)
        derived[im.image_id] = candidate
    flipped_images = [
        formats.ImageInfo(image_id=derived[im.image_id], width=im.width, height=im.height)
        for im in af.images
    ]
    flipped_objects = []
    for gt in af.objects:
        mirrored = metrics.flip_augment(gt, widths[gt.image_id])
        flipped_objects.append(
            metrics.GroundTruthObject(
                image_id=derived[gt.image_id],
                bbox=mirrored.bbox,
                class_label=mirrored.class_label,
            )
        )
    doubled = formats.AnnotationFile(
        images=af.images + tuple(flipped_images),
        objects=af.objects + tuple(flipped_objects),
        split=af.split,
    )
    _write_output(formats.emit_annotations(doubled), args.output)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="rbcscan",
        description="Detection-guided beam-charging scan models, metrics, and geometry tables.",
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("eval", parents=[], help="score a detection file against annotations")
    p.add_argument("--ground-truth", required=True, help="annotation file (JSON)")
    p.add_argument("--detections", required=True, help="detection file (JSON)")
    p.add_argument("--thresholds", help="comma-separated IoU thresholds (default 0.50..0.95)")
    p.add_argument("--small-cutoff", type=float, default=metrics.SMALL_OBJECT_CUTOFF_PX,
                   help="side length in px below which ground truth counts as small")
    p.add_argument("--output", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("analytic", help="expected scan time vs AP (CSV curve)")
    p.add_argument("--n-cells", type=int, default=64)
    p.add_argument("--t-scan", type=float, default=2.0, help="seconds per cell scan")
    p.add_argument("--t-detect", type=float, default=0.2, help="detector seconds per image")
    p.add_argument("--ap-start", type=float, default=0.0)
    p.add_argument("--ap-stop", type=float, default=1.0)
    p.add_argument("--ap-step", type=float, default=0.05)
    p.add_argument("--output", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("simulate", help="Monte Carlo comparison of both strategies")
    p.add_argument("--scenario", required=True, help="scenario file (JSON)")
    p.add_argument("--trials", type=int, help="override the scenario's trial count")
    p.add_argument("--seed", type=int, help="override the scenario's RNG seed")
    p.add_argument("--output", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("geometry", help="projected receiver sizes and detectability")
    p.add_argument("--focal-px", type=float, help="focal length in px at the reference resolution")
    p.add_argument("--calibrate", type=float, nargs=3, metavar=("OBJ_CM", "DIST_CM", "OBS_PX"),
                   help="derive the focal length from one observation")
    p.add_argument("--ref-width", type=int, default=1280)
    p.add_argument("--ref-height", type=int, default=720)
    p.add_argument("--receiver-width-cm", type=float, default=14.0)
    p.add_argument("--receiver-height-cm", type=float, default=7.0)
    p.add_argument("--distances", help="comma-separated distances in cm (default 120,200,250,350)")
    p.add_argument("--resolutions", help="comma-separated WxH list (default 1280x720,640x360)")
    p.add_argument("--min-width-px", type=float, default=geometry.MIN_DETECTABLE_W_PX)
    p.add_argument("--min-height-px", type=float, default=geometry.MIN_DETECTABLE_H_PX)
    p.add_argument("--output", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_geometry)

    p = sub.add_parser("augment", help="mirror-double an annotation file")
    p.add_argument("--annotations", required=True, help="annotation file (JSON)")
    p.add_argument("--output", help="write the doubled file here instead of stdout")
    p.set_defaults(func=cmd_augment)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "func", None) is None:
            raise UsageError("a subcommand is required (eval, analytic, simulate, geometry, augment)")
        return args.func(args)
    except SchemaError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except DomainError as e:  # includes invariant violations from parsed files
        print(f"error: {e}", file=sys.stderr)
        return 2
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
