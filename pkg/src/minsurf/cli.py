"""Command-line interface: ``minsurf degrade|restore|metrics|bench``."""

import argparse
import json
import logging
import math
import sys
from importlib import resources

from . import bench
from .degrade import DegradeSpec, degrade, normalize
from .imageio import FormatError, preview_path, read_image, write_grid, write_pgm
from .metrics import snr, ssim
from .model import ModelParams, StopRule
from .solvers import DUAL_STEPS, METHODS, STEP_PRODUCT_BOUND, SolverConfig, SolverError, solve
from .spectral import BlurSpec, spectrum_for


def default_scenario_file():
    return str(resources.files("minsurf") / "data" / "default.ini")


def _blur(parser, args):
    if args.blur_hsize is None:
        if args.blur_sigma is not None:
            parser.error("--blur-sigma requires --blur-hsize")
        return BlurSpec()
    if args.blur_hsize < 1 or args.blur_hsize % 2 == 0:
        parser.error(f"--blur-hsize must be an odd positive integer, got {args.blur_hsize}")
    if args.blur_sigma is None or not args.blur_sigma > 0:
        parser.error("--blur-sigma must be given and positive when --blur-hsize is set")
    return BlurSpec(args.blur_hsize, args.blur_sigma)


def _add_blur(p):
    p.add_argument("--blur-hsize", type=int, help="odd Gaussian kernel support (omit for no blur)")
    p.add_argument("--blur-sigma", type=float, help="Gaussian kernel standard deviation in pixels")


def _add_preview(p):
    p.add_argument("--no-preview", action="store_true", help="skip the 8-bit .preview.pgm")


def _fmt_snr(value):
    return "inf" if value == math.inf else f"{value:.6f}"


def cmd_degrade(parser, args):
    blur = _blur(parser, args)
    if args.sigma < 0:
        parser.error("--sigma must be nonnegative")
    if args.seed < 0 or args.seed >= 2 ** 64:
        parser.error("--seed must be an unsigned 64-bit integer")
    spec = DegradeSpec(args.sigma, blur, args.seed)
    clean = normalize(read_image(args.input))
    if not blur.is_identity and blur.hsize > min(clean.shape):
        parser.error(f"--blur-hsize {blur.hsize} exceeds the image size {clean.shape}")
    f = degrade(spec, clean)
    write_grid(args.output, f)
    if not args.no_preview:
        write_pgm(preview_path(args.output), f)
    print(f"degraded {args.input} ({clean.shape[1]}x{clean.shape[0]}): "
          f"sigma={spec.noise_sigma:g} blur={blur} seed={spec.seed} -> {args.output}")
    return 0


def cmd_restore(parser, args):
    method = args.method
    if args.alpha == 0 and method != "pdm":
        parser.error(f"--alpha 0 is only allowed with pdm: {method} evaluates "
                     "div(grad u / sqrt(|grad u|^2 + alpha)), which is singular at alpha = 0")
    if args.alpha < 0 or not args.lam > 0:
        parser.error("--lambda must be positive and --alpha nonnegative")
    if method == "pdm" and not args.tau * args.sigma_step < STEP_PRODUCT_BOUND:
        parser.error(f"step contract violated: tau*sigma_step = {args.tau * args.sigma_step:g}, "
                     "must be < 1/8 for convergence")
    blur = _blur(parser, args)
    try:
        config = SolverConfig(
            ModelParams(args.lam, args.alpha),
            StopRule(args.rel_tol, args.max_iter),
            tau=args.tau,
            sigma_step=args.sigma_step,
            dt=args.dt,
            cg_tol=args.cg_tol,
            cg_max_iter=args.cg_max_iter,
            dual_step=args.dual_step,
        )
    except ValueError as exc:
        parser.error(str(exc))
    f = read_image(args.input)
    height, width = f.shape
    if not blur.is_identity and blur.hsize > min(width, height):
        parser.error(f"--blur-hsize {blur.hsize} exceeds the image size {f.shape}")
    report = solve(method, config, spectrum_for(blur, width, height), f)
    write_grid(args.output, report.final_u)
    if not args.no_preview:
        write_pgm(preview_path(args.output), report.final_u)
    metrics = None
    if args.reference:
        ref = read_image(args.reference)
        metrics = {"snr": snr(ref, report.final_u), "ssim": ssim(ref, report.final_u)}
    status = "converged" if report.converged else "stopped at cap"
    print(f"{method}: iterations={report.iterations} converged={report.converged} ({status}) "
          f"time={report.wall_time_seconds:.4f}s")
    if metrics:
        print(f"SNR_dB={_fmt_snr(metrics['snr'])} SSIM={metrics['ssim']:.6f}")
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.report:
        doc = {
            "method": method,
            "input": args.input,
            "blur": str(blur),
            "config": config.as_dict(),
            "iterations": report.iterations,
            "converged": report.converged,
            "energy_trace": report.energy_trace,
            "rel_change_trace": report.rel_change_trace,
            "wall_time_seconds": report.wall_time_seconds,
            "warnings": report.warnings,
        }
        if metrics:
            doc["metrics"] = metrics
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    return 0


def cmd_metrics(parser, args):
    ref = read_image(args.reference)
    test = read_image(args.input)
    if ref.shape != test.shape:
        print(f"minsurf: error: dimension mismatch {ref.shape} vs {test.shape}", file=sys.stderr)
        return 1
    print(f"SNR_dB={_fmt_snr(snr(ref, test))} SSIM={ssim(ref, test):.6f}")
    return 0


def cmd_bench(parser, args):
    path = args.input or default_scenario_file()
    try:
        scenarios = bench.load_scenarios(path)
    except bench.ScenarioError as exc:
        print(f"minsurf: error: {path}: {exc}", file=sys.stderr)
        return 1
    results = bench.run_scenarios(scenarios, jobs=args.jobs, parallel_methods=args.parallel_methods)
    table = bench.emit_table(results, args.format)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(table)
    else:
        sys.stdout.write(table)
    return 0 if all(r.ok for r in results) else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="minsurf", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("degrade", help="normalize an image, blur it and add Gaussian noise")
    p.add_argument("--input", required=True, help="P5 PGM or GridFile")
    p.add_argument("--output", required=True, help="GridFile to write")
    p.add_argument("--sigma", type=float, default=0.0, help="noise std-dev on the [0,255] scale")
    p.add_argument("--seed", type=int, default=0)
    _add_blur(p)
    _add_preview(p)
    p.set_defaults(func=cmd_degrade, parser=p)

    p = sub.add_parser("restore", help="restore a degraded GridFile")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--method", choices=METHODS, default="pdm")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--tau", type=float, default=0.35)
    p.add_argument("--sigma-step", type=float, default=0.35)
    p.add_argument("--dt", type=float, default=None, help="TMM step (default 0.2/(lambda + 4/sqrt(alpha)))")
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--rel-tol", type=float, default=1e-5)
    p.add_argument("--cg-tol", type=float, default=1e-6)
    p.add_argument("--cg-max-iter", type=int, default=200)
    p.add_argument("--dual-step", choices=DUAL_STEPS, default="prox")
    p.add_argument("--reference", help="clean image for SNR/SSIM")
    p.add_argument("--report", help="write a JSON run report here")
    _add_blur(p)
    _add_preview(p)
    p.set_defaults(func=cmd_restore, parser=p)

    p = sub.add_parser("metrics", help="SNR and SSIM of --input against --reference")
    p.add_argument("--reference", required=True)
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_metrics, parser=p)

    p = sub.add_parser("bench", help="run a scenario file and print the comparison table")
    p.add_argument("--input", help="scenario file (default: the shipped synthetic benchmark)")
    p.add_argument("--format", choices=("text", "csv", "json"), default="text")
    p.add_argument("--output", help="write the table here instead of stdout")
    p.add_argument("--jobs", type=int, default=1, help="scenarios to run concurrently")
    p.add_argument("--parallel-methods", action="store_true",
                   help="run methods of a scenario concurrently (distorts timings)")
    p.set_defaults(func=cmd_bench, parser=p)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args.parser, args)
    except (OSError, FormatError, SolverError, ValueError) as exc:
        print(f"minsurf: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
