"""Command-line front end.

Machine-readable results go to stdout (or ``--out``); a short human summary
goes to stderr. Exit status is 0 on success, 1 on processing errors and 2 on
usage errors.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .errors import ParameterError, SharpMetricsError
from .evaluation import (
    METRICS,
    SWEEP_COLUMNS,
    EvalConfig,
    batch_evaluate,
    evaluate_pair,
    gamma_sweep,
    paired_t_test,
)
from .image import load_image, require_same_shape, save_image
from .omega import OmegaParams, compute_omega
from .reference import BASE_LOSSES, LossParams, composite_loss
from .report import read_column, write_patch_csv, write_table
from .sharpness import DEFAULT_CONFIDENCE, DEFAULT_PATCH_SIZE, compute_q
from .synth import DegradeSpec, SharpenSpec, degrade, read_config, unsharp_mask

log = logging.getLogger("sharpmetrics")


def _g6(value: float) -> str:
    return f"{value:.6g}"


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _metric_list(text: str) -> tuple[str, ...]:
    names = tuple(t.strip() for t in text.split(",") if t.strip())
    bad = [n for n in names if n not in METRICS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown metrics {bad}; choose from {','.join(METRICS)}")
    return names


# --- shared option groups -------------------------------------------------

def _q_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("sharpness Q")
    g.add_argument("--patch-size", type=int, default=DEFAULT_PATCH_SIZE, metavar="K",
                   help="Q patch size k in pixels")
    g.add_argument("--delta", type=float, default=DEFAULT_CONFIDENCE,
                   help="noise confidence for the coherence threshold (calibrated by Monte-Carlo)")
    g.add_argument("--threshold", type=float, default=None, metavar="TAU",
                   help="coherence threshold override (default: noise-calibrated for K and DELTA)")
    return p


def _omega_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("Omega")
    g.add_argument("--R", dest="R", type=float, default=5.0, help="sigmoid steepness R")
    g.add_argument("--alpha0", type=float, default=1.2, help="sigmoid midpoint alpha0")
    g.add_argument("--omega-patch-size", type=int, default=16, metavar="M",
                   help="Omega tile size m in pixels")
    g.add_argument("--alpha-cap", type=float, default=10.0,
                   help="deviation ratio assigned when texture appears on a flat reference tile")
    return p


def _common_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--out", type=Path, default=None, help="write machine-readable output here instead of stdout")
    p.add_argument("--threads", type=_positive_int, default=1, help="maximum worker count")
    return p


def _loss_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("composite loss")
    g.add_argument("--beta", type=float, default=0.1, help="weight of the sharpness term")
    g.add_argument("--lambda-freq", type=float, default=0.1, help="weight of the frequency loss in l1+freq")
    g.add_argument("--base", choices=BASE_LOSSES, default="l1", help="base loss")
    return p


def _metrics_option() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--metrics", type=_metric_list, default=METRICS,
                   help=f"comma-separated metrics to compute (default: {','.join(METRICS)})")
    return p


def _degrade_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("degradation")
    g.add_argument("--config", type=Path, default=None,
                   help="key = value file (kernel_size, sigma_blur, sigma_noise, seed); flags override it")
    g.add_argument("--kernel-size", type=int, default=None, help="odd blur kernel size K (default 9)")
    g.add_argument("--sigma-blur", type=float, default=None, help="Gaussian blur std in pixels (default 2.0)")
    g.add_argument("--sigma-noise", type=float, default=None,
                   help="additive noise std in [0,1] units (default 0.0)")
    g.add_argument("--seed", type=int, default=None, help="noise seed (default 0)")
    return p


def _sharpen_options(gamma_required: bool) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("sharpening")
    if gamma_required:
        g.add_argument("--config", type=Path, default=None,
                       help="key = value file (gamma, radius_sigma); flags override it")
        g.add_argument("--gamma", type=float, default=None, help="sharpening amount (default 1.0)")
    g.add_argument("--radius-sigma", type=float, default=None,
                   help="std of the unsharp-mask Gaussian (default 1.0)")
    return p


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(
        prog="sharpmetrics",
        description="Sharpness (Q) and ringing-aware (Omega) image quality measurements.",
        formatter_class=fmt,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    common, qopt, oopt = _common_options(), _q_options(), _omega_options()

    p = sub.add_parser("measure", parents=[common, qopt, oopt, _loss_options(), _metrics_option()],
                       formatter_class=fmt, help="all metrics for one reference/restored pair")
    p.add_argument("ref", type=Path, help="ground-truth image")
    p.add_argument("restored", type=Path, help="restored image")

    p = sub.add_parser("q", parents=[common, qopt], formatter_class=fmt,
                       help="no-reference sharpness Q of one image")
    p.add_argument("image", type=Path)
    p.add_argument("--patches-out", type=Path, default=None, help="write per-patch spectra CSV here")

    p = sub.add_parser("omega", parents=[common, oopt], formatter_class=fmt,
                       help="Omega of a pair; per-tile breakdown CSV on stdout")
    p.add_argument("ref", type=Path)
    p.add_argument("restored", type=Path)

    p = sub.add_parser("sweep", parents=[common, qopt, oopt, _sharpen_options(False)], formatter_class=fmt,
                       help="sharpen by each gamma and tabulate Q, PSNR and Omega")
    p.add_argument("image", type=Path)
    p.add_argument("--gammas", type=_float_list, default=[0.8, 1.3, 1.8, 2.5, 11.8, 13.8],
                   help="ascending comma-separated sharpening amounts")

    p = sub.add_parser("degrade", parents=[_degrade_options()], formatter_class=fmt,
                       help="Gaussian blur plus additive noise")
    p.add_argument("image", type=Path)
    p.add_argument("output", type=Path, help=".png or .pgm output path")

    p = sub.add_parser("sharpen", parents=[_sharpen_options(True)], formatter_class=fmt,
                       help="unsharp-mask sharpening")
    p.add_argument("image", type=Path)
    p.add_argument("output", type=Path, help=".png or .pgm output path")

    p = sub.add_parser("batch", parents=[common, qopt, oopt, _metrics_option()],
                       formatter_class=fmt, help="metric table for a manifest of pairs")
    p.add_argument("manifest", type=Path,
                   help="text file, one 'ref<TAB>restored' per line, '#' comments; "
                        "relative paths resolve against the manifest's directory")
    p.add_argument("--summary-out", type=Path, default=None, help="write per-metric mean/std/count CSV here")

    p = sub.add_parser("ttest", parents=[common], formatter_class=fmt,
                       help="two-sided paired t-test between two CSV columns")
    p.add_argument("csv", type=Path, nargs="+", help="one CSV holding both columns, or two CSVs")
    p.add_argument("--x", required=True, help="column for the first sample")
    p.add_argument("--y", default=None, help="column for the second sample (default: --x, read from the second CSV)")
    return parser


# --- helpers ----------------------------------------------------------------

def _eval_config(args) -> EvalConfig:
    radius = getattr(args, "radius_sigma", None)
    return EvalConfig(
        omega=_omega_params(args),
        q_patch_size=args.patch_size,
        q_delta=args.delta,
        q_threshold=args.threshold,
        radius_sigma=1.0 if radius is None else radius,
        metrics=getattr(args, "metrics", METRICS),
    )


def _omega_params(args) -> OmegaParams:
    return OmegaParams(R=args.R, alpha0=args.alpha0, m=args.omega_patch_size, alpha_cap=args.alpha_cap)


@contextlib.contextmanager
def _output(path: Optional[Path]):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _spec_values(args, keys: Sequence[str]) -> dict:
    values: dict = {}
    if getattr(args, "config", None) is not None:
        values.update(read_config(args.config))
    for key in keys:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return values


def read_manifest(path: Path) -> list[tuple[Path, Path]]:
    base = path.parent
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ParameterError(f"{path}:{lineno}: expected 'ref<TAB>restored', got {line!r}")
            pairs.append(tuple(base / p.strip() for p in parts))
    if not pairs:
        raise ParameterError(f"{path}: manifest lists no pairs")
    return pairs


# --- subcommands --------------------------------------------------------------

def cmd_measure(args) -> None:
    config = _eval_config(args)
    ref, rest = load_image(args.ref), load_image(args.restored)
    require_same_shape(ref.pixels, rest.pixels)
    row = {"id": str(args.restored)}
    row.update(evaluate_pair(ref, rest, config, args.threads))
    loss = LossParams(beta=args.beta, lambda_freq=args.lambda_freq, k=args.patch_size, threshold=config.threshold)
    row["composite_loss"] = composite_loss(ref, rest, args.base, loss)
    columns = ("id",) + tuple(m for m in METRICS if m in config.metrics) + ("composite_loss",)
    provenance = config.as_dict()
    provenance.update(beta=args.beta, lambda_freq=args.lambda_freq, base=args.base)
    with _output(args.out) as fh:
        write_table(fh, columns, [row], provenance)
    for col in columns[1:]:
        print(f"{col} = {_g6(row[col])}", file=sys.stderr)


def cmd_q(args) -> None:
    config = EvalConfig(q_patch_size=args.patch_size, q_delta=args.delta, q_threshold=args.threshold)
    res = compute_q(load_image(args.image), args.patch_size, config.threshold, args.threads)
    payload = {"q": res.q, "selected_count": res.selected_count, "total_count": res.total_count,
               "patch_size": res.patch_size, "threshold": res.threshold}
    with _output(args.out) as fh:
        fh.write(json.dumps(payload, sort_keys=True) + "\n")
    if args.patches_out is not None:
        cols = ("patch_row", "patch_col", "s1", "s2", "coherence", "q_patch", "selected")
        rows = ({"patch_row": p.row, "patch_col": p.col, "s1": p.s1, "s2": p.s2, "coherence": p.coherence,
                 "q_patch": p.q_patch, "selected": p.selected} for p in res.per_patch)
        with _output(args.patches_out) as fh:
            write_table(fh, cols, rows, {"patch_size": res.patch_size, "threshold": res.threshold})
    print(f"q = {_g6(res.q)}, selected {res.selected_count}/{res.total_count}", file=sys.stderr)


def cmd_omega(args) -> None:
    params = _omega_params(args)
    res = compute_omega(load_image(args.ref), load_image(args.restored), params, args.threads)
    provenance = {"R": params.R, "alpha0": params.alpha0, "m": params.m,
                  "psnr_cap": params.psnr_cap, "alpha_cap": params.alpha_cap}
    with _output(args.out) as fh:
        write_patch_csv(fh, res, provenance)
    print(f"omega = {_g6(res.omega)} over {res.grid.count} tiles", file=sys.stderr)


def cmd_sweep(args) -> None:
    config = _eval_config(args)
    rows = gamma_sweep(load_image(args.image), args.gammas, config, args.threads)
    provenance = config.as_dict()
    provenance["gammas"] = list(args.gammas)
    with _output(args.out) as fh:
        write_table(fh, SWEEP_COLUMNS, rows, provenance)
    for r in rows:
        print(f"gamma = {_g6(r['gamma'])}: q = {_g6(r['q'])}, psnr = {_g6(r['psnr'])}, "
              f"omega = {_g6(r['omega'])}", file=sys.stderr)


def cmd_degrade(args) -> None:
    spec = DegradeSpec.from_mapping(_spec_values(args, ("kernel_size", "sigma_blur", "sigma_noise", "seed")))
    save_image(degrade(load_image(args.image), spec), args.output)
    print(f"wrote {args.output} ({spec})", file=sys.stderr)


def cmd_sharpen(args) -> None:
    spec = SharpenSpec.from_mapping(_spec_values(args, ("gamma", "radius_sigma")))
    save_image(unsharp_mask(load_image(args.image), spec), args.output)
    print(f"wrote {args.output} ({spec})", file=sys.stderr)


def cmd_batch(args) -> None:
    config = _eval_config(args)
    pairs = read_manifest(args.manifest)
    report = batch_evaluate(pairs, config, workers=args.threads)
    with _output(args.out) as fh:
        write_table(fh, report.columns, report.rows, report.provenance)
    if args.summary_out is not None:
        rows = [dict(metric=name, **stats) for name, stats in report.summary.items()]
        with _output(args.summary_out) as fh:
            write_table(fh, ("metric", "mean", "std", "count"), rows, report.provenance)
    for name, stats in report.summary.items():
        print(f"{name}: mean = {_g6(stats['mean'])}, std = {_g6(stats['std'])}, n = {stats['count']}",
              file=sys.stderr)
    if report.failures:
        print(f"{len(report.failures)} of {len(report.rows)} pairs failed", file=sys.stderr)


def cmd_ttest(args) -> None:
    if len(args.csv) > 2:
        raise ParameterError("ttest takes one or two CSV files")
    with open(args.csv[0], encoding="utf-8") as fh:
        xs = read_column(fh, args.x)
    if len(args.csv) == 2:
        with open(args.csv[1], encoding="utf-8") as fh:
            ys = read_column(fh, args.y or args.x)
    else:
        if args.y is None:
            raise ParameterError("--y is required when only one CSV is given")
        with open(args.csv[0], encoding="utf-8") as fh:
            ys = read_column(fh, args.y)
    res = paired_t_test(xs, ys)
    payload = {"t_statistic": res.t_statistic, "degrees_of_freedom": res.degrees_of_freedom,
               "p_value": res.p_value, "mean_difference": res.mean_difference,
               "significant_at_5pct": res.significant_at_5pct}
    with _output(args.out) as fh:
        fh.write(json.dumps(payload, sort_keys=True) + "\n")
    verdict = "significant" if res.significant_at_5pct else "not significant"
    print(f"t = {_g6(res.t_statistic)}, df = {res.degrees_of_freedom}, p = {_g6(res.p_value)} ({verdict} at 5%)",
          file=sys.stderr)


COMMANDS = {
    "measure": cmd_measure, "q": cmd_q, "omega": cmd_omega, "sweep": cmd_sweep,
    "degrade": cmd_degrade, "sharpen": cmd_sharpen, "batch": cmd_batch, "ttest": cmd_ttest,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (SharpMetricsError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
