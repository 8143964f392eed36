"""Corpus-level evaluation: per-pair metric tables, gamma sweeps and paired t-tests."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import betainc

from .errors import ParameterError, SampleSizeError, SharpMetricsError
from .image import ImageLike, as_array, load_image, require_same_shape
from .omega import OmegaParams, compute_omega
from .reference import freq_loss, l1_loss, psnr, ssim
from .sharpness import DEFAULT_CONFIDENCE, DEFAULT_PATCH_SIZE, compute_q, resolve_threshold
from .synth import SharpenSpec, unsharp_mask

log = logging.getLogger(__name__)

METRICS = ("psnr", "ssim", "q_ref", "q_rest", "omega", "l1", "freq_loss")
REPORT_COLUMNS = ("id",) + METRICS + ("error",)
SWEEP_COLUMNS = ("gamma", "q", "psnr", "omega")


@dataclass(frozen=True)
class EvalConfig:
    """Every parameter that influences a metric value."""

    omega: OmegaParams = OmegaParams()
    q_patch_size: int = DEFAULT_PATCH_SIZE
    q_delta: float = DEFAULT_CONFIDENCE
    q_threshold: Optional[float] = None
    radius_sigma: float = 1.0
    metrics: tuple[str, ...] = METRICS

    def __post_init__(self):
        unknown = [m for m in self.metrics if m not in METRICS]
        if unknown:
            raise ParameterError(f"unknown metrics {unknown}; choose from {list(METRICS)}")

    @property
    def threshold(self) -> float:
        return resolve_threshold(self.q_patch_size, self.q_delta, self.q_threshold)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["metrics"] = list(self.metrics)
        d["q_threshold_used"] = self.threshold
        return d


def evaluate_pair(ref: ImageLike, rest: ImageLike, config: EvalConfig = EvalConfig(), threads: int = 1) -> dict:
    """All enabled metrics for one (reference, restored) pair."""
    a, b = as_array(ref), as_array(rest)
    require_same_shape(a, b)
    wanted = set(config.metrics)
    row: dict = {}
    if "psnr" in wanted:
        row["psnr"] = psnr(a, b)
    if "ssim" in wanted:
        row["ssim"] = ssim(a, b)
    if "q_ref" in wanted:
        row["q_ref"] = compute_q(a, config.q_patch_size, config.threshold, threads).q
    if "q_rest" in wanted:
        row["q_rest"] = compute_q(b, config.q_patch_size, config.threshold, threads).q
    if "omega" in wanted:
        row["omega"] = compute_omega(a, b, config.omega, threads).omega
    if "l1" in wanted:
        row["l1"] = l1_loss(a, b)
    if "freq_loss" in wanted:
        row["freq_loss"] = freq_loss(a, b)
    return row


@dataclass
class MetricReport:
    rows: list[dict]
    summary: dict[str, dict[str, float]]
    provenance: dict = field(default_factory=dict)

    @property
    def failures(self) -> list[dict]:
        return [r for r in self.rows if r.get("error")]

    @property
    def columns(self) -> tuple[str, ...]:
        enabled = set(self.provenance.get("metrics", METRICS))
        return ("id",) + tuple(m for m in METRICS if m in enabled) + ("error",)


class BatchError(SharpMetricsError):
    """Raised when no pair of a batch could be evaluated."""


def summarize(rows: Sequence[dict], metrics: Sequence[str]) -> dict[str, dict[str, float]]:
    """Mean, sample standard deviation and count per metric over successful rows."""
    out = {}
    for name in metrics:
        vals = [r[name] for r in rows if not r.get("error") and name in r]
        n = len(vals)
        if n == 0:
            out[name] = {"mean": math.nan, "std": math.nan, "count": 0}
            continue
        if any(math.isinf(v) for v in vals):
            # only PSNR of identical pairs produces this (+inf)
            out[name] = {"mean": math.inf, "std": math.nan, "count": n}
            continue
        mean = math.fsum(vals) / n
        std = math.sqrt(math.fsum((v - mean) ** 2 for v in vals) / (n - 1)) if n > 1 else 0.0
        out[name] = {"mean": mean, "std": std, "count": n}
    return out


def _evaluate_job(job):
    ident, ref_path, rest_path, config = job
    row = {"id": ident}
    try:
        row.update(evaluate_pair(load_image(ref_path), load_image(rest_path), config))
        row["error"] = ""
    except (SharpMetricsError, OSError, ValueError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def batch_evaluate(
    pairs: Sequence[tuple[str, str]],
    config: EvalConfig = EvalConfig(),
    workers: int = 1,
    ids: Optional[Sequence[str]] = None,
) -> MetricReport:
    """Evaluate every (reference path, restored path) pair.

    Rows come back in input order whatever ``workers`` is. A pair that fails
    to load or has mismatched shapes yields a row with ``error`` set; the
    batch only fails when every pair does.
    """
    if not pairs:
        raise ParameterError("batch needs at least one pair")
    ids = list(ids) if ids is not None else [str(rest) for _, rest in pairs]
    # resolve once here so worker processes never recalibrate
    config_resolved = EvalConfig(config.omega, config.q_patch_size, config.q_delta,
                                 config.threshold, config.radius_sigma, config.metrics)
    jobs = [(i, str(r), str(t), config_resolved) for i, (r, t) in zip(ids, pairs)]
    if workers <= 1 or len(jobs) == 1:
        rows = [_evaluate_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            rows = list(pool.map(_evaluate_job, jobs))
    for row in rows:
        if row["error"]:
            log.warning("pair %s failed: %s", row["id"], row["error"])
    if all(row["error"] for row in rows):
        raise BatchError(f"all {len(rows)} pairs failed; first error: {rows[0]['error']}")
    provenance = config.as_dict()
    return MetricReport(rows, summarize(rows, config.metrics), provenance)


def gamma_sweep(
    img: ImageLike,
    gammas: Sequence[float],
    config: EvalConfig = EvalConfig(),
    threads: int = 1,
) -> list[dict]:
    """Sharpen ``img`` by each gamma and measure Q, PSNR and Omega against the original."""
    if len(gammas) == 0:
        raise ParameterError("gamma list must not be empty")
    if any(g1 < g0 for g0, g1 in zip(gammas, gammas[1:])):
        raise ParameterError(f"gammas must be sorted ascending, got {list(gammas)}")
    original = as_array(img)
    tau = config.threshold
    rows = []
    for g in gammas:
        sharp = unsharp_mask(original, SharpenSpec(float(g), config.radius_sigma)).pixels
        rows.append({
            "gamma": float(g),
            "q": compute_q(sharp, config.q_patch_size, tau, threads).q,
            "psnr": psnr(original, sharp),
            "omega": compute_omega(original, sharp, config.omega, threads).omega,
        })
    return rows


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    degrees_of_freedom: int
    p_value: float
    mean_difference: float

    @property
    def significant_at_5pct(self) -> bool:
        return self.p_value < 0.05


def t_two_sided_p(t: float, df: int) -> float:
    """Two-sided Student-t tail probability via the regularised incomplete beta."""
    if math.isnan(t):
        return math.nan
    if math.isinf(t):
        return 0.0
    return float(betainc(0.5 * df, 0.5, df / (df + t * t)))


def paired_t_test(xs: Sequence[float], ys: Sequence[float]) -> TTestResult:
    """Two-sided paired t-test on ``xs - ys``.

    Exactly zero differences give ``t = 0, p = 1``; constant non-zero
    differences give an infinite ``t`` and ``p = 0``.
    """
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise SampleSizeError(f"paired samples must be equal-length vectors, got {x.shape} and {y.shape}")
    n = x.size
    if n < 2:
        raise SampleSizeError(f"paired t-test needs at least 2 pairs, got {n}")
    d = x - y
    df = n - 1
    mean = math.fsum(d.tolist()) / n
    if not np.any(d):
        return TTestResult(0.0, df, 1.0, 0.0)
    sd = math.sqrt(math.fsum(((d - mean) ** 2).tolist()) / df)
    if sd == 0:
        t = math.copysign(math.inf, mean)
    else:
        t = mean / (sd / math.sqrt(n))
    return TTestResult(t, df, t_two_sided_p(t, df), mean)
