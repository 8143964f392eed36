"""Sharpness (Q) and ringing-aware full-reference (Omega) image quality metrics."""

__version__ = "0.1.0"

from .errors import (
    DimensionError,
    ImageFormatError,
    ImageIOError,
    ImageSizeError,
    ParameterError,
    SampleSizeError,
    SharpMetricsError,
)
from .evaluation import (
    EvalConfig,
    MetricReport,
    TTestResult,
    batch_evaluate,
    evaluate_pair,
    gamma_sweep,
    paired_t_test,
)
from .image import LumaImage, PatchGrid, load_image, save_image, tile
from .omega import (
    OmegaParams,
    OmegaResult,
    PatchOmega,
    clipped_psnr,
    compute_omega,
    deviation_ratio,
    patch_q,
    weight,
)
from .reference import LossParams, composite_loss, freq_loss, l1_loss, mse, psnr, ssim
from .sharpness import (
    PatchSpectrum,
    QResult,
    calibrate_threshold,
    compute_q,
    gradient_field,
    patch_spectrum,
)
from .synth import DegradeSpec, SharpenSpec, add_noise, degrade, gaussian_blur, unsharp_mask
