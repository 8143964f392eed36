"""Luma image container, file I/O and non-overlapping patch tiling.

All metrics in the package operate on single-channel float64 intensities in
[0, 1]. Colour inputs are reduced to luma with the BT.601 weights on load.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DimensionError, ImageFormatError, ImageIOError, ImageSizeError

LUMA_WEIGHTS = (0.299, 0.587, 0.114)

_WRITE_FORMATS = {".png": "PNG", ".pgm": "PPM"}
_READ_FORMATS = {"PNG", "PPM"}


@dataclass(frozen=True)
class LumaImage:
    """Immutable single-channel image with samples in [0, 1].

    ``pixels`` is a read-only ``(height, width)`` float64 array; ``data`` gives
    the row-major flat view.
    """

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.array(self.pixels, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionError(f"expected a non-empty 2-D array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image contains non-finite samples")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError(
                f"samples must lie in [0, 1], got range [{arr.min()}, {arr.max()}]"
            )
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)

    @classmethod
    def from_array(cls, arr, clip: bool = False) -> "LumaImage":
        arr = np.asarray(arr, dtype=np.float64)
        if clip:
            arr = np.clip(arr, 0.0, 1.0)
        return cls(arr)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    @property
    def data(self) -> np.ndarray:
        return self.pixels.reshape(-1)

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.pixels
        return self.pixels.astype(dtype)


ImageLike = Union[LumaImage, np.ndarray]


def as_array(img: ImageLike) -> np.ndarray:
    """Return the float64 2-D sample array behind ``img``."""
    if isinstance(img, LumaImage):
        return img.pixels
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"expected a 2-D image, got shape {arr.shape}")
    return arr


def require_same_shape(a: np.ndarray, b: np.ndarray, what: str = "images") -> None:
    if a.shape != b.shape:
        raise DimensionError(
            f"{what} must have identical dimensions, got {a.shape[1]}x{a.shape[0]} "
            f"and {b.shape[1]}x{b.shape[0]} (width x height)"
        )


def _pnm_header(path: Path) -> tuple[str, int]:
    """Return (magic, maxval) of a PNM file, skipping ``#`` comments."""
    tokens: list[bytes] = []
    with open(path, "rb") as fh:
        head = fh.read(1024)
    magic = head[:2].decode("ascii", "replace")
    needed = 3 if magic in ("P2", "P5", "P3", "P6") else 2
    for line in head[2:].split(b"\n"):
        line = line.split(b"#", 1)[0]
        tokens.extend(line.split())
        if len(tokens) >= needed:
            break
    maxval = int(tokens[2]) if needed == 3 and len(tokens) >= 3 else 1
    return magic, maxval


def load_image(path: Union[str, os.PathLike]) -> LumaImage:
    """Read an 8-bit grayscale or RGB PNG/PGM/PPM file as luma in [0, 1].

    RGB is reduced with ``Y = 0.299 R + 0.587 G + 0.114 B`` before the division
    by 255. An alpha channel, if present, is ignored.
    """
    path = Path(path)
    try:
        with Image.open(path) as im:
            im.load()
            fmt, mode = im.format, im.mode
            if fmt not in _READ_FORMATS:
                raise ImageFormatError(f"{path}: unsupported container {fmt!r} (need PNG or PGM/PPM)")
            if fmt == "PPM":
                magic, maxval = _pnm_header(path)
                if magic not in ("P5", "P6"):
                    raise ImageFormatError(f"{path}: unsupported PNM variant {magic!r} (need binary P5/P6)")
                if maxval != 255:
                    raise ImageFormatError(f"{path}: unsupported maxval {maxval} (need 255)")
            if mode == "P":
                im = im.convert("RGBA" if "transparency" in im.info else "RGB")
                mode = im.mode
            if mode not in ("L", "LA", "RGB", "RGBA"):
                raise ImageFormatError(
                    f"{path}: unsupported pixel mode {mode!r} (need 8-bit grayscale or RGB)"
                )
            codes = np.asarray(im, dtype=np.float64)
    except FileNotFoundError as exc:
        raise ImageIOError(path, "no such file") from exc
    except UnidentifiedImageError as exc:
        raise ImageFormatError(f"{path}: not a recognised image file") from exc
    except OSError as exc:
        if isinstance(exc, ImageIOError):
            raise
        raise ImageIOError(path, exc.strerror or str(exc)) from exc

    if mode in ("L", "LA"):
        luma = codes if codes.ndim == 2 else codes[..., 0]
    else:
        r, g, b = codes[..., 0], codes[..., 1], codes[..., 2]
        wr, wg, wb = LUMA_WEIGHTS
        luma = wr * r + wg * g + wb * b
    return LumaImage(np.clip(luma / 255.0, 0.0, 1.0))


def quantize(img: ImageLike) -> np.ndarray:
    """Clamp to [0, 1] and map to 8-bit codes with round-half-up."""
    arr = np.clip(as_array(img), 0.0, 1.0)
    return np.floor(arr * 255.0 + 0.5).astype(np.uint8)


def save_image(img: ImageLike, path: Union[str, os.PathLike]) -> None:
    """Write ``img`` as an 8-bit grayscale PNG or binary PGM (by extension)."""
    path = Path(path)
    fmt = _WRITE_FORMATS.get(path.suffix.lower())
    if fmt is None:
        raise ImageFormatError(
            f"{path}: unsupported output extension {path.suffix!r} (use .png or .pgm)"
        )
    codes = quantize(img)
    try:
        Image.fromarray(codes, mode="L").save(path, format=fmt)
    except OSError as exc:
        raise ImageIOError(path, exc.strerror or str(exc)) from exc


@dataclass(frozen=True)
class PatchGrid:
    """Row-major grid of non-overlapping ``patch_size`` squares.

    Covers only the top-left ``rows*patch_size x cols*patch_size`` region;
    trailing partial strips are excluded.
    """

    patch_size: int
    rows: int
    cols: int
    height: int
    width: int

    @property
    def count(self) -> int:
        return self.rows * self.cols

    def origins(self) -> Iterator[tuple[int, int]]:
        """Yield the (y, x) top-left corner of each patch, row-major."""
        k = self.patch_size
        for r in range(self.rows):
            for c in range(self.cols):
                yield r * k, c * k

    def blocks(self, arr: np.ndarray, row_start: int = 0, row_stop: int | None = None) -> np.ndarray:
        """View ``arr`` as a ``(rows, cols, k, k)`` block array.

        ``row_start``/``row_stop`` select a band of patch rows.
        """
        if arr.shape != (self.height, self.width):
            raise DimensionError(
                f"array shape {arr.shape} does not match grid image {(self.height, self.width)}"
            )
        k = self.patch_size
        row_stop = self.rows if row_stop is None else row_stop
        band = arr[row_start * k: row_stop * k, : self.cols * k]
        return band.reshape(row_stop - row_start, k, self.cols, k).swapaxes(1, 2)


def tile(img: ImageLike, patch_size: int) -> PatchGrid:
    """Partition ``img`` into non-overlapping ``patch_size`` squares."""
    arr = as_array(img)
    if patch_size < 2:
        raise ImageSizeError(f"patch size must be at least 2, got {patch_size}")
    h, w = arr.shape
    rows, cols = h // patch_size, w // patch_size
    if rows < 1 or cols < 1:
        raise ImageSizeError(
            f"image {w}x{h} is smaller than one {patch_size}x{patch_size} patch "
            f"(need at least {patch_size}x{patch_size})"
        )
    return PatchGrid(patch_size, rows, cols, h, w)
