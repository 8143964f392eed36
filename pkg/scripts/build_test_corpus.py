"""Regenerate the 128x128 natural-image crops under tests/data/.

Sources are the sample photographs shipped with scikit-image. Colour sources
are stored as RGB PNG so the luma conversion path is exercised on load.
"""
from pathlib import Path

import numpy as np
import skimage.data
from PIL import Image

SOURCES = [
    "astronaut", "brick", "camera", "chelsea", "clock", "coffee", "coins",
    "grass", "gravel", "hubble_deep_field", "immunohistochemistry", "moon",
    "page", "rocket", "text",
]
SIZE = 128
OUT = Path(__file__).resolve().parent.parent / "tests" / "data"


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name in SOURCES:
        img = np.asarray(getattr(skimage.data, name)())
        h, w = img.shape[:2]
        y, x = (h - SIZE) // 2, (w - SIZE) // 2
        crop = np.ascontiguousarray(img[y: y + SIZE, x: x + SIZE])
        Image.fromarray(crop).save(OUT / f"{name}.png")
        print(name, crop.shape)


if __name__ == "__main__":
    main()
