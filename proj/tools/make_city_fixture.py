"""Renders the bundled synthetic city-skyline test images.

    make_city_fixture.py OUT.png          128x128 image, seed 7
    make_city_fixture.py --desk DIR       six 64x64 images for the desk profile
"""
import os
import sys

import numpy as np
from PIL import Image

SIZE = 128


def render(seed: int = 7) -> np.ndarray:
    rng = np.random.default_rng(seed)
    img = np.zeros((SIZE, SIZE, 3), dtype=np.float64)
    rows = np.linspace(0.0, 1.0, SIZE)[:, None]
    top = np.array([40, 90, 170], dtype=np.float64)
    horizon = np.array([235, 170, 120], dtype=np.float64)
    img[:] = (top * (1 - rows) + horizon * rows)[:, None, :]

    yy, xx = np.mgrid[0:SIZE, 0:SIZE]
    sun = (yy - 38) ** 2 + (xx - 92) ** 2 < 9 ** 2
    img[sun] = [250, 230, 160]

    ground = 104
    x = 0
    while x < SIZE:
        w = int(rng.integers(8, 20))
        h = int(rng.integers(25, 80))
        shade = rng.uniform(35, 95)
        tint = rng.uniform(-12, 12, size=3)
        color = np.clip(shade + tint, 0, 255)
        img[ground - h:ground, x:x + w] = color
        lit = rng.uniform(0.3, 0.7)
        for wy in range(ground - h + 3, ground - 3, 5):
            for wx in range(x + 2, min(x + w - 2, SIZE - 1), 4):
                if rng.uniform() < lit:
                    img[wy:wy + 2, wx:wx + 2] = [245, 215, 120]
        x += w + int(rng.integers(0, 3))

    img[ground:] = [70, 70, 75]
    for lx in range(4, SIZE, 16):
        img[ground + 11:ground + 13, lx:lx + 8] = [225, 225, 210]
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def write_desk_set(out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    for i, seed in enumerate(range(11, 17)):
        img = Image.fromarray(render(seed)).resize((64, 64), Image.Resampling.BOX)
        img.save(os.path.join(out_dir, f"city_{i}.png"), optimize=False, compress_level=9)


if __name__ == "__main__":
    if len(sys.argv) > 2 and sys.argv[1] == "--desk":
        write_desk_set(sys.argv[2])
    else:
        out = sys.argv[1] if len(sys.argv) > 1 else "city128.png"
        Image.fromarray(render()).save(out, optimize=False, compress_level=9)
