"""Regenerate the grayscale PGM fixtures from scikit-image sample data."""

from pathlib import Path

import numpy as np
from skimage import color, data, io, transform

ROOT = Path(__file__).resolve().parent.parent / "crates" / "deepdenoise" / "tests" / "fixtures"

TEST = ["camera", "astronaut", "coffee", "chelsea", "moon"]
TRAIN = ["rocket.jpg", "motorcycle_left.png", "hubble_deep_field.jpg", "retina.jpg",
         "gravel.png", "brick.png", "grass.png", "cell.png"]
DATA_DIR = Path(data.__file__).parent


def gray(name):
    img = getattr(data, name)() if "." not in name else io.imread(DATA_DIR / name)
    if img.ndim == 3:
        img = color.rgb2gray(img[..., :3])
    else:
        img = img.astype(np.float64) / 255.0
    return img


def crop(img, size):
    h, w = img.shape
    if min(h, w) < size:
        img = transform.resize(img, (max(size, h), max(size, w)), anti_aliasing=True)
        h, w = img.shape
    r, c = (h - size) // 2, (w - size) // 2
    return img[r : r + size, c : c + size]


def save_pgm(path, img):
    px = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    h, w = px.shape
    path.write_bytes(b"P5\n%d %d\n255\n" % (w, h) + px.tobytes())


def main():
    for sub in ("train", "test"):
        (ROOT / sub).mkdir(parents=True, exist_ok=True)
    for name in TEST:
        save_pgm(ROOT / "test" / f"{name}.pgm", crop(gray(name), 256))
    for name in TRAIN:
        save_pgm(ROOT / "train" / f"{Path(name).stem}.pgm", crop(gray(name), 128))


if __name__ == "__main__":
    main()
