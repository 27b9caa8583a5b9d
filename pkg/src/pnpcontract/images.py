"""Grayscale image plumbing: PGM I/O, bundled test data, synthetic textures.

Images are 2-D float64 arrays in [0, 1].  Values are clamped only when
exporting to PGM; iterates are never clamped mid-run.
"""

from __future__ import annotations

import importlib.resources
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .rng import Xoshiro256


def _circular_box_blur(img: np.ndarray, radius: int) -> np.ndarray:
    out = np.zeros_like(img)
    count = 0
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            out += np.roll(np.roll(img, dy, axis=0), dx, axis=1)
            count += 1
    return out / count


def synthetic_texture(height: int, width: int, seed: int = 0) -> np.ndarray:
    """Deterministic stripe-plus-noise texture with oriented structure.

    Built from a warped sinusoid (stripes at a couple of orientations, in
    the spirit of cloth-like test images) over smoothed noise octaves, so
    patches are distinct and kernel degrees vary across the image.
    """
    rng = Xoshiro256(seed)
    yy, xx = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    warp = _circular_box_blur(rng.uniform(-1.0, 1.0, (height, width)), 2)
    phase = 2.0 * np.pi * (0.18 * xx + 0.07 * yy) + 3.0 * warp
    stripes = 0.5 + 0.28 * np.sin(phase)
    blotch = _circular_box_blur(rng.uniform(-1.0, 1.0, (height, width)), 3)
    grain = 0.06 * rng.uniform(-1.0, 1.0, (height, width))
    img = stripes + 0.18 * blotch + grain
    lo, hi = img.min(), img.max()
    return 0.05 + 0.9 * (img - lo) / (hi - lo)


def load_bundled(name: str = "texture64") -> np.ndarray:
    """Load one of the plain-text matrices shipped with the package."""
    ref = importlib.resources.files("pnpcontract").joinpath(f"data/{name}.txt")
    with importlib.resources.as_file(ref) as path:
        if not path.exists():
            raise ConfigError(f"no bundled image named {name!r}")
        return np.loadtxt(path)


def median_filter3(img: np.ndarray) -> np.ndarray:
    """3x3 median filter with circular boundary."""
    shifts = [
        np.roll(np.roll(img, dy, axis=0), dx, axis=1)
        for dy in (-1, 0, 1)
        for dx in (-1, 0, 1)
    ]
    return np.median(np.stack(shifts, axis=0), axis=0)


def read_pgm(path) -> np.ndarray:
    """Read a P2/P5 PGM into floats in [0, 1] (linear scaling by maxval)."""
    data = Path(path).read_bytes()

    tokens = []
    i = 0
    while len(tokens) < 4:
        if i >= len(data):
            raise ConfigError(f"{path}: truncated PGM header")
        c = data[i : i + 1]
        if c == b"#":
            while i < len(data) and data[i : i + 1] != b"\n":
                i += 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j : j + 1].isspace():
                j += 1
            tokens.append(data[i:j])
            i = j
    magic, w_s, h_s, maxval_s = tokens
    if magic not in (b"P2", b"P5"):
        raise ConfigError(f"{path}: not a PGM (magic {magic!r})")
    width, height, maxval = int(w_s), int(h_s), int(maxval_s)
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise ConfigError(f"{path}: bad PGM dimensions/maxval")

    if magic == b"P2":
        values = np.array(data[i:].split(), dtype=np.int64)
    else:
        i += 1  # single whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.uint8
        values = np.frombuffer(data[i:], dtype=dtype, count=width * height).astype(np.int64)
    if values.size < width * height:
        raise ConfigError(f"{path}: PGM pixel data truncated")
    pixels = values[: width * height].reshape(height, width)
    return pixels.astype(float) / float(maxval)


def write_pgm(path, img: np.ndarray, maxval: int = 255, binary: bool = True) -> None:
    """Write floats in [0, 1] as PGM; values are clamped then rounded."""
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise ConfigError("write_pgm: 2-D grayscale image expected")
    quant = np.rint(np.clip(img, 0.0, 1.0) * maxval).astype(np.int64)
    height, width = img.shape
    if binary:
        header = f"P5\n{width} {height}\n{maxval}\n".encode("ascii")
        dtype = np.dtype(">u2") if maxval > 255 else np.uint8
        Path(path).write_bytes(header + quant.astype(dtype).tobytes())
    else:
        lines = [f"P2\n{width} {height}\n{maxval}"]
        lines += [" ".join(str(v) for v in row) for row in quant]
        Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")
