"""8-bit grayscale PNG/PGM ingestion and 16-bit gradient dumps."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Tuple

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ImageFormatError, ParameterError

IMAGE_SUFFIXES = (".png", ".pgm")


def read_gray8(path) -> np.ndarray:
    """Read an 8-bit single-channel image as a uint8 array of shape (H, W)."""
    path = Path(path)
    try:
        with Image.open(path) as img:
            img.load()
            mode = img.mode
            if mode != "L":
                raise ImageFormatError(f"{path}: expected 8-bit grayscale, got mode {mode!r}")
            arr = np.asarray(img, dtype=np.uint8)
    except (UnidentifiedImageError, FileNotFoundError, IsADirectoryError, PermissionError, OSError) as exc:
        if isinstance(exc, ImageFormatError):
            raise
        raise ImageFormatError(f"{path}: cannot read image ({exc})") from exc
    if arr.ndim != 2 or arr.size == 0:
        raise ImageFormatError(f"{path}: zero-size or non 2-D image")
    return arr


def ingest_mask(path, threshold: int = 128) -> np.ndarray:
    """Binarise a grayscale annotation: pixel >= threshold is foreground."""
    if not 0 <= threshold <= 255:
        raise ParameterError(f"threshold must be in [0, 255], got {threshold}")
    return (read_gray8(path) >= threshold).astype(np.float64)


def ingest_prediction(path) -> np.ndarray:
    return read_gray8(path).astype(np.float64) / 255.0


def write_gray8(path, values: np.ndarray) -> None:
    """Write values in [0, 1] as an 8-bit PNG or PGM (by suffix)."""
    arr = np.clip(np.rint(np.asarray(values, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr).save(path)


def write_gradient(png_path, grad: np.ndarray) -> Path:
    """Dump a gradient map as a 16-bit PNG plus a JSON sidecar with its scale.

    Values map linearly from [min, max] to [0, 65535]; a constant map is all 0.
    Returns the sidecar path.
    """
    png_path = Path(png_path)
    grad = np.asarray(grad, dtype=np.float64)
    lo, hi = float(grad.min()), float(grad.max())
    span = hi - lo
    scaled = np.zeros(grad.shape) if span == 0 else (grad - lo) / span
    q = np.rint(scaled * 65535.0).astype(np.uint16)
    Image.fromarray(q).save(png_path)
    sidecar = png_path.with_suffix(".json")
    sidecar.write_text(json.dumps({"min": lo, "max": hi, "height": grad.shape[0], "width": grad.shape[1], "levels": 65535}, sort_keys=True))
    return sidecar


def read_gradient(png_path, sidecar_path=None) -> Tuple[np.ndarray, dict]:
    png_path = Path(png_path)
    sidecar_path = Path(sidecar_path) if sidecar_path else png_path.with_suffix(".json")
    meta = json.loads(sidecar_path.read_text())
    with Image.open(png_path) as img:
        q = np.asarray(img).astype(np.float64)
    values = meta["min"] + q / meta["levels"] * (meta["max"] - meta["min"])
    return values, meta


def list_images(path) -> dict:
    """Map stem -> file for every PNG/PGM in a directory (or the single file given)."""
    path = Path(path)
    if path.is_file():
        return {path.stem: path}
    if not path.is_dir():
        raise ImageFormatError(f"{path}: no such file or directory")
    found = {}
    for p in path.iterdir():
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES:
            if p.stem in found:
                raise ImageFormatError(f"{path}: duplicate image stem {p.stem!r}")
            found[p.stem] = p
    return found
