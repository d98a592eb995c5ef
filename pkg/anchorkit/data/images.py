"""
PNG / binary PPM ingestion and PNG export via Pillow.

Samples are 8-bit and map to [0, 1] by /255.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..autodiff import Tensor
from ..errors import ImageFormatError
from .batch import ImageBatch

logger = logging.getLogger(__name__)

SUPPORTED_FORMATS = ("PNG", "PPM")
IMAGE_SUFFIXES = (".png", ".ppm")
PPM_MAGIC = b"P6"
_EIGHT_BIT_MODES = ("L", "LA", "P", "RGB", "RGBA")


def _check_ppm(path: Path, img: Image.Image, size: int) -> None:
    with path.open("rb") as fh:
        magic = fh.read(2)
    if magic != PPM_MAGIC:
        raise ImageFormatError(f"{path}: unsupported PNM variant {magic.decode('ascii', 'replace')!r} "
                               f"(only binary P6 is accepted)")
    header_end = img.tile[0][2]
    needed = header_end + img.width * img.height * 3
    if size < needed:
        raise ImageFormatError(f"{path}: truncated pixel data, first missing byte at offset {size} "
                               f"(header ends at offset {header_end}, data needs {needed} bytes)")


def _decode(path: Path) -> np.ndarray:
    size = path.stat().st_size
    try:
        with Image.open(path) as img:
            if img.format not in SUPPORTED_FORMATS:
                raise ImageFormatError(f"{path}: unsupported format {img.format} (expected PNG or binary PPM)")
            if img.mode not in _EIGHT_BIT_MODES:
                raise ImageFormatError(f"{path}: {img.mode} samples are not 8-bit")
            if img.format == "PPM":
                _check_ppm(path, img, size)
            img.load()
            rgb = np.asarray(img.convert("RGB"), dtype=np.uint8)
    except ImageFormatError:
        raise
    except UnidentifiedImageError as e:
        raise ImageFormatError(f"{path}: unsupported or unreadable image header at offset 0") from e
    except (OSError, ValueError, SyntaxError) as e:
        raise ImageFormatError(f"{path}: truncated or corrupt image data: {e}") from e
    return rgb


def load_image(path: Union[str, Path]) -> ImageBatch:
    """One image as a single-element batch."""
    path = Path(path)
    rgb = _decode(path)
    pixels = rgb.transpose(2, 0, 1)[None].astype(np.float64) / 255.0
    return ImageBatch(pixels, (str(path),))


def quantize8(pixels) -> np.ndarray:
    """[0, 1] floats -> uint8 by round(x * 255)."""
    arr = np.asarray(pixels.data if isinstance(pixels, Tensor) else pixels, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("cannot quantize non-finite pixels")
    return np.rint(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)


def save_image(pixels, path: Union[str, Path]) -> Path:
    """Write a [3, H, W] (or [1, 3, H, W]) image as 8-bit RGB PNG."""
    arr = quantize8(pixels)
    if arr.ndim == 4 and arr.shape[0] == 1:
        arr = arr[0]
    if arr.ndim != 3 or arr.shape[0] != 3:
        raise ValueError(f"save_image needs a [3, H, W] image, got {arr.shape}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.ascontiguousarray(arr.transpose(1, 2, 0))).save(path, format="PNG")
    return path


def list_images(directory: Union[str, Path]) -> List[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"image directory {directory} does not exist")
    files = sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise FileNotFoundError(f"no .png or .ppm files in {directory}")
    return files


def load_images(paths: List[Path], workers: int = 4) -> List[ImageBatch]:
    """Decode files in parallel; order follows ``paths``."""
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(load_image, paths))


def load_directory(directory: Union[str, Path], patch_size: int, stride: Optional[int] = None,
                   crops_per_image: Optional[int] = None, seed: int = 0, limit: Optional[int] = None,
                   workers: int = 4) -> ImageBatch:
    """Patches from every PNG/PPM in ``directory`` (sorted by name).

    Full grid when ``crops_per_image`` is None, otherwise that many seeded
    random crops per image. Images smaller than a patch are skipped.
    """
    from .patches import extract_patches

    paths = list_images(directory)
    batches = []
    for i, img in enumerate(load_images(paths, workers)):
        _, h, w = img.image_shape
        if min(h, w) < patch_size:
            logger.warning(f"Skipping {img.labels[0]}: {h}x{w} is smaller than the {patch_size}px patch")
            continue
        if crops_per_image is None:
            batches.append(extract_patches(img, patch_size, stride=stride))
        else:
            batches.append(extract_patches(img, patch_size, seed=seed + i, count=crops_per_image))
    if not batches:
        raise ImageFormatError(f"no image in {directory} is large enough for {patch_size}px patches")
    patches = ImageBatch.concat(batches)
    logger.info(f"Loaded {len(patches)} patches from {len(paths)} images in {directory}")
    return patches.head(limit) if limit is not None else patches
