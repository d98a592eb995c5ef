"""
Image data: batches, PNG/PPM I/O, patching and the synthetic texture set.
"""
import logging
from typing import Tuple

from ..config import DatasetSource, DataSettings
from .batch import ImageBatch
from .images import list_images, load_directory, load_image, load_images, quantize8, save_image
from .patches import extract_patches, grid_origins
from .synth import synth_dataset, synth_image

logger = logging.getLogger(__name__)


def load_datasets(settings: DataSettings) -> Tuple[ImageBatch, ImageBatch]:
    """(train, eval) batches as configured."""
    if settings.source == DatasetSource.SYNTH:
        train = synth_dataset(settings.train_count, settings.patch_size, settings.seed, split="train")
        held_out = synth_dataset(settings.eval_count, settings.patch_size, settings.seed, split="eval")
        return train, held_out

    patches = load_directory(settings.path, settings.patch_size, crops_per_image=settings.crops_per_image,
                             seed=settings.seed)
    if settings.eval_path is not None:
        held_out = load_directory(settings.eval_path, settings.patch_size, seed=settings.seed,
                                  limit=settings.eval_count)
        return patches.head(settings.train_count), held_out
    if len(patches) < 2:
        raise ValueError(f"{settings.path} yields {len(patches)} patch(es); need at least 2 to split train/eval")
    n_eval = min(settings.eval_count, len(patches) // 2)
    logger.info(f"No eval_path; holding out the last {n_eval} patches of {settings.path}")
    train = patches.head(min(settings.train_count, len(patches) - n_eval))
    return train, patches.take(range(len(patches) - n_eval, len(patches)))


__all__ = [
    "ImageBatch",
    "extract_patches",
    "grid_origins",
    "list_images",
    "load_datasets",
    "load_directory",
    "load_image",
    "load_images",
    "quantize8",
    "save_image",
    "synth_dataset",
    "synth_image",
]
