"""Reconstruction loss shared by every schedule."""
from .. import autodiff as ad
from ..autodiff import Tensor
from ..errors import ShapeError


def mse_loss(reference: Tensor, reconstruction: Tensor) -> Tensor:
    """Mean squared difference over every pixel of the batch (scalar)."""
    reference, reconstruction = ad.as_tensor(reference), ad.as_tensor(reconstruction)
    if reference.shape != reconstruction.shape:
        raise ShapeError(f"mse_loss: shapes {reference.shape} and {reconstruction.shape} differ")
    return ad.reduce_mean(ad.square(ad.sub(reconstruction, reference)))
