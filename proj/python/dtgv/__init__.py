"""KL-DTGV2 Poisson deblurring."""

from ._dtgv import (
    DtgvError,
    degrade,
    estimate_direction,
    isnr,
    mssim,
    prox_kl,
    restore,
    rmse,
    stripe_phantom,
)

__all__ = [
    "DtgvError",
    "degrade",
    "estimate_direction",
    "isnr",
    "mssim",
    "prox_kl",
    "restore",
    "rmse",
    "stripe_phantom",
]
