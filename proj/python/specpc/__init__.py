"""Change-point detection for multivariate time series using spectral principal components."""

from ._core import (
    NumericalError,
    ValidationError,
    binary_segmentation,
    block_spectra,
    contemporaneous_pcs,
    cusum_frequency,
    detect,
    evaluate,
    fourier_coefficients,
    scenario,
    spectral_pcs,
    threshold,
)

__all__ = [
    "NumericalError",
    "ValidationError",
    "binary_segmentation",
    "block_spectra",
    "contemporaneous_pcs",
    "cusum_frequency",
    "detect",
    "evaluate",
    "fourier_coefficients",
    "scenario",
    "spectral_pcs",
    "threshold",
]
