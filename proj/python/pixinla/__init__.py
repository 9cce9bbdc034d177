"""Bayesian restoration of Poisson-corrupted images on a lattice ICAR prior.

The heavy lifting lives in the compiled extension ``pixinla._core``: a sparse
Cholesky/Laplace INLA engine, a MALA baseline sampler, the intensity
transform and seeded Poisson corruption, and the pooled-range PSNR / global
SSIM metrics.
"""

from ._core import (
    InlaFit,
    MalaFit,
    PixinlaError,
    RNG_NAME,
    __version__,
    compute_metrics,
    corrupt_poisson,
    gaussian_approx,
    grid_logdet,
    icar_precision_dense,
    intensity_forward,
    intensity_inverse,
    mse,
    poisson_loglik,
    prior_logpdf,
    psnr,
    read_pgm,
    restore_inla,
    run_mala,
    ssim,
    write_pgm,
)

__all__ = [
    "InlaFit",
    "MalaFit",
    "PixinlaError",
    "RNG_NAME",
    "__version__",
    "compute_metrics",
    "corrupt_poisson",
    "gaussian_approx",
    "grid_logdet",
    "icar_precision_dense",
    "intensity_forward",
    "intensity_inverse",
    "mse",
    "poisson_loglik",
    "prior_logpdf",
    "psnr",
    "read_pgm",
    "restore_inla",
    "run_mala",
    "ssim",
    "write_pgm",
]
