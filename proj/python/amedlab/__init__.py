"""Diffusion ODE samplers on Gaussian mixtures, with learned mean-direction steps."""

from ._amedlab import (
    ConfigError,
    ContractError,
    DivergenceError,
    GaussianMixture,
    __version__,
    amed_sample,
    exact_trajectory,
    initial_noise,
    make_schedule,
    mc_shell_check,
    pca,
    sample,
    shell_radius,
    sliced_wasserstein,
    train_amed,
)

__all__ = [
    "ConfigError",
    "ContractError",
    "DivergenceError",
    "GaussianMixture",
    "__version__",
    "amed_sample",
    "exact_trajectory",
    "initial_noise",
    "make_schedule",
    "mc_shell_check",
    "pca",
    "sample",
    "shell_radius",
    "sliced_wasserstein",
    "train_amed",
]
