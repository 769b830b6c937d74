"""Cramer-Wold distances and two-stage latent generative models."""

from ._lcw import (
    ConfigError,
    DataError,
    DomainError,
    Error,
    FormatError,
    Model,
    ModelError,
    ShapeError,
    checkerboard,
    cw2_to_gaussian,
    cw2_two_samples,
    frechet_distance,
    gaussian_ring,
    load_idx,
    silverman_gamma,
    sliced_wasserstein,
    train_generator,
    train_stage1,
    train_stage2,
    two_moons,
)

__all__ = [
    "ConfigError",
    "DataError",
    "DomainError",
    "Error",
    "FormatError",
    "Model",
    "ModelError",
    "ShapeError",
    "checkerboard",
    "cw2_to_gaussian",
    "cw2_two_samples",
    "frechet_distance",
    "gaussian_ring",
    "load_idx",
    "silverman_gamma",
    "sliced_wasserstein",
    "train_generator",
    "train_stage1",
    "train_stage2",
    "two_moons",
]
