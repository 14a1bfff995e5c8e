"""模型模块"""
from .base import BaseModel
from .factor_model import (
    FactorModel,
    FitDiagnostics,
    fit_ppca,
    random_ppca_model,
    rotate_to_diagonal,
    sample,
    select_latent_dim,
)
from .inference import (
    DenoisingEncoder,
    GaussianPosterior,
    Mask,
    de_predict,
    exact_posterior,
    exact_posterior_rank1,
    fca_posterior,
    full_posterior_precision,
    mean_impute_input,
    sca_posterior,
    train_denoising_encoder,
)
from .imputation import ImputationReport, ImputationResult, decode, impute, score
from .masking import MaskGenerator, quarters_mask, random_mask

__all__ = [
    "BaseModel",
    "FactorModel",
    "FitDiagnostics",
    "fit_ppca",
    "select_latent_dim",
    "sample",
    "rotate_to_diagonal",
    "random_ppca_model",
    "Mask",
    "GaussianPosterior",
    "DenoisingEncoder",
    "exact_posterior",
    "exact_posterior_rank1",
    "full_posterior_precision",
    "mean_impute_input",
    "fca_posterior",
    "sca_posterior",
    "train_denoising_encoder",
    "de_predict",
    "ImputationResult",
    "ImputationReport",
    "decode",
    "impute",
    "score",
    "MaskGenerator",
    "random_mask",
    "quarters_mask",
]
