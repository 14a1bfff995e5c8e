"""
测试共用的夹具：小规模随机模型
"""
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from models.factor_model import FactorModel  # noqa: E402
from models.inference import Mask  # noqa: E402


def make_model(dim: int = 8, latent_dim: int = 3, seed: int = 0, isotropic: bool = False) -> FactorModel:
    """随机因子模型：载荷 N(0, 1)，噪声方差在 [0.1, 1] 内"""
    rng = np.random.default_rng(seed)
    noise = np.full(dim, 0.3) if isotropic else rng.uniform(0.1, 1.0, size=dim)
    return FactorModel(
        loading=rng.standard_normal((dim, latent_dim)),
        mean=rng.standard_normal(dim),
        noise_diag=noise,
    )


def random_case(rng: np.random.Generator, max_dim: int = 12, max_latent: int = 4):
    """随机 (模型, Mask, x) 三元组"""
    dim = int(rng.integers(2, max_dim + 1))
    latent_dim = int(rng.integers(1, min(max_latent, dim - 1) + 1))
    model = make_model(dim, latent_dim, seed=int(rng.integers(2 ** 31)))
    mask = Mask(rng.random(dim) < rng.uniform(0.1, 0.9))
    x = rng.standard_normal(dim) * 2.0
    return model, mask, x


@pytest.fixture
def small_model() -> FactorModel:
    return make_model(8, 3, seed=1)


@pytest.fixture
def image_model() -> FactorModel:
    """4×6 图像上的 PPCA 模型 (D=24, K=3)"""
    return make_model(24, 3, seed=2, isotropic=True)
