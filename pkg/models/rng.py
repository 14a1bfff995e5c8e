"""
随机数流 - 所有随机性都从显式种子派生

使用 numpy 的 Philox4x64-10 计数器型生成器（固定算法，跨平台结果一致）。
子流由 (seed, stream) 通过 SeedSequence 的 spawn_key 派生，互不干扰。
"""
from typing import Optional

import numpy as np

# 子流编号：同一个种子下不同用途的随机流
STREAM_SAMPLE = 0
STREAM_RANDOM_MASK = 1
STREAM_QUARTERS = 2
STREAM_SPLIT = 3
STREAM_DE = 4
STREAM_MODEL = 5


def make_rng(seed: int, stream: Optional[int] = None) -> np.random.Generator:
    """
    创建确定性的随机数生成器

    Args:
        seed: 非负整数种子
        stream: 子流编号（None 表示根流）

    Returns:
        基于 Philox 的 numpy Generator
    """
    spawn_key = () if stream is None else (int(stream),)
    seed_seq = np.random.SeedSequence(int(seed), spawn_key=spawn_key)
    return np.random.Generator(np.random.Philox(seed_seq))


def child_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    """为并行使用派生 (seed, stream, index) 子流"""
    seed_seq = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(index)))
    return np.random.Generator(np.random.Philox(seed_seq))
