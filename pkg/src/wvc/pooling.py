"""C1 stage: local maximum over dyadic blocks of each S1 map."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .wavelet import S1Stack


@dataclass(frozen=True)
class C1Stack:
    """``maps[j-1]`` has shape ``(3, H // 2**j, W // 2**j)``."""

    maps: tuple
    image_shape: tuple[int, int]

    @property
    def levels(self) -> int:
        return len(self.maps)

    def level_shape(self, j: int) -> tuple[int, int]:
        return self.maps[j - 1].shape[1:]


def c1_pool(s1: S1Stack) -> C1Stack:
    maps = []
    for j in range(1, s1.levels + 1):
        b = 1 << j
        maps.append(np.stack([kernels.block_max(s1.maps[j - 1, k], b) for k in range(3)]))
    return C1Stack(tuple(maps), s1.shape)
