"""Framework-free kernels for efficient channel attention (ECA) and
adaptive spatial feature fusion (ASFF).

Feature maps are float64 numpy arrays of shape ``(C, H, W)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EcaConfig:
    gamma: float = 2.0
    b: float = 1.0

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")


@dataclass(frozen=True)
class Conv1dKernel:
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.size % 2 == 0:
            raise ValueError(f"kernel must be 1-D with odd length, got shape {w.shape}")
        object.__setattr__(self, "weights", w)

    @property
    def k(self) -> int:
        return self.weights.size

    @classmethod
    def identity(cls, k: int = 3) -> Conv1dKernel:
        w = np.zeros(k)
        w[k // 2] = 1.0
        return cls(w)


def as_tensor3(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3 or min(x.shape) < 1:
        raise ValueError(f"expected a (C, H, W) tensor, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("tensor has non-finite entries")
    return x


def eca_kernel_size(channels: int, cfg: EcaConfig = EcaConfig()) -> int:
    """Adaptive 1-D kernel size from the channel count.

    t = floor(|(log2(C) + b) / gamma|), bumped to the next odd number when
    even, and never below 3.
    """
    if channels < 1:
        raise ValueError(f"channel count must be >= 1, got {channels}")
    t = math.floor(abs((math.log2(channels) + cfg.b) / cfg.gamma))
    k = t if t % 2 else t + 1
    return max(k, 3)


def global_avg_pool(x) -> np.ndarray:
    x = as_tensor3(x)
    return x.mean(axis=(1, 2))


def conv1d_same(v, kernel: Conv1dKernel) -> np.ndarray:
    """Zero-padded, same-length cross-correlation with one shared kernel:
    out[c] = sum_j w[j] * v[c + j - (k - 1) // 2].
    """
    v = np.asarray(v, dtype=np.float64)
    k = kernel.k
    pad = (k - 1) // 2
    padded = np.concatenate([np.zeros(pad), v, np.zeros(pad)])
    out = np.zeros_like(v)
    # fixed summation order over the taps
    for j in range(k):
        out += kernel.weights[j] * padded[j:j + v.size]
    return out


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def eca_gate(x, kernel: Conv1dKernel) -> np.ndarray:
    return sigmoid(conv1d_same(global_avg_pool(x), kernel))


def eca_forward(x, kernel: Conv1dKernel) -> np.ndarray:
    """Scale every channel of ``x`` by its attention gate in (0, 1)."""
    x = as_tensor3(x)
    return eca_gate(x, kernel)[:, None, None] * x


def nearest_indices(src: int, dst: int) -> np.ndarray:
    return (np.arange(dst) * src) // dst


def resize_to(x, target_h: int, target_w: int) -> np.ndarray:
    """Nearest-neighbour resize of the spatial dims, src = floor(dst * src_n / dst_n)."""
    x = np.asarray(x)
    if target_h < 1 or target_w < 1:
        raise ValueError(f"target size must be positive, got {target_h}x{target_w}")
    h, w = x.shape[-2:]
    if (h, w) == (target_h, target_w):
        return x.copy()
    rows = nearest_indices(h, target_h)
    cols = nearest_indices(w, target_w)
    return x[..., rows[:, None], cols[None, :]]


def normalize_fusion_weights(logits) -> np.ndarray:
    """Pointwise softmax over the three level maps; ``logits`` is (3, H, W)."""
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 3 or z.shape[0] != 3:
        raise ValueError(f"expected three (H, W) logit maps, got shape {z.shape}")
    z = z - z.max(axis=0, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=0, keepdims=True)


def asff_fuse(x1, x2, x3, weights) -> np.ndarray:
    """Spatially weighted sum of three same-sized feature maps.

    ``weights`` is a normalized (3, H, W) stack; each map is broadcast over
    channels.
    """
    x1, x2, x3 = (as_tensor3(x) for x in (x1, x2, x3))
    if not x1.shape == x2.shape == x3.shape:
        raise ValueError(f"feature maps differ in shape: {x1.shape}, {x2.shape}, {x3.shape}")
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (3,) + x1.shape[1:]:
        raise ValueError(f"weights shape {w.shape} does not match maps {x1.shape}")
    return w[0] * x1 + w[1] * x2 + w[2] * x3


def asff_level(features, level: int, logits) -> np.ndarray:
    """Resize the three pyramid maps to ``features[level]``'s spatial size and
    fuse them with softmax-normalized ``logits``."""
    h, w = features[level].shape[1:]
    resized = [resize_to(f, h, w) for f in features]
    return asff_fuse(*resized, normalize_fusion_weights(logits))
