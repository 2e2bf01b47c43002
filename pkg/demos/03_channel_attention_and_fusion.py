# %% [markdown]
# # Channel attention gate and three-level feature fusion
#
# The attention block pools each channel to one number, runs a short 1-D
# convolution across neighbouring channels and squashes the result with a
# sigmoid. The kernel length grows with log2 of the channel count.

# %%
import numpy as np

from slicedet.numerics import (
    Conv1dKernel,
    asff_level,
    eca_forward,
    eca_gate,
    eca_kernel_size,
    resize_to,
)

for c in (8, 64, 256, 512, 1024):
    print(f"C={c:5d} -> k={eca_kernel_size(c)}")

# %%
rng = np.random.default_rng(0)
x = rng.normal(loc=1.0, size=(64, 20, 20))
kernel = Conv1dKernel(rng.normal(size=eca_kernel_size(64)))
gate = eca_gate(x, kernel)
y = eca_forward(x, kernel)
print("gate range", gate.min().round(3), gate.max().round(3))
print("output never exceeds input:", bool(np.all(np.abs(y) <= np.abs(x))))

# %% [markdown]
# Fusion brings three pyramid levels to one resolution (nearest neighbour)
# and mixes them with per-pixel softmax weights.

# %%
levels = [rng.normal(size=(16, 40, 40)), rng.normal(size=(16, 20, 20)), rng.normal(size=(16, 10, 10))]
logits = np.stack([np.full((10, 10), 2.0), np.zeros((10, 10)), np.zeros((10, 10))])
fused = asff_level(levels, 2, logits)
print("fused shape", fused.shape)
up = resize_to(levels[2], 20, 20)
print("2x up then down is lossless:", bool(np.array_equal(resize_to(up, 10, 10), levels[2])))
