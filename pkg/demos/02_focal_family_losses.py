# %% [markdown]
# # BCE, focal and varifocal losses
#
# Focal loss scales BCE by alpha * (1 - p)**gamma for positives, so confident
# correct predictions contribute little. Varifocal loss treats the two
# sides differently: positives get BCE against their IoU quality q (weighted
# by q), negatives get the focal down-weighting.

# %%
import numpy as np

from slicedet.losses import (
    FocalConfig,
    bce_loss,
    finite_diff_grad,
    focal_grad,
    focal_loss,
    varifocal_loss,
)

p = np.array([0.1, 0.3, 0.5, 0.7, 0.9])
print("p          ", p)
print("bce   y=1  ", np.round(bce_loss(p, 1), 4))
print("focal y=1  ", np.round(focal_loss(p, 1), 4))
print("ratio      ", np.round(focal_loss(p, 1) / bce_loss(p, 1), 4), "<- alpha*(1-p)^2")

# %% [markdown]
# Varifocal with a soft target bottoms out at p = q, not at p = 1.

# %%
for q in (1.0, 0.6, 0.0):
    print(f"q={q}:", np.round(varifocal_loss(p, q), 4))

# %% [markdown]
# The analytic derivatives agree with central differences.

# %%
cfg = FocalConfig(alpha=0.25, gamma=2.0)
for x in (0.2, 0.5, 0.8):
    fd = finite_diff_grad(lambda v: focal_loss(v, 1, cfg), x)
    print(f"p={x}: analytic {focal_grad(x, 1, cfg):+.6f}  finite diff {fd:+.6f}")
