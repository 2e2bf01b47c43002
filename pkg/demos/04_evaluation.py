# %% [markdown]
# # Average precision and mAP
#
# AP is the area under the precision-recall curve after replacing each
# precision with the best precision at equal or higher recall.

# %%
from slicedet import BoundingBox, Detection, GroundTruthBox, evaluate, latency_stats
from slicedet.metrics import average_precision

print(average_precision([True, True, True], 3))   # perfect ranking
print(average_precision([False, True], 1))        # one false alarm first
print(average_precision([True, False, True], 3))  # 1/3 * 1 + 1/3 * 2/3

# %% [markdown]
# A box that overlaps its target with IoU 0.6 counts at the 0.50, 0.55 and
# 0.60 thresholds and misses the other seven, so mAP50-95 is 0.3.

# %%
truth = [GroundTruthBox(BoundingBox(0, 0, 10, 10), 0)]
dets = [Detection(BoundingBox(0, 0, 6, 10), 0, 0.9)]
report = evaluate([(dets, truth)])
print({f"{t:.2f}": v for t, v in report.map_by_threshold.items()})
print("mAP50", report.map50, "mAP50-95", report.map50_95)

# %%
latency, fps = latency_stats([13.66])
print(f"{latency} ms per image -> {fps:.1f} fps")
