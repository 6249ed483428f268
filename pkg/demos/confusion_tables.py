"""Accuracy figures from two published confusion matrices.

SFBay_L (AIRSAR L-band, 4 channels, 21x21 window) and Flevo_C (RADARSAT-2
C-band, 3 channels, 15x15 window). Rows are true classes, columns the
predictions. Also shows the class merge used for cross-site evaluation.

    python demos/confusion_tables.py
"""

import numpy as np

from polcnn.metrics import ConfusionMatrix, accuracy_stats, format_report
from polcnn.pipeline import LabelRaster, cross_site_remap

SFBAY_L = ConfusionMatrix(
    np.array([[78621, 0, 0, 0, 27],
              [0, 17940, 38, 4, 0],
              [0, 313, 4202, 0, 20],
              [78, 71, 68, 6956, 0],
              [0, 0, 128, 0, 13531]]),
    class_names=["water", "urban", "forest", "bare soil", "nat. veg."],
)

FLEVO_C = ConfusionMatrix(
    np.array([[49616, 287, 27, 70],
              [13, 48489, 701, 797],
              [44, 1539, 46664, 1753],
              [89, 632, 1346, 47933]]),
    class_names=["water", "urban", "forest", "cropland"],
)

for name, cm in (("SFBay_L", SFBAY_L), ("Flevo_C", FLEVO_C)):
    print(f"{name}\n{format_report(cm)}\n")

# Merging urban sub-classes into one before scoring a network trained
# elsewhere: 1 water, 2 developed, 3 high-density, 4 low-density, 5 vegetation.
truth = LabelRaster(np.array([[1, 2, 3, 4, 5, 0]]))
merged = cross_site_remap(truth, {1: 1, 2: 2, 3: 2, 4: 2, 5: 3})
print("remapped ids:", merged.ids.tolist())
stats = accuracy_stats(SFBAY_L)
print(f"SFBay_L OA recomputed: {100 * stats.overall:.2f}%")
