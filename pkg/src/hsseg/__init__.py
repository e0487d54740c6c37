"""Two-step plug-in segmentation of hyperspectral images.

Class densities are learned by hard-thresholded sparse Gaussian means
(:mod:`hsseg.learn`), spatial mixture weights by penalized likelihood over
recursive dyadic partitions (:mod:`hsseg.mixlet`), and pixels are labelled by
the plug-in Bayes rule (:mod:`hsseg.plugin`).
"""

from .core import GridGeometry, HyperCube, LabelMap, WeightField, pixel_center, validate_cube
from .learn import ClassModel, TrainingSet
from .mixlet import MixletFit, RdpTree, WeightGrid

__all__ = [
    "ClassModel",
    "GridGeometry",
    "HyperCube",
    "LabelMap",
    "MixletFit",
    "RdpTree",
    "TrainingSet",
    "WeightField",
    "WeightGrid",
    "pixel_center",
    "validate_cube",
]
__version__ = "0.1.0"
