"""Per-pixel labelling from mixture weights and class densities.

With two classes pixel ``i`` gets label 1 exactly when

    R_i = (1 - pi_i) / pi_i * p1(x_i) / p0(x_i) > 1,

which is the Bayes rule when ``pi_i`` and the densities are the true ones.
With more classes the label maximizes ``log w_ik + log p_k(x_i)``. Ties go to
the smallest class index in both cases. Everything is done in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .core import GridGeometry, HyperCube, LabelMap, WeightField, check_same_geometry
from .divergence import hamming
from .errors import DimensionMismatch, UnsupportedK
from .learn import ClassModel
from .mixlet import pixel_loglikes


@dataclass(frozen=True)
class Posteriors:
    geom: GridGeometry
    K: int
    post: np.ndarray = field(repr=False)


def _log_weights(w):
    with np.errstate(divide="ignore"):
        return np.log(w)


def log_likelihood_ratio(loglikes, weights) -> np.ndarray:
    """``log R`` for rows of two-class log densities and weights (``n x 2``)."""
    ll = np.asarray(loglikes, dtype=np.float64)
    lw = _log_weights(np.asarray(weights, dtype=np.float64))
    return (lw[..., 1] - lw[..., 0]) + (ll[..., 1] - ll[..., 0])


def likelihood_ratio(loglikes_i, weights_i) -> float:
    """``R`` for one pixel: ``+inf`` when ``pi = 0`` and 0 when ``pi = 1``."""
    ll = np.asarray(loglikes_i, dtype=np.float64)
    w = np.asarray(weights_i, dtype=np.float64)
    if ll.shape != (2,) or w.shape != (2,):
        raise UnsupportedK("the likelihood ratio is defined for two classes")
    lr = float(log_likelihood_ratio(ll, w))
    if lr > 709.0:
        return math.inf
    return math.exp(lr)


def decide_loglikes(loglikes, weights) -> np.ndarray:
    """Labels from an ``N x K`` log-density array and ``N x K`` weights."""
    ll = np.asarray(loglikes, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if ll.shape != w.shape:
        raise DimensionMismatch(f"log densities {ll.shape} and weights {w.shape} disagree")
    if ll.shape[1] == 2:
        return (log_likelihood_ratio(ll, w) > 0).astype(np.int64)
    return np.argmax(_log_weights(w) + ll, axis=1)


def _check(cube: HyperCube, model: ClassModel, weights: WeightField):
    check_same_geometry(cube, weights)
    if model.K != weights.K:
        raise DimensionMismatch(f"model has {model.K} classes, weights have {weights.K}")


def decide(cube: HyperCube, model: ClassModel, weights: WeightField) -> LabelMap:
    _check(cube, model, weights)
    labels = decide_loglikes(pixel_loglikes(cube, model), weights.weights)
    return LabelMap(cube.geom, weights.K, labels)


def oracle_decide(cube: HyperCube, true_model: ClassModel, true_weights: WeightField) -> LabelMap:
    """The Bayes rule: the same decision evaluated with the true quantities."""
    return decide(cube, true_model, true_weights)


def posteriors(cube: HyperCube, model: ClassModel, weights: WeightField) -> Posteriors:
    _check(cube, model, weights)
    a = _log_weights(weights.weights) + pixel_loglikes(cube, model)
    post = np.exp(a - logsumexp(a, axis=1, keepdims=True))
    return Posteriors(cube.geom, weights.K, post)


def excess_risk(pred: LabelMap, oracle: LabelMap, truth: LabelMap) -> float:
    """Single-draw excess risk ``d_H(pred, truth) - d_H(oracle, truth)``; may be negative."""
    return hamming(pred, truth) - hamming(oracle, truth)
