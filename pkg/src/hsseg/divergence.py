"""Distances between label maps and between Gaussian (mixture) densities.

Two Gaussians with a shared diagonal covariance differ only along the
whitened mean difference, so every quantity involving two-component mixtures
of them reduces to a one-dimensional integral over the statistic
``s = <C^{-1/2}(mu1 - mu0), C^{-1/2}(x - mu0)> / delta``, which is ``N(0, 1)``
under class 0 and ``N(delta, 1)`` under class 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import LabelMap, WeightField, check_same_geometry
from .errors import (
    CovarianceMismatch,
    DimensionMismatch,
    GeometryMismatch,
    NegativeInput,
    NonPositiveVariance,
    UnsupportedK,
)
from .learn import ClassModel
from .mixlet import RdpTree, penalty

QUAD_NODES = 512
QUAD_HALF_WIDTH = 10.0
_PANEL_WIDTH = 20.0
_EXP_LIMIT = 700.0


@dataclass
class MetricReport:
    hamming: float
    confusion: np.ndarray = field(repr=False)
    n_pixels: int = 0

    def to_dict(self) -> dict:
        return {
            "hamming": self.hamming,
            "confusion": self.confusion.tolist(),
            "n_pixels": self.n_pixels,
        }


def _check_labels(a: LabelMap, b: LabelMap):
    check_same_geometry(a, b)
    if a.K != b.K:
        raise GeometryMismatch(f"class counts differ: {a.K} vs {b.K}")


def hamming(a: LabelMap, b: LabelMap) -> float:
    """Fraction of pixels on which the two label maps disagree."""
    _check_labels(a, b)
    return float(np.count_nonzero(a.labels != b.labels)) / a.geom.N


def confusion(pred: LabelMap, truth: LabelMap) -> np.ndarray:
    """``K x K`` counts; entry ``[t, p]`` counts pixels of true class t labelled p."""
    _check_labels(pred, truth)
    K = truth.K
    return np.bincount(truth.labels * K + pred.labels, minlength=K * K).reshape(K, K)


def metric_report(pred: LabelMap, truth: LabelMap) -> MetricReport:
    conf = confusion(pred, truth)
    n = int(conf.sum())
    return MetricReport(float(n - np.trace(conf)) / n, conf, n)


def omega(x):
    """``|x - 1| / (x + 1)``, equal to 1 at ``x = +inf``."""
    arr = np.asarray(x, dtype=np.float64)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise NegativeInput("omega is defined for x >= 0 only")
    with np.errstate(invalid="ignore"):
        out = np.where(np.isinf(arr), 1.0, np.abs(arr - 1.0) / (arr + 1.0))
    return float(out) if out.ndim == 0 else out


def _mahalanobis_sq(mu_a, mu_b, var) -> float:
    mu_a = np.asarray(mu_a, dtype=np.float64).reshape(-1)
    mu_b = np.asarray(mu_b, dtype=np.float64).reshape(-1)
    var = np.asarray(var, dtype=np.float64).reshape(-1)
    if not (mu_a.size == mu_b.size == var.size):
        raise DimensionMismatch("means and variances must have equal lengths")
    if np.any(var <= 0):
        raise NonPositiveVariance("variances must be positive")
    return float(np.sum((mu_a - mu_b) ** 2 / var))


def hellinger_sq_gaussian(mu_a, mu_b, var) -> float:
    """Squared Hellinger distance ``int (sqrt f - sqrt g)^2`` of two Gaussians, in [0, 2]."""
    return 2.0 * (1.0 - math.exp(-_mahalanobis_sq(mu_a, mu_b, var) / 8.0))


def chi_square_gaussian(mu_a, mu_b, var) -> float:
    """Chi-square divergence of equal-covariance Gaussians; ``inf`` past exp range."""
    m2 = _mahalanobis_sq(mu_a, mu_b, var)
    if m2 > _EXP_LIMIT:
        return math.inf
    return math.expm1(m2)


def _two_class_model(model: ClassModel):
    if model.K != 2:
        raise UnsupportedK(f"only two-class models are supported here, got K={model.K}")
    s = model.support
    diff = model.means[1, s] - model.means[0, s]
    return math.sqrt(float(np.sum(diff * diff / model.var[s])))


def _quadrature(delta: float):
    """Gauss-Legendre nodes and weights covering both components to 10 sd."""
    lo, hi = -QUAD_HALF_WIDTH, delta + QUAD_HALF_WIDTH
    panels = max(1, math.ceil((hi - lo) / _PANEL_WIDTH))
    x, w = np.polynomial.legendre.leggauss(QUAD_NODES)
    edges = np.linspace(lo, hi, panels + 1)
    half = np.diff(edges) / 2.0
    mid = (edges[:-1] + edges[1:]) / 2.0
    nodes = (mid[:, None] + half[:, None] * x).reshape(-1)
    weights = (half[:, None] * w).reshape(-1)
    return nodes, weights


def _mixture_pair_integral(pi_a, pi_b, delta, integrand, chunk=1024):
    nodes, qw = _quadrature(delta)
    phi0 = np.exp(-0.5 * nodes ** 2) / math.sqrt(2 * math.pi)
    phi1 = np.exp(-0.5 * (nodes - delta) ** 2) / math.sqrt(2 * math.pi)
    out = np.empty(pi_a.size)
    for start in range(0, pi_a.size, chunk):
        a = pi_a[start:start + chunk, None]
        b = pi_b[start:start + chunk, None]
        fa = a * phi0 + (1.0 - a) * phi1
        fb = b * phi0 + (1.0 - b) * phi1
        out[start:start + chunk] = integrand(fa, fb) @ qw
    return out


def _check_fields(wf_a: WeightField, wf_b: WeightField):
    check_same_geometry(wf_a, wf_b)
    if wf_a.K != 2 or wf_b.K != 2:
        raise UnsupportedK("mixture divergences need two-class weight fields")


def hellinger_sq_mixtures(wf_a: WeightField, wf_b: WeightField, model: ClassModel) -> np.ndarray:
    """Per-pixel squared Hellinger distances between the two mixtures."""
    _check_fields(wf_a, wf_b)
    delta = _two_class_model(model)
    if delta == 0.0:
        return np.zeros(wf_a.geom.N)
    h2 = _mixture_pair_integral(
        wf_a.pi, wf_b.pi, delta, lambda fa, fb: (np.sqrt(fa) - np.sqrt(fb)) ** 2
    )
    return np.clip(h2, 0.0, 2.0)


def mean_hellinger_sq(wf_a: WeightField, wf_b: WeightField, model: ClassModel) -> float:
    return float(hellinger_sq_mixtures(wf_a, wf_b, model).mean())


def mean_l1(wf_a: WeightField, wf_b: WeightField, model: ClassModel) -> float:
    """Average L1 distance between the per-pixel mixtures, by the same quadrature."""
    _check_fields(wf_a, wf_b)
    delta = _two_class_model(model)
    if delta == 0.0:
        return 0.0
    return float(_mixture_pair_integral(wf_a.pi, wf_b.pi, delta, lambda fa, fb: np.abs(fa - fb)).mean())


def oracle_tradeoff(truth: WeightField, model_tree: RdpTree) -> float:
    """l1 distance from the true class-0 weights plus the model's penalty."""
    if model_tree.geom != truth.geom:
        raise GeometryMismatch(f"tree geometry {model_tree.geom} differs from {truth.geom}")
    if truth.K != 2 or model_tree.K != 2:
        raise UnsupportedK("the bias/complexity tradeoff is defined for two classes")
    approx = model_tree.flatten()
    l1 = float(np.abs(truth.pi - approx.pi).sum())
    return l1 + penalty(model_tree.leaf_count, truth.geom.N)


def _expected_ratio_minus_one(mu_a, mu_b, mu_b_est, var) -> float:
    """``E_{P_a}[(P_b - P~_b) / P~_b]`` for Gaussians with a shared covariance.

    ``log(P_b / P~_b)(x) = <C^-1 (mu_b - mu~_b), x - (mu_b + mu~_b) / 2>``,
    whose exponential has a closed-form mean under ``x ~ N(mu_a, C)``.
    """
    diff = mu_b - mu_b_est
    mid = (mu_b + mu_b_est) / 2.0
    expo = float(np.sum(diff / var * (mu_a - mid)) + 0.5 * np.sum(diff * diff / var))
    if expo > _EXP_LIMIT:
        return math.inf
    return math.expm1(expo)


def learning_terms(true_model: ClassModel, est_model: ClassModel) -> tuple[float, float]:
    """Per-pixel learning-error terms ``(D0, D1)`` for two-class Gaussian models.

    ``D0 = max(chi2(P0, P~0), E_{P0}[(P1 - P~1) / P~1])`` and symmetrically
    for ``D1``. Both models are read as full p-dimensional Gaussians with the
    shared variance vector.
    """
    if true_model.K != 2 or est_model.K != 2:
        raise UnsupportedK("learning terms are defined for two classes")
    if true_model.p != est_model.p:
        raise DimensionMismatch("models have different band counts")
    if not np.allclose(true_model.var, est_model.var, rtol=1e-12, atol=0.0):
        raise CovarianceMismatch("models must share the same variance vector")
    var = true_model.var
    mu, est = true_model.means, est_model.means
    d0 = max(chi_square_gaussian(mu[0], est[0], var), _expected_ratio_minus_one(mu[0], mu[1], est[1], var))
    d1 = max(chi_square_gaussian(mu[1], est[1], var), _expected_ratio_minus_one(mu[1], mu[0], est[0], var))
    return d0, d1
