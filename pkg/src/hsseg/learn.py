"""Class-density learning for high-dimensional Gaussian spectra.

Each class is modelled as a Gaussian with a shared diagonal covariance and a
sparse mean. Informative bands are picked by hard thresholding the
standardized class means at ``sqrt(2 log(p) / n)``; every other band is
dropped from density evaluation altogether, which leaves all likelihood
ratios between classes unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ClassOutOfRange,
    DegenerateVariance,
    DimensionMismatch,
    InvalidDimensions,
    InvalidTrainingSet,
    NonFiniteValue,
)

LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class TrainingSet:
    """Labelled spectra: ``labels[j]`` is the class of row ``spectra[j]``."""

    K: int
    labels: np.ndarray = field(repr=False)
    spectra: np.ndarray = field(repr=False)

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        spectra = np.asarray(self.spectra, dtype=np.float64)
        if spectra.ndim != 2 or spectra.shape[0] != labels.size:
            raise InvalidTrainingSet("spectra must be an n x p array matching the labels")
        if self.K < 2:
            raise InvalidTrainingSet(f"need at least 2 classes, got K={self.K}")
        if labels.size and (labels.min() < 0 or labels.max() >= self.K):
            raise InvalidTrainingSet(f"labels must lie in 0..{self.K - 1}")
        if not np.all(np.isfinite(spectra)):
            raise NonFiniteValue("training spectra contain NaN or infinite values")
        counts = np.bincount(labels, minlength=self.K)
        if np.any(counts < 2):
            raise InvalidTrainingSet(f"every class needs at least 2 samples, got counts {counts.tolist()}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "spectra", spectra)

    @property
    def p(self) -> int:
        return self.spectra.shape[1]

    @property
    def n(self) -> int:
        return self.labels.size

    @property
    def n_k(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.K)


@dataclass(frozen=True)
class ClassModel:
    """Gaussian class densities sharing a diagonal covariance.

    ``means`` is ``K x p`` and zero outside ``support``; ``var`` is the
    diagonal of the covariance. Entries of ``var`` off the support are kept
    for reference but never enter a density.
    """

    means: np.ndarray
    var: np.ndarray
    support: np.ndarray
    threshold_used: float = 0.0

    def __post_init__(self):
        means = np.array(self.means, dtype=np.float64)
        var = np.array(self.var, dtype=np.float64).reshape(-1)
        support = np.unique(np.asarray(self.support, dtype=np.int64).reshape(-1))
        if means.ndim != 2 or means.shape[1] != var.size:
            raise DimensionMismatch("means must be K x p with p matching var")
        if support.size and (support[0] < 0 or support[-1] >= var.size):
            raise DimensionMismatch("support indices out of range")
        if np.any(var[support] <= 0):
            raise DegenerateVariance("variance must be positive on the support")
        off = np.setdiff1d(np.arange(var.size), support)
        means[:, off] = 0.0
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "var", var)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "threshold_used", float(self.threshold_used))

    @property
    def K(self) -> int:
        return self.means.shape[0]

    @property
    def p(self) -> int:
        return self.var.size

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "p": self.p,
            "support": self.support.tolist(),
            "threshold": self.threshold_used,
            "means": self.means.tolist(),
            "var": self.var.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ClassModel":
        model = cls(obj["means"], obj["var"], obj["support"], obj.get("threshold", 0.0))
        if model.K != obj.get("K", model.K) or model.p != obj.get("p", model.p):
            raise DimensionMismatch("K/p fields disagree with the stored arrays")
        return model


def pooled_stats(ts: TrainingSet) -> tuple[np.ndarray, np.ndarray]:
    """Per-class means and the pooled within-class variance of every band.

    The variance divides the summed squared residuals (each sample centred
    on its own class mean) by ``n - K``.
    """
    counts = ts.n_k
    sums = np.zeros((ts.K, ts.p))
    np.add.at(sums, ts.labels, ts.spectra)
    means = sums / counts[:, None]
    resid = ts.spectra - means[ts.labels]
    var = (resid ** 2).sum(axis=0) / (ts.n - ts.K)
    if np.any(var <= 0):
        bad = np.flatnonzero(var <= 0)
        raise DegenerateVariance(f"zero within-class variance on bands {bad[:10].tolist()}")
    return means, var


def threshold_value(p: int, n: int) -> float:
    if p < 2 or n < 1:
        raise InvalidDimensions(f"threshold needs p >= 2 and n >= 1, got p={p}, n={n}")
    return float(np.sqrt(2.0 * np.log(p) / n))


def select_support(means, var, tau: float) -> np.ndarray:
    """Bands where some class has ``|mean| / sd`` strictly above ``tau``."""
    means = np.atleast_2d(np.asarray(means, dtype=np.float64))
    score = np.abs(means) / np.sqrt(np.asarray(var, dtype=np.float64))
    return np.flatnonzero(np.any(score > tau, axis=0))


def fit(ts: TrainingSet) -> ClassModel:
    means, var = pooled_stats(ts)
    tau = threshold_value(ts.p, ts.n)
    support = select_support(means, var, tau)
    return ClassModel(means, var, support, tau)


def log_density(model: ClassModel, k: int, x) -> float:
    """Log density of class ``k`` at spectrum ``x``, summed over the support only."""
    if not 0 <= k < model.K:
        raise ClassOutOfRange(f"class {k} outside 0..{model.K - 1}")
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size != model.p:
        raise DimensionMismatch(f"spectrum has {x.size} bands, model expects {model.p}")
    s = model.support
    v = model.var[s]
    r = x[s] - model.means[k, s]
    return float(-0.5 * np.sum(LOG_2PI + np.log(v)) - 0.5 * np.sum(r * r / v))


def log_densities(model: ClassModel, X) -> np.ndarray:
    """Vectorized :func:`log_density` for every row of ``X`` and every class (``n x K``)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.p:
        raise DimensionMismatch(f"expected rows of {model.p} bands, got shape {X.shape}")
    s = model.support
    if s.size == 0:
        return np.zeros((X.shape[0], model.K))
    inv = 1.0 / model.var[s]
    Xs = X[:, s]
    const = -0.5 * np.sum(LOG_2PI + np.log(model.var[s]))
    out = np.empty((X.shape[0], model.K))
    for k in range(model.K):
        r = Xs - model.means[k, s]
        out[:, k] = const - 0.5 * (r * r) @ inv
    return out
