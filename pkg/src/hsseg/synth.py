"""Synthetic scenes, spectra and training sets with known ground truth.

Randomness comes from numpy's Philox4x64-10 counter-based generator. A
stream is addressed by the 128-bit key ``seed | (stream_id << 64)``:

* pixel ``i`` uses stream ``i``: one uniform picks the label, then ``p``
  standard normals give the spectrum noise;
* class ``k`` of a training set uses stream ``2**62 + k``;
* scene construction uses stream ``2**63`` for boundary knots and
  ``2**63 + 1`` for soft region weights.

Every output is therefore a pure function of its parameters and seed, independent
of evaluation order.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .core import GridGeometry, HyperCube, LabelMap, WeightField
from .errors import InvalidArguments, InvalidCounts, UnsupportedDimension
from .learn import ClassModel, TrainingSet

TRAIN_STREAM = 2 ** 62
SCENE_STREAM = 2 ** 63
FRAGMENT_KNOTS = 17
SCENE_KINDS = ("constant", "half-plane", "boundary-fragment", "nested-squares")


def stream(seed: int, stream_id: int) -> np.random.Generator:
    if not 0 <= seed < 2 ** 64:
        raise InvalidArguments(f"seed must fit in 64 bits, got {seed}")
    return np.random.Generator(np.random.Philox(key=int(seed) | (int(stream_id) << 64)))


@dataclass(frozen=True)
class SceneSpec:
    """Piecewise-constant weight field on a pixel grid.

    ``mixing="pure"`` puts all weight on each region's own class; ``"soft"``
    draws that weight uniformly from ``soft = (a, b)`` once per region and
    spreads the rest evenly over the other classes.
    """

    geom: GridGeometry
    K: int = 2
    kind: str = "half-plane"
    seed: int = 0
    mixing: str = "pure"
    soft: tuple[float, float] = (1.0, 1.0)
    lipschitz: float = 1.0
    cut: float = 0.5

    def __post_init__(self):
        if self.kind not in SCENE_KINDS:
            raise InvalidArguments(f"unknown scene kind {self.kind!r}; expected one of {SCENE_KINDS}")
        if self.K < 2:
            raise InvalidArguments(f"need at least 2 classes, got K={self.K}")
        if self.mixing not in ("pure", "soft"):
            raise InvalidArguments(f"mixing must be 'pure' or 'soft', got {self.mixing!r}")
        a, b = self.soft
        if not 0.0 <= a <= b <= 1.0:
            raise InvalidArguments(f"soft bounds need 0 <= a <= b <= 1, got {self.soft}")
        if self.kind == "boundary-fragment":
            if self.lipschitz <= 0:
                raise InvalidArguments("boundary-fragment needs a positive Lipschitz bound")
            if self.geom.d != 2:
                raise UnsupportedDimension("boundary-fragment scenes are two-dimensional")
        object.__setattr__(self, "soft", (float(a), float(b)))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["geom"] = {"d": self.geom.d, "side": self.geom.side}
        out["soft"] = list(self.soft)
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "SceneSpec":
        obj = dict(obj)
        g = obj.pop("geom", None) or {"d": obj.pop("d"), "side": obj.pop("side")}
        geom = GridGeometry(g["d"], g["side"])
        if "soft" in obj:
            obj["soft"] = tuple(obj["soft"])
        return cls(geom, **obj)


@dataclass(frozen=True)
class SignalSpec:
    """Sparse Gaussian class means with a shared diagonal covariance.

    The ``p0`` active bands are spread evenly over the spectrum. On an active
    band class ``k`` has standardized mean ``separation * (k - (K - 1) / 2)``,
    so neighbouring classes are ``separation`` standard deviations apart.
    """

    p: int
    p0: int
    separation: float
    var: float | tuple[float, ...] = 1.0

    def __post_init__(self):
        if self.p < 1 or not 0 <= self.p0 <= self.p:
            raise InvalidArguments(f"need 0 <= p0 <= p and p >= 1, got p={self.p}, p0={self.p0}")
        if self.separation < 0:
            raise InvalidArguments("separation must be non-negative")
        v = np.broadcast_to(np.asarray(self.var, dtype=np.float64), (self.p,))
        if np.any(v <= 0):
            raise InvalidArguments("variances must be positive")
        if not np.isscalar(self.var):
            object.__setattr__(self, "var", tuple(float(x) for x in np.asarray(self.var).reshape(-1)))

    def var_vector(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.var, dtype=np.float64), (self.p,)).copy()

    def active_bands(self) -> np.ndarray:
        return (np.arange(self.p0) * self.p) // self.p0 if self.p0 else np.zeros(0, dtype=np.int64)

    def class_means(self, K: int) -> np.ndarray:
        sd = np.sqrt(self.var_vector())
        means = np.zeros((K, self.p))
        active = self.active_bands()
        offsets = self.separation * (np.arange(K) - (K - 1) / 2.0)
        means[:, active] = offsets[:, None] * sd[active]
        return means

    def true_model(self, K: int) -> ClassModel:
        means = self.class_means(K)
        support = np.flatnonzero(np.any(means != 0, axis=0))
        return ClassModel(means, self.var_vector(), support, 0.0)

    def to_dict(self) -> dict:
        return {"p": self.p, "p0": self.p0, "separation": self.separation,
                "var": list(self.var) if isinstance(self.var, tuple) else self.var}

    @classmethod
    def from_dict(cls, obj: dict) -> "SignalSpec":
        var = obj.get("var", 1.0)
        return cls(int(obj["p"]), int(obj["p0"]), float(obj["separation"]),
                   tuple(var) if isinstance(var, list) else float(var))


def fragment_knots(spec: SceneSpec) -> np.ndarray:
    """Knot heights of the seeded L-Lipschitz boundary ``t2 = b(t1)``."""
    rng = stream(spec.seed, SCENE_STREAM)
    start = 0.25 + 0.5 * rng.random()
    slopes = spec.lipschitz * (2.0 * rng.random(FRAGMENT_KNOTS - 1) - 1.0)
    steps = slopes / (FRAGMENT_KNOTS - 1)
    heights = start + np.concatenate([[0.0], np.cumsum(steps)])
    return np.clip(heights, 0.0, 1.0)


def boundary_fragment(spec: SceneSpec):
    """The boundary function ``b`` as a vectorized callable on ``[0, 1]``."""
    knots_x = np.linspace(0.0, 1.0, FRAGMENT_KNOTS)
    knots_y = fragment_knots(spec)
    return lambda t: np.interp(t, knots_x, knots_y)


def region_map(spec: SceneSpec) -> np.ndarray:
    """Region index of every pixel center (0-based, linearization order)."""
    t = spec.geom.centers()
    if spec.kind == "constant":
        return np.zeros(spec.geom.N, dtype=np.int64)
    if spec.kind == "half-plane":
        return (t[:, 0] >= spec.cut).astype(np.int64)
    if spec.kind == "boundary-fragment":
        b = boundary_fragment(spec)
        return (t[:, 1] >= b(t[:, 0])).astype(np.int64)
    # nested-squares: Chebyshev shells around the center, region 0 innermost
    radius = np.abs(t - 0.5).max(axis=1)
    return np.minimum(spec.K - 1, np.floor(2 * spec.K * radius)).astype(np.int64)


def covering_beta(spec: SceneSpec) -> float:
    """Constant ``beta`` with ``N(f, r) <= beta * r**-(d-1)`` for this scene kind."""
    d = spec.geom.d
    if spec.kind == "constant":
        return 0.0
    if spec.kind == "half-plane":
        return 2.0
    if spec.kind == "boundary-fragment":
        return 2.0 * (spec.lipschitz + 1.0)
    return 2.0 * d * 3.0 ** (d - 1) * (spec.K - 1)


def make_weight_field(spec: SceneSpec) -> WeightField:
    regions = region_map(spec)
    n_regions = int(regions.max()) + 1
    if spec.mixing == "pure":
        own = np.ones(n_regions)
    else:
        a, b = spec.soft
        rng = stream(spec.seed, SCENE_STREAM + 1)
        own = a + (b - a) * rng.random(n_regions)
    table = np.empty((n_regions, spec.K))
    for r in range(n_regions):
        table[r] = (1.0 - own[r]) / (spec.K - 1)
        table[r, r % spec.K] = own[r]
    return WeightField(spec.geom, spec.K, table[regions])


def sample_cube(wf: WeightField, sig: SignalSpec, seed: int) -> tuple[HyperCube, LabelMap]:
    """Draw labels from the weight rows, then spectra from the labelled classes."""
    means = sig.class_means(wf.K)
    sd = np.sqrt(sig.var_vector())
    cum = np.cumsum(wf.weights, axis=1)
    labels = np.empty(wf.geom.N, dtype=np.int64)
    data = np.empty((wf.geom.N, sig.p))
    for i in range(wf.geom.N):
        rng = stream(seed, i)
        k = min(int(np.searchsorted(cum[i], rng.random(), side="right")), wf.K - 1)
        labels[i] = k
        data[i] = means[k] + sd * rng.standard_normal(sig.p)
    return HyperCube(wf.geom, sig.p, data), LabelMap(wf.geom, wf.K, labels)


def sample_training_set(sig: SignalSpec, counts, seed: int) -> TrainingSet:
    counts = [int(c) for c in counts]
    if len(counts) < 2 or min(counts) < 2:
        raise InvalidCounts(f"need at least two classes with >= 2 samples each, got {counts}")
    K = len(counts)
    means = sig.class_means(K)
    sd = np.sqrt(sig.var_vector())
    labels, rows = [], []
    for k, n_k in enumerate(counts):
        z = stream(seed, TRAIN_STREAM + k).standard_normal((n_k, sig.p))
        rows.append(means[k] + sd * z)
        labels.append(np.full(n_k, k))
    return TrainingSet(K, np.concatenate(labels), np.vstack(rows))
