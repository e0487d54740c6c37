"""Penalized maximum-likelihood estimation of the spatial weight field.

Models are product mixtures whose weights are constant on the leaves of a
recursive dyadic partition (RDP) of the pixel grid, with two-class weights
restricted to the regular grid ``{j / (M - 1)}``. The estimator maximizes::

    loglik(Q) - 4 * pen(Q),    pen(Q) = m * ((K - 1) * 1.5 * ln N + (4/3) * ln 2)

with ``m`` the leaf count. The maximization is exact: a bottom-up pass over
the dyadic pyramid keeps, for every cell, the better of "stop here" and "sum
of the best children".
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .core import GridGeometry, HyperCube, WeightField
from .errors import DimensionMismatch, EmptyCell, InvalidArguments, NumericOverflow
from .learn import ClassModel, log_densities

EM_ITERATIONS = 50
_SCAN_CHUNK = 256


@dataclass(frozen=True)
class WeightGrid:
    """Uniform grid ``{0, 1/(M-1), ..., 1}`` of candidate class-0 weights."""

    M: int

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 2:
            raise InvalidArguments(f"weight grid needs M >= 2 points, got {self.M}")
        object.__setattr__(self, "M", int(self.M))

    @property
    def values(self) -> np.ndarray:
        return np.arange(self.M) / (self.M - 1)

    def value(self, j) -> np.ndarray:
        return np.asarray(j) / (self.M - 1)

    @classmethod
    def for_geometry(cls, geom: GridGeometry) -> "WeightGrid":
        return cls(max(2, grid_size(geom.N)))


def grid_size(N: int) -> int:
    """``ceil(N ** 1.5)`` in exact integer arithmetic."""
    cube = N ** 3
    r = math.isqrt(cube)
    return r if r * r == cube else r + 1


def leaf_cost(N: int, K: int = 2) -> float:
    return (K - 1) * 1.5 * math.log(N) + (4.0 / 3.0) * math.log(2.0)


def penalty(m: int, N: int, K: int = 2) -> float:
    if m < 1 or N < 1 or K < 2:
        raise InvalidArguments(f"penalty needs m >= 1, N >= 1, K >= 2; got m={m}, N={N}, K={K}")
    return m * leaf_cost(N, K)


def kraft_sum(geom: GridGeometry, grid) -> float:
    """Sum of ``exp(-pen(Q))`` over every two-class model on ``geom``.

    ``grid`` is a :class:`WeightGrid` or a bare grid size; a bare size may be
    1, which no WeightGrid allows but the count recursion handles fine.
    """
    M = grid.M if isinstance(grid, WeightGrid) else int(grid)
    leaf = M * math.exp(-leaf_cost(geom.N, 2))
    s = leaf
    try:
        for _ in range(geom.depth):
            s = leaf + s ** (2 ** geom.d)
    except OverflowError as exc:
        raise NumericOverflow("Kraft sum overflows for this geometry and grid") from exc
    if not math.isfinite(s):
        raise NumericOverflow("Kraft sum overflows for this geometry and grid")
    return s


@dataclass
class RdpNode:
    """A dyadic cell: ``origin`` holds the axis indices of its first pixel."""

    origin: tuple[int, ...]
    size: int
    weights: np.ndarray | None = None
    children: list["RdpNode"] | None = None

    @property
    def is_leaf(self) -> bool:
        return self.children is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"leaf": {"weights": [float(w) for w in self.weights]}}
        return {"split": [c.to_dict() for c in self.children]}


@dataclass
class RdpTree:
    geom: GridGeometry
    K: int
    root: RdpNode

    @classmethod
    def single_leaf(cls, geom: GridGeometry, weights) -> "RdpTree":
        w = np.asarray(weights, dtype=np.float64)
        return cls(geom, w.size, RdpNode((0,) * geom.d, geom.side, w))

    @classmethod
    def from_dict(cls, geom: GridGeometry, obj: dict) -> "RdpTree":
        def build(node, origin, size):
            if "leaf" in node:
                return RdpNode(origin, size, np.asarray(node["leaf"]["weights"], dtype=np.float64))
            kids = node["split"]
            if size < 2 or len(kids) != 2 ** geom.d:
                raise InvalidArguments("split node must have 2**d children above pixel level")
            half = size // 2
            return RdpNode(origin, size, children=[
                build(k, tuple(o + b * half for o, b in zip(origin, bits)), half)
                for k, bits in zip(kids, _child_offsets(geom.d))
            ])

        root = build(obj, (0,) * geom.d, geom.side)
        K = next(iter(tree_leaves(root))).weights.size
        return cls(geom, K, root)

    def leaves(self):
        return tree_leaves(self.root)

    @property
    def leaf_count(self) -> int:
        return sum(1 for _ in self.leaves())

    def flatten(self) -> WeightField:
        grid = np.empty(self.geom.shape + (self.K,))
        for leaf in self.leaves():
            block = tuple(slice(o, o + leaf.size) for o in leaf.origin)
            grid[block] = leaf.weights
        return WeightField(self.geom, self.K, grid.reshape(self.geom.N, self.K))

    def to_dict(self) -> dict:
        return self.root.to_dict()


def tree_leaves(node: RdpNode):
    stack = [node]
    while stack:
        n = stack.pop()
        if n.is_leaf:
            yield n
        else:
            stack.extend(reversed(n.children))


def _child_offsets(d: int):
    # row-major over the 2**d sub-cells, axis 0 slowest
    return list(itertools.product((0, 1), repeat=d))


@dataclass
class MixletFit:
    tree: RdpTree
    objective: float
    loglik: float
    penalty: float
    weights: WeightField = field(repr=False)
    penalty_scale: float = 1.0
    grid_size: int | None = None

    @property
    def leaf_count(self) -> int:
        return self.tree.leaf_count

    def to_dict(self) -> dict:
        return {
            "tree": self.tree.to_dict(),
            "objective": self.objective,
            "loglik": self.loglik,
            "penalty": self.penalty,
            "penalty_scale": self.penalty_scale,
            "leaf_count": self.leaf_count,
            "grid_size": self.grid_size,
        }


def pixel_loglikes(cube: HyperCube, model: ClassModel) -> np.ndarray:
    """``N x K`` array of per-pixel class log densities."""
    if cube.p != model.p:
        raise DimensionMismatch(f"cube has {cube.p} bands, model expects {model.p}")
    return log_densities(model, cube.data)


# -- per-cell maximization ---------------------------------------------------

def _two_class_values(l0sum, delta, idx, M):
    """Cell log-likelihoods at grid indices ``idx`` (shape ``C x k``)."""
    lm = math.log(M - 1)
    with np.errstate(divide="ignore"):
        lp = np.log(idx) - lm
        lq = np.log(M - 1 - idx) - lm
    terms = np.logaddexp(lp[:, :, None], lq[:, :, None] + delta[:, None, :])
    return l0sum[:, None] + terms.sum(axis=2)


def _best_two_class(ll, M, exact_scan=False):
    """Best grid index and log-likelihood for each cell of ``ll`` (``C x s x 2``)."""
    l0sum = ll[:, :, 0].sum(axis=1)
    delta = ll[:, :, 1] - ll[:, :, 0]
    C = ll.shape[0]
    if exact_scan:
        best = np.full(C, -np.inf)
        arg = np.zeros(C, dtype=np.int64)
        for start in range(0, M, _SCAN_CHUNK):
            chunk = np.arange(start, min(M, start + _SCAN_CHUNK))
            idx = np.broadcast_to(chunk, (C, chunk.size))
            vals = _two_class_values(l0sum, delta, idx, M)
            j = vals.argmax(axis=1)
            v = vals[np.arange(C), j]
            better = v > best
            best[better] = v[better]
            arg[better] = start + j[better]
        return arg, best

    # ternary search on the concave objective, then a +-2 scan to absorb rounding
    lo = np.zeros(C, dtype=np.int64)
    hi = np.full(C, M - 1, dtype=np.int64)
    while True:
        act = np.flatnonzero(hi - lo > 2)
        if act.size == 0:
            break
        t = (hi[act] - lo[act]) // 3
        m1 = lo[act] + t
        m2 = hi[act] - t
        f = _two_class_values(l0sum[act], delta[act], np.column_stack([m1, m2]), M)
        up = f[:, 0] < f[:, 1]
        lo[act[up]] = m1[up] + 1
        hi[act[~up]] = m2[~up] - 1
    cand = lo[:, None] - 2 + np.arange(7)
    valid = (cand >= 0) & (cand <= M - 1)
    cand = np.clip(cand, 0, M - 1)
    vals = np.where(valid, _two_class_values(l0sum, delta, cand, M), -np.inf)
    j = vals.argmax(axis=1)
    rows = np.arange(C)
    return cand[rows, j], vals[rows, j]


def _best_simplex(ll, iterations=EM_ITERATIONS):
    """EM updates of the mixture weights for each cell of ``ll`` (``C x s x K``)."""
    C, _, K = ll.shape
    w = np.full((C, K), 1.0 / K)
    for _ in range(iterations):
        with np.errstate(divide="ignore"):
            a = ll + np.log(w)[:, None, :]
        r = np.exp(a - logsumexp(a, axis=2, keepdims=True))
        w = np.maximum(r.mean(axis=1), 0.0)
        w /= w.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore"):
        value = logsumexp(ll + np.log(w)[:, None, :], axis=2).sum(axis=1)
    return w, value


def _best_cells(ll, grid: WeightGrid | None, exact_scan=False):
    """Weights (``C x K``) and log-likelihoods (``C``) of the best leaf for each cell."""
    K = ll.shape[2]
    if K == 2:
        if grid is None:
            raise InvalidArguments("two-class fits need a weight grid")
        idx, value = _best_two_class(ll, grid.M, exact_scan)
        pi = grid.value(idx)
        return np.column_stack([pi, 1.0 - pi]), value
    return _best_simplex(ll)


def cell_best_weight(loglikes, grid: WeightGrid | None = None, exact_scan: bool = False):
    """Best leaf weight vector for one cell and the cell log-likelihood.

    ``loglikes`` is the ``n x K`` slice of per-pixel class log densities over
    the cell. Two-class cells pick the best point of ``grid`` (ties go to the
    smaller index); larger K uses EM from the barycenter.
    """
    ll = np.asarray(loglikes, dtype=np.float64)
    if ll.ndim != 2 or ll.shape[0] == 0:
        raise EmptyCell("cell must contain at least one pixel")
    w, value = _best_cells(ll[None], grid, exact_scan)
    return w[0], float(value[0])


# -- pyramidal dynamic program ------------------------------------------------

def _cells_at_level(arr, geom: GridGeometry, level: int) -> np.ndarray:
    """Regroup a ``side**d x K`` array into ``(2**level)**d`` cells of pixels."""
    c = 2 ** level
    s = geom.side // c
    d = geom.d
    K = arr.shape[-1]
    blocks = arr.reshape(sum(((c, s) for _ in range(d)), ()) + (K,))
    order = tuple(range(0, 2 * d, 2)) + tuple(range(1, 2 * d, 2)) + (2 * d,)
    return blocks.transpose(order).reshape(c ** d, s ** d, K)


def _sum_children(values, geom: GridGeometry, level: int) -> np.ndarray:
    """Sum a level-``level + 1`` value array into its parents at ``level``."""
    c = 2 ** level
    d = geom.d
    v = values.reshape(sum(((c, 2) for _ in range(d)), ()))
    return v.sum(axis=tuple(range(1, 2 * d, 2))).reshape(-1)


def fit_loglikes(
    loglikes,
    geom: GridGeometry,
    grid: WeightGrid | None = None,
    *,
    exact_scan: bool = False,
    penalty_scale: float = 1.0,
) -> MixletFit:
    """Exact penalized-likelihood fit from precomputed per-pixel log densities."""
    ll = np.asarray(loglikes, dtype=np.float64)
    if ll.ndim != 2 or ll.shape[0] != geom.N or ll.shape[1] < 2:
        raise DimensionMismatch(f"expected an {geom.N} x K log-likelihood array, got {ll.shape}")
    if not penalty_scale >= 0:
        raise InvalidArguments(f"penalty scale must be non-negative, got {penalty_scale}")
    K = ll.shape[1]
    if K == 2 and grid is None:
        grid = WeightGrid.for_geometry(geom)
    J = geom.depth
    cost = 4.0 * penalty_scale * leaf_cost(geom.N, K)

    weights, cell_ll, is_leaf = [None] * (J + 1), [None] * (J + 1), [None] * (J + 1)
    value = None
    for level in range(J, -1, -1):
        w, v = _best_cells(_cells_at_level(ll, geom, level), grid, exact_scan)
        weights[level], cell_ll[level] = w, v
        stop = v - cost
        if level == J:
            is_leaf[level] = np.ones(v.size, dtype=bool)
            value = stop
        else:
            split = _sum_children(value, geom, level)
            # ties keep the coarser partition
            is_leaf[level] = stop >= split
            value = np.where(is_leaf[level], stop, split)

    offsets = _child_offsets(geom.d)
    loglik = 0.0

    def build(level, coords):
        nonlocal loglik
        c = 2 ** level
        size = geom.side // c
        flat = int(np.ravel_multi_index(coords, (c,) * geom.d))
        origin = tuple(x * size for x in coords)
        if is_leaf[level][flat]:
            loglik += float(cell_ll[level][flat])
            return RdpNode(origin, size, weights[level][flat].copy())
        return RdpNode(origin, size, children=[
            build(level + 1, tuple(2 * x + b for x, b in zip(coords, bits))) for bits in offsets
        ])

    tree = RdpTree(geom, K, build(0, (0,) * geom.d))
    pen = penalty(tree.leaf_count, geom.N, K)
    return MixletFit(
        tree=tree,
        objective=float(value[0]),
        loglik=loglik,
        penalty=pen,
        weights=tree.flatten(),
        penalty_scale=penalty_scale,
        grid_size=grid.M if K == 2 else None,
    )


def fit(
    cube: HyperCube,
    model: ClassModel,
    grid: WeightGrid | None = None,
    *,
    exact_scan: bool = False,
    penalty_scale: float = 1.0,
) -> MixletFit:
    """Mixlet estimate of the weight field of ``cube`` under the class densities of ``model``."""
    return fit_loglikes(
        pixel_loglikes(cube, model), cube.geom, grid,
        exact_scan=exact_scan, penalty_scale=penalty_scale,
    )


def objective_of(fit_result: MixletFit, loglikes) -> float:
    """Recompute ``loglik - 4 * scale * pen`` from the flattened weights."""
    w = fit_result.weights.weights
    with np.errstate(divide="ignore"):
        ll = logsumexp(np.asarray(loglikes) + np.log(w), axis=1).sum()
    return float(ll - 4.0 * fit_result.penalty_scale * fit_result.penalty)
