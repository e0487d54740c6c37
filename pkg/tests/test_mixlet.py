import json
import math

import numpy as np
import pytest

from _oracles import all_partitions, best_grid_value, brute_force_objective, mixture_loglik
from hsseg import learn, mixlet
from hsseg.core import GridGeometry, HyperCube
from hsseg.errors import EmptyCell, InvalidArguments, NonPowerOfTwoSide
from hsseg.learn import ClassModel
from hsseg.mixlet import RdpTree, WeightGrid


# -- penalty, grid and Kraft ---------------------------------------------------

def test_penalty_values():
    assert mixlet.penalty(1, 256) == pytest.approx(9.241962407465937, abs=1e-12)
    assert mixlet.penalty(4, 256) == pytest.approx(36.96784962986375, abs=1e-12)
    assert mixlet.penalty(1, 1) == pytest.approx(0.9241962407465937, abs=1e-12)
    with pytest.raises(InvalidArguments):
        mixlet.penalty(0, 16)


def test_grid_size_is_exact_ceiling():
    assert [mixlet.grid_size(N) for N in (1, 2, 4, 16, 256)] == [1, 3, 8, 64, 4096]
    assert WeightGrid.for_geometry(GridGeometry(2, 16)).M == 4096
    np.testing.assert_array_equal(WeightGrid(5).values, [0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(InvalidArguments):
        WeightGrid(1)


def kraft_brute(side, d, M):
    N = side ** d
    cost = 1.5 * math.log(N) + (4.0 / 3.0) * math.log(2.0)
    return sum(M ** len(p) * math.exp(-cost * len(p)) for p in all_partitions((0,) * d, side, d))


@pytest.mark.parametrize("side", [1, 2, 4])
def test_kraft_recursion_matches_enumeration(side):
    geom = GridGeometry(2, side)
    M = max(2, mixlet.grid_size(geom.N))
    assert mixlet.kraft_sum(geom, WeightGrid(M)) == pytest.approx(kraft_brute(side, 2, M), rel=1e-12)


def test_kraft_single_pixel():
    assert mixlet.kraft_sum(GridGeometry(2, 1), 1) == pytest.approx(0.3968502629920499, abs=1e-12)


@pytest.mark.parametrize("side", [4, 8, 16])
def test_kraft_at_most_one(side):
    geom = GridGeometry(2, side)
    assert mixlet.kraft_sum(geom, WeightGrid.for_geometry(geom)) <= 1 + 1e-12


# -- per-cell maximization -----------------------------------------------------

def test_cell_dominated_by_class_zero():
    ll = np.array([[0.0, -50.0], [-1.0, -60.0], [2.0, -40.0]])
    w, v = mixlet.cell_best_weight(ll, WeightGrid(9))
    np.testing.assert_array_equal(w, [1.0, 0.0])
    assert v == pytest.approx(1.0, abs=1e-12)


def test_flat_cell_takes_smallest_index():
    ll = np.full((4, 2), -3.0)
    w, v = mixlet.cell_best_weight(ll, WeightGrid(7))
    np.testing.assert_array_equal(w, [0.0, 1.0])
    assert v == pytest.approx(-12.0, abs=1e-12)


def test_empty_cell():
    with pytest.raises(EmptyCell):
        mixlet.cell_best_weight(np.zeros((0, 2)), WeightGrid(3))


def test_small_cell_matches_exhaustive_scan():
    rng = np.random.default_rng(0)
    for _ in range(50):
        ll = rng.normal(size=(4, 2)) * 2
        w, v = mixlet.cell_best_weight(ll, WeightGrid(5))
        assert v == pytest.approx(best_grid_value(ll, 5), abs=1e-12)
        assert v == pytest.approx(mixture_loglik(w[0], ll[:, 0], ll[:, 1]), abs=1e-12)


def test_ternary_search_equals_exhaustive_scan():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        n = int(rng.integers(1, 65))
        M = int(rng.choice([3, 17, 512, 4096]))
        ll = rng.normal(size=(n, 2)) * rng.uniform(0.1, 5)
        ll[:, 1] += rng.normal() * 2
        grid = WeightGrid(M)
        w_fast, v_fast = mixlet.cell_best_weight(ll, grid)
        w_scan, v_scan = mixlet.cell_best_weight(ll, grid, exact_scan=True)
        assert v_fast == pytest.approx(v_scan, abs=1e-9)
        pi = grid.values[:, None]
        with np.errstate(divide="ignore"):
            vals = np.logaddexp(np.log(pi) + ll[:, 0], np.log1p(-pi) + ll[:, 1]).sum(axis=1)
        assert v_scan == pytest.approx(vals.max(), abs=1e-9)


def test_multiclass_cell_is_on_simplex_and_beats_barycenter():
    rng = np.random.default_rng(2)
    ll = rng.normal(size=(30, 3)) * 3
    w, v = mixlet.cell_best_weight(ll)
    assert np.all(w >= 0) and w.sum() == pytest.approx(1.0)
    bary = float(np.sum(np.log(np.exp(ll).mean(axis=1))))
    assert v >= bary - 1e-12


# -- dynamic program -----------------------------------------------------------

@pytest.mark.parametrize("side, M", [(2, 3), (2, 5), (4, 3), (4, 5)])
def test_fit_matches_brute_force(side, M):
    rng = np.random.default_rng(side * 10 + M)
    geom = GridGeometry(2, side)
    for _ in range(5):
        ll = rng.normal(size=(geom.N, 2)) * rng.uniform(1, 10)
        got = mixlet.fit_loglikes(ll, geom, WeightGrid(M)).objective
        assert got == pytest.approx(brute_force_objective(ll, side, 2, M, literal=side == 2), abs=1e-9)


def test_seventeen_partitions_of_a_four_by_four_grid():
    assert len(all_partitions((0, 0), 4, 2)) == 17


def test_constant_class_zero_image_is_one_leaf():
    rng = np.random.default_rng(3)
    geom = GridGeometry(2, 8)
    model = ClassModel([[3.0, 3.0], [-3.0, -3.0]], [1.0, 1.0], [0, 1])
    cube = HyperCube(geom, 2, np.array([3.0, 3.0]) + rng.normal(size=(64, 2)))
    fit = mixlet.fit(cube, model)
    assert fit.leaf_count == 1
    assert fit.weights.pi.min() > 0.95


def test_single_pixel_fit():
    geom = GridGeometry(2, 1)
    ll = np.array([[-1.0, -2.5]])
    fit = mixlet.fit_loglikes(ll, geom, WeightGrid(4))
    w, v = mixlet.cell_best_weight(ll, WeightGrid(4))
    assert fit.leaf_count == 1
    np.testing.assert_array_equal(fit.weights.weights[0], w)
    assert fit.loglik == v


def fitted(seed, side=16, K=2, **kw):
    rng = np.random.default_rng(seed)
    geom = GridGeometry(2, side)
    ll = rng.normal(size=(geom.N, K)) * 2
    ll[: geom.N // 2, 0] += 3
    return geom, ll, mixlet.fit_loglikes(ll, geom, **kw)


@pytest.mark.parametrize("seed", range(5))
def test_flattening_is_constant_on_leaves(seed):
    geom, _, fit = fitted(seed)
    w = fit.weights.weights.reshape(geom.shape + (2,))
    for leaf in fit.tree.leaves():
        block = w[tuple(slice(o, o + leaf.size) for o in leaf.origin)]
        assert np.all(block == leaf.weights)


@pytest.mark.parametrize("seed", range(5))
def test_objective_recomputation(seed):
    _, ll, fit = fitted(seed)
    assert fit.objective == pytest.approx(fit.loglik - 4 * fit.penalty, abs=1e-9)
    assert mixlet.objective_of(fit, ll) == pytest.approx(fit.objective, abs=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_larger_penalty_never_adds_leaves(seed):
    _, _, base = fitted(seed)
    _, _, heavy = fitted(seed, penalty_scale=10.0)
    assert heavy.leaf_count <= base.leaf_count


def test_zero_penalty_splits_to_pixels_when_pixels_disagree():
    geom = GridGeometry(1, 4)
    ll = np.array([[0.0, -20.0], [-20.0, 0.0], [0.0, -20.0], [-20.0, 0.0]])
    fit = mixlet.fit_loglikes(ll, geom, WeightGrid(3), penalty_scale=0.0)
    assert fit.leaf_count == 4
    np.testing.assert_array_equal(fit.weights.pi, [1, 0, 1, 0])


def test_multiclass_fit_runs():
    geom, ll, fit = fitted(0, side=8, K=3)
    assert fit.tree.K == 3
    np.testing.assert_allclose(fit.weights.weights.sum(axis=1), 1.0)
    assert mixlet.objective_of(fit, ll) == pytest.approx(fit.objective, abs=1e-6)


def test_pixel_loglikes_match_log_density():
    rng = np.random.default_rng(6)
    model = ClassModel(rng.normal(size=(2, 5)), rng.uniform(0.5, 2, 5), [0, 2, 4])
    cube = HyperCube(GridGeometry(2, 4), 5, rng.normal(size=(16, 5)))
    table = mixlet.pixel_loglikes(cube, model)
    for i in (0, 7, 15):
        for k in range(2):
            assert table[i, k] == pytest.approx(learn.log_density(model, k, cube.data[i]), abs=1e-12)
    empty = ClassModel(model.means, model.var, [])
    assert np.all(mixlet.pixel_loglikes(cube, empty) == 0)


def test_fit_requires_power_of_two_cube():
    with pytest.raises(NonPowerOfTwoSide):
        HyperCube(GridGeometry(2, 6), 1, np.zeros(36))


def test_tree_json_round_trip():
    geom, _, fit = fitted(4, side=8)
    obj = json.loads(json.dumps(fit.to_dict()))
    back = RdpTree.from_dict(geom, obj["tree"])
    assert back.leaf_count == fit.leaf_count
    np.testing.assert_array_equal(back.flatten().weights, fit.weights.weights)
    assert obj["objective"] == fit.objective
