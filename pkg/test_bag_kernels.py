#!/usr/bin/env python3
"""
Tests for the bag-of-paths kernels: max, matching, change detection and the rho-weighted product
"""

import math
import os
import sys

import networkx as nx
import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from bag_kernels import (BAG_CHANGE, BAG_MATCHING, BAG_MAX, BAG_SUARD, BagKernelConfig, EmptyBag, ZeroDenominator,
                         ZeroSelfKernel, bag_kernel_value, cross_normalized, d_change, d_desobry, k_change,
                         k_matching, k_max, k_max_hat, k_suard, mean_vector_geometry, normalize, prepare_bag)
from path_kernels import KERNEL_CLASSIC, KERNEL_EDIT, PathKernelConfig, k_classic
from paths import BagOfPaths, Path, PathHierarchy, enumerate_bag
from shape_ingest import SpanningTree

CONFIG = PathKernelConfig(D=2)


def make_path(attrs, edges):
    return Path(
        node_ids=tuple(range(len(attrs))),
        node_attrs=tuple(float(a) for a in attrs),
        edge_attrs=tuple((float(w), float(t)) for w, t in edges),
        positions=tuple((float(k), 0.0) for k in range(len(attrs))),
    )


def singleton(shape_id, path, kind=KERNEL_CLASSIC):
    bag = BagOfPaths(shape_id, (PathHierarchy((path,), (), 2),), s=3, D=2)
    return prepare_bag(bag, kind, CONFIG, nu=0.9)


def random_tree(seed, n):
    rng = np.random.default_rng(seed)
    graph = nx.Graph()
    for k in range(n):
        graph.add_node(k, pos=(float(rng.uniform(0, 50)), float(rng.uniform(0, 50))), attr=float(rng.uniform()))
    for k in range(1, n):
        graph.add_edge(int(rng.integers(0, k)), k, weight=float(rng.uniform(0.01, 1.0)),
                       angle=float(rng.uniform(0, math.pi)))
    return SpanningTree(graph, 0.0, f"tree{seed}")


def prepared_tree(seed, n=7, kind=KERNEL_EDIT, s=3, fit_model=True):
    return prepare_bag(enumerate_bag(random_tree(seed, n), s, 2), kind, CONFIG, nu=0.9, fit_model=fit_model)


def shuffled(prepared, seed, kind):
    order = np.random.default_rng(seed).permutation(len(prepared.bag))
    bag = prepared.bag
    hierarchies = tuple(bag.hierarchies[k] for k in order)
    return prepare_bag(BagOfPaths(bag.shape_id, hierarchies, bag.s, bag.D), kind, CONFIG, nu=0.9)


H_A = make_path([0.2, 0.4], [(0.5, 0.0)])
H_B = make_path([0.2, 0.4], [(0.6, 0.0)])
H_LONG = make_path([0.2, 0.4, 0.6], [(0.5, 0.0), (0.5, 0.0)])


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

def test_normalize_example():
    values = np.array([[0.25, 0.5], [0.5, 1.0]])
    normalized = normalize(values)
    assert np.allclose(np.diag(normalized), 1.0)
    assert normalized[0, 1] == pytest.approx(1.0)
    assert np.allclose(normalize(normalized), normalized)


def test_normalize_rejects_zero_self_kernel():
    with pytest.raises(ZeroSelfKernel):
        normalize(np.array([[0.0, 0.0], [0.0, 1.0]]))


def test_empty_bag_rejected():
    with pytest.raises(EmptyBag):
        prepare_bag(BagOfPaths('empty', (), 3, 2), KERNEL_EDIT, CONFIG)


# ---------------------------------------------------------------------------
# Max and matching kernels
# ---------------------------------------------------------------------------

def test_max_kernel_identical_and_singletons():
    bag = prepared_tree(1)
    assert k_max(bag, bag) == pytest.approx(1.0)
    a, b = singleton('a', H_A), singleton('b', H_B)
    assert k_max(a, b) == pytest.approx(k_classic(H_A, H_B, CONFIG))
    assert k_max_hat(a, b) == pytest.approx(k_max(a, b))


def test_max_kernel_without_common_lengths_is_zero():
    short, long_ = singleton('short', H_A), singleton('long', H_LONG)
    assert k_max(short, long_) == 0.0


def test_matching_kernel_values():
    a, b = singleton('a', H_A), singleton('long', H_LONG)
    assert k_matching(a, a) == pytest.approx(1.0)
    assert k_matching(a, b, sigma=1.0) == pytest.approx(math.exp(-1.0))


def test_matching_kernel_ignores_duplication():
    first = prepared_tree(2, fit_model=False)
    second = prepared_tree(3, fit_model=False)
    bag = second.bag
    doubled = prepare_bag(BagOfPaths(bag.shape_id, bag.hierarchies + bag.hierarchies, bag.s, bag.D),
                          KERNEL_EDIT, CONFIG, fit_model=False)
    assert k_matching(first, doubled) == pytest.approx(k_matching(first, second), rel=1e-12)


def test_max_and_matching_ignore_path_order():
    first = prepared_tree(4)
    second = prepared_tree(5)
    permuted = shuffled(second, 0, KERNEL_EDIT)
    assert k_max(first, permuted) == pytest.approx(k_max(first, second), rel=1e-12)
    assert k_matching(first, permuted) == pytest.approx(k_matching(first, second), rel=1e-12)


# ---------------------------------------------------------------------------
# Change detection and rho-weighted kernels
# ---------------------------------------------------------------------------

def test_change_kernel_on_identical_bags():
    bag = prepared_tree(6)
    assert mean_vector_geometry(bag, bag) == pytest.approx(1.0, abs=1e-9)
    assert d_change(bag, bag) == pytest.approx(0.0, abs=1e-6)
    assert k_change(bag, bag) == pytest.approx(1.0, abs=1e-9)
    assert d_desobry(bag, bag) == pytest.approx(0.0, abs=1e-6)


def test_change_kernel_on_singletons():
    a, b = singleton('a', H_A), singleton('b', H_B)
    cosine = k_classic(H_A, H_B, CONFIG)
    assert mean_vector_geometry(a, b) == pytest.approx(cosine)
    assert d_change(a, b) == pytest.approx(math.acos(cosine))
    assert k_change(a, b, sigma=0.3) == pytest.approx(math.exp(-math.acos(cosine) ** 2 / (2 * 0.3 ** 2)))


def test_desobry_distance_of_point_supports():
    a, b = singleton('a', H_A), singleton('b', H_B)
    with pytest.raises(ZeroDenominator):
        d_desobry(a, b)


def test_suard_kernel():
    a, b = singleton('a', H_A), singleton('b', H_B)
    assert k_suard(a, b) == pytest.approx(k_classic(H_A, H_B, CONFIG))

    first, second = prepared_tree(7), prepared_tree(8)
    model = first.model
    assert k_suard(first, first) == pytest.approx(model.rho ** 2 * model.norm_w ** 2, rel=1e-9)
    assert k_suard(first, second) ** 2 <= k_suard(first, first) * k_suard(second, second) + 1e-12


def test_change_kernel_tolerates_path_order():
    first = prepared_tree(9)
    second = prepared_tree(10)
    permuted = shuffled(second, 1, KERNEL_EDIT)
    assert k_change(first, permuted) == pytest.approx(k_change(first, second), abs=1e-5)


def test_every_bag_kernel_is_symmetric():
    first, second = prepared_tree(11), prepared_tree(12)
    config = BagKernelConfig()
    for kind in (BAG_MAX, BAG_MATCHING, BAG_CHANGE, BAG_SUARD):
        forward = bag_kernel_value(kind, first, second, config)
        backward = bag_kernel_value(kind, second, first, config)
        assert forward == pytest.approx(backward, rel=1e-9, abs=1e-12)


def test_cross_normalized_bounds():
    first, second = prepared_tree(13), prepared_tree(14)
    cross = cross_normalized(first, second)
    assert cross.shape == (len(first.bag), len(second.bag))
    assert np.all(cross >= 0.0) and np.all(cross <= 1.0)


def run_all_tests():
    """Run every test in this file and print a summary"""
    tests = [value for name, value in sorted(globals().items()) if name.startswith('test_') and callable(value)]
    print("Bag kernel tests")
    print("=" * 60)
    passed = 0
    for test in tests:
        try:
            test()
            print(f"[PASS] {test.__name__}")
            passed += 1
        except Exception as e:
            print(f"[FAIL] {test.__name__}: {type(e).__name__}: {e}")
    print("=" * 60)
    print(f"{passed}/{len(tests)} passed")
    return passed == len(tests)


if __name__ == "__main__":
    success = run_all_tests()
    sys.exit(0 if success else 1)
