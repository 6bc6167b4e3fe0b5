#!/usr/bin/env python3
"""
Tests for the one-class nu-SVM solver and the zero-false-positive margin selection
"""

import math
import os
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from svm_models import (TAG_INDEFINITE, GramMatrix, SingleClass, fit_binary, fit_one_class, is_indefinite,
                        one_class_decision, predict_binary, select_margin_parameter)


def rbf_gram(points, gamma=1.0):
    points = np.asarray(points, dtype=float).reshape(len(points), -1)
    sq = ((points[:, None, :] - points[None, :, :]) ** 2).sum(axis=2)
    return np.exp(-gamma * sq)


def kkt_violation(gram, model):
    gradient = gram @ model.alpha
    upper = model.upper_bound
    up = model.alpha < upper - 1e-12
    low = model.alpha > 1e-12
    if not up.any() or not low.any():
        return 0.0
    return float(gradient[low].max() - gradient[up].min())


# ---------------------------------------------------------------------------
# One-class solver
# ---------------------------------------------------------------------------

def test_single_path_model():
    model = fit_one_class(np.array([[1.0]]), 0.9)
    assert model.alpha.tolist() == [1.0]
    assert model.rho == pytest.approx(1.0)
    assert model.norm_w == pytest.approx(1.0)


def test_constant_gram_objective():
    model = fit_one_class(np.ones((5, 5)), 0.9)
    assert model.alpha.sum() == pytest.approx(1.0)
    assert model.objective == pytest.approx(0.5)


def test_constant_off_diagonal_gives_uniform_alpha():
    n, c = 6, 0.3
    gram = np.full((n, n), c)
    np.fill_diagonal(gram, 1.0)
    model = fit_one_class(gram, 0.5)
    assert np.allclose(model.alpha, 1.0 / n, atol=1e-5)
    assert model.rho == pytest.approx((1.0 - c) / n + c, abs=1e-5)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=2, max_value=25),
       st.sampled_from([0.1, 0.3, 0.5, 0.9, 1.0]))
def test_solution_is_feasible_and_satisfies_kkt(seed, n, nu):
    rng = np.random.default_rng(seed)
    gram = rbf_gram(rng.normal(size=(n, 2)), gamma=0.5)
    model = fit_one_class(gram, nu)
    upper = 1.0 / (nu * n)
    assert model.alpha.sum() == pytest.approx(1.0, abs=1e-9)
    assert np.all(model.alpha >= -1e-12)
    assert np.all(model.alpha <= upper + 1e-12)
    assert kkt_violation(gram, model) < 1e-6
    # nu-property: bounded fraction <= nu <= support fraction
    at_bound = np.sum(model.alpha >= upper - 1e-9)
    support = np.sum(model.alpha > 1e-12)
    assert at_bound / n <= nu + 1e-9
    assert support / n >= nu - 1.0 / n - 1e-9


def test_objective_matches_grid_search():
    rng = np.random.default_rng(4)
    for _ in range(3):
        gram = rbf_gram(rng.normal(size=(3, 2)), gamma=0.7)
        nu = 2.0 / 3.0
        model = fit_one_class(gram, nu)

        step = 0.001
        grid = np.arange(0.0, 0.5 + step / 2, step)
        a1, a2 = np.meshgrid(grid, grid, indexing='ij')
        a3 = 1.0 - a1 - a2
        feasible = (a3 >= -1e-12) & (a3 <= 0.5 + 1e-12)
        alphas = np.stack([a1[feasible], a2[feasible], a3[feasible]], axis=1)
        objectives = 0.5 * np.einsum('ki,ij,kj->k', alphas, gram, alphas)
        best = float(objectives.min())

        assert model.objective <= best + 1e-6
        assert best - model.objective <= 1e-4


def test_objective_matches_grid_search_four_paths():
    rng = np.random.default_rng(9)
    for _ in range(3):
        gram = rbf_gram(rng.normal(size=(4, 2)), gamma=0.7)
        model = fit_one_class(gram, 0.5)
        assert model.upper_bound == pytest.approx(0.5)
        assert kkt_violation(gram, model) < 1e-6

        step = 0.01
        grid = np.arange(0.0, 0.5 + step / 2, step)
        a1, a2, a3 = (axis.ravel() for axis in np.meshgrid(grid, grid, grid, indexing='ij'))
        a4 = 1.0 - a1 - a2 - a3
        feasible = (a4 >= -1e-12) & (a4 <= 0.5 + 1e-12)
        alphas = np.stack([a1[feasible], a2[feasible], a3[feasible], a4[feasible]], axis=1)
        objectives = 0.5 * np.einsum('ki,ij,kj->k', alphas, gram, alphas)
        best = float(objectives.min())

        assert model.objective <= best + 1e-6
        assert best - model.objective <= 1e-3


def test_decision_values_on_training_paths():
    gram = rbf_gram(np.linspace(0.0, 3.0, 8), gamma=1.0)
    model = fit_one_class(gram, 0.5)
    decision = one_class_decision(model, gram)
    free = (model.alpha > 1e-9) & (model.alpha < model.upper_bound - 1e-9)
    assert np.allclose(decision[free], 0.0, atol=1e-5)
    assert model.norm_w == pytest.approx(math.sqrt(model.alpha @ gram @ model.alpha))


def test_indefinite_gram_is_tagged():
    gram = np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 1.0], [0.0, 1.0, 1.0]])
    assert is_indefinite(gram)
    model = fit_one_class(gram, 0.9)
    assert TAG_INDEFINITE in model.tags
    assert fit_one_class(np.eye(3), 0.9).tags == ()


def test_gram_matrix_must_be_square():
    with pytest.raises(ValueError):
        GramMatrix(np.zeros((2, 3)), ('a', 'b'))
    with pytest.raises(ValueError):
        fit_one_class(np.zeros((0, 0)), 0.5)
    with pytest.raises(ValueError):
        fit_one_class(np.eye(2), 0.0)


# ---------------------------------------------------------------------------
# Binary SVM and margin selection
# ---------------------------------------------------------------------------

def test_binary_svm_on_orthogonal_points():
    model = fit_binary(np.eye(2), [1, -1], C=10.0)
    assert predict_binary(model, np.eye(2)).tolist() == [1, -1]


def test_binary_svm_separates_training_set():
    points = np.array([0.0, 0.2, 0.4, 5.0, 5.2, 5.4])
    labels = np.array([1, 1, 1, -1, -1, -1])
    gram = rbf_gram(points, gamma=0.5)
    model = fit_binary(gram, labels, C=1000.0)
    assert predict_binary(model, gram).tolist() == labels.tolist()
    # A duplicate of a training shape gets the same label
    assert predict_binary(model, gram[:1]).tolist() == [1]


def test_binary_svm_needs_two_classes():
    with pytest.raises(SingleClass):
        fit_binary(np.eye(3), [1, 1, 1], C=1.0)


def test_margin_selection_prefers_smaller_c_on_ties():
    train = np.array([0.0, 0.1, 5.0, 5.1])
    evaluation = np.array([0.05, 5.05, 4.95])
    y_train = np.array([1, 1, -1, -1])
    y_eval = np.array([1, -1, -1])
    gram = rbf_gram(train, gamma=0.5)
    cross = np.exp(-0.5 * (evaluation[:, None] - train[None, :]) ** 2)
    selection = select_margin_parameter(gram, y_train, cross, y_eval, [100.0, 1.0, 10.0])
    assert selection.feasible
    assert selection.C == 1.0
    assert selection.true_positives == 1
    assert selection.false_positives == 0
    assert [c for c, _, _ in selection.scores] == [1.0, 10.0, 100.0]


def test_margin_selection_reports_infeasible_grid():
    train = np.array([0.0, 0.1, 5.0, 5.1])
    y_train = np.array([1, 1, -1, -1])
    gram = rbf_gram(train, gamma=0.5)
    # Evaluation shapes sit on the positives but are labelled negative
    evaluation = np.array([0.0, 0.1])
    cross = np.exp(-0.5 * (evaluation[:, None] - train[None, :]) ** 2)
    selection = select_margin_parameter(gram, y_train, cross, np.array([-1, -1]), [0.1, 1.0, 10.0])
    assert not selection.feasible
    assert selection.false_positives > 0


def run_all_tests():
    """Run every test in this file and print a summary"""
    tests = [value for name, value in sorted(globals().items()) if name.startswith('test_') and callable(value)]
    print("SVM tests")
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
