#!/usr/bin/env python3

"""
Support vector models over precomputed Gram matrices.

fit_one_class solves the one-class nu-SVM dual with a two-variable SMO loop;
fit_binary delegates the soft-margin problem to scikit-learn's SVC.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from sklearn.exceptions import ConvergenceWarning
from sklearn.svm import SVC

logger = logging.getLogger(__name__)

TAG_INDEFINITE = 'indefinite-kernel'
MAX_ITERATIONS = 100000
KKT_TOLERANCE = 1e-6
# One-class SMO stops well inside the KKT tolerance
ONE_CLASS_TOLERANCE = 1e-7
DEFAULT_INDEFINITE_THRESHOLD = 1e-6
# Non-positive curvature along the working pair is replaced by this
MIN_QUAD_COEF = 1e-12
ALPHA_EPS = 1e-12


class SvmError(Exception):
    pass


class NonConvergence(SvmError):
    pass


class SingleClass(SvmError):
    pass


@dataclass(frozen=True)
class GramMatrix:
    """Kernel values over a shape collection plus provenance."""

    values: np.ndarray
    shape_ids: Tuple[str, ...]
    fingerprint: str = ''
    tags: Tuple[str, ...] = ()
    min_eigenvalue: float = float('nan')
    max_eigenvalue: float = float('nan')

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError(f"Gram matrix must be square, got shape {values.shape}")
        if values.shape[0] != len(self.shape_ids):
            raise ValueError("Gram matrix size does not match the number of shape ids")


@dataclass(frozen=True)
class OneClassModel:
    alpha: np.ndarray
    rho: float
    support_ids: Tuple[int, ...]
    norm_w: float
    nu: float
    objective: float
    iterations: int
    tags: Tuple[str, ...] = ()

    @property
    def upper_bound(self) -> float:
        return 1.0 / (self.nu * len(self.alpha))

    def to_payload(self, config_fingerprint='') -> dict:
        return {
            'alpha': [float(a) for a in self.alpha],
            'rho': float(self.rho),
            'support_ids': list(self.support_ids),
            'config_fingerprint': config_fingerprint,
        }


@dataclass(frozen=True)
class BinaryModel:
    """Soft-margin SVM; dual_coef holds y_i * alpha_i aligned with support_ids."""

    dual_coef: np.ndarray
    bias: float
    support_ids: Tuple[int, ...]
    C: float
    tags: Tuple[str, ...] = ()


@dataclass(frozen=True)
class MarginSelection:
    C: float
    model: BinaryModel
    true_positives: int
    false_positives: int
    feasible: bool
    scores: Tuple[Tuple[float, int, int], ...] = field(default=())


def gram_spectrum(values) -> Tuple[float, float]:
    """(min, max) eigenvalue of the symmetric part of a square matrix."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0.0, 0.0
    eigenvalues = np.linalg.eigvalsh((values + values.T) / 2.0)
    return float(eigenvalues[0]), float(eigenvalues[-1])


def is_indefinite(values, threshold=DEFAULT_INDEFINITE_THRESHOLD) -> bool:
    return gram_spectrum(values)[0] < -threshold


# ----------------------------------------------------------------------------
# One-class nu-SVM
# ----------------------------------------------------------------------------

def _initial_alpha(n, upper) -> np.ndarray:
    alpha = np.zeros(n)
    full = min(int(math.floor(1.0 / upper + 1e-12)), n)
    alpha[:full] = upper
    if full < n:
        alpha[full] = max(0.0, 1.0 - full * upper)
    return alpha


def _project(alpha, upper) -> np.ndarray:
    """Clip into the box and push the residual of the simplex sum onto the roomiest coordinate."""
    alpha = np.clip(alpha, 0.0, upper)
    drift = 1.0 - alpha.sum()
    if drift > 0:
        room = upper - alpha
    else:
        room = alpha.copy()
    if drift != 0.0:
        index = int(np.argmax(room))
        alpha[index] = min(upper, max(0.0, alpha[index] + drift))
    return alpha


def fit_one_class(gram, nu, indefinite_threshold=DEFAULT_INDEFINITE_THRESHOLD,
                  max_iter=MAX_ITERATIONS, tol=ONE_CLASS_TOLERANCE) -> OneClassModel:
    """min 1/2 a'Ka  s.t.  0 <= a_i <= 1/(nu n),  sum(a) = 1."""
    K = np.asarray(gram, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] == 0:
        raise ValueError(f"Gram matrix must be square and non-empty, got shape {K.shape}")
    if not 0.0 < nu <= 1.0:
        raise ValueError(f"nu must be in (0, 1], got {nu}")

    n = K.shape[0]
    upper = 1.0 / (nu * n)
    tags = (TAG_INDEFINITE,) if n > 1 and is_indefinite(K, indefinite_threshold) else ()

    alpha = _initial_alpha(n, upper)
    gradient = K @ alpha
    iterations = 0
    while True:
        up = np.flatnonzero(alpha < upper - ALPHA_EPS)
        low = np.flatnonzero(alpha > ALPHA_EPS)
        if up.size == 0 or low.size == 0:
            break
        i = up[np.argmin(gradient[up])]
        j = low[np.argmax(gradient[low])]
        if gradient[j] - gradient[i] < tol:
            break
        if iterations >= max_iter:
            raise NonConvergence(
                f"One-class SMO did not converge in {max_iter} iterations "
                f"(KKT violation {gradient[j] - gradient[i]:.3e})")

        quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if quad <= 0:
            quad = MIN_QUAD_COEF
        delta = (gradient[j] - gradient[i]) / quad
        delta = min(delta, upper - alpha[i], alpha[j])
        alpha[i] += delta
        alpha[j] -= delta
        gradient += delta * (K[:, i] - K[:, j])
        iterations += 1

    alpha = _project(alpha, upper)
    gradient = K @ alpha
    free = (alpha > ALPHA_EPS) & (alpha < upper - ALPHA_EPS)
    support = alpha > ALPHA_EPS
    if free.any():
        rho = float(gradient[free].mean())
    else:
        rho = float(gradient[support].min())

    objective = 0.5 * float(alpha @ gradient)
    norm_w = math.sqrt(max(0.0, 2.0 * objective))
    if tags:
        logger.warning("One-class model fitted on an indefinite Gram matrix (n=%d)", n)
    return OneClassModel(
        alpha=alpha,
        rho=rho,
        support_ids=tuple(int(k) for k in np.flatnonzero(support)),
        norm_w=norm_w,
        nu=float(nu),
        objective=objective,
        iterations=iterations,
        tags=tags,
    )


def one_class_decision(model: OneClassModel, cross) -> np.ndarray:
    """K_cross' alpha - rho for each column of cross (rows follow the model's training paths)."""
    cross = np.asarray(cross, dtype=float)
    return cross.T @ model.alpha - model.rho


# ----------------------------------------------------------------------------
# Binary soft-margin SVM
# ----------------------------------------------------------------------------

def fit_binary(gram, labels, C, tags=()) -> BinaryModel:
    K = np.asarray(gram, dtype=float)
    y = np.asarray(labels, dtype=int)
    if set(np.unique(y)) - {-1, 1}:
        raise ValueError(f"Labels must be -1 or +1, got {sorted(set(y.tolist()))}")
    if len(np.unique(y)) < 2:
        raise SingleClass("Binary SVM needs both a positive and a negative example")

    estimator = SVC(kernel='precomputed', C=float(C), tol=KKT_TOLERANCE)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter('always', ConvergenceWarning)
        estimator.fit(K, y)
    if any(issubclass(w.category, ConvergenceWarning) for w in caught):
        raise NonConvergence(f"Binary SVM did not converge for C={C}")

    return BinaryModel(
        dual_coef=np.asarray(estimator.dual_coef_[0], dtype=float).copy(),
        bias=float(estimator.intercept_[0]),
        support_ids=tuple(int(k) for k in estimator.support_),
        C=float(C),
        tags=tuple(tags),
    )


def decision_values(model: BinaryModel, cross) -> np.ndarray:
    """Decision function for rows of cross (evaluation x training kernel values)."""
    cross = np.atleast_2d(np.asarray(cross, dtype=float))
    return cross[:, list(model.support_ids)] @ model.dual_coef + model.bias


def predict_binary(model: BinaryModel, cross) -> np.ndarray:
    return np.where(decision_values(model, cross) > 0, 1, -1)


def select_margin_parameter(train_gram, train_labels, eval_cross, eval_labels, c_grid,
                            tags=()) -> MarginSelection:
    """Most true positives with zero false positives on the evaluation split; ties go to the smaller C."""
    grid = sorted(float(c) for c in c_grid)
    if not grid:
        raise ValueError("C grid is empty")
    eval_labels = np.asarray(eval_labels, dtype=int)

    best: Optional[Tuple[float, BinaryModel, int, int]] = None
    fallback: Optional[Tuple[float, BinaryModel, int, int]] = None
    scores = []
    for C in grid:
        model = fit_binary(train_gram, train_labels, C, tags=tags)
        predicted = predict_binary(model, eval_cross) if len(eval_labels) else np.zeros(0, dtype=int)
        tp = int(np.sum((predicted == 1) & (eval_labels == 1)))
        fp = int(np.sum((predicted == 1) & (eval_labels == -1)))
        scores.append((C, tp, fp))
        if fp == 0 and (best is None or tp > best[2]):
            best = (C, model, tp, fp)
        if fallback is None or fp < fallback[3]:
            fallback = (C, model, tp, fp)

    if best is not None:
        C, model, tp, fp = best
        return MarginSelection(C, model, tp, fp, True, tuple(scores))

    C, model, tp, fp = fallback
    logger.warning("No C in %s reaches zero false positives; using C=%s with %d false positives", grid, C, fp)
    return MarginSelection(C, model, tp, fp, False, tuple(scores))
