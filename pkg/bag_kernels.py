#!/usr/bin/env python3

"""
Kernels between bags of paths.

Every bag is prepared once (path features, normalized self Gram and a
one-class model on the unit sphere); pairwise kernels then only need the
normalized cross Gram between the two bags.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from path_kernels import KERNEL_EDIT, PATH_KERNELS, PathKernelConfig, cross_gram
from paths import BagOfPaths
from svm_models import DEFAULT_INDEFINITE_THRESHOLD, OneClassModel, fit_one_class
from utils import clamp_unit

logger = logging.getLogger(__name__)

BAG_MAX = 'max'
BAG_MATCHING = 'matching'
BAG_CHANGE = 'change'
BAG_SUARD = 'suard'
BAG_KERNELS = (BAG_MAX, BAG_MATCHING, BAG_CHANGE, BAG_SUARD)

# arccos(1 - eps) ~ sqrt(2 eps): anything below this is a zero arc
ZERO_ARC = 1e-7


class BagKernelError(Exception):
    pass


class EmptyBag(BagKernelError):
    pass


class ZeroSelfKernel(BagKernelError):
    pass


class DegenerateModel(BagKernelError):
    pass


class ZeroDenominator(BagKernelError):
    pass


@dataclass(frozen=True)
class BagKernelConfig:
    nu: float = 0.9
    sigma_change: float = 0.3
    sigma_matching: float = 1.0
    path_kernel: str = KERNEL_EDIT

    def __post_init__(self):
        if not 0.0 < self.nu <= 1.0:
            raise ValueError(f"nu must be in (0, 1], got {self.nu}")
        if not self.sigma_change > 0 or not self.sigma_matching > 0:
            raise ValueError("Bag kernel bandwidths must be > 0")
        if self.path_kernel not in PATH_KERNELS:
            raise ValueError(f"Unknown path kernel {self.path_kernel!r}")


@dataclass(frozen=True)
class PreparedBag:
    bag: BagOfPaths
    path_kernel: str
    path_config: PathKernelConfig
    self_values: np.ndarray
    self_gram: np.ndarray
    model: Optional[OneClassModel]

    @property
    def shape_id(self) -> str:
        return self.bag.shape_id

    @property
    def alpha(self) -> np.ndarray:
        return self.model.alpha


def normalize(values, self_rows=None, self_cols=None) -> np.ndarray:
    """k(i,j) / sqrt(k(i,i) k(j,j)); square input uses its own diagonal."""
    values = np.asarray(values, dtype=float)
    if self_rows is None:
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError("Self-kernel values are required for a rectangular matrix")
        self_rows = self_cols = np.diag(values)
    self_rows = np.asarray(self_rows, dtype=float)
    self_cols = np.asarray(self_cols if self_cols is not None else self_rows, dtype=float)
    if np.any(self_rows <= 0) or np.any(self_cols <= 0):
        raise ZeroSelfKernel("A path has a non-positive self kernel")
    normalized = values / np.sqrt(np.outer(self_rows, self_cols))
    return np.clip(normalized, 0.0, 1.0)


def prepare_bag(bag: BagOfPaths, path_kernel=KERNEL_EDIT, path_config: PathKernelConfig = PathKernelConfig(),
                nu=0.9, indefinite_threshold=DEFAULT_INDEFINITE_THRESHOLD, fit_model=True) -> PreparedBag:
    if bag.is_empty:
        raise EmptyBag(f"Bag of {bag.shape_id} has no path")
    raw = cross_gram(bag.hierarchies, bag.hierarchies, path_kernel, path_config)
    self_values = np.diag(raw).copy()
    self_gram = normalize(raw)
    np.fill_diagonal(self_gram, 1.0)
    model = fit_one_class(self_gram, nu, indefinite_threshold) if fit_model else None
    return PreparedBag(bag, path_kernel, path_config, self_values, self_gram, model)


def cross_normalized(first: PreparedBag, second: PreparedBag) -> np.ndarray:
    if first is second:
        return first.self_gram
    raw = cross_gram(first.bag.hierarchies, second.bag.hierarchies, first.path_kernel, first.path_config)
    return normalize(raw, first.self_values, second.self_values)


def _require_model(prepared: PreparedBag) -> OneClassModel:
    if prepared.model is None:
        raise DegenerateModel(f"Bag of {prepared.shape_id} was prepared without a one-class model")
    return prepared.model


# ----------------------------------------------------------------------------
# Kernels on the normalized cross Gram
# ----------------------------------------------------------------------------

def k_max_hat(first: PreparedBag, second: PreparedBag, cross=None) -> float:
    """Mean over the first bag of each path's best match in the second."""
    cross = cross_normalized(first, second) if cross is None else cross
    return float(np.mean(cross.max(axis=1)))


def k_max(first: PreparedBag, second: PreparedBag, cross=None) -> float:
    cross = cross_normalized(first, second) if cross is None else cross
    return 0.5 * (float(np.mean(cross.max(axis=1))) + float(np.mean(cross.max(axis=0))))


def k_matching(first: PreparedBag, second: PreparedBag, sigma=1.0, cross=None) -> float:
    cross = cross_normalized(first, second) if cross is None else cross
    distance2 = np.maximum(0.0, 2.0 - 2.0 * cross)
    return float(np.mean(np.exp(-distance2 / (2.0 * sigma * sigma))))


def _weighted_cross(first: PreparedBag, second: PreparedBag, cross) -> float:
    return float(_require_model(first).alpha @ cross @ _require_model(second).alpha)


def mean_vector_geometry(first: PreparedBag, second: PreparedBag, cross=None) -> float:
    """Cosine of the angle between the two one-class mean vectors."""
    cross = cross_normalized(first, second) if cross is None else cross
    norm_1, norm_2 = _require_model(first).norm_w, _require_model(second).norm_w
    if norm_1 <= 0 or norm_2 <= 0:
        raise DegenerateModel(f"Zero mean vector for {first.shape_id} or {second.shape_id}")
    return clamp_unit(_weighted_cross(first, second, cross) / (norm_1 * norm_2))


def d_change(first: PreparedBag, second: PreparedBag, cross=None) -> float:
    return math.acos(mean_vector_geometry(first, second, cross))


def k_change(first: PreparedBag, second: PreparedBag, sigma=0.3, cross=None) -> float:
    distance = d_change(first, second, cross)
    return math.exp(-distance * distance / (2.0 * sigma * sigma))


def d_desobry(first: PreparedBag, second: PreparedBag, cross=None) -> float:
    """Angle between mean vectors relative to the angular radii of both support regions."""
    model_1, model_2 = _require_model(first), _require_model(second)
    numerator = d_change(first, second, cross)
    denominator = (math.acos(clamp_unit(model_1.rho / model_1.norm_w))
                   + math.acos(clamp_unit(model_2.rho / model_2.norm_w)))
    if denominator < ZERO_ARC:
        raise ZeroDenominator(f"Both support regions of {first.shape_id} and {second.shape_id} are points")
    return numerator / denominator


def k_suard(first: PreparedBag, second: PreparedBag, cross=None) -> float:
    cross = cross_normalized(first, second) if cross is None else cross
    return _require_model(first).rho * _require_model(second).rho * _weighted_cross(first, second, cross)


def bag_kernel_value(kind: str, first: PreparedBag, second: PreparedBag, config: BagKernelConfig) -> float:
    """Dispatch one bag kernel by name."""
    cross = cross_normalized(first, second)
    if kind == BAG_MAX:
        return k_max(first, second, cross=cross)
    if kind == BAG_MATCHING:
        return k_matching(first, second, sigma=config.sigma_matching, cross=cross)
    if kind == BAG_CHANGE:
        return k_change(first, second, sigma=config.sigma_change, cross=cross)
    if kind == BAG_SUARD:
        return k_suard(first, second, cross=cross)
    raise ValueError(f"Unknown bag kernel {kind!r}; expected one of {BAG_KERNELS}")
