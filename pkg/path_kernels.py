#!/usr/bin/env python3

"""
Kernels between single paths: the classic product kernel and the
hierarchical edit kernel averaging classic kernels over reduced paths.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np

from paths import Path, PathHierarchy
from utils import axis_angle_difference, rbf

logger = logging.getLogger(__name__)

KERNEL_CLASSIC = 'classic'
KERNEL_EDIT = 'edit'
PATH_KERNELS = (KERNEL_CLASSIC, KERNEL_EDIT)


class PathKernelError(Exception):
    pass


class MismatchedD(PathKernelError):
    pass


@dataclass(frozen=True)
class PathKernelConfig:
    sigma_vertex: float = 0.1
    sigma_edge: float = 0.1
    D: int = 2

    def __post_init__(self):
        if not self.sigma_vertex > 0 or not self.sigma_edge > 0:
            raise ValueError(f"Bandwidths must be > 0, got {self.sigma_vertex}, {self.sigma_edge}")
        if self.D < 0:
            raise ValueError(f"D must be >= 0, got {self.D}")


DEFAULT_CONFIG = PathKernelConfig()


def k_node(a, b, sigma_vertex=DEFAULT_CONFIG.sigma_vertex) -> float:
    return rbf((float(a) - float(b)) ** 2, sigma_vertex)


def edge_distance2(e1, e2) -> float:
    """Squared distance between (weight, angle) edge features, angles folded on the axis circle."""
    dw = float(e1[0]) - float(e2[0])
    dtheta = axis_angle_difference(e1[1], e2[1])
    return dw * dw + dtheta * dtheta


def k_edge(e1, e2, sigma_edge=DEFAULT_CONFIG.sigma_edge) -> float:
    return rbf(edge_distance2(e1, e2), sigma_edge)


def k_classic(h: Path, h2: Path, config: PathKernelConfig = DEFAULT_CONFIG) -> float:
    if h.length != h2.length:
        return 0.0
    value = k_node(h.node_attrs[0], h2.node_attrs[0], config.sigma_vertex)
    for i in range(1, len(h.node_ids)):
        value *= k_edge(h.edge_attrs[i - 1], h2.edge_attrs[i - 1], config.sigma_edge)
        value *= k_node(h.node_attrs[i], h2.node_attrs[i], config.sigma_vertex)
    return value


def d_path2(h: Path, h2: Path, config: PathKernelConfig = DEFAULT_CONFIG) -> float:
    value = k_classic(h, h, config) + k_classic(h2, h2, config) - 2.0 * k_classic(h, h2, config)
    return max(0.0, value)


def k_edit(H: PathHierarchy, H2: PathHierarchy, config: PathKernelConfig = DEFAULT_CONFIG) -> float:
    """Mean of classic kernels between equal-length reductions of two hierarchies."""
    if H.D != H2.D or H.D != config.D:
        raise MismatchedD(f"Hierarchies built with D={H.D} and D={H2.D}, kernel expects D={config.D}")
    if abs(H.length - H2.length) > config.D:
        return 0.0
    total = 0.0
    for level in H.levels:
        for level2 in H2.levels:
            if level.length == level2.length:
                total += k_classic(level, level2, config)
    return total / (config.D + 1)


# ----------------------------------------------------------------------------
# Vectorized cross Gram between two collections of hierarchies
# ----------------------------------------------------------------------------

LevelGroups = Dict[int, Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]


def _group_level(hierarchies: Sequence[PathHierarchy], k: int) -> LevelGroups:
    """Level-k paths grouped by length: (owner indices, node attrs, edge weights, edge angles)."""
    buckets: Dict[int, list] = {}
    for index, hierarchy in enumerate(hierarchies):
        level = hierarchy.level(k)
        if level is not None:
            buckets.setdefault(level.length, []).append((index, level))

    groups: LevelGroups = {}
    for length, members in buckets.items():
        owners = np.array([index for index, _ in members], dtype=int)
        nodes = np.array([level.node_attrs for _, level in members], dtype=float).reshape(len(members), length + 1)
        weights = np.array([[w for w, _ in level.edge_attrs] for _, level in members],
                           dtype=float).reshape(len(members), length)
        angles = np.array([[a for _, a in level.edge_attrs] for _, level in members],
                          dtype=float).reshape(len(members), length)
        groups[length] = (owners, nodes, weights, angles)
    return groups


def _classic_block(group_a, group_b, config: PathKernelConfig) -> np.ndarray:
    _, nodes_a, weights_a, angles_a = group_a
    _, nodes_b, weights_b, angles_b = group_b
    node_sq = ((nodes_a[:, None, :] - nodes_b[None, :, :]) ** 2).sum(axis=2)
    weight_sq = ((weights_a[:, None, :] - weights_b[None, :, :]) ** 2).sum(axis=2)
    dtheta = np.abs(angles_a[:, None, :] - angles_b[None, :, :]) % math.pi
    dtheta = np.minimum(dtheta, math.pi - dtheta)
    angle_sq = (dtheta ** 2).sum(axis=2)
    exponent = node_sq / (2.0 * config.sigma_vertex ** 2) + (weight_sq + angle_sq) / (2.0 * config.sigma_edge ** 2)
    return np.exp(-exponent)


def cross_gram(hierarchies_a: Sequence[PathHierarchy], hierarchies_b: Sequence[PathHierarchy],
               kind: str = KERNEL_EDIT, config: PathKernelConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Raw path-kernel matrix between two hierarchy collections (rows follow hierarchies_a)."""
    if kind not in PATH_KERNELS:
        raise ValueError(f"Unknown path kernel {kind!r}; expected one of {PATH_KERNELS}")

    result = np.zeros((len(hierarchies_a), len(hierarchies_b)), dtype=float)
    if not hierarchies_a or not hierarchies_b:
        return result

    if kind == KERNEL_CLASSIC:
        level_pairs = [(0, 0)]
        scale = 1.0
    else:
        for hierarchy in list(hierarchies_a) + list(hierarchies_b):
            if hierarchy.D != config.D:
                raise MismatchedD(f"Hierarchy built with D={hierarchy.D}, kernel expects D={config.D}")
        level_pairs = [(k, l) for k in range(config.D + 1) for l in range(config.D + 1)]
        scale = 1.0 / (config.D + 1)

    groups_a = {}
    groups_b = {}
    for k, l in level_pairs:
        if k not in groups_a:
            groups_a[k] = _group_level(hierarchies_a, k)
        if l not in groups_b:
            groups_b[l] = _group_level(hierarchies_b, l)
        for length in sorted(groups_a[k]):
            if length not in groups_b[l]:
                continue
            group_a, group_b = groups_a[k][length], groups_b[l][length]
            block = _classic_block(group_a, group_b, config)
            result[np.ix_(group_a[0], group_b[0])] += block
    return result * scale
