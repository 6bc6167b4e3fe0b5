#!/usr/bin/env python3

import math
import hashlib
import json
import logging

import numpy as np

logger = logging.getLogger(__name__)

# Angles within this distance of pi fold back to 0
ANGLE_FOLD_EPS = 1e-12


def fold_axis_angle(angle):
    """Fold an undirected line angle into [0, pi)."""
    folded = math.fmod(float(angle), math.pi)
    if folded < 0:
        folded += math.pi
    if math.pi - folded < ANGLE_FOLD_EPS:
        folded = 0.0
    return folded


def axis_angle_difference(theta_a, theta_b):
    """Smallest difference between two axis angles (period pi)."""
    diff = abs(float(theta_a) - float(theta_b)) % math.pi
    return min(diff, math.pi - diff)


def chord_angle(p, q, axis_angle):
    """Angle between the line through p and q and the principal axis, in [0, pi).

    Points are (x, y) pairs. A degenerate chord (p == q) has angle 0.
    """
    dx = float(q[0]) - float(p[0])
    dy = float(q[1]) - float(p[1])
    if dx == 0.0 and dy == 0.0:
        return 0.0
    return fold_axis_angle(math.atan2(dy, dx) - axis_angle)


def principal_axis_angle(mask):
    """Orientation of the major principal axis of a boolean mask (x = column, y = row)."""
    rows, cols = np.nonzero(mask)
    if rows.size == 0:
        return 0.0
    x = cols.astype(float) - cols.mean()
    y = rows.astype(float) - rows.mean()
    mu20 = float(np.mean(x * x))
    mu02 = float(np.mean(y * y))
    mu11 = float(np.mean(x * y))
    # atan2(0, 0) == 0: isotropic shapes get the x axis
    return fold_axis_angle(0.5 * math.atan2(2.0 * mu11, mu20 - mu02))


def clamp_unit(value):
    """Clamp a cosine-like value into [-1, 1] before arccos."""
    return max(-1.0, min(1.0, float(value)))


def rbf(squared_distance, sigma):
    """Gaussian RBF on a squared distance."""
    return math.exp(-float(squared_distance) / (2.0 * sigma * sigma))


def fingerprint(payload):
    """Short stable hash of a JSON-serializable payload."""
    encoded = json.dumps(payload, sort_keys=True, separators=(',', ':')).encode('utf-8')
    return hashlib.sha256(encoded).hexdigest()[:16]


def format_float(value):
    """Shortest round-trip float text, used for byte-stable CSV output."""
    return repr(float(value))
