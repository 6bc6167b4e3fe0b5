#!/usr/bin/env python3

"""
Desk-scale synthetic shapes: simple parametric masks for tests and
acceptance runs, plus a small labelled dataset writer.
"""

import logging
import math
import os

import numpy as np
from PIL import Image, ImageDraw
from scipy import ndimage

from artifact_store import ArtifactStore

logger = logging.getLogger(__name__)

MARGIN = 2
DATASET_CLASSES = ('stars', 'bars', 'crosses')


def _canvas(height, width):
    return np.zeros((height + 2 * MARGIN, width + 2 * MARGIN), dtype=bool)


def rectangle(width, height):
    mask = _canvas(height, width)
    mask[MARGIN:MARGIN + height, MARGIN:MARGIN + width] = True
    return mask


def square(size):
    return rectangle(size, size)


def disk(radius):
    side = 2 * radius + 1
    mask = _canvas(side, side)
    centre = MARGIN + radius
    rows, cols = np.ogrid[:mask.shape[0], :mask.shape[1]]
    mask[(rows - centre) ** 2 + (cols - centre) ** 2 <= radius * radius] = True
    return mask


def plus_sign(arm_length, arm_width):
    """Cross with four equal arms around a arm_width x arm_width centre."""
    side = 2 * arm_length + arm_width
    mask = _canvas(side, side)
    lo = MARGIN + arm_length
    mask[MARGIN:MARGIN + side, lo:lo + arm_width] = True
    mask[lo:lo + arm_width, MARGIN:MARGIN + side] = True
    return mask


def l_shape(length, width):
    mask = _canvas(length, length)
    mask[MARGIN:MARGIN + length, MARGIN:MARGIN + width] = True
    mask[MARGIN + length - width:MARGIN + length, MARGIN:MARGIN + length] = True
    return mask


def annulus(outer, inner):
    """Square of side outer with a centred square hole of side inner."""
    mask = square(outer)
    offset = MARGIN + (outer - inner) // 2
    mask[offset:offset + inner, offset:offset + inner] = False
    return mask


def square_with_protrusion(size, bump_width=None, bump_length=3):
    """Square with a bump centred on its top side.

    The default bump spans the whole side: the side is pushed outward and the
    skeleton's centre junction opens into a short ridge of bump_length pixels.
    """
    bump_width = size if bump_width is None else bump_width
    mask = _canvas(size + bump_length, size)
    top = MARGIN + bump_length
    mask[top:top + size, MARGIN:MARGIN + size] = True
    left = MARGIN + (size - bump_width) // 2
    mask[MARGIN:top, left:left + bump_width] = True
    return mask


def rotate90(mask, turns=1):
    return np.rot90(mask, turns).copy()


def largest_component(mask):
    labels, count = ndimage.label(mask, structure=ndimage.generate_binary_structure(2, 1))
    if count <= 1:
        return mask
    sizes = ndimage.sum(mask, labels, index=range(1, count + 1))
    return labels == (int(np.argmax(sizes)) + 1)


def polygon_mask(vertices, height, width):
    """Rasterize (x, y) vertices into a boolean mask."""
    image = Image.new('1', (width, height), 0)
    ImageDraw.Draw(image).polygon([tuple(map(float, v)) for v in vertices], fill=1, outline=1)
    return np.asarray(image, dtype=bool)


def noisy_polygon(rng, n_vertices=7, radius=16, noise=0.25):
    """Star-convex polygon whose vertex radii are jittered by +-noise."""
    side = 2 * radius + 2 * MARGIN + 1
    centre = side / 2.0
    offset = rng.uniform(0, 2 * math.pi)
    vertices = []
    for k in range(n_vertices):
        theta = offset + 2 * math.pi * k / n_vertices
        r = radius * (1.0 + noise * rng.uniform(-1.0, 1.0))
        vertices.append((centre + r * math.cos(theta), centre + r * math.sin(theta)))
    return largest_component(polygon_mask(vertices, side, side))


def star(rng, arms=5, outer=16, inner=6, noise=0.1):
    side = 2 * outer + 2 * MARGIN + 1
    centre = side / 2.0
    offset = rng.uniform(0, 2 * math.pi)
    vertices = []
    for k in range(2 * arms):
        theta = offset + math.pi * k / arms
        base = outer if k % 2 == 0 else inner
        r = base * (1.0 + noise * rng.uniform(-1.0, 1.0))
        vertices.append((centre + r * math.cos(theta), centre + r * math.sin(theta)))
    return largest_component(polygon_mask(vertices, side, side))


def jittered_bar(rng):
    width = int(rng.integers(24, 36))
    height = int(rng.integers(6, 10))
    mask = rectangle(width, height)
    # A few notches on the long sides
    for _ in range(int(rng.integers(0, 3))):
        col = int(rng.integers(MARGIN + 3, MARGIN + width - 3))
        row = MARGIN if rng.uniform() < 0.5 else MARGIN + height - 1
        mask[row, col] = False
    return largest_component(mask)


def jittered_cross(rng):
    return plus_sign(int(rng.integers(7, 11)), int(rng.choice([3, 5])))


def write_pbm(mask, file_path):
    """Save a mask as a binary PBM with the shape in black (set bits)."""
    ink = np.where(np.asarray(mask, dtype=bool), 0, 255).astype(np.uint8)
    Image.fromarray(ink).convert('1').save(file_path, format='PPM')
    return file_path


def write_dataset(out_dir, per_class=6, seed=0, store=None):
    """Write a labelled synthetic dataset and its manifest; returns the manifest path."""
    rng = np.random.default_rng(seed)
    os.makedirs(out_dir, exist_ok=True)
    makers = {
        'stars': lambda: star(rng, arms=int(rng.integers(4, 6))),
        'bars': lambda: jittered_bar(rng),
        'crosses': lambda: jittered_cross(rng),
    }
    rows = []
    for label in DATASET_CLASSES:
        for index in range(per_class):
            shape_id = f"{label}_{index:02d}"
            file_name = f"{shape_id}.pbm"
            write_pbm(makers[label](), os.path.join(out_dir, file_name))
            rows.append((shape_id, file_name, label))

    store = store or ArtifactStore(out_dir)
    manifest_path = store.write_csv(os.path.abspath(os.path.join(out_dir, 'manifest.csv')),
                                    ['shape_id', 'path', 'class_label'], rows)
    logger.info("Synthetic dataset with %d shapes written to %s", len(rows), out_dir)
    return manifest_path
