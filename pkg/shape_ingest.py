#!/usr/bin/env python3

"""
Shape ingestion: binary masks -> skeleton -> attributed skeletal graph -> maximal spanning tree.

Skeletons are produced by distance-ordered homotopic thinning anchored on the
centres of maximal discs, followed by spur pruning. Every boundary pixel is
credited to its nearest skeleton pixel, which gives the additive branch weight
used on graph edges.
"""

import heapq
import json
import logging
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import networkx as nx
import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage
from scipy.spatial import cKDTree

from artifact_store import ArtifactStore
from utils import chord_angle, principal_axis_angle

logger = logging.getLogger(__name__)

FLAG_DEGENERATE_SKELETON = 'DegenerateSkeleton'
FLAG_ANCHORED_LOOP = 'AnchoredLoop'

# Clockwise from north: N, NE, E, SE, S, SW, W, NW
NEIGHBOUR_OFFSETS: Tuple[Tuple[int, int], ...] = (
    (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1),
)
FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)
EIGHT_CONNECTED = ndimage.generate_binary_structure(2, 2)
_RING_KERNEL = np.array([[1, 1, 1], [1, 0, 1], [1, 1, 1]])

MIN_SIDE = 3
DEFAULT_ANCHOR_SLOPE = 0.75
DEFAULT_SPUR_RATIO = 1.0
WEIGHT_SUM_TOLERANCE = 1e-9

Pixel = Tuple[int, int]


class IngestError(Exception):
    """Base class for shape ingestion failures."""


class UnreadableFile(IngestError):
    pass


class MultipleComponents(IngestError):
    pass


class EmptyMask(IngestError):
    pass


class DisconnectedGraph(IngestError):
    pass


class GraphFormatError(IngestError):
    pass


# ----------------------------------------------------------------------------
# Types
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ShapeImage:
    """Validated binary shape: one 4-connected foreground component."""

    mask: np.ndarray
    shape_id: str
    class_label: Optional[str] = None

    @property
    def width(self) -> int:
        return int(self.mask.shape[1])

    @property
    def height(self) -> int:
        return int(self.mask.shape[0])

    @property
    def foreground_count(self) -> int:
        return int(np.count_nonzero(self.mask))


@dataclass(frozen=True)
class Skeleton:
    """Thin homotopic skeleton of a ShapeImage.

    pixels are (row, col) pairs sorted in scanline order; radius and
    boundary_contribution are aligned with pixels.
    """

    pixels: np.ndarray
    radius: np.ndarray
    boundary_contribution: np.ndarray
    image_shape: Tuple[int, int]
    total_boundary: int

    def as_mask(self) -> np.ndarray:
        mask = np.zeros(self.image_shape, dtype=bool)
        if self.pixels.size:
            mask[self.pixels[:, 0], self.pixels[:, 1]] = True
        return mask

    def pixel_index(self) -> Dict[Pixel, int]:
        return {(int(r), int(c)): i for i, (r, c) in enumerate(self.pixels)}

    def __len__(self) -> int:
        return int(self.pixels.shape[0])


@dataclass(frozen=True)
class SkeletalGraph:
    """Attributed skeletal multigraph.

    Nodes carry pos=(x, y) and attr (normalized distance to the gravity
    center). Edges carry weight, angle and pixel_chain.
    """

    graph: nx.MultiGraph
    axis_angle: float
    shape_id: str
    class_label: Optional[str] = None
    flags: Tuple[str, ...] = ()

    @property
    def total_weight(self) -> float:
        return float(sum(w for _, _, w in self.graph.edges(data='weight')))

    def cycle_count(self) -> int:
        g = self.graph
        return g.number_of_edges() - g.number_of_nodes() + nx.number_connected_components(g)


@dataclass(frozen=True)
class SpanningTree:
    """Maximal spanning tree of a skeletal graph (simple nx.Graph).

    Treated as immutable: every reduction works on a copy obtained through
    with_graph().
    """

    graph: nx.Graph
    axis_angle: float
    shape_id: str
    class_label: Optional[str] = None
    flags: Tuple[str, ...] = field(default=())

    @property
    def total_weight(self) -> float:
        return float(sum(w for _, _, w in self.graph.edges(data='weight')))

    @property
    def node_ids(self) -> List[int]:
        return sorted(self.graph.nodes)

    def degree(self, node) -> int:
        return int(self.graph.degree(node))

    def neighbors(self, node) -> List[int]:
        return sorted(self.graph.neighbors(node))

    def weight(self, u, v) -> float:
        return float(self.graph.edges[u, v]['weight'])

    def angle(self, u, v) -> float:
        return float(self.graph.edges[u, v]['angle'])

    def attr(self, node) -> float:
        return float(self.graph.nodes[node]['attr'])

    def position(self, node) -> Tuple[float, float]:
        x, y = self.graph.nodes[node]['pos']
        return float(x), float(y)

    def branch_weight(self, anchor, start) -> float:
        """W(start): weight of edge anchor-start plus the subtree hanging from start away from anchor."""
        total = self.weight(anchor, start)
        visited = {anchor, start}
        stack = [start]
        while stack:
            node = stack.pop()
            for nbr in sorted(self.graph.neighbors(node)):
                if nbr in visited:
                    continue
                visited.add(nbr)
                total += self.weight(node, nbr)
                stack.append(nbr)
        return total

    def with_graph(self, graph: nx.Graph) -> 'SpanningTree':
        return replace(self, graph=graph)


# ----------------------------------------------------------------------------
# Mask loading and validation
# ----------------------------------------------------------------------------

def validate_mask(mask) -> np.ndarray:
    """Return a boolean copy of mask or raise when it violates the shape invariants."""
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise ValueError(f"Mask must be two-dimensional, got shape {mask.shape}")
    if mask.shape[0] < MIN_SIDE or mask.shape[1] < MIN_SIDE:
        raise ValueError(f"Mask must be at least {MIN_SIDE}x{MIN_SIDE}, got {mask.shape[1]}x{mask.shape[0]}")
    if not mask.any():
        raise EmptyMask("Mask has no foreground pixel")
    _, components = ndimage.label(mask, structure=FOUR_CONNECTED)
    if components != 1:
        raise MultipleComponents(f"Mask has {components} 4-connected foreground components")
    return mask.copy()


def shape_from_array(mask, shape_id, class_label=None) -> ShapeImage:
    """Build a validated ShapeImage from an in-memory array."""
    return ShapeImage(mask=validate_mask(mask), shape_id=str(shape_id), class_label=class_label)


def load_mask(file_path, shape_id=None, class_label=None, png_foreground='light') -> ShapeImage:
    """Load a PBM (P1/P4) or PNG bitmap as a ShapeImage.

    PBM foreground is the set bit (black). PNG is thresholded at 128 and
    png_foreground selects whether light or dark pixels are the shape.
    """
    path = Path(file_path)
    if not path.is_file():
        raise UnreadableFile(f"Bitmap not found: {path}")

    try:
        with Image.open(path) as img:
            fmt, mode = img.format, img.mode
            gray = np.asarray(img.convert('L'))
    except (OSError, ValueError, UnidentifiedImageError) as exc:
        raise UnreadableFile(f"Cannot decode {path}: {exc}") from exc

    if fmt == 'PPM':
        # Pillow reports every portable map as PPM; only bitmaps (P1/P4) open in mode '1'
        if mode != '1':
            raise UnreadableFile(f"{path} is a portable map but not a bitmap (mode {mode})")
        mask = gray < 128
    elif fmt == 'PNG':
        if png_foreground == 'light':
            mask = gray >= 128
        elif png_foreground == 'dark':
            mask = gray < 128
        else:
            raise ValueError(f"png_foreground must be 'light' or 'dark', got {png_foreground!r}")
    else:
        raise UnreadableFile(f"Unsupported bitmap format {fmt!r} for {path}")

    image = shape_from_array(mask, shape_id or path.stem, class_label)
    logger.debug("Loaded %s: %dx%d, %d foreground pixels",
                 path, image.width, image.height, image.foreground_count)
    return image


def count_holes(mask) -> int:
    """Number of background 4-components enclosed by the foreground."""
    padded = np.pad(np.asarray(mask, dtype=bool), 1)
    labels, count = ndimage.label(~padded, structure=FOUR_CONNECTED)
    # The padded frame belongs to the single outer component
    return count - 1


def count_components(mask) -> int:
    _, count = ndimage.label(np.asarray(mask, dtype=bool), structure=EIGHT_CONNECTED)
    return int(count)


# ----------------------------------------------------------------------------
# Skeletonization
# ----------------------------------------------------------------------------

def _ring_components(bits, adjacent, seeds=None):
    present = [i for i in range(8) if bits & (1 << i)]
    seen = set()
    count = 0
    for start in present:
        if start in seen:
            continue
        component = {start}
        stack = [start]
        while stack:
            a = stack.pop()
            for b in present:
                if b not in component and adjacent(a, b):
                    component.add(b)
                    stack.append(b)
        seen |= component
        if seeds is None or component & seeds:
            count += 1
    return count


def _build_simple_point_table() -> np.ndarray:
    """Lookup of simple-point status for every 8-neighbourhood code (8/4 topology)."""

    def eight_adjacent(a, b):
        (ra, ca), (rb, cb) = NEIGHBOUR_OFFSETS[a], NEIGHBOUR_OFFSETS[b]
        return max(abs(ra - rb), abs(ca - cb)) == 1

    def four_adjacent(a, b):
        (ra, ca), (rb, cb) = NEIGHBOUR_OFFSETS[a], NEIGHBOUR_OFFSETS[b]
        return abs(ra - rb) + abs(ca - cb) == 1

    table = np.zeros(256, dtype=bool)
    four_neighbours = {0, 2, 4, 6}
    for code in range(256):
        foreground = _ring_components(code, eight_adjacent)
        background = _ring_components(~code & 0xFF, four_adjacent, seeds=four_neighbours)
        table[code] = foreground == 1 and background == 1
    return table


SIMPLE_POINT_TABLE = _build_simple_point_table()


def _neighbour_code(work, r, c) -> int:
    code = 0
    for bit, (dr, dc) in enumerate(NEIGHBOUR_OFFSETS):
        if work[r + dr, c + dc]:
            code |= 1 << bit
    return code


def _neighbour_count(work, r, c) -> int:
    return sum(1 for dr, dc in NEIGHBOUR_OFFSETS if work[r + dr, c + dc])


def _is_simple(work, r, c) -> bool:
    return bool(SIMPLE_POINT_TABLE[_neighbour_code(work, r, c)])


class _QuarterTurnFrame:
    """A mask's canonical quarter turn and the pixel maps to and from it.

    Every rotation of a mask by a multiple of 90 degrees has the same
    canonical turn, so scanline tie-breaks made in that frame do not depend
    on how the mask was presented.
    """

    def __init__(self, mask):
        mask = np.asarray(mask, dtype=bool)
        self.width = mask.shape[1]
        self.turns = min(range(4), key=lambda k: (np.rot90(mask, k).shape, np.rot90(mask, k).tobytes(), k))
        # input flat index of every canonical pixel
        self.source = np.rot90(np.arange(mask.size).reshape(mask.shape), self.turns)
        self.target = np.empty(mask.size, dtype=np.intp)
        self.target[self.source.ravel()] = np.arange(mask.size)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.source.shape

    def canonical(self, array) -> np.ndarray:
        return np.ascontiguousarray(np.rot90(array, self.turns))

    def to_input(self, rows, cols):
        return np.divmod(self.source[rows, cols], self.width)

    def to_canonical(self, rows, cols):
        flat = self.target[np.asarray(rows) * self.width + np.asarray(cols)]
        return np.divmod(flat, self.shape[1])


def _maximal_disc_centres(dist, foreground, slope) -> np.ndarray:
    """Foreground pixels whose disc is not swallowed by a neighbour's disc."""
    padded = np.pad(dist, 1)
    dominated = np.zeros(dist.shape, dtype=bool)
    rows, cols = dist.shape
    for dr, dc in NEIGHBOUR_OFFSETS:
        shifted = padded[1 + dr:1 + dr + rows, 1 + dc:1 + dc + cols]
        step = math.hypot(dr, dc)
        dominated |= (shifted - dist) >= slope * step - 1e-9
    return foreground & ~dominated


def _thin(foreground, dist, anchors) -> np.ndarray:
    """Delete simple non-anchor pixels in increasing distance order."""
    work = foreground.copy()
    heap = [(float(dist[r, c]), int(r), int(c)) for r, c in zip(*np.nonzero(foreground & ~anchors))]
    heapq.heapify(heap)
    while heap:
        _, r, c = heapq.heappop(heap)
        if not work[r, c] or not _is_simple(work, r, c):
            continue
        work[r, c] = False
        for dr, dc in NEIGHBOUR_OFFSETS:
            rr, cc = r + dr, c + dc
            if work[rr, cc] and not anchors[rr, cc]:
                heapq.heappush(heap, (float(dist[rr, cc]), rr, cc))
    return work


def _remove_redundant_pixels(work, dist) -> None:
    """Drop simple pixels that are not end points until the skeleton is one pixel thick."""
    changed = True
    while changed:
        changed = False
        order = sorted(zip(*np.nonzero(work)), key=lambda p: (dist[p], p[0], p[1]))
        for r, c in order:
            if _neighbour_count(work, r, c) >= 2 and _is_simple(work, r, c):
                work[r, c] = False
                changed = True


def _walk_terminal(work, degree, end) -> Tuple[List[Pixel], Pixel, float]:
    """Follow degree-2 pixels from an end point; return (chain, stop pixel, length)."""
    chain = [end]
    prev, cur = None, end
    length = 0.0
    while True:
        r, c = cur
        nxt = None
        for dr, dc in NEIGHBOUR_OFFSETS:
            q = (r + dr, c + dc)
            if q != prev and work[q] and q not in chain:
                nxt = q
                break
        if nxt is None:
            return chain, cur, length
        length += math.hypot(nxt[0] - r, nxt[1] - c)
        if degree[nxt] != 2:
            return chain, nxt, length
        chain.append(nxt)
        prev, cur = cur, nxt


def _prune_spurs_once(work, dist, spur_ratio) -> bool:
    """One pruning pass over a degree snapshot; True when anything was removed."""
    degree = ndimage.convolve(work.astype(int), _RING_KERNEL, mode='constant') * work
    ends = sorted(zip(*np.nonzero(work & (degree == 1))))
    doomed = []
    for end in ends:
        chain, stop, length = _walk_terminal(work, degree, end)
        if degree[stop] >= 3 and length < spur_ratio * dist[stop]:
            doomed.extend(chain)
    for p in doomed:
        work[p] = False
    return bool(doomed)


def _trim_lone_line(work, dist, spur_ratio) -> None:
    """A junction-free line keeps only the ends that poke out of its widest disc."""
    degree = ndimage.convolve(work.astype(int), _RING_KERNEL, mode='constant') * work
    if work.sum() <= 1 or np.any(degree[work] >= 3):
        return
    ends = sorted(zip(*np.nonzero(work & (degree == 1))))
    if len(ends) != 2:
        return
    line, _, _ = _walk_terminal(work, np.full(work.shape, 2), ends[0])
    radii = [dist[p] for p in line]
    centre = int(np.argmax(radii))
    cumulative = [0.0]
    for a, b in zip(line, line[1:]):
        cumulative.append(cumulative[-1] + math.hypot(a[0] - b[0], a[1] - b[1]))
    reach = spur_ratio * radii[centre]

    if cumulative[centre] < reach:
        for p in line[:centre]:
            work[p] = False
    if cumulative[-1] - cumulative[centre] < reach:
        for p in line[centre + 1:]:
            work[p] = False


def _prune_spurs(work, dist, spur_ratio) -> None:
    """Remove terminal branches lying inside the maximal disc they emerge from."""
    if spur_ratio <= 0:
        return
    while _prune_spurs_once(work, dist, spur_ratio):
        # pruning can leave small closed clumps behind
        _remove_redundant_pixels(work, dist)
    _trim_lone_line(work, dist, spur_ratio)
    _remove_redundant_pixels(work, dist)


def _block_corners(work) -> np.ndarray:
    """Top-left pixels of fully set 2x2 blocks."""
    blocks = work[:-1, :-1] & work[1:, :-1] & work[:-1, 1:] & work[1:, 1:]
    return np.argwhere(blocks)


def _topology(work) -> Tuple[int, int]:
    return count_components(work), count_holes(work)


def _break_block(work, foreground, dist, corner, topology) -> bool:
    """Drop or push outward one pixel of the block at corner; False when every try changes topology."""
    r, c = corner
    before = len(_block_corners(work))
    members = sorted(((r + dr, c + dc) for dr in (0, 1) for dc in (0, 1)), key=lambda p: (dist[p], p))
    for p in members:
        step_r = -1 if p[0] == r else 1
        step_c = -1 if p[1] == c else 1
        moves = [None] + [q for q in ((p[0] + step_r, p[1]), (p[0], p[1] + step_c))
                          if foreground[q] and not work[q]]
        for q in moves:
            work[p] = False
            if q is not None:
                work[q] = True
            if len(_block_corners(work)) < before and _topology(work) == topology:
                return True
            work[p] = True
            if q is not None:
                work[q] = False
    return False


def _break_blocks(work, foreground, dist) -> None:
    """Clear 2x2 pixel blocks without changing the skeleton's components or holes."""
    if len(_block_corners(work)) == 0:
        return
    topology = _topology(work)
    stuck = set()
    while True:
        pending = [tuple(int(v) for v in b) for b in _block_corners(work)]
        pending = [b for b in pending if b not in stuck]
        if not pending:
            return
        if not _break_block(work, foreground, dist, pending[0], topology):
            stuck.add(pending[0])
            logger.debug("Could not break the 2x2 skeleton block at %s", pending[0])


def skeletonize(image: ShapeImage, anchor_slope=DEFAULT_ANCHOR_SLOPE,
                spur_ratio=DEFAULT_SPUR_RATIO) -> Skeleton:
    """Thin, homotopic skeleton of a shape with per-pixel radius and boundary credit.

    All order-dependent steps run in the mask's canonical quarter turn; the
    returned pixels are in input coordinates, sorted in scanline order.
    """
    frame = _QuarterTurnFrame(image.mask)
    foreground = np.pad(frame.canonical(image.mask), 1)
    dist = ndimage.distance_transform_edt(foreground)
    anchors = _maximal_disc_centres(dist, foreground, anchor_slope)

    work = _thin(foreground, dist, anchors)
    _remove_redundant_pixels(work, dist)
    _prune_spurs(work, dist, spur_ratio)
    _break_blocks(work, foreground, dist)
    _remove_redundant_pixels(work, dist)

    rows, cols = np.nonzero(work)
    radius = dist[rows, cols].astype(float)

    # Boundary pixels: foreground with a 4-neighbour in the background
    eroded = ndimage.binary_erosion(foreground, structure=FOUR_CONNECTED)
    boundary = np.argwhere(foreground & ~eroded) - 1
    contribution = _assign_boundary(np.stack([rows - 1, cols - 1], axis=1), boundary)

    input_rows, input_cols = frame.to_input(rows - 1, cols - 1)
    order = np.lexsort((input_cols, input_rows))
    skeleton = Skeleton(
        pixels=np.stack([input_rows[order], input_cols[order]], axis=1).astype(int),
        radius=radius[order],
        boundary_contribution=contribution[order],
        image_shape=image.mask.shape,
        total_boundary=int(boundary.shape[0]),
    )
    logger.debug("Skeleton of %s: %d pixels, %d boundary pixels",
                 image.shape_id, len(skeleton), skeleton.total_boundary)
    return skeleton


def _assign_boundary(pixels, boundary) -> np.ndarray:
    """Count boundary pixels per nearest skeleton pixel; ties go to the lowest scanline index."""
    contribution = np.zeros(pixels.shape[0], dtype=int)
    if pixels.shape[0] == 0 or boundary.shape[0] == 0:
        return contribution
    k = min(8, pixels.shape[0])
    dists, idxs = cKDTree(pixels).query(boundary, k=k)
    dists = np.asarray(dists).reshape(boundary.shape[0], k)
    idxs = np.asarray(idxs).reshape(boundary.shape[0], k)
    nearest = dists.min(axis=1, keepdims=True)
    candidates = np.where(dists <= nearest + 1e-9, idxs, pixels.shape[0])
    chosen = candidates.min(axis=1)
    np.add.at(contribution, chosen, 1)
    return contribution


# ----------------------------------------------------------------------------
# Skeletal graph
# ----------------------------------------------------------------------------

def _pixel_neighbours(p, pixel_set):
    r, c = p
    return [(r + dr, c + dc) for dr, dc in NEIGHBOUR_OFFSETS if (r + dr, c + dc) in pixel_set]


def _order_chain(pixel_set, start) -> List[Pixel]:
    ordered = [start]
    seen = {start}
    cur = start
    while True:
        nxt = next((q for q in _pixel_neighbours(cur, pixel_set) if q not in seen), None)
        if nxt is None:
            return ordered
        ordered.append(nxt)
        seen.add(nxt)
        cur = nxt


def _cluster_representative(pixels) -> Pixel:
    centre_r = sum(p[0] for p in pixels) / len(pixels)
    centre_c = sum(p[1] for p in pixels) / len(pixels)
    return min(pixels, key=lambda p: ((p[0] - centre_r) ** 2 + (p[1] - centre_c) ** 2, p[0], p[1]))


def _gravity_attr(mask):
    rows, cols = np.nonzero(mask)
    gx, gy = cols.mean(), rows.mean()
    max_dist = float(np.max(np.hypot(cols - gx, rows - gy)))

    def attr(x, y):
        if max_dist == 0.0:
            return 0.0
        return min(1.0, float(math.hypot(x - gx, y - gy)) / max_dist)

    return attr


def build_graph(skeleton: Skeleton, image: ShapeImage) -> SkeletalGraph:
    """One node per end point or junction cluster, one edge per skeleton branch."""
    if len(skeleton) == 0:
        raise IngestError(f"Empty skeleton for shape {image.shape_id}")

    axis = principal_axis_angle(image.mask)
    attr_of = _gravity_attr(image.mask)
    total_boundary = max(skeleton.total_boundary, 1)

    if len(skeleton) == 1:
        r, c = (int(v) for v in skeleton.pixels[0])
        graph = nx.MultiGraph()
        graph.add_node(0, pos=(c, r), attr=attr_of(c, r))
        logger.warning("Shape %s has a single-pixel skeleton; emitting a one-node graph", image.shape_id)
        return SkeletalGraph(graph, axis, image.shape_id, image.class_label,
                             flags=(FLAG_DEGENERATE_SKELETON,))

    # Clusters, chains and representatives are chosen in the canonical frame
    frame = _QuarterTurnFrame(image.mask)
    rows, cols = frame.to_canonical(skeleton.pixels[:, 0], skeleton.pixels[:, 1])
    contribution = {(int(r), int(c)): int(m) for r, c, m in zip(rows, cols, skeleton.boundary_contribution)}

    def to_input(p) -> Pixel:
        r, c = frame.to_input(p[0], p[1])
        return int(r), int(c)

    pixel_set = set(contribution)
    degree = {p: len(_pixel_neighbours(p, pixel_set)) for p in sorted(pixel_set)}
    flags = []

    # Node clusters: each end pixel alone, touching junction pixels together
    node_pixels: List[List[Pixel]] = []
    node_of: Dict[Pixel, int] = {}
    junction_mask = np.zeros(frame.shape, dtype=bool)
    for p, d in degree.items():
        if d >= 3:
            junction_mask[p] = True
        elif d <= 1:
            node_of[p] = len(node_pixels)
            node_pixels.append([p])
    labels, count = ndimage.label(junction_mask, structure=EIGHT_CONNECTED)
    for label in range(1, count + 1):
        members = [(int(r), int(c)) for r, c in np.argwhere(labels == label)]
        for p in members:
            node_of[p] = len(node_pixels)
        node_pixels.append(members)

    raw_edges: List[Tuple[int, int, List[Pixel]]] = []

    # Direct node-to-node contacts (end pixel touching another node)
    seen_pairs = set()
    for key, members in enumerate(node_pixels):
        if len(members) != 1 or degree[members[0]] != 1:
            continue
        (nbr,) = _pixel_neighbours(members[0], pixel_set)
        other = node_of.get(nbr)
        if other is not None and other != key:
            pair = (min(key, other), max(key, other))
            if pair not in seen_pairs:
                seen_pairs.add(pair)
                raw_edges.append((pair[0], pair[1], []))

    chain_mask = np.zeros(frame.shape, dtype=bool)
    for p in pixel_set:
        if p not in node_of:
            chain_mask[p] = True
    labels, count = ndimage.label(chain_mask, structure=EIGHT_CONNECTED)
    for label in range(1, count + 1):
        members = {(int(r), int(c)) for r, c in np.argwhere(labels == label)}
        touching = {}
        for p in sorted(members):
            for q in _pixel_neighbours(p, pixel_set):
                if q in node_of:
                    touching.setdefault(p, set()).add(node_of[q])
        nodes_touched = sorted(set().union(*touching.values())) if touching else []

        if not nodes_touched:
            # Closed ring: anchor two nodes on it
            chain = _order_chain(members, min(members))
            mid = len(chain) // 2
            a, b = len(node_pixels), len(node_pixels) + 1
            node_pixels.extend([[chain[0]], [chain[mid]]])
            raw_edges.append((a, b, chain[1:mid]))
            raw_edges.append((b, a, chain[mid + 1:]))
            flags.append(FLAG_ANCHORED_LOOP)
            continue

        terminals = sorted(p for p in members if len(_pixel_neighbours(p, members)) <= 1)
        start = next((p for p in terminals if p in touching), terminals[0] if terminals else min(members))
        chain = _order_chain(members, start)
        u = min(touching.get(chain[0], {nodes_touched[0]}))
        ends = touching.get(chain[-1], set())
        others = sorted(ends - {u}) if len(chain) > 1 else sorted(set(nodes_touched) - {u})
        if others:
            raw_edges.append((u, others[0], chain))
        else:
            # Loop returning to the same node: split it with an anchor
            mid = len(chain) // 2
            m = len(node_pixels)
            node_pixels.append([chain[mid]])
            raw_edges.append((u, m, chain[:mid]))
            raw_edges.append((m, u, chain[mid + 1:]))
            flags.append(FLAG_ANCHORED_LOOP)

    # Stable ids: input scanline order of node representatives
    representatives = [to_input(_cluster_representative(members)) for members in node_pixels]
    order = sorted(range(len(node_pixels)), key=lambda k: representatives[k])
    new_id = {old: new for new, old in enumerate(order)}

    graph = nx.MultiGraph()
    for old in order:
        r, c = representatives[old]
        graph.add_node(new_id[old], pos=(c, r), attr=attr_of(c, r))

    incidence = [0] * len(node_pixels)
    for u, v, _ in raw_edges:
        incidence[u] += 1
        incidence[v] += 1
    node_mass = [sum(contribution[p] for p in members) for members in node_pixels]

    for u, v, chain in raw_edges:
        mass = sum(contribution[p] for p in chain)
        mass += node_mass[u] / incidence[u] + node_mass[v] / incidence[v]
        pu = graph.nodes[new_id[u]]['pos']
        pv = graph.nodes[new_id[v]]['pos']
        graph.add_edge(
            new_id[u], new_id[v],
            weight=mass / total_boundary,
            angle=chord_angle(pu, pv, axis),
            pixel_chain=tuple((c, r) for r, c in map(to_input, chain)),
        )

    result = SkeletalGraph(graph, axis, image.shape_id, image.class_label, flags=tuple(sorted(set(flags))))
    logger.debug("Graph of %s: %d nodes, %d edges, total weight %.4f",
                 image.shape_id, graph.number_of_nodes(), graph.number_of_edges(), result.total_weight)
    return result


# ----------------------------------------------------------------------------
# Maximal spanning tree
# ----------------------------------------------------------------------------

def max_spanning_tree(skeletal: SkeletalGraph) -> SpanningTree:
    """Kruskal on decreasing weight; ties broken by (min endpoint, max endpoint, key)."""
    source = skeletal.graph
    if source.number_of_nodes() == 0 or not nx.is_connected(source):
        raise DisconnectedGraph(f"Skeletal graph of {skeletal.shape_id} is not connected")

    tree = nx.Graph()
    for node, data in sorted(source.nodes(data=True)):
        tree.add_node(node, pos=tuple(data['pos']), attr=float(data['attr']))

    candidates = sorted(
        (
            (-float(data['weight']), min(u, v), max(u, v), key, data)
            for u, v, key, data in source.edges(keys=True, data=True)
            if u != v
        ),
        key=lambda item: item[:4],
    )
    components = nx.utils.UnionFind(tree.nodes)
    for neg_weight, u, v, _, data in candidates:
        if components[u] == components[v]:
            continue
        components.union(u, v)
        tree.add_edge(u, v, weight=-neg_weight, angle=float(data['angle']))
        if tree.number_of_edges() == tree.number_of_nodes() - 1:
            break

    return SpanningTree(tree, skeletal.axis_angle, skeletal.shape_id, skeletal.class_label, skeletal.flags)


def ingest_shape(image: ShapeImage, anchor_slope=DEFAULT_ANCHOR_SLOPE,
                 spur_ratio=DEFAULT_SPUR_RATIO) -> Tuple[SkeletalGraph, SpanningTree]:
    """Full ingestion chain for one validated shape."""
    skeleton = skeletonize(image, anchor_slope=anchor_slope, spur_ratio=spur_ratio)
    graph = build_graph(skeleton, image)
    return graph, max_spanning_tree(graph)


# ----------------------------------------------------------------------------
# Graph interchange
# ----------------------------------------------------------------------------

def graph_to_payload(skeletal: SkeletalGraph) -> dict:
    g = skeletal.graph
    return {
        'nodes': [
            {'id': int(n), 'x': float(d['pos'][0]), 'y': float(d['pos'][1]), 'attr': float(d['attr'])}
            for n, d in sorted(g.nodes(data=True))
        ],
        'edges': [
            {'u': int(u), 'v': int(v), 'weight': float(d['weight']), 'angle': float(d['angle'])}
            for u, v, d in sorted(g.edges(data=True), key=lambda e: (min(e[0], e[1]), max(e[0], e[1])))
        ],
        'meta': {
            'shape_id': skeletal.shape_id,
            'class': skeletal.class_label,
            'axis_angle': float(skeletal.axis_angle),
            'flags': list(skeletal.flags),
        },
    }


def graph_from_payload(payload: dict, shape_id=None, class_label=None) -> SkeletalGraph:
    """Rebuild a SkeletalGraph from its JSON document; precomputed graphs bypass skeletonization."""
    try:
        meta = payload.get('meta', {}) or {}
        graph = nx.MultiGraph()
        for node in payload['nodes']:
            attr = float(node['attr'])
            if not 0.0 <= attr <= 1.0:
                raise GraphFormatError(f"Node {node['id']} attr {attr} outside [0, 1]")
            graph.add_node(int(node['id']), pos=(float(node['x']), float(node['y'])), attr=attr)
        for edge in payload['edges']:
            u, v = int(edge['u']), int(edge['v'])
            if u not in graph or v not in graph:
                raise GraphFormatError(f"Edge ({u}, {v}) references an unknown node")
            weight = float(edge['weight'])
            if weight < 0:
                raise GraphFormatError(f"Edge ({u}, {v}) has negative weight {weight}")
            graph.add_edge(u, v, weight=weight, angle=float(edge['angle']) % math.pi, pixel_chain=())
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphFormatError(f"Malformed graph document: {exc}") from exc

    return SkeletalGraph(
        graph=graph,
        axis_angle=float(meta.get('axis_angle', 0.0)),
        shape_id=str(shape_id or meta.get('shape_id') or 'graph'),
        class_label=class_label if class_label is not None else meta.get('class'),
        flags=tuple(meta.get('flags', ())),
    )


def load_graph(file_path, shape_id=None, class_label=None) -> SkeletalGraph:
    path = Path(file_path)
    try:
        payload = json.loads(path.read_text(encoding='utf-8'))
    except FileNotFoundError as exc:
        raise UnreadableFile(f"Graph file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"Invalid JSON in {path}: {exc}") from exc
    return graph_from_payload(payload, shape_id=shape_id or path.stem, class_label=class_label)


def save_graph(skeletal: SkeletalGraph, file_path, store=None) -> str:
    """Atomically write the graph document; returns the written path."""
    store = store or ArtifactStore(os.path.dirname(os.path.abspath(file_path)))
    return store.write_json(os.path.abspath(file_path), graph_to_payload(skeletal))
