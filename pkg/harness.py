#!/usr/bin/env python3

"""
Experiment pipelines: dataset manifests, Gram matrices over bags of paths,
the good-matches retrieval metric and the zero-false-positive SVM protocol.
"""

import csv
import json
import logging
import math
import os
from dataclasses import dataclass, field
from multiprocessing import Pool
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from artifact_store import ArtifactStore
from bag_kernels import BAG_KERNELS, BagKernelError, bag_kernel_value, cross_normalized, k_change, k_max, \
    prepare_bag
from path_kernels import KERNEL_CLASSIC, KERNEL_EDIT, PATH_KERNELS, cross_gram
from paths import BagOfPaths, PathError, bag_to_payload, build_hierarchy, enumerate_bag, path_from_nodes
from settings import ExperimentSettings
from shape_ingest import IngestError, SkeletalGraph, ingest_shape, load_graph, load_mask, save_graph, \
    max_spanning_tree, shape_from_array
from svm_models import TAG_INDEFINITE, GramMatrix, SvmError, gram_spectrum, predict_binary, \
    select_margin_parameter
from synthetic import square, square_with_protrusion
from utils import format_float
from version_manager import get_current_version

logger = logging.getLogger(__name__)

STANDARD_SELECTORS = ('max-classic', 'change-classic', 'new', 'matching-classic')
SELECTOR_ALIASES = {'new': 'change-edit'}
TOP_NEIGHBOURS = 10
GRAPH_SUFFIX = '.json'


class HarnessError(Exception):
    pass


class ManifestError(HarnessError):
    pass


class UnknownKernel(HarnessError):
    pass


# ----------------------------------------------------------------------------
# Manifest
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ManifestEntry:
    shape_id: str
    path: str
    class_label: str

    @property
    def is_graph(self) -> bool:
        return self.path.lower().endswith(GRAPH_SUFFIX)


@dataclass(frozen=True)
class DatasetManifest:
    entries: Tuple[ManifestEntry, ...]
    name: str
    source: str = ''

    @property
    def class_labels(self) -> List[str]:
        return sorted({entry.class_label for entry in self.entries})

    def label_of(self) -> Dict[str, str]:
        return {entry.shape_id: entry.class_label for entry in self.entries}


def load_manifest(manifest_path, name=None) -> DatasetManifest:
    """Read a `shape_id,path,class_label` CSV; relative paths resolve against its directory."""
    if not os.path.isfile(manifest_path):
        raise ManifestError(f"Manifest not found: {manifest_path}")
    base_dir = os.path.dirname(os.path.abspath(manifest_path))

    with open(manifest_path, 'r', encoding='utf-8', newline='') as handle:
        reader = csv.DictReader(handle)
        missing = {'shape_id', 'path', 'class_label'} - set(reader.fieldnames or [])
        if missing:
            raise ManifestError(f"Manifest {manifest_path} lacks columns: {', '.join(sorted(missing))}")
        entries = []
        seen = set()
        for line, row in enumerate(reader, start=2):
            shape_id = (row['shape_id'] or '').strip()
            if not shape_id:
                raise ManifestError(f"{manifest_path}:{line}: empty shape_id")
            if shape_id in seen:
                raise ManifestError(f"{manifest_path}:{line}: duplicate shape_id {shape_id!r}")
            seen.add(shape_id)
            path = (row['path'] or '').strip()
            if not os.path.isabs(path):
                path = os.path.join(base_dir, path)
            if not os.path.exists(path):
                raise ManifestError(f"{manifest_path}:{line}: file not found: {path}")
            entries.append(ManifestEntry(shape_id, path, (row['class_label'] or '').strip()))

    if not entries:
        raise ManifestError(f"Manifest {manifest_path} has no entries")
    return DatasetManifest(tuple(entries), name or os.path.splitext(os.path.basename(manifest_path))[0],
                           os.path.abspath(manifest_path))


def parse_kernel_selector(selector) -> Tuple[str, str]:
    """'<bag>-<path>' (or an alias such as 'new') -> (bag kernel, path kernel)."""
    canonical = SELECTOR_ALIASES.get(selector, selector)
    bag_kind, _, path_kind = canonical.partition('-')
    if bag_kind not in BAG_KERNELS or path_kind not in PATH_KERNELS:
        raise UnknownKernel(f"Unknown kernel selector {selector!r}; use <bag>-<path> with bag in "
                            f"{BAG_KERNELS} and path in {PATH_KERNELS}, or one of {STANDARD_SELECTORS}")
    return bag_kind, path_kind


# ----------------------------------------------------------------------------
# Retrieval metric
# ----------------------------------------------------------------------------

def kernel_distance(values, i, j) -> float:
    values = np.asarray(values, dtype=float)
    return math.sqrt(max(0.0, values[i, i] + values[j, j] - 2.0 * values[i, j]))


def distance_matrix(values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    diag = np.diag(values)
    return np.sqrt(np.maximum(0.0, diag[:, None] + diag[None, :] - 2.0 * values))


def ranking(distance_row, shape_ids=None) -> List[int]:
    """Indices sorted by ascending distance; ties by shape id (index when ids are absent)."""
    keys = shape_ids if shape_ids is not None else list(range(len(distance_row)))
    return sorted(range(len(distance_row)), key=lambda k: (float(distance_row[k]), keys[k]))


def good_matches(distance_row, query_class, labels, shape_ids=None) -> int:
    """Same-class shapes ranked before the first shape of another class, query included."""
    count = 0
    for index in ranking(distance_row, shape_ids):
        if labels[index] != query_class:
            break
        count += 1
    return count


# ----------------------------------------------------------------------------
# Reports
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class RetrievalReport:
    shape_ids: Tuple[str, ...]
    labels: Tuple[str, ...]
    counts: Tuple[int, ...]
    class_means: Dict[str, float]
    neighbours: Tuple[Tuple[str, ...], ...]
    fingerprint: str = ''
    tags: Tuple[str, ...] = ()
    failed: Tuple[str, ...] = ()

    def rows(self):
        return [
            [shape_id, label, count, ' '.join(nearest)]
            for shape_id, label, count, nearest in zip(self.shape_ids, self.labels, self.counts, self.neighbours)
        ]


@dataclass(frozen=True)
class ClassResult:
    class_label: str
    C: float
    feasible: bool
    recognized: int
    class_size: int
    train_positives: int
    tp_eval: int
    fp_eval: int
    eval_positives: int


@dataclass(frozen=True)
class ClassificationReport:
    results: Tuple[ClassResult, ...]
    fingerprint: str = ''
    tags: Tuple[str, ...] = ()
    failed: Tuple[str, ...] = ()
    training_ids: Tuple[str, ...] = field(default=())

    def rows(self):
        return [
            [r.class_label, format_float(r.C), 'yes' if r.feasible else 'no', r.recognized, r.class_size,
             r.train_positives, r.tp_eval, r.fp_eval, r.eval_positives]
            for r in self.results
        ]


RETRIEVAL_HEADER = ['shape_id', 'class_label', 'good_matches', 'nearest']
CLASSIFICATION_HEADER = ['class_label', 'C', 'feasible', 'recognized', 'class_size',
                         'train_positives', 'tp_eval', 'fp_eval', 'eval_positives']


def retrieval_from_gram(gram: GramMatrix, label_of: Dict[str, str], classes: Sequence[str]) -> RetrievalReport:
    shape_ids = list(gram.shape_ids)
    missing = [shape_id for shape_id in shape_ids if shape_id not in label_of]
    if missing:
        raise ManifestError(f"Gram shapes missing from manifest: {', '.join(missing)}")
    labels = [label_of[shape_id] for shape_id in shape_ids]
    distances = distance_matrix(gram.values)

    counts, neighbours = [], []
    for index, shape_id in enumerate(shape_ids):
        counts.append(good_matches(distances[index], labels[index], labels, shape_ids))
        order = ranking(distances[index], shape_ids)[:TOP_NEIGHBOURS]
        neighbours.append(tuple(shape_ids[k] for k in order))

    class_means = {}
    for label in classes:
        members = [count for count, own in zip(counts, labels) if own == label]
        if members:
            class_means[label] = float(np.mean(members))
        else:
            logger.warning("Class %s has no shape in the Gram matrix", label)
    return RetrievalReport(tuple(shape_ids), tuple(labels), tuple(counts), class_means,
                           tuple(neighbours), gram.fingerprint, gram.tags)


def split_training(labels: Sequence[str], classes: Sequence[str], train_per_class: int) -> List[int]:
    """First train_per_class shapes of each target class plus the first shape of every other class."""
    chosen = []
    taken: Dict[str, int] = {}
    for index, label in enumerate(labels):
        quota = train_per_class if label in classes else 1
        if taken.get(label, 0) < quota:
            chosen.append(index)
            taken[label] = taken.get(label, 0) + 1
    return chosen


def classify_with_gram(gram: GramMatrix, labels: Sequence[str], classes: Sequence[str],
                       train_per_class: int, c_grid: Sequence[float]) -> ClassificationReport:
    values = np.asarray(gram.values, dtype=float)
    labels = list(labels)
    train = split_training(labels, classes, train_per_class)
    train_set = set(train)
    evaluation = [k for k in range(len(labels)) if k not in train_set] or list(train)
    everyone = list(range(len(labels)))

    results = []
    for target in classes:
        class_size = sum(1 for label in labels if label == target)
        if class_size == 0:
            logger.warning("Class %s is absent from the dataset; skipping", target)
            continue
        y_train = np.array([1 if labels[k] == target else -1 for k in train])
        y_eval = np.array([1 if labels[k] == target else -1 for k in evaluation])
        try:
            selection = select_margin_parameter(
                values[np.ix_(train, train)], y_train,
                values[np.ix_(evaluation, train)], y_eval,
                c_grid, tags=gram.tags,
            )
        except SvmError as e:
            logger.error("Classification for class %s failed: %s", target, e)
            continue
        predicted = predict_binary(selection.model, values[np.ix_(everyone, train)])
        recognized = int(sum(1 for k in everyone if predicted[k] == 1 and labels[k] == target))
        results.append(ClassResult(
            class_label=target,
            C=selection.C,
            feasible=selection.feasible,
            recognized=recognized,
            class_size=class_size,
            train_positives=int(np.sum(y_train == 1)),
            tp_eval=selection.true_positives,
            fp_eval=selection.false_positives,
            eval_positives=int(np.sum(y_eval == 1)),
        ))
        logger.info("Class %s: C=%s recognized %d/%d (eval TP=%d FP=%d%s)", target, selection.C, recognized,
                    class_size, selection.true_positives, selection.false_positives,
                    '' if selection.feasible else ', no zero-FP C')

    return ClassificationReport(tuple(results), gram.fingerprint, gram.tags,
                                training_ids=tuple(gram.shape_ids[k] for k in train))


# ----------------------------------------------------------------------------
# Worker tasks (module level so multiprocessing can pickle them)
# ----------------------------------------------------------------------------

def _graph_for_entry(entry: ManifestEntry, settings: ExperimentSettings) -> SkeletalGraph:
    if entry.is_graph:
        return load_graph(entry.path, shape_id=entry.shape_id, class_label=entry.class_label)
    image = load_mask(entry.path, entry.shape_id, entry.class_label, png_foreground=settings.png_foreground)
    graph, _ = ingest_shape(image, anchor_slope=settings.anchor_slope, spur_ratio=settings.spur_ratio)
    return graph


def _graph_task(args):
    entry, settings = args
    try:
        return _graph_for_entry(entry, settings), None
    except (IngestError, ValueError) as e:
        return None, f"{type(e).__name__}: {e}"


def _bag_task(args):
    entry, settings = args
    try:
        tree = max_spanning_tree(_graph_for_entry(entry, settings))
        return enumerate_bag(tree, settings.s, settings.D), None
    except (IngestError, PathError, ValueError) as e:
        return None, f"{type(e).__name__}: {e}"


_GRAM_STATE = {}


def _init_gram_worker(prepared, kind, config):
    _GRAM_STATE['job'] = (prepared, kind, config)


def _kernel_row(prepared, kind, config, i):
    return [bag_kernel_value(kind, prepared[i], prepared[j], config) for j in range(i, len(prepared))]


def _gram_row_task(i):
    prepared, kind, config = _GRAM_STATE['job']
    return _kernel_row(prepared, kind, config, i)


def _run_tasks(task, items, workers, initializer=None, initargs=()):
    """Map task over items in order; a pool is only started for more than one worker."""
    if workers <= 1 or len(items) <= 1:
        if initializer is not None:
            initializer(*initargs)
        return [task(item) for item in items]
    with Pool(processes=workers, initializer=initializer, initargs=initargs) as pool:
        return pool.map(task, items)


# ----------------------------------------------------------------------------
# Runner
# ----------------------------------------------------------------------------

class ExperimentRunner:
    """Runs the ingestion, Gram and evaluation pipelines with a shared bag cache"""

    def __init__(self, settings: ExperimentSettings, store: Optional[ArtifactStore] = None):
        self.settings = settings
        self.store = store or ArtifactStore('.')
        self.logger = logging.getLogger('ExperimentRunner')
        self._bag_cache: Dict[str, Tuple[List[ManifestEntry], List[BagOfPaths], List[str]]] = {}
        self._prepared_cache = {}

    # -- ingestion ---------------------------------------------------------

    def ingest_manifest(self, manifest: DatasetManifest, out_dir):
        """Write one graph JSON per shape; returns (written paths, failed ids)."""
        results = _run_tasks(_graph_task, [(e, self.settings) for e in manifest.entries], self.settings.workers)
        written, failed = [], []
        for entry, (graph, error) in zip(manifest.entries, results):
            if graph is None:
                self.logger.warning(f"Skipping {entry.shape_id}: {error}")
                failed.append(entry.shape_id)
                continue
            written.append(save_graph(graph, self.store.resolve(os.path.join(out_dir, f"{entry.shape_id}.json")),
                                      self.store))
        self.logger.info(f"Ingested {len(written)} shapes, {len(failed)} failed")
        return written, failed

    def build_bags(self, manifest: DatasetManifest):
        """(entries, bags, failed ids) for every shape that yields a non-empty bag."""
        key = manifest.source or manifest.name
        if key in self._bag_cache:
            return self._bag_cache[key]

        results = _run_tasks(_bag_task, [(e, self.settings) for e in manifest.entries], self.settings.workers)
        entries, bags, failed = [], [], []
        for entry, (bag, error) in zip(manifest.entries, results):
            if bag is None or bag.is_empty:
                reason = error or 'empty bag of paths'
                self.logger.warning(f"Skipping {entry.shape_id}: {reason}")
                failed.append(entry.shape_id)
                continue
            entries.append(entry)
            bags.append(bag)
        self.logger.info(f"Bags ready for {len(bags)}/{len(manifest.entries)} shapes of {manifest.name}")
        self._bag_cache[key] = (entries, bags, failed)
        return self._bag_cache[key]

    def prepare_bags(self, manifest: DatasetManifest, path_kind: str):
        entries, bags, failed = self.build_bags(manifest)
        key = (manifest.source or manifest.name, path_kind)
        if key not in self._prepared_cache:
            kept_entries, prepared, dropped = [], [], list(failed)
            for entry, bag in zip(entries, bags):
                try:
                    prepared.append(prepare_bag(bag, path_kind, self.settings.path_kernel_config(),
                                                self.settings.nu, self.settings.indefinite_threshold))
                    kept_entries.append(entry)
                except (BagKernelError, SvmError) as e:
                    self.logger.warning(f"Skipping {entry.shape_id}: {type(e).__name__}: {e}")
                    dropped.append(entry.shape_id)
            self._prepared_cache[key] = (kept_entries, prepared, dropped)
        return self._prepared_cache[key]

    def dump_bags(self, manifest: DatasetManifest, path_kind: str, out_dir):
        """Write <id>.bag.json and the one-class <id>.model.json per shape; returns (written, failed ids)."""
        entries, prepared, failed = self.prepare_bags(manifest, path_kind)
        fingerprint = self.settings.fingerprint(path_kind)
        written = []
        for entry, bag in zip(entries, prepared):
            written.append(self.store.write_json(os.path.join(out_dir, f"{entry.shape_id}.bag.json"),
                                                 bag_to_payload(bag.bag)))
            self.store.write_json(os.path.join(out_dir, f"{entry.shape_id}.model.json"),
                                  bag.model.to_payload(fingerprint))
        return written, list(failed)

    # -- Gram matrices -----------------------------------------------------

    def compute_gram(self, manifest: DatasetManifest, selector: str):
        """(GramMatrix, kept entries, failed ids) for one kernel selector."""
        bag_kind, path_kind = parse_kernel_selector(selector)
        entries, prepared, failed = self.prepare_bags(manifest, path_kind)
        config = self.settings.bag_kernel_config(path_kind)

        rows = _run_tasks(_gram_row_task, list(range(len(prepared))), self.settings.workers,
                          initializer=_init_gram_worker, initargs=(prepared, bag_kind, config))
        n = len(prepared)
        values = np.zeros((n, n))
        for i, row in enumerate(rows):
            for offset, value in enumerate(row):
                values[i, i + offset] = value
                values[i + offset, i] = value

        low, high = gram_spectrum(values)
        tags = ()
        if low < -self.settings.indefinite_threshold:
            tags = (TAG_INDEFINITE,)
            self.logger.warning(f"Gram matrix for {selector} is indefinite (min eigenvalue {low:.3e})")
        gram = GramMatrix(values, tuple(e.shape_id for e in entries), self.settings.fingerprint(selector),
                          tags, low, high)
        self.logger.info(f"Gram {selector}: {n} shapes, eigenvalues in [{low:.3e}, {high:.3e}]")
        return gram, entries, failed

    def write_gram(self, gram: GramMatrix, out_path, selector, failed=()):
        rows = [[shape_id] + [format_float(v) for v in row] for shape_id, row in zip(gram.shape_ids, gram.values)]
        self.store.write_csv(out_path, ['shape_id'] + list(gram.shape_ids), rows)
        self.store.write_json(os.path.splitext(out_path)[0] + '.json', {
            'kernel': selector,
            'config': self.settings.to_payload(),
            'config_fingerprint': gram.fingerprint,
            'min_eigenvalue': gram.min_eigenvalue,
            'max_eigenvalue': gram.max_eigenvalue,
            'tags': list(gram.tags),
            'failed': list(failed),
            'code_version': get_current_version(),
        })
        self.write_resolved_config(out_path, selector)

    def write_resolved_config(self, out_path, selector=''):
        return self.store.write_json(out_path + '.resolved_config.json', {
            'settings': self.settings.to_payload(),
            'kernel': selector,
            'fingerprint': self.settings.fingerprint(selector),
        })

    @staticmethod
    def read_gram(csv_path) -> GramMatrix:
        with open(csv_path, 'r', encoding='utf-8', newline='') as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if not header or header[0] != 'shape_id':
                raise ManifestError(f"{csv_path} is not a Gram CSV")
            ids, values = [], []
            for row in reader:
                ids.append(row[0])
                values.append([float(v) for v in row[1:]])
        if tuple(header[1:]) != tuple(ids):
            raise ManifestError(f"{csv_path}: row and column ids differ")

        sidecar = os.path.splitext(csv_path)[0] + '.json'
        meta = {}
        if os.path.exists(sidecar):
            with open(sidecar, 'r', encoding='utf-8') as handle:
                meta = json.load(handle)
        return GramMatrix(np.array(values, dtype=float).reshape(len(ids), len(ids)), tuple(ids),
                          meta.get('config_fingerprint', ''), tuple(meta.get('tags', ())),
                          float(meta.get('min_eigenvalue', float('nan'))),
                          float(meta.get('max_eigenvalue', float('nan'))))

    # -- experiments -------------------------------------------------------

    def run_retrieval(self, manifest: DatasetManifest, selector: str) -> RetrievalReport:
        gram, entries, failed = self.compute_gram(manifest, selector)
        report = retrieval_from_gram(gram, manifest.label_of(), self.settings.classes)
        self.logger.info(f"Retrieval {selector}: " + ', '.join(
            f"{label}={mean:.2f}" for label, mean in report.class_means.items()))
        return RetrievalReport(report.shape_ids, report.labels, report.counts, report.class_means,
                               report.neighbours, report.fingerprint, report.tags, tuple(failed))

    def run_classification(self, manifest: DatasetManifest, selector: str) -> ClassificationReport:
        gram, entries, failed = self.compute_gram(manifest, selector)
        labels = [entry.class_label for entry in entries]
        if len(set(labels)) < 2:
            raise ManifestError("Classification needs at least two classes")
        report = classify_with_gram(gram, labels, self.settings.classes, self.settings.train_per_class,
                                    self.settings.c_grid)
        return ClassificationReport(report.results, report.fingerprint, report.tags, tuple(failed),
                                    report.training_ids)

    def write_retrieval(self, report: RetrievalReport, out_path):
        self.store.write_csv(out_path, RETRIEVAL_HEADER, report.rows())
        summary = [[label, format_float(mean)] for label, mean in report.class_means.items()]
        self.store.write_csv(os.path.splitext(out_path)[0] + '_classes.csv', ['class_label', 'mean_good_matches'],
                             summary)

    def write_classification(self, report: ClassificationReport, out_path):
        self.store.write_csv(out_path, CLASSIFICATION_HEADER, report.rows())
        self.store.write_json(os.path.splitext(out_path)[0] + '.json', {
            'tags': list(report.tags),
            'failed': list(report.failed),
            'training_ids': list(report.training_ids),
            'config_fingerprint': report.fingerprint,
        })

    def compare(self, manifest: DatasetManifest, selectors: Sequence[str], out_dir):
        """Every selector on one shared bag cache; returns {selector: RetrievalReport}."""
        reports = {}
        summary = []
        for selector in selectors:
            gram, _, failed = self.compute_gram(manifest, selector)
            self.write_gram(gram, os.path.join(out_dir, f"gram_{selector}.csv"), selector, failed)
            report = retrieval_from_gram(gram, manifest.label_of(), self.settings.classes)
            self.write_retrieval(report, os.path.join(out_dir, f"retrieval_{selector}.csv"))
            reports[selector] = report
            for label, mean in report.class_means.items():
                summary.append([selector, label, format_float(mean), ' '.join(report.tags)])
        self.store.write_csv(os.path.join(out_dir, 'comparison.csv'),
                             ['kernel', 'class_label', 'mean_good_matches', 'tags'], summary)
        return reports


# ----------------------------------------------------------------------------
# Diagnostics
# ----------------------------------------------------------------------------

def reduce_demo(graph_path, node_ids: Sequence[int], D: int) -> dict:
    """Hierarchy and op log of one path in the spanning tree of a stored graph."""
    tree = max_spanning_tree(load_graph(graph_path))
    hierarchy = build_hierarchy(tree, path_from_nodes(tree, node_ids), D)
    return hierarchy.to_payload()


def robustness_witness(settings: ExperimentSettings, size=21, bump_width=None, bump_length=3) -> dict:
    """Square vs the same square with its top side raised: bag kernels and path-level evidence.

    rescued_paths lists the raised shape's paths whose best edit-kernel match
    in the square has a classic kernel of zero. The margin is reported, not
    enforced.
    """
    plain = shape_from_array(square(size), 'square')
    bumped = shape_from_array(square_with_protrusion(size, bump_width, bump_length), 'square_bump')
    trees = [ingest_shape(image, settings.anchor_slope, settings.spur_ratio)[1] for image in (plain, bumped)]
    bags = [enumerate_bag(tree, settings.s, settings.D) for tree in trees]
    path_config = settings.path_kernel_config()

    edit = [prepare_bag(bag, KERNEL_EDIT, path_config, settings.nu) for bag in bags]
    classic = [prepare_bag(bag, KERNEL_CLASSIC, path_config, settings.nu, fit_model=False) for bag in bags]
    k_new = k_change(edit[0], edit[1], sigma=settings.sigma_change_new)
    k_max_classic = k_max(classic[0], classic[1], cross=cross_normalized(classic[0], classic[1]))

    # Paths of the bumped shape whose best edit match has no classic counterpart
    edit_cross = cross_gram(bags[0].hierarchies, bags[1].hierarchies, KERNEL_EDIT, path_config)
    classic_cross = cross_gram(bags[0].hierarchies, bags[1].hierarchies, KERNEL_CLASSIC, path_config)
    rescued = []
    for j, second in enumerate(bags[1].hierarchies):
        i = int(np.argmax(edit_cross[:, j]))
        if edit_cross[i, j] > 0 and classic_cross[i, j] == 0:
            rescued.append({'path': list(second.base.node_ids),
                            'match': list(bags[0].hierarchies[i].base.node_ids),
                            'k_edit': float(edit_cross[i, j]), 'k_classic': 0.0})

    return {
        'k_new': k_new,
        'k_max_classic': k_max_classic,
        'margin': k_new - k_max_classic,
        'bag_sizes': [len(bag) for bag in bags],
        'tree_edges': [tree.graph.number_of_edges() for tree in trees],
        'rescued_paths': rescued,
    }
