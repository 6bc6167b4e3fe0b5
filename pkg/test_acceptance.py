#!/usr/bin/env python3
"""
End-to-end checks: kernel positivity over noisy polygons, change-distance
metric sanity, and the command line pipeline on a synthetic dataset
"""

import itertools
import json
import math
import os
import sys
import tempfile

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from bag_kernels import (BAG_CHANGE, BAG_MATCHING, BAG_SUARD, BagKernelConfig, bag_kernel_value, d_change,
                         prepare_bag)
from main import main
from path_kernels import KERNEL_CLASSIC, KERNEL_EDIT, PathKernelConfig
from paths import enumerate_bag
from shape_ingest import ingest_shape, load_graph, max_spanning_tree, shape_from_array
from synthetic import noisy_polygon

POLYGON_COUNT = 20
PATH_CONFIG = PathKernelConfig(D=2)

_BAGS = []


def polygon_bags():
    """Bags of the 20 noisy polygons, built once per process."""
    if not _BAGS:
        rng = np.random.default_rng(11)
        for index in range(POLYGON_COUNT):
            mask = noisy_polygon(rng, n_vertices=int(rng.integers(5, 9)))
            _, tree = ingest_shape(shape_from_array(mask, f"polygon{index:02d}"))
            _BAGS.append(enumerate_bag(tree, 3, PATH_CONFIG.D))
    return _BAGS


def gram_of(bag_kind, path_kind, config):
    prepared = [prepare_bag(bag, path_kind, PATH_CONFIG, nu=0.9) for bag in polygon_bags()]
    n = len(prepared)
    values = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            values[i, j] = values[j, i] = bag_kernel_value(bag_kind, prepared[i], prepared[j], config)
    return values


def assert_positive_semidefinite(values, label, relative=1e-8):
    eigenvalues = np.linalg.eigvalsh(values)
    assert eigenvalues[0] >= -relative * eigenvalues[-1], f"{label}: min eigenvalue {eigenvalues[0]:.3e}"


# ---------------------------------------------------------------------------
# Positivity over noisy polygons
# ---------------------------------------------------------------------------

def test_polygon_bags_are_not_empty():
    assert all(len(bag) > 0 for bag in polygon_bags())


def test_matching_kernel_gram_is_psd():
    config = BagKernelConfig(sigma_matching=1.0, path_kernel=KERNEL_CLASSIC)
    assert_positive_semidefinite(gram_of(BAG_MATCHING, KERNEL_CLASSIC, config), 'matching-classic')


def test_suard_kernel_gram_is_psd():
    config = BagKernelConfig(path_kernel=KERNEL_EDIT)
    assert_positive_semidefinite(gram_of(BAG_SUARD, KERNEL_EDIT, config), 'suard-edit')


def test_change_kernel_grams_are_psd():
    classic = BagKernelConfig(sigma_change=1.0, path_kernel=KERNEL_CLASSIC)
    edit = BagKernelConfig(sigma_change=0.3, path_kernel=KERNEL_EDIT)
    assert_positive_semidefinite(gram_of(BAG_CHANGE, KERNEL_CLASSIC, classic), 'change-classic')
    assert_positive_semidefinite(gram_of(BAG_CHANGE, KERNEL_EDIT, edit), 'new')


def test_change_distance_is_a_metric():
    prepared = [prepare_bag(bag, KERNEL_EDIT, PATH_CONFIG, nu=0.9) for bag in polygon_bags()[:10]]
    n = len(prepared)
    distances = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            distances[i, j] = d_change(prepared[i], prepared[j])
    assert np.allclose(np.diag(distances), 0.0, atol=1e-6)
    assert np.all(distances >= 0.0) and np.all(distances <= math.pi)
    assert np.allclose(distances, distances.T, atol=1e-9)
    for a, b, c in itertools.permutations(range(n), 3):
        assert distances[a, c] <= distances[a, b] + distances[b, c] + 1e-6


# ---------------------------------------------------------------------------
# Command line pipeline
# ---------------------------------------------------------------------------

def write_config(tmp):
    path = os.path.join(tmp, 'experiment.conf')
    with open(path, 'w', encoding='utf-8') as handle:
        handle.write("s = 2\nD = 1\ntrain_per_class = 1\nclasses = stars,bars,crosses\n"
                     f"log_dir = {os.path.join(tmp, 'logs')}\n")
    return path


def test_cli_pipeline_on_synthetic_dataset():
    with tempfile.TemporaryDirectory() as tmp:
        config = write_config(tmp)
        data = os.path.join(tmp, 'data')
        out = os.path.join(tmp, 'out')
        manifest = os.path.join(data, 'manifest.csv')

        def run(*argv):
            return main(['--config', config, *argv])

        assert run('synth', '--out', data, '--per-class', '2', '--seed', '3') == 0
        assert os.path.exists(manifest)

        gram = os.path.join(out, 'gram_new.csv')
        assert run('gram', '--manifest', manifest, '--kernel', 'new', '--out', gram) == 0
        with open(os.path.splitext(gram)[0] + '.json', 'r', encoding='utf-8') as handle:
            sidecar = json.load(handle)
        assert sidecar['kernel'] == 'new'
        assert sidecar['config']['D'] == 1
        assert 'min_eigenvalue' in sidecar and 'code_version' in sidecar

        retrieval = os.path.join(out, 'retrieval.csv')
        assert run('retrieve', '--gram', gram, '--manifest', manifest, '--out', retrieval) == 0
        assert os.path.exists(os.path.join(out, 'retrieval_classes.csv'))
        assert os.path.exists(retrieval + '.resolved_config.json')

        classification = os.path.join(out, 'classification.csv')
        assert run('classify', '--manifest', manifest, '--kernel', 'max-classic', '--out', classification) == 0
        with open(classification, 'r', encoding='utf-8') as handle:
            lines = handle.read().splitlines()
        assert lines[0].startswith('class_label,C,feasible,recognized')
        assert len(lines) == 4

        compare = os.path.join(out, 'compare')
        assert run('--workers', '2', 'compare', '--manifest', manifest, '--kernels', 'max-classic,new',
                   '--out', compare) == 0
        assert os.path.exists(os.path.join(compare, 'comparison.csv'))
        with open(gram, 'rb') as first, open(os.path.join(compare, 'gram_new.csv'), 'rb') as second:
            assert first.read() == second.read()


def test_cli_ingest_reduce_and_witness():
    with tempfile.TemporaryDirectory() as tmp:
        config = write_config(tmp)
        data = os.path.join(tmp, 'data')
        graphs = os.path.join(tmp, 'graphs')
        assert main(['--config', config, 'synth', '--out', data, '--per-class', '1']) == 0
        assert main(['--config', config, 'ingest', '--manifest', os.path.join(data, 'manifest.csv'),
                     '--out', graphs]) == 0
        graph_files = sorted(name for name in os.listdir(graphs) if name.endswith('.json')
                             and not name.endswith('.resolved_config.json'))
        assert graph_files

        graph_path = os.path.join(graphs, graph_files[0])
        tree = max_spanning_tree(load_graph(graph_path))
        u, v = sorted(tree.graph.edges)[0]
        assert main(['--config', config, 'reduce-demo', '--graph', graph_path, '--path', f"{u},{v}"]) == 0

        witness = os.path.join(tmp, 'witness.json')
        assert main(['--config', config, 'witness', '--size', '15', '--out', witness]) == 0
        with open(witness, 'r', encoding='utf-8') as handle:
            result = json.load(handle)
        assert set(result) >= {'k_new', 'k_max_classic', 'margin', 'rescued_paths'}


def test_cli_reports_failures_with_exit_code():
    with tempfile.TemporaryDirectory() as tmp:
        config = write_config(tmp)
        data = os.path.join(tmp, 'data')
        assert main(['--config', config, 'synth', '--out', data, '--per-class', '1']) == 0
        manifest = os.path.join(data, 'manifest.csv')
        assert main(['--config', config, 'gram', '--manifest', manifest, '--kernel', 'bogus',
                     '--out', os.path.join(tmp, 'g.csv')]) == 1
        assert main(['--config', os.path.join(tmp, 'missing.conf'), 'synth', '--out', data]) == 1
        assert main(['--config', config, 'gram', '--manifest', os.path.join(tmp, 'none.csv'), '--kernel', 'new',
                     '--out', os.path.join(tmp, 'g.csv')]) == 1


def test_cli_options_after_subcommand():
    with tempfile.TemporaryDirectory() as tmp:
        config = write_config(tmp)
        data = os.path.join(tmp, 'data')
        manifest = os.path.join(data, 'manifest.csv')
        assert main(['synth', '--out', data, '--per-class', '2', '--seed', '5', '--config', config]) == 0

        gram = os.path.join(tmp, 'g.csv')
        assert main(['gram', '--manifest', manifest, '--kernel', 'new', '--config', config, '--out', gram]) == 0
        with open(os.path.splitext(gram)[0] + '.json', 'r', encoding='utf-8') as handle:
            assert json.load(handle)['config']['s'] == 2

        classification = os.path.join(tmp, 'c.csv')
        assert main(['classify', '--manifest', manifest, '--kernel', 'max-classic', '--config', config,
                     '--workers', '2', '--out', classification]) == 0
        with open(classification + '.resolved_config.json', 'r', encoding='utf-8') as handle:
            resolved = json.load(handle)['settings']
        assert resolved['workers'] == 2 and resolved['D'] == 1

        # A value given before the sub-command survives
        assert main(['--config', config, 'gram', '--manifest', manifest, '--kernel', 'max-classic',
                     '--out', gram]) == 0


def test_cli_synth_writes_resolved_config():
    with tempfile.TemporaryDirectory() as tmp:
        config = write_config(tmp)
        data = os.path.join(tmp, 'data')
        assert main(['synth', '--config', config, '--out', data, '--per-class', '1']) == 0
        with open(os.path.join(data, 'synth.resolved_config.json'), 'r', encoding='utf-8') as handle:
            assert json.load(handle)['settings']['s'] == 2
        with open(os.path.join(data, 'manifest.csv'), 'r', encoding='utf-8') as handle:
            lines = handle.read().splitlines()
        assert lines[0] == 'shape_id,path,class_label'
        assert len(lines) == 4
        assert not [name for name in os.listdir(data) if name.endswith('.tmp') or name.endswith('.lock')]


def test_cli_bag_dump_writes_bags_and_models():
    with tempfile.TemporaryDirectory() as tmp:
        config = write_config(tmp)
        data = os.path.join(tmp, 'data')
        dumps = os.path.join(tmp, 'dumps')
        assert main(['synth', '--config', config, '--out', data, '--per-class', '1']) == 0
        assert main(['bag-dump', '--config', config, '--manifest', os.path.join(data, 'manifest.csv'),
                     '--out', dumps]) == 0

        with open(os.path.join(dumps, 'crosses_00.bag.json'), 'r', encoding='utf-8') as handle:
            bag = json.load(handle)
        assert bag['shape_id'] == 'crosses_00'
        assert (bag['s'], bag['D']) == (2, 1)
        assert bag['hierarchies']
        assert all(len(h['levels']) == len(h['op_log']) + 1 for h in bag['hierarchies'])

        with open(os.path.join(dumps, 'crosses_00.model.json'), 'r', encoding='utf-8') as handle:
            model = json.load(handle)
        assert len(model['alpha']) == len(bag['hierarchies'])
        assert abs(sum(model['alpha']) - 1.0) < 1e-9
        assert model['support_ids'] and model['config_fingerprint']
        assert os.path.exists(os.path.join(dumps, 'bag_dump.resolved_config.json'))

        assert main(['bag-dump', '--config', config, '--manifest', os.path.join(data, 'manifest.csv'),
                     '--path-kernel', 'classic', '--out', os.path.join(tmp, 'classic')]) == 0
        assert os.path.exists(os.path.join(tmp, 'classic', 'bars_00.model.json'))


def run_all_tests():
    """Run every test in this file and print a summary"""
    tests = [value for name, value in sorted(globals().items()) if name.startswith('test_') and callable(value)]
    print("Acceptance tests")
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
