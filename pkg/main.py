#!/usr/bin/env python3

import argparse
import json
import logging
import os
import sys

_BASE_DIR = os.path.dirname(os.path.realpath(os.path.abspath(__file__)))
if _BASE_DIR not in sys.path:
    sys.path.insert(0, _BASE_DIR)

from artifact_store import ArtifactStore
from bag_kernels import BagKernelError
from harness import STANDARD_SELECTORS, ExperimentRunner, HarnessError, load_manifest, reduce_demo, \
    retrieval_from_gram, robustness_witness
from path_kernels import KERNEL_EDIT, PATH_KERNELS, PathKernelError
from paths import PathError
from settings import SettingsError, load_settings
from shape_ingest import IngestError
from svm_models import SvmError
from synthetic import write_dataset

DOMAIN_ERRORS = (IngestError, PathError, PathKernelError, BagKernelError, SvmError, HarnessError, SettingsError)

logger = logging.getLogger('main')


def setup_logging(log_dir, name, verbose=False):
    os.makedirs(log_dir, exist_ok=True)
    log_file = os.path.join(log_dir, f"{name}.log")

    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(log_file),
            logging.StreamHandler(sys.stdout)
        ]
    )


def _add_common_options(parser, default=None):
    parser.add_argument('--config', default=default, help='INI or flat key=value configuration file')
    parser.add_argument('--workers', type=int, default=default, help='worker processes (overrides config)')
    parser.add_argument('--verbose', action='store_true', default=False if default is None else default,
                        help='debug logging')


def build_parser():
    parser = argparse.ArgumentParser(
        prog='bag-of-paths',
        description='Hierarchical bag-of-paths kernels for skeletal shape retrieval and classification',
    )
    _add_common_options(parser)

    # Same options after the sub-command; SUPPRESS keeps a value given before it
    common = argparse.ArgumentParser(add_help=False)
    _add_common_options(common, default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('ingest', parents=[common], help='masks -> graph JSON')
    p.add_argument('--manifest', required=True)
    p.add_argument('--out', required=True, help='output directory')

    p = sub.add_parser('gram', parents=[common], help='Gram matrix CSV for one kernel')
    p.add_argument('--manifest', required=True)
    p.add_argument('--kernel', required=True, help=f"one of {', '.join(STANDARD_SELECTORS)} or <bag>-<path>")
    p.add_argument('--out', required=True)

    p = sub.add_parser('retrieve', parents=[common], help='good-matches report from a Gram CSV')
    p.add_argument('--gram', required=True)
    p.add_argument('--manifest', required=True)
    p.add_argument('--classes', help='comma separated class labels')
    p.add_argument('--out', required=True)

    p = sub.add_parser('classify', parents=[common], help='zero-false-positive SVM classification')
    p.add_argument('--manifest', required=True)
    p.add_argument('--kernel', required=True)
    p.add_argument('--train-per-class', type=int)
    p.add_argument('--out', required=True)

    p = sub.add_parser('reduce-demo', parents=[common], help='print the reduction hierarchy of one path')
    p.add_argument('--graph', required=True)
    p.add_argument('--path', required=True, help='comma separated node ids')
    p.add_argument('--D', type=int, default=None)

    p = sub.add_parser('compare', parents=[common], help='every kernel on one shared bag cache')
    p.add_argument('--manifest', required=True)
    p.add_argument('--kernels', default=','.join(STANDARD_SELECTORS))
    p.add_argument('--out', required=True, help='output directory')

    p = sub.add_parser('synth', parents=[common], help='write a synthetic labelled dataset')
    p.add_argument('--out', required=True)
    p.add_argument('--per-class', type=int, default=6)
    p.add_argument('--seed', type=int, default=0)

    p = sub.add_parser('witness', parents=[common], help='square vs square-with-protrusion robustness diagnostics')
    p.add_argument('--size', type=int, default=21)
    p.add_argument('--bump-length', type=int, default=3, help='rows the top side is raised by')
    p.add_argument('--out', help='optional JSON output')

    p = sub.add_parser('bag-dump', parents=[common], help='bag of paths and one-class model JSON per shape')
    p.add_argument('--manifest', required=True)
    p.add_argument('--path-kernel', choices=PATH_KERNELS, default=KERNEL_EDIT)
    p.add_argument('--out', required=True, help='output directory')

    return parser


def cmd_ingest(args, settings, runner):
    written, failed = runner.ingest_manifest(load_manifest(args.manifest), args.out)
    runner.write_resolved_config(os.path.join(args.out, 'ingest'))
    print(f"{len(written)} graphs written, {len(failed)} shapes failed")
    return 0


def cmd_gram(args, settings, runner):
    gram, _, failed = runner.compute_gram(load_manifest(args.manifest), args.kernel)
    runner.write_gram(gram, args.out, args.kernel, failed)
    return 0


def cmd_retrieve(args, settings, runner):
    gram = runner.read_gram(args.gram)
    classes = settings.classes
    if args.classes:
        classes = tuple(c.strip() for c in args.classes.split(',') if c.strip())
    report = retrieval_from_gram(gram, load_manifest(args.manifest).label_of(), classes)
    runner.write_retrieval(report, args.out)
    runner.write_resolved_config(args.out)
    for label, mean in report.class_means.items():
        print(f"{label}: {mean:.2f}")
    return 0


def cmd_classify(args, settings, runner):
    report = runner.run_classification(load_manifest(args.manifest), args.kernel)
    runner.write_classification(report, args.out)
    runner.write_resolved_config(args.out, args.kernel)
    for result in report.results:
        print(f"{result.class_label}: {result.recognized}/{result.class_size} (C={result.C})")
    return 0


def cmd_reduce_demo(args, settings, runner):
    node_ids = [int(token) for token in args.path.split(',') if token.strip()]
    D = settings.D if args.D is None else args.D
    print(json.dumps(reduce_demo(args.graph, node_ids, D), indent=2))
    return 0


def cmd_compare(args, settings, runner):
    selectors = [s.strip() for s in args.kernels.split(',') if s.strip()]
    reports = runner.compare(load_manifest(args.manifest), selectors, args.out)
    runner.write_resolved_config(os.path.join(args.out, 'compare'), ','.join(selectors))
    for selector, report in reports.items():
        means = ', '.join(f"{label}={mean:.2f}" for label, mean in report.class_means.items())
        print(f"{selector}: {means}")
    return 0


def cmd_synth(args, settings, runner):
    print(write_dataset(args.out, per_class=args.per_class, seed=args.seed, store=runner.store))
    runner.write_resolved_config(os.path.join(args.out, 'synth'))
    return 0


def cmd_witness(args, settings, runner):
    result = robustness_witness(settings, size=args.size, bump_length=args.bump_length)
    if args.out:
        runner.store.write_json(args.out, result)
        runner.write_resolved_config(args.out, 'witness')
    print(json.dumps({k: v for k, v in result.items() if k != 'rescued_paths'}, indent=2))
    print(f"paths rescued by the edit kernel: {len(result['rescued_paths'])}")
    return 0


def cmd_bag_dump(args, settings, runner):
    written, failed = runner.dump_bags(load_manifest(args.manifest), args.path_kernel, args.out)
    runner.write_resolved_config(os.path.join(args.out, 'bag_dump'), args.path_kernel)
    print(f"{len(written)} bags dumped, {len(failed)} shapes failed")
    return 0


COMMANDS = {
    'ingest': cmd_ingest,
    'gram': cmd_gram,
    'retrieve': cmd_retrieve,
    'classify': cmd_classify,
    'reduce-demo': cmd_reduce_demo,
    'compare': cmd_compare,
    'synth': cmd_synth,
    'witness': cmd_witness,
    'bag-dump': cmd_bag_dump,
}


def main(argv=None):
    args = build_parser().parse_args(argv)

    # 설정 로드 (파일 -> .env -> 환경 변수 -> 명령행)
    try:
        settings = load_settings(args.config, overrides={
            'workers': args.workers,
            'train_per_class': getattr(args, 'train_per_class', None),
        })
    except SettingsError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return 1

    setup_logging(settings.log_dir, args.command.replace('-', '_'), args.verbose)
    runner = ExperimentRunner(settings, ArtifactStore('.'))

    try:
        return COMMANDS[args.command](args, settings, runner)
    except DOMAIN_ERRORS as e:
        logger.error(f"{args.command} failed: {type(e).__name__}: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
