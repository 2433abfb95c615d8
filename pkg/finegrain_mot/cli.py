"""Command-line entry point: simulate | track | eval | attrs | bench.

Exit codes: 0 success, 2 configuration error, 3 missing or malformed input
data, 1 anything else.
"""

import collections
import json
import logging
import multiprocessing as mp
import os
import sys

import tqdm

from finegrain_mot import arguments
from finegrain_mot.common.tools import saver
from finegrain_mot.dataset import config as config_lib
from finegrain_mot.dataset import mot_io
from finegrain_mot.dataset import simulator
from finegrain_mot.eval import bench
from finegrain_mot.eval import charts
from finegrain_mot.eval import metrics
from finegrain_mot.eval import report as report_lib


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2
EXIT_DATA = 3

MANIFEST_FILE = 'manifest.json'
REPORT_FILE = 'report.json'
ATTRS_CSV = 'attrs.csv'
ATTRS_MARKDOWN = 'attrs.md'


def _write_json(value, path):
    with open(path, 'w') as f:
        json.dump(value, f, indent=2, sort_keys=True)
        f.write('\n')
    return path


def _pool_map(func, tasks, jobs):
    tasks = list(tasks)
    if jobs > 1 and len(tasks) > 1:
        pool = mp.Pool(min(jobs, len(tasks)))
        try:
            for item in tqdm.tqdm(pool.imap(func, tasks), total=len(tasks)):
                yield item
        finally:
            pool.close()
            pool.join()
    else:
        for task in tasks:
            yield func(task)


def discover_sequences(directory):
    """Sequence name -> directory.

    A suite directory lists its sequences in manifest.json; otherwise every
    subdirectory holding a gt.txt or det.txt is a sequence, and a directory
    holding those files itself is a single sequence named after it.
    """
    if not os.path.isdir(directory):
        raise mot_io.DataError('%s is not a directory' % directory)
    manifest = os.path.join(directory, MANIFEST_FILE)
    if os.path.exists(manifest):
        return collections.OrderedDict(
            (entry['name'], os.path.join(directory, entry['name']))
            for entry in sorted(simulator.read_manifest(manifest), key=lambda e: e['name']))

    def is_sequence(path):
        return any(os.path.exists(os.path.join(path, name))
                   for name in (simulator.GT_FILE, simulator.DET_FILE))

    if is_sequence(directory):
        return collections.OrderedDict(
            [(os.path.basename(os.path.normpath(directory)), directory)])
    return collections.OrderedDict(
        (name, os.path.join(directory, name)) for name in sorted(os.listdir(directory))
        if os.path.isdir(os.path.join(directory, name)) and
        is_sequence(os.path.join(directory, name)))


def cmd_simulate(cfg, args):
    if args.decimate < 1:
        raise config_lib.ConfigError('--decimate', 'must be >= 1')
    entries = []
    for seed in tqdm.tqdm(bench.suite_seeds(cfg)):
        scenario = config_lib.scenario_config(cfg, seed=seed)
        bundle = simulator.decimate(simulator.generate(scenario), args.decimate)
        name = 'seq-%06d' % seed
        simulator.write_bundle(bundle, os.path.join(args.out, name))
        entries.append({
            'name': name, 'seed': seed, 'n_frames': bundle.n_frames,
            'n_objects': len(bundle.object_ids), 'n_detections': bundle.n_detections,
            'decimation': bundle.meta['decimation']})
    simulator.write_manifest(entries, os.path.join(args.out, MANIFEST_FILE))
    logger.info('Wrote %d sequences to %s', len(entries), args.out)


def _track_task(task):
    cfg, name, directory, points_path = task
    bundle = simulator.read_bundle(directory)
    result, reports = bench.run_sequence(bundle, cfg, points_path)
    return name, result.to_mot_rows(), [r._asdict() for r in reports]


def cmd_track(cfg, args):
    sequences = collections.OrderedDict()
    for path in args.inputs:
        for name, directory in discover_sequences(path).items():
            if name in sequences:
                raise mot_io.DataError('Sequence %s given twice' % name)
            sequences[name] = directory
    if not sequences:
        raise mot_io.DataError('No sequences found in %s' % ', '.join(args.inputs))
    if args.points and len(sequences) > 1:
        raise mot_io.DataError('--points needs exactly one sequence, got %d' % len(sequences))
    tasks = [(cfg, name, directory, args.points) for name, directory in sequences.items()]
    run_report = collections.OrderedDict()
    for name, rows, reports in _pool_map(_track_task, tasks, cfg.suite.jobs):
        mot_io.write_mot(rows, os.path.join(args.out, name + '.txt'))
        run_report[name] = {
            'strides': reports,
            'fallbacks': sum(1 for r in reports if r['fallback']),
            'elapsed': sum(r['elapsed'] for r in reports),
        }
    _write_json({'mode': cfg.pipeline.mode, 'sequences': run_report},
                os.path.join(args.out, REPORT_FILE))
    logger.info('Tracked %d sequences into %s', len(run_report), args.out)


def _eval_task(task):
    name, gt_dir, result_path, thresholds = task
    gt_path = os.path.join(gt_dir, simulator.GT_FILE)
    if not os.path.exists(gt_path):
        raise mot_io.DataError('No ground truth for sequence %s in %s' % (name, gt_dir))
    gt = mot_io.read_mot(gt_path, is_gt=True)
    pred = mot_io.read_mot(result_path) if os.path.exists(result_path) else None
    _, counts = report_lib.evaluate_sequence(name, gt, pred, *thresholds)
    return name, counts, pred is None


def cmd_eval(cfg, args):
    sequences = discover_sequences(args.gt)
    if not sequences:
        raise mot_io.DataError('No ground-truth sequences in %s' % args.gt)
    thresholds = (cfg.metrics.clear_threshold, cfg.metrics.id_threshold)
    tasks = [(name, directory, os.path.join(args.results, name + '.txt'), thresholds)
             for name, directory in sequences.items()]
    report = report_lib.EvalReport(args.tag, report_dir=args.out)
    for name, counts, missing in _pool_map(_eval_task, tasks, cfg.suite.jobs):
        report.add_sequence(name, counts, missing=missing)
    report.save()
    report.display()


def cmd_attrs(cfg, args):
    sequences = discover_sequences(args.gt)
    gts = []
    for name, directory in sequences.items():
        gt_path = os.path.join(directory, simulator.GT_FILE)
        if not os.path.exists(gt_path):
            raise mot_io.DataError('No ground truth for sequence %s in %s' % (name, directory))
        gts.append(mot_io.read_mot(gt_path, is_gt=True))
    dynamicity = metrics.dynamicity_report(gts)
    if not os.path.exists(args.out):
        os.makedirs(args.out)
    with open(os.path.join(args.out, ATTRS_CSV), 'w') as f:
        f.write('attribute,lower,upper,count\n')
        for name, histogram in dynamicity.histograms.items():
            edges = histogram.edges
            for k, count in enumerate(histogram.counts):
                f.write('%s,%r,%r,%d\n' % (name, edges[k], edges[k + 1], count))
            if histogram.overflow is not None:
                f.write('%s,%r,,%d\n' % (name, edges[-1], histogram.overflow))
    with open(os.path.join(args.out, ATTRS_MARKDOWN), 'w') as f:
        f.write('| attribute | pairs | mean | median |\n|---|---|---|---|\n')
        for name, stats in dynamicity.stats.items():
            f.write('| %s | %d | %s | %s |\n' % (
                name, stats.count,
                'n/a' if stats.mean is None else '%.4f' % stats.mean,
                'n/a' if stats.median is None else '%.4f' % stats.median))
    for name, histogram in dynamicity.histograms.items():
        charts.histogram_chart(histogram, os.path.join(args.out, 'attrs_%s.svg' % name),
                               title=name, x_label=name)
    logger.info('Wrote attribute histograms of %d sequences to %s', len(gts), args.out)


def cmd_bench(cfg, args):
    result = bench.run_bench(cfg)
    result.save(args.out)
    result.display()


COMMANDS = {
    'simulate': cmd_simulate,
    'track': cmd_track,
    'eval': cmd_eval,
    'attrs': cmd_attrs,
    'bench': cmd_bench,
}


def run(args):
    cfg = config_lib.read_config(args.config, arguments.config_overrides(args),
                                 preset=args.preset)
    saver.save_args(cfg, args.out)
    COMMANDS[args.command](cfg, args)


def main(argv=None):
    parser = arguments.get_arg_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        run(args)
    except config_lib.ConfigError as e:
        logger.error('Configuration error: %s', e)
        return EXIT_CONFIG
    except (mot_io.FormatError, mot_io.DataError) as e:
        logger.error('Data error: %s', e)
        return EXIT_DATA
    except Exception:
        logger.exception('%s failed', args.command)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
