"""Benchmark sweep: tracking modes x frame decimation x POI counts over a
seeded suite of simulated sequences.

Coarse modes never sample POIs, so their cells carry `pois=None` and are run
once per decimation factor.
"""

import collections
import logging
import multiprocessing as mp
import os

import numpy as np
import tqdm

from finegrain_mot.common.pipes.compose import Compose
from finegrain_mot.common.pipes.pipe import Pipe
from finegrain_mot.dataset import config as config_lib
from finegrain_mot.dataset import mot_io
from finegrain_mot.dataset import simulator
from finegrain_mot.eval import charts
from finegrain_mot.eval import metrics
from finegrain_mot.tracking import pipeline


logger = logging.getLogger(__name__)

BenchCell = collections.namedtuple('BenchCell', ['mode', 'decimation', 'fps', 'pois'])
CellStat = collections.namedtuple('CellStat', ['mean', 'std', 'n'])

BENCH_METRICS = ('OWTA', 'HOTA', 'DetRe', 'AssA', 'IDF1', 'MOTA', 'IDSW')
CSV_FILE = 'bench.csv'
MARKDOWN_FILE = 'bench.md'
CHART_FILE = 'owta_vs_fps.svg'


def suite_cells(cfg):
    cells = []
    for mode in cfg.suite.modes:
        for factor in cfg.suite.decimation:
            fps = cfg.suite.fps / factor
            if mode == 'finenet':
                cells.extend(BenchCell(mode, factor, fps, k) for k in cfg.suite.pois)
            else:
                cells.append(BenchCell(mode, factor, fps, None))
    return cells


def suite_seeds(cfg):
    return [cfg.simulator.seed + k for k in range(cfg.suite.n_seeds)]


def cell_config(cfg, cell):
    overrides = [('pipeline', 'mode', cell.mode)]
    if cell.pois is not None:
        overrides.append(('sampler', 'pois', str(cell.pois)))
    return config_lib.read_config(overrides=overrides, base=cfg)


def run_sequence(bundle, cfg, points_path=None):
    """Tracks one bundle under a resolved config; returns (TrackingResult, reports)."""
    frames = pipeline.DetectionFrames(bundle.detections, bundle.n_frames)
    tracker = config_lib.point_tracker(cfg, bundle.poses, points_path)
    return pipeline.track_sequence(frames, tracker, config_lib.pipeline_config(cfg))


def run_cell(task):
    """Worker entry point: (cfg, cell, seed) -> (cell, seed, SequenceCounts)."""
    cfg, cell, seed = task
    run_cfg = cell_config(cfg, cell)
    bundle = simulator.decimate(
        simulator.generate(config_lib.scenario_config(run_cfg, seed=seed)), cell.decimation)
    result, _ = run_sequence(bundle, run_cfg)
    counts = metrics.sequence_counts(
        bundle.gt, mot_io.group_by_frame(result.to_mot_rows()), run_cfg.metrics.clear_threshold,
        run_cfg.metrics.id_threshold)
    return cell, seed, counts


class CellRunner(Pipe):
    """Runs bench tasks from its input, in a worker pool when jobs > 1."""

    def __init__(self, jobs=1):
        self.jobs = jobs
        self.pool = None

    def enter(self):
        if self.jobs > 1:
            self.pool = mp.Pool(self.jobs)

    def exit(self):
        if self.pool is not None:
            self.pool.close()
            self.pool.join()
            self.pool = None

    def __iter__(self):
        map_func = self.pool.imap if self.pool is not None else map
        return map_func(run_cell, self.input)

    def __len__(self):
        return len(self.input)


def _stat(values):
    values = [v for v in values if v is not None]
    if not values:
        return CellStat(None, None, 0)
    return CellStat(float(np.mean(values)), float(np.std(values)), len(values))


class BenchResult(object):

    def __init__(self, cells, seeds):
        self.cells = cells
        self.seeds = seeds
        self.values = collections.OrderedDict((cell, []) for cell in cells)

    def add(self, cell, seed, counts):
        headline = metrics.MetricsReport(counts).headline()
        self.values[cell].append((seed, headline))

    def summary(self):
        """cell -> metric -> CellStat over seeds."""
        result = collections.OrderedDict()
        for cell, runs in self.values.items():
            runs = sorted(runs, key=lambda r: r[0])
            result[cell] = collections.OrderedDict(
                (name, _stat([values[name] for _, values in runs])) for name in BENCH_METRICS)
        return result

    def save(self, out_dir):
        if not os.path.exists(out_dir):
            os.makedirs(out_dir)
        summary = self.summary()
        csv_path = os.path.join(out_dir, CSV_FILE)
        with open(csv_path, 'w') as f:
            f.write('mode,decimation,fps,pois,metric,mean,std,n\n')
            for cell, stats in summary.items():
                for name, stat in stats.items():
                    f.write('%s,%d,%s,%s,%s,%s,%s,%d\n' % (
                        cell.mode, cell.decimation, repr(float(cell.fps)),
                        '' if cell.pois is None else cell.pois, name,
                        '' if stat.mean is None else repr(stat.mean),
                        '' if stat.std is None else repr(stat.std), stat.n))
        md_path = os.path.join(out_dir, MARKDOWN_FILE)
        with open(md_path, 'w') as f:
            f.write(self.to_markdown(summary))
        series = collections.OrderedDict()
        for cell, stats in summary.items():
            name = cell.mode if cell.pois is None else '%s K=%d' % (cell.mode, cell.pois)
            series.setdefault(name, []).append((cell.fps, stats['OWTA'].mean))
        chart_path = charts.line_chart(
            series, os.path.join(out_dir, CHART_FILE), title='OWTA vs frame rate',
            x_label='effective FPS', y_label='OWTA')
        return csv_path, md_path, chart_path

    def to_markdown(self, summary=None):
        summary = summary or self.summary()
        lines = ['# Benchmark (%d seeds)' % len(self.seeds), '',
                 '| mode | decimation | FPS | POIs | ' + ' | '.join(BENCH_METRICS) + ' |',
                 '|---|---|---|---|' + '---|' * len(BENCH_METRICS)]
        for cell, stats in summary.items():
            lines.append('| %s | %d | %.2f | %s | %s |' % (
                cell.mode, cell.decimation, cell.fps,
                '-' if cell.pois is None else cell.pois,
                ' | '.join('n/a' if s.mean is None else '%.3f ± %.3f' % (s.mean, s.std)
                           for s in stats.values())))
        return '\n'.join(lines) + '\n'

    def display(self):
        print(self.to_markdown())


def run_bench(cfg, cells=None, show_progress=True):
    """Runs every (cell, seed) pair of the suite."""
    cells = cells if cells is not None else suite_cells(cfg)
    seeds = suite_seeds(cfg)
    tasks = [(cfg, cell, seed) for cell in cells for seed in seeds]
    logger.info('Running %d cells x %d seeds with %d jobs', len(cells), len(seeds),
                cfg.suite.jobs)
    result = BenchResult(cells, seeds)
    with Compose([tasks, CellRunner(cfg.suite.jobs)]) as stream, \
            tqdm.tqdm(total=len(tasks), disable=not show_progress) as pbar:
        for cell, seed, counts in stream:
            result.add(cell, seed, counts)
            pbar.update(1)
    return result
