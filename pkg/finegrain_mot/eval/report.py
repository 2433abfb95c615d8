import collections
import logging
import os

from finegrain_mot.eval import metrics


logger = logging.getLogger(__name__)

COMBINED = 'COMBINED'
METRICS_FILE = 'metrics.csv'
SUMMARY_FILE = 'summary.md'
TABLE_COLUMNS = ('HOTA', 'OWTA', 'DetA', 'DetRe', 'AssA', 'TETA', 'ClsA', 'MOTA',
                 'IDF1', 'IDSW')


def _format(value, precision=None):
    if value is None:
        return ''
    if isinstance(value, int):
        return str(value)
    if precision is None:
        return repr(float(value))
    return '%.*f' % (precision, value)


def evaluate_sequence(name, gt, pred, clear_threshold=0.5, id_threshold=0.5):
    """(name, SequenceCounts); module level so it can run in a worker pool."""
    return name, metrics.sequence_counts(gt, pred or {}, clear_threshold, id_threshold)


class EvalReport(object):
    """Per-sequence metric rows plus the count-summed combined row.

    Sequences without results are scored against an empty prediction (all
    gt boxes are misses) and flagged as missing.
    """

    def __init__(self, tag, report_dir=None):
        self.tag = tag
        self.report_dir = report_dir
        self.sequences = collections.OrderedDict()
        self.missing = set()

    def add_sequence(self, name, counts, missing=False):
        if name in self.sequences:
            raise ValueError('Sequence %s already in report' % name)
        self.sequences[name] = counts
        if missing:
            self.missing.add(name)
            logger.warning('No results for sequence %s; scored as all misses', name)

    def add_result(self, name, gt, pred, clear_threshold=0.5, id_threshold=0.5):
        _, counts = evaluate_sequence(name, gt, pred, clear_threshold, id_threshold)
        self.add_sequence(name, counts, missing=pred is None)

    def combined(self):
        return metrics.MetricsReport(metrics.SequenceCounts.combine(self.sequences.values()))

    def rows(self):
        """(sequence, MetricsReport) pairs, the combined row last."""
        result = [(name, metrics.MetricsReport(counts))
                  for name, counts in sorted(self.sequences.items())]
        result.append((COMBINED, self.combined()))
        return result

    def save(self, report_dir=None):
        report_dir = report_dir or self.report_dir
        if not report_dir:
            raise ValueError('No report directory given for %s' % self.tag)
        if not os.path.exists(report_dir):
            os.makedirs(report_dir)
        rows = self.rows()
        csv_path = os.path.join(report_dir, METRICS_FILE)
        with open(csv_path, 'w') as f:
            f.write('sequence,metric,value,missing\n')
            for name, report in rows:
                flag = 1 if name in self.missing else 0
                for metric, value in report.headline().items():
                    f.write('%s,%s,%s,%d\n' % (name, metric, _format(value), flag))
        md_path = os.path.join(report_dir, SUMMARY_FILE)
        with open(md_path, 'w') as f:
            f.write(self.to_markdown(rows))
        return csv_path, md_path

    def to_markdown(self, rows=None):
        rows = rows if rows is not None else self.rows()
        lines = ['# %s' % self.tag, '',
                 '| sequence | ' + ' | '.join(TABLE_COLUMNS) + ' |',
                 '|---|' + '---|' * len(TABLE_COLUMNS)]
        for name, report in rows:
            values = report.headline()
            label = name + ' (missing)' if name in self.missing else name
            lines.append('| %s | %s |' % (label, ' | '.join(
                _format(values[c], 4) if values[c] is not None else 'n/a'
                for c in TABLE_COLUMNS)))
        return '\n'.join(lines) + '\n'

    def display(self):
        values = self.combined().headline()
        print('[%s] Sequences: %d, Missing: %d, %s' % (
            self.tag, len(self.sequences), len(self.missing),
            ', '.join('%s: %s' % (c, _format(values[c], 4) if values[c] is not None else 'n/a')
                      for c in TABLE_COLUMNS)))
