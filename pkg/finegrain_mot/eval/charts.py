"""Minimal SVG charts built from line, rect and text primitives."""

import os
from xml.sax.saxutils import escape

WIDTH = 480
HEIGHT = 320
MARGIN = 48
COLORS = ('#1f77b4', '#d62728', '#2ca02c', '#ff7f0e', '#9467bd', '#8c564b',
          '#e377c2', '#7f7f7f')


def _fmt(value):
    return '%.2f' % value


def _header(title):
    return [
        '<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d" '
        'viewBox="0 0 %d %d">' % (WIDTH, HEIGHT, WIDTH, HEIGHT),
        '<rect x="0" y="0" width="%d" height="%d" fill="white"/>' % (WIDTH, HEIGHT),
        '<text x="%d" y="20" text-anchor="middle" font-size="14">%s</text>' % (
            WIDTH // 2, escape(title)),
    ]


def _axes(x_label, y_label):
    x0, y0, x1, y1 = MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN // 2, MARGIN
    return [
        '<line x1="%d" y1="%d" x2="%d" y2="%d" stroke="black"/>' % (x0, y0, x1, y0),
        '<line x1="%d" y1="%d" x2="%d" y2="%d" stroke="black"/>' % (x0, y0, x0, y1),
        '<text x="%d" y="%d" text-anchor="middle" font-size="12">%s</text>' % (
            (x0 + x1) // 2, HEIGHT - 10, escape(x_label)),
        '<text x="14" y="%d" text-anchor="middle" font-size="12" '
        'transform="rotate(-90 14 %d)">%s</text>' % (
            (y0 + y1) // 2, (y0 + y1) // 2, escape(y_label)),
    ]


def _scale(lo, hi, out_lo, out_hi):
    span = (hi - lo) or 1.0

    def apply(value):
        return out_lo + (value - lo) * (out_hi - out_lo) / span
    return apply


def _write(lines, path):
    parent = os.path.dirname(path)
    if parent and not os.path.exists(parent):
        os.makedirs(parent)
    with open(path, 'w') as f:
        f.write('\n'.join(lines + ['</svg>']) + '\n')
    return path


def line_chart(series, path, title='', x_label='', y_label=''):
    """Plots named series of (x, y) points; points with y None are skipped.

    Args:
        series: OrderedDict name -> list of (x, y).
    """
    points = [(x, y) for values in series.values() for x, y in values if y is not None]
    xs = [x for x, _ in points] or [0.0, 1.0]
    ys = [y for _, y in points] or [0.0, 1.0]
    sx = _scale(min(xs), max(xs), MARGIN, WIDTH - MARGIN // 2)
    sy = _scale(min(0.0, min(ys)), max(1.0, max(ys)), HEIGHT - MARGIN, MARGIN)
    lines = _header(title) + _axes(x_label, y_label)
    for x in sorted(set(xs)):
        lines.append('<text x="%s" y="%d" text-anchor="middle" font-size="10">%s</text>' % (
            _fmt(sx(x)), HEIGHT - MARGIN + 14, escape('%g' % x)))
    for k, (name, values) in enumerate(series.items()):
        color = COLORS[k % len(COLORS)]
        coords = ['%s,%s' % (_fmt(sx(x)), _fmt(sy(y)))
                  for x, y in sorted(values) if y is not None]
        if coords:
            lines.append('<polyline fill="none" stroke="%s" stroke-width="2" points="%s"/>' % (
                color, ' '.join(coords)))
        lines.append('<text x="%d" y="%d" font-size="11" fill="%s">%s</text>' % (
            WIDTH - MARGIN - 80, MARGIN + 14 * (k + 1), color, escape(name)))
    return _write(lines, path)


def histogram_chart(histogram, path, title='', x_label=''):
    """Bar chart of a metrics.Histogram; the overflow bin is drawn last as '>='."""
    counts = list(histogram.counts)
    labels = ['%g' % e for e in histogram.edges[:-1]]
    if histogram.overflow is not None:
        counts.append(histogram.overflow)
        labels.append('>=%g' % histogram.edges[-1])
    top = max(counts + [1])
    lines = _header(title) + _axes(x_label, 'count')
    bar_width = float(WIDTH - MARGIN - MARGIN // 2) / max(1, len(counts))
    sy = _scale(0.0, top, HEIGHT - MARGIN, MARGIN)
    for k, (count, label) in enumerate(zip(counts, labels)):
        x = MARGIN + k * bar_width
        lines.append('<rect x="%s" y="%s" width="%s" height="%s" fill="%s"/>' % (
            _fmt(x + 1), _fmt(sy(count)), _fmt(bar_width - 2),
            _fmt(HEIGHT - MARGIN - sy(count)), COLORS[0]))
        lines.append('<text x="%s" y="%d" text-anchor="middle" font-size="9">%s</text>' % (
            _fmt(x + bar_width / 2), HEIGHT - MARGIN + 12, escape(label)))
    return _write(lines, path)
