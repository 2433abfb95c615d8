import collections
from xml.etree import ElementTree

from finegrain_mot.eval import charts
from finegrain_mot.eval import metrics


def _parse(path):
    return ElementTree.parse(path).getroot()


def test_line_chart_skips_undefined_points(tmpdir):
    series = collections.OrderedDict([
        ('finenet', [(25.0, 0.8), (12.5, 0.7), (6.25, None)]),
        ('coarse-iou', [(25.0, 0.6), (12.5, 0.4), (6.25, 0.2)]),
    ])
    path = charts.line_chart(series, str(tmpdir.join('charts', 'owta.svg')), title='OWTA & FPS')
    root = _parse(path)
    polylines = [e for e in root.iter() if e.tag.endswith('polyline')]
    assert len(polylines) == 2
    assert len(polylines[0].get('points').split()) == 2
    assert len(polylines[1].get('points').split()) == 3
    texts = [e.text for e in root.iter() if e.tag.endswith('text')]
    assert 'OWTA & FPS' in texts


def test_histogram_chart_draws_overflow_bin(tmpdir):
    histogram = metrics.Histogram([0.0, 20.0, 40.0], [3, 1], 2)
    root = _parse(charts.histogram_chart(histogram, str(tmpdir.join('om.svg'))))
    bars = [e for e in root.iter() if e.tag.endswith('rect')][1:]
    assert len(bars) == 3
    labels = [e.text for e in root.iter() if e.tag.endswith('text')]
    assert '>=40' in labels
    bounded = metrics.Histogram([0.0, 0.5, 1.0], [0, 0], None)
    root = _parse(charts.histogram_chart(bounded, str(tmpdir.join('iou.svg'))))
    assert len([e for e in root.iter() if e.tag.endswith('rect')]) == 3
