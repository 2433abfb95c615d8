"""Readers and writers for MOT, pose and point-trajectory CSV files.

Floats are written with `repr`, which is the shortest string that parses
back to the same double, so every write-then-read is lossless. Frames are
1-indexed everywhere.
"""

import collections
import logging
import os

import numpy as np

from finegrain_mot.tracking import geometry


logger = logging.getLogger(__name__)

MOT_FIELDS = ('frame', 'id', 'bb_left', 'bb_top', 'bb_width', 'bb_height',
              'conf', 'class', 'visibility')
POSE_FIELDS = ('frame', 'track_id', 'cx', 'cy', 'w', 'h', 'visibility')
POINT_FIELDS = ('track_id', 'poi_index', 'frame', 'x', 'y', 'visible')


class FormatError(ValueError):
    """Malformed row in one of the CSV formats."""

    def __init__(self, path, line_number, message):
        super(FormatError, self).__init__(
            '%s:%d: %s' % (path, line_number, message))
        self.path = path
        self.line_number = line_number


class DataError(ValueError):
    """Missing or mutually inconsistent input files."""


class MotRow(collections.namedtuple('MotRow', [
        'frame', 'id', 'bb_left', 'bb_top', 'bb_width', 'bb_height',
        'conf', 'class_id', 'visibility'])):
    __slots__ = ()

    @property
    def box(self):
        return geometry.Box(self.bb_left, self.bb_top,
                            self.bb_left + self.bb_width,
                            self.bb_top + self.bb_height)

    @classmethod
    def from_box(cls, frame, id_, box, conf=1.0, class_id=1, visibility=1.0):
        left, top, w, h = geometry.box_to_tlwh(box)
        return cls(int(frame), int(id_), float(left), float(top), float(w),
                   float(h), float(conf), int(class_id), float(visibility))


PoseRow = collections.namedtuple(
    'PoseRow', ['frame', 'track_id', 'cx', 'cy', 'w', 'h', 'visibility'])

PointRow = collections.namedtuple(
    'PointRow', ['track_id', 'poi_index', 'frame', 'x', 'y', 'visible'])


def _fmt(value):
    return repr(float(value))


def _numbered_lines(path, header=None):
    """(line_number, line) for the non-empty lines, minus a leading header."""
    with open(path) as f:
        numbered = [(k, line) for k, line in enumerate(f, 1) if line.strip()]
    if header is not None and numbered and numbered[0][0] == 1:
        if tuple(x.strip() for x in numbered[0][1].split(',')) == header:
            numbered = numbered[1:]
    return numbered


def _diagnose(path, numbered, fields):
    """Raises a FormatError for the first line numpy could not parse."""
    for line_number, line in numbered:
        texts = [x.strip() for x in line.split(',')]
        if len(texts) != len(fields):
            raise FormatError(path, line_number, 'expected %d fields, got %d' % (
                len(fields), len(texts)))
        for name, text in zip(fields, texts):
            try:
                float(text)
            except ValueError:
                raise FormatError(path, line_number,
                                  'field %s is not numeric: %r' % (name, text))


def _load_table(path, fields, int_fields=(), header=None):
    """Parses a numeric CSV file with numpy.

    Returns:
        (line_numbers, values): the source line of every row and a
        (rows, len(fields)) float array, all entries finite and the
        `int_fields` columns integral.
    """
    numbered = _numbered_lines(path, header)
    if not numbered:
        return [], np.zeros((0, len(fields)))
    line_numbers = [k for k, _ in numbered]
    try:
        values = np.loadtxt([line for _, line in numbered], delimiter=',',
                            dtype=np.float64, ndmin=2)
    except ValueError as e:
        _diagnose(path, numbered, fields)
        raise FormatError(path, line_numbers[0], 'cannot parse rows: %s' % e)
    if values.shape[1] != len(fields):
        raise FormatError(path, line_numbers[0], 'expected %d fields, got %d' % (
            len(fields), values.shape[1]))
    bad = np.argwhere(~np.isfinite(values))
    if len(bad):
        row, col = bad[0]
        raise FormatError(path, line_numbers[row], 'field %s is not finite: %r' % (
            fields[col], values[row, col]))
    for name in int_fields:
        column = values[:, fields.index(name)]
        fractional = np.flatnonzero(column != np.floor(column))
        if len(fractional):
            row = fractional[0]
            raise FormatError(path, line_numbers[row], 'field %s is not an integer: %r' % (
                name, column[row]))
    return line_numbers, values


def _first_bad(path, line_numbers, mask, message):
    bad = np.flatnonzero(mask)
    if len(bad):
        raise FormatError(path, line_numbers[bad[0]], message(bad[0]))


def group_by_frame(rows):
    grouped = collections.OrderedDict()
    for row in sorted(rows, key=lambda r: r.frame):
        grouped.setdefault(row.frame, []).append(row)
    return grouped


def read_mot(path, is_gt=False):
    """Reads a MOT CSV file.

    Returns:
        OrderedDict frame -> list of MotRow, frames ascending, rows of a frame
        in file order.
    """
    line_numbers, values = _load_table(path, MOT_FIELDS, ('frame', 'id', 'class'))
    frames, w, h = values[:, 0], values[:, 4], values[:, 5]
    _first_bad(path, line_numbers, frames < 1,
               lambda k: 'frame must be >= 1, got %d' % frames[k])
    too_small = (w <= 0) | (h <= 0) if is_gt else (w < 0) | (h < 0)
    _first_bad(path, line_numbers, too_small,
               lambda k: 'invalid box size %rx%r' % (w[k], h[k]))
    rows = [MotRow(int(r[0]), int(r[1]), r[2], r[3], r[4], r[5], r[6], int(r[7]), r[8])
            for r in values.tolist()]
    logger.debug('Read %d rows from %s', len(rows), path)
    return group_by_frame(rows)


def _flatten(rows):
    if isinstance(rows, dict):
        return [row for frame_rows in rows.values() for row in frame_rows]
    return list(rows)


def write_mot(rows, path):
    """Writes MotRows sorted by (frame, id); accepts a list or frame dict."""
    rows = sorted(_flatten(rows), key=lambda r: (r.frame, r.id))
    _ensure_parent(path)
    with open(path, 'w') as f:
        for r in rows:
            f.write('%d,%d,%s,%s,%s,%s,%s,%d,%s\n' % (
                r.frame, r.id, _fmt(r.bb_left), _fmt(r.bb_top),
                _fmt(r.bb_width), _fmt(r.bb_height), _fmt(r.conf),
                r.class_id, _fmt(r.visibility)))


def read_poses(path):
    """Reads a pose CSV into OrderedDict frame -> {track_id: PoseRow}."""
    line_numbers, values = _load_table(path, POSE_FIELDS, ('frame', 'track_id'), POSE_FIELDS)
    _first_bad(path, line_numbers, values[:, 0] < 1,
               lambda k: 'frame must be >= 1, got %d' % values[k, 0])
    _first_bad(path, line_numbers, (values[:, 4] <= 0) | (values[:, 5] <= 0),
               lambda k: 'pose size must be positive')
    rows = [(line_number, PoseRow(int(r[0]), int(r[1]), r[2], r[3], r[4], r[5], r[6]))
            for line_number, r in zip(line_numbers, values.tolist())]
    poses = collections.OrderedDict()
    for line_number, row in sorted(rows, key=lambda lr: (lr[1].frame, lr[1].track_id)):
        frame_poses = poses.setdefault(row.frame, collections.OrderedDict())
        if row.track_id in frame_poses:
            raise FormatError(path, line_number, 'duplicate pose for track %d in frame %d' % (
                row.track_id, row.frame))
        frame_poses[row.track_id] = row
    return poses


def write_poses(poses, path):
    rows = sorted((row for frame_poses in poses.values()
                   for row in frame_poses.values()),
                  key=lambda r: (r.frame, r.track_id))
    _ensure_parent(path)
    with open(path, 'w') as f:
        f.write(','.join(POSE_FIELDS) + '\n')
        for r in rows:
            f.write('%d,%d,%s,%s,%s,%s,%s\n' % (
                r.frame, r.track_id, _fmt(r.cx), _fmt(r.cy), _fmt(r.w),
                _fmt(r.h), _fmt(r.visibility)))


def read_point_rows(path):
    line_numbers, values = _load_table(
        path, POINT_FIELDS, ('track_id', 'poi_index', 'frame', 'visible'), POINT_FIELDS)
    _first_bad(path, line_numbers, values[:, 2] < 1,
               lambda k: 'frame must be >= 1, got %d' % values[k, 2])
    _first_bad(path, line_numbers, (values[:, 5] != 0) & (values[:, 5] != 1),
               lambda k: 'visible must be 0 or 1, got %d' % values[k, 5])
    return [(line_number, PointRow(int(r[0]), int(r[1]), int(r[2]), r[3], r[4], bool(r[5])))
            for line_number, r in zip(line_numbers, values.tolist())]


def write_point_rows(rows, path):
    rows = sorted(rows, key=lambda r: (r.track_id, r.poi_index, r.frame))
    _ensure_parent(path)
    with open(path, 'w') as f:
        f.write(','.join(POINT_FIELDS) + '\n')
        for r in rows:
            f.write('%d,%d,%d,%s,%s,%d\n' % (
                r.track_id, r.poi_index, r.frame, _fmt(r.x), _fmt(r.y),
                1 if r.visible else 0))


def _ensure_parent(path):
    parent = os.path.dirname(path)
    if parent and not os.path.exists(parent):
        os.makedirs(parent)
