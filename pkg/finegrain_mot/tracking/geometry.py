"""Axis-aligned box arithmetic and the adjacent-frame dynamicity attributes."""

import collections
import math

import numpy as np


# Corner form: left, top, right, bottom in pixels.
Box = collections.namedtuple('Box', ['x1', 'y1', 'x2', 'y2'])
Point = collections.namedtuple('Point', ['x', 'y'])

# arc and area_change are None when undefined (degenerate boxes).
AttributePair = collections.namedtuple(
    'AttributePair', ['adjacent_iou', 'arc', 'area_change', 'object_motion'])


def make_box(x1, y1, x2, y2):
    """Validated Box constructor."""
    values = (float(x1), float(y1), float(x2), float(y2))
    if not all(math.isfinite(v) for v in values):
        raise ValueError('Box has non-finite coordinates: %s' % (values,))
    if values[0] > values[2] or values[1] > values[3]:
        raise ValueError('Box corners are out of order: %s' % (values,))
    return Box(*values)


def is_valid(b):
    return (all(math.isfinite(v) for v in b) and
            b.x1 <= b.x2 and b.y1 <= b.y2)


def width(b):
    return b.x2 - b.x1


def height(b):
    return b.y2 - b.y1


def center(b):
    return Point((b.x1 + b.x2) / 2.0, (b.y1 + b.y2) / 2.0)


def area(b):
    return (b.x2 - b.x1) * (b.y2 - b.y1)


def is_degenerate(b):
    return area(b) <= 0


def box_from_tlwh(left, top, w, h):
    return make_box(left, top, left + w, top + h)


def box_to_tlwh(b):
    return (b.x1, b.y1, b.x2 - b.x1, b.y2 - b.y1)


def box_from_center(cx, cy, w, h):
    return make_box(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)


def contains(b, p):
    # Closed on every side: grid POIs on an edge still count as inside.
    return b.x1 <= p.x <= b.x2 and b.y1 <= p.y <= b.y2


def iou(a, b):
    inter_w = min(a.x2, b.x2) - max(a.x1, b.x1)
    inter_h = min(a.y2, b.y2) - max(a.y1, b.y1)
    if inter_w <= 0 or inter_h <= 0:
        return 0.0
    inter = inter_w * inter_h
    union = area(a) + area(b) - inter
    if union <= 0:
        return 0.0
    return min(1.0, max(0.0, inter / union))


def boxes_to_array(boxes):
    if not len(boxes):
        return np.zeros((0, 4), dtype=np.float64)
    return np.asarray([tuple(b) for b in boxes], dtype=np.float64)


def iou_matrix(boxes_a, boxes_b):
    """Pairwise IOU between two box lists (or (N, 4) corner arrays).

    Returns:
        (len(boxes_a), len(boxes_b)) float array; degenerate pairs are 0.
    """
    a = boxes_a if isinstance(boxes_a, np.ndarray) else boxes_to_array(boxes_a)
    b = boxes_b if isinstance(boxes_b, np.ndarray) else boxes_to_array(boxes_b)
    if len(a) == 0 or len(b) == 0:
        return np.zeros((len(a), len(b)), dtype=np.float64)
    inter_w = (np.minimum(a[:, None, 2], b[None, :, 2]) -
               np.maximum(a[:, None, 0], b[None, :, 0]))
    inter_h = (np.minimum(a[:, None, 3], b[None, :, 3]) -
               np.maximum(a[:, None, 1], b[None, :, 1]))
    inter = np.clip(inter_w, 0, None) * np.clip(inter_h, 0, None)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    result = np.zeros_like(inter)
    mask = (inter > 0) & (union > 0)
    result[mask] = inter[mask] / union[mask]
    return np.clip(result, 0.0, 1.0)


def attribute_pair(prev, cur):
    """Dynamicity attributes between the same object's boxes in adjacent frames.

    ARC and AC are reported as None when either box is degenerate.
    """
    w_prev, h_prev = width(prev), height(prev)
    w_cur, h_cur = width(cur), height(cur)
    arc = None
    if h_prev > 0 and h_cur > 0 and w_cur > 0 and w_prev > 0:
        arc = (w_prev / h_prev) / (w_cur / h_cur)
    area_change = None
    if w_prev * h_prev > 0 and w_cur * h_cur > 0:
        area_change = (w_prev * h_prev) / (w_cur * h_cur)
    c_prev, c_cur = center(prev), center(cur)
    motion = abs(c_cur.x - c_prev.x) + abs(c_cur.y - c_prev.y)
    return AttributePair(iou(prev, cur), arc, area_change, motion)
