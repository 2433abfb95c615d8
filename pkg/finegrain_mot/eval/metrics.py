"""Tracking metrics: HOTA/OWTA family, CLEAR (MOTA), Identity (IDF1) and TETA,
plus dynamicity attribute histograms of ground-truth tracks.

Matching follows the TrackEval procedures:

  - HOTA family: a global alignment score between every gt and predicted id
    weights the per-frame IOU; one Hungarian assignment per frame is then
    thresholded at each localisation threshold alpha.
  - CLEAR: per-frame Hungarian at IOU >= 0.5 that prefers continuing the
    previous frame's pairs; an id switch is a matched gt whose predicted id
    differs from the last one it was matched to.
  - Identity: a single bijection between gt and predicted ids maximising the
    number of frames they overlap at IOU >= 0.5.

Raw counts of a sequence live in SequenceCounts; sequences are combined by
summing counts and the ratios are computed once at the end. Metrics whose
denominator is empty are reported as None.
"""

import collections
import logging
import math

import numpy as np
import scipy.optimize

from finegrain_mot.tracking import geometry


logger = logging.getLogger(__name__)

ALPHAS = tuple(float(a) for a in np.round(np.arange(0.05, 0.96, 0.05), 2))
EPS = np.finfo('float').eps

# Histogram bins: edges are left-closed; `overflow` collects values >= the
# last edge, or is None when the attribute is bounded.
Histogram = collections.namedtuple('Histogram', ['edges', 'counts', 'overflow'])
AttributeStats = collections.namedtuple('AttributeStats', ['count', 'mean', 'median'])
DynamicityReport = collections.namedtuple('DynamicityReport', ['histograms', 'stats'])

FrameMatch = collections.namedtuple(
    'FrameMatch', ['frame', 'matches', 'unmatched_gt', 'unmatched_pred'])

ATTRIBUTE_BINS = collections.OrderedDict([
    ('adjacent_iou', (0.1, 1.0, False)),
    ('arc', (0.2, 3.0, True)),
    ('area_change', (0.2, 3.0, True)),
    ('object_motion', (20.0, 200.0, True)),
])

HOTA_FIELDS = ('HOTA', 'DetA', 'AssA', 'DetRe', 'DetPr', 'AssRe', 'AssPr',
               'LocSim', 'OWTA', 'LocA', 'AssocA', 'ClsA', 'TETA')


class _FrameData(object):
    """One frame with ids mapped to dense per-sequence indices."""

    __slots__ = ('frame', 'gt_ids', 'gt_idx', 'gt_classes', 'pred_ids', 'pred_idx',
                 'pred_classes', 'similarity')

    def __init__(self, frame, gt_ids, gt_idx, gt_classes, pred_ids, pred_idx,
                 pred_classes, similarity):
        self.frame = frame
        self.gt_ids = gt_ids
        self.gt_idx = gt_idx
        self.gt_classes = gt_classes
        self.pred_ids = pred_ids
        self.pred_idx = pred_idx
        self.pred_classes = pred_classes
        self.similarity = similarity


def _rows(grouped, frame):
    return grouped.get(frame, []) if grouped else []


def prepare(gt, pred):
    """Aligns gt and predicted rows frame by frame.

    Args:
        gt, pred: dict frame -> list of MotRow.

    Returns:
        (frames, n_gt_ids, n_pred_ids): frames is a list of _FrameData over the
        union of frames.
    """
    gt_index, pred_index = {}, {}
    frames = []
    for frame in sorted(set(gt or {}) | set(pred or {})):
        g, p = _rows(gt, frame), _rows(pred, frame)
        for row in g:
            gt_index.setdefault(row.id, len(gt_index))
        for row in p:
            pred_index.setdefault(row.id, len(pred_index))
        if len(set(r.id for r in g)) != len(g) or len(set(r.id for r in p)) != len(p):
            raise ValueError('Duplicate id within frame %d' % frame)
        frames.append(_FrameData(
            frame,
            [r.id for r in g], np.array([gt_index[r.id] for r in g], dtype=int),
            [r.class_id for r in g],
            [r.id for r in p], np.array([pred_index[r.id] for r in p], dtype=int),
            [r.class_id for r in p],
            geometry.iou_matrix([r.box for r in g], [r.box for r in p])))
    return frames, len(gt_index), len(pred_index)


def global_alignment(frames, n_gt, n_pred):
    """Soft co-occurrence score between every gt id and predicted id."""
    potential = np.zeros((n_gt, n_pred))
    gt_count = np.zeros(n_gt)
    pred_count = np.zeros(n_pred)
    for f in frames:
        gt_count[f.gt_idx] += 1
        pred_count[f.pred_idx] += 1
        if not len(f.gt_idx) or not len(f.pred_idx):
            continue
        sim = f.similarity
        denom = sim.sum(0)[np.newaxis, :] + sim.sum(1)[:, np.newaxis] - sim
        sim_iou = np.zeros_like(sim)
        mask = denom > EPS
        sim_iou[mask] = sim[mask] / denom[mask]
        potential[f.gt_idx[:, np.newaxis], f.pred_idx[np.newaxis, :]] += sim_iou
    denom = gt_count[:, np.newaxis] + pred_count[np.newaxis, :] - potential
    alignment = np.zeros_like(potential)
    mask = denom > 0
    alignment[mask] = potential[mask] / denom[mask]
    return alignment, gt_count, pred_count


def _assign(score):
    if score.size == 0:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    return scipy.optimize.linear_sum_assignment(-score)


def match_frames(gt, pred, alpha, alignment=None):
    """Per-frame one-to-one gt/pred correspondence at IOU threshold alpha.

    Without `alignment` the assignment maximises total IOU; with it (a
    gt x pred array over dense indices, see global_alignment) the HOTA score
    alignment * IOU is maximised.

    Returns:
        list of FrameMatch; matches are (gt_id, pred_id, iou) triples.
    """
    frames, _, _ = prepare(gt, pred)
    return [_match_frame(f, alpha, alignment) for f in frames]


def _match_frame(f, alpha, alignment=None):
    score = f.similarity
    if alignment is not None and score.size:
        score = alignment[f.gt_idx[:, np.newaxis], f.pred_idx[np.newaxis, :]] * score
    rows, cols = _assign(score)
    keep = f.similarity[rows, cols] >= alpha - EPS
    rows, cols = rows[keep], cols[keep]
    matched_g, matched_p = set(rows.tolist()), set(cols.tolist())
    return FrameMatch(
        f.frame,
        [(f.gt_ids[r], f.pred_ids[c], float(f.similarity[r, c])) for r, c in zip(rows, cols)],
        [i for k, i in enumerate(f.gt_ids) if k not in matched_g],
        [i for k, i in enumerate(f.pred_ids) if k not in matched_p])


class SequenceCounts(object):
    """Raw counts of one or more sequences; `+` combines them."""

    ALPHA_FIELDS = ('tp', 'fn', 'fp', 'loc_sum', 'ass_a_sum', 'ass_re_sum',
                    'ass_pr_sum', 'cls_tp', 'cls_wrong')
    SCALAR_FIELDS = ('gt_det', 'pred_det', 'clr_tp', 'clr_fn', 'clr_fp', 'idsw',
                     'motp_sum', 'mt', 'pt', 'ml', 'idtp', 'idfn', 'idfp',
                     'n_gt_ids', 'n_pred_ids')

    def __init__(self, n_alphas=len(ALPHAS)):
        for name in self.ALPHA_FIELDS:
            setattr(self, name, np.zeros(n_alphas))
        for name in self.SCALAR_FIELDS:
            setattr(self, name, 0.0)

    def __add__(self, other):
        out = SequenceCounts(len(self.tp))
        for name in self.ALPHA_FIELDS + self.SCALAR_FIELDS:
            setattr(out, name, getattr(self, name) + getattr(other, name))
        return out

    @classmethod
    def combine(cls, counts):
        counts = list(counts)
        out = cls()
        for c in counts:
            out = out + c
        return out

    def to_dict(self):
        result = {name: getattr(self, name).tolist() for name in self.ALPHA_FIELDS}
        result.update((name, float(getattr(self, name))) for name in self.SCALAR_FIELDS)
        return result


def _hota_counts(frames, n_gt, n_pred, counts):
    alignment, gt_count, pred_count = global_alignment(frames, n_gt, n_pred)
    matches_counts = [np.zeros((n_gt, n_pred)) for _ in ALPHAS]
    for f in frames:
        n_g, n_p = len(f.gt_idx), len(f.pred_idx)
        if n_g == 0 or n_p == 0:
            counts.fn += n_g
            counts.fp += n_p
            continue
        score = alignment[f.gt_idx[:, np.newaxis], f.pred_idx[np.newaxis, :]] * f.similarity
        rows, cols = _assign(score)
        for a, alpha in enumerate(ALPHAS):
            keep = f.similarity[rows, cols] >= alpha - EPS
            r, c = rows[keep], cols[keep]
            n = len(r)
            counts.tp[a] += n
            counts.fn[a] += n_g - n
            counts.fp[a] += n_p - n
            if n:
                counts.loc_sum[a] += f.similarity[r, c].sum()
                matches_counts[a][f.gt_idx[r], f.pred_idx[c]] += 1
                same = np.array([f.gt_classes[i] == f.pred_classes[j] for i, j in zip(r, c)])
                counts.cls_tp[a] += same.sum()
                counts.cls_wrong[a] += n - same.sum()
    for a in range(len(ALPHAS)):
        mc = matches_counts[a]
        union = gt_count[:, np.newaxis] + pred_count[np.newaxis, :] - mc
        ass_a = mc / np.maximum(1, union)
        counts.ass_a_sum[a] += (mc * ass_a).sum()
        counts.ass_re_sum[a] += (mc * mc / np.maximum(1, gt_count[:, np.newaxis])).sum()
        counts.ass_pr_sum[a] += (mc * mc / np.maximum(1, pred_count[np.newaxis, :])).sum()


def _clear_counts(frames, n_gt, counts, threshold=0.5):
    prev_id = [None] * n_gt
    prev_step_id = [None] * n_gt
    gt_id_count = np.zeros(n_gt)
    gt_matched_count = np.zeros(n_gt)
    for f in frames:
        n_g, n_p = len(f.gt_idx), len(f.pred_idx)
        gt_id_count[f.gt_idx] += 1
        if n_g == 0 or n_p == 0:
            counts.clr_fn += n_g
            counts.clr_fp += n_p
            continue
        continuing = np.array([[prev_step_id[g] == p for p in f.pred_ids] for g in f.gt_idx],
                              dtype=float)
        score = 1000 * continuing + f.similarity
        score[f.similarity < threshold - EPS] = 0
        rows, cols = _assign(score)
        keep = score[rows, cols] > EPS
        rows, cols = rows[keep], cols[keep]
        for r, c in zip(rows, cols):
            g, p = f.gt_idx[r], f.pred_ids[c]
            if prev_id[g] is not None and prev_id[g] != p:
                counts.idsw += 1
            prev_id[g] = p
            gt_matched_count[g] += 1
        prev_step_id = [None] * n_gt
        for r, c in zip(rows, cols):
            prev_step_id[f.gt_idx[r]] = f.pred_ids[c]
        counts.clr_tp += len(rows)
        counts.clr_fn += n_g - len(rows)
        counts.clr_fp += n_p - len(rows)
        counts.motp_sum += f.similarity[rows, cols].sum()
    present = gt_id_count > 0
    ratio = gt_matched_count[present] / gt_id_count[present]
    mt = int((ratio > 0.8).sum())
    pt = int((ratio >= 0.2).sum()) - mt
    counts.mt += mt
    counts.pt += pt
    counts.ml += int(present.sum()) - mt - pt


def _identity_counts(frames, n_gt, n_pred, counts, threshold=0.5):
    overlap = np.zeros((n_gt, n_pred))
    for f in frames:
        if not len(f.gt_idx) or not len(f.pred_idx):
            continue
        g, p = np.nonzero(f.similarity >= threshold - EPS)
        overlap[f.gt_idx[g], f.pred_idx[p]] += 1
    rows, cols = _assign(overlap)
    idtp = overlap[rows, cols].sum() if len(rows) else 0.0
    counts.idtp += idtp
    counts.idfn += _detections(frames, 'gt') - idtp
    counts.idfp += _detections(frames, 'pred') - idtp


def _detections(frames, side):
    attr = 'gt_idx' if side == 'gt' else 'pred_idx'
    return float(sum(len(getattr(f, attr)) for f in frames))


def sequence_counts(gt, pred, clear_threshold=0.5, id_threshold=0.5):
    """All raw counts of one sequence."""
    frames, n_gt, n_pred = prepare(gt, pred)
    counts = SequenceCounts()
    counts.gt_det = _detections(frames, 'gt')
    counts.pred_det = _detections(frames, 'pred')
    counts.n_gt_ids = n_gt
    counts.n_pred_ids = n_pred
    _hota_counts(frames, n_gt, n_pred, counts)
    _clear_counts(frames, n_gt, counts, clear_threshold)
    _identity_counts(frames, n_gt, n_pred, counts, id_threshold)
    return counts


def _ratio(num, den):
    return float(num) / den if den > 0 else None


def _sqrt_product(a, b):
    if a is None or b is None:
        return None
    return math.sqrt(a * b)


def _mean(values):
    if any(v is None for v in values):
        return None
    return float(np.mean(values))


class MetricsReport(object):
    """Final metric values computed from (possibly combined) counts.

    per_alpha: metric -> list over ALPHAS; means: metric -> mean over ALPHAS;
    scalars: CLEAR and Identity metrics; counts: integer totals.
    """

    def __init__(self, counts):
        self.counts_obj = counts
        c = counts
        per_alpha = collections.OrderedDict((name, []) for name in HOTA_FIELDS)
        empty = c.gt_det + c.pred_det == 0
        for a in range(len(ALPHAS)):
            tp, fn, fp = c.tp[a], c.fn[a], c.fp[a]
            if empty:
                values = dict((name, None) for name in HOTA_FIELDS)
            else:
                det_a = _ratio(tp, tp + fn + fp)
                det_re = _ratio(tp, tp + fn)
                det_pr = _ratio(tp, tp + fp)
                ass_a = _ratio(c.ass_a_sum[a], tp) or 0.0
                ass_re = _ratio(c.ass_re_sum[a], tp) or 0.0
                ass_pr = _ratio(c.ass_pr_sum[a], tp) or 0.0
                # A wrong-class match is one class false positive and one class miss.
                cls_a = _ratio(c.cls_tp[a], c.cls_tp[a] + 2 * c.cls_wrong[a]) or 0.0
                values = {
                    'HOTA': _sqrt_product(det_a, ass_a),
                    'DetA': det_a,
                    'AssA': ass_a,
                    'DetRe': det_re,
                    'DetPr': det_pr,
                    'AssRe': ass_re,
                    'AssPr': ass_pr,
                    'LocSim': _ratio(c.loc_sum[a], tp),
                    'OWTA': _sqrt_product(det_re, ass_a),
                    'LocA': det_a,
                    'AssocA': ass_a,
                    'ClsA': cls_a,
                    'TETA': (det_a + ass_a + cls_a) / 3.0,
                }
            for name in HOTA_FIELDS:
                per_alpha[name].append(values[name])
        self.per_alpha = per_alpha
        self.means = collections.OrderedDict(
            (name, _mean(values)) for name, values in per_alpha.items())
        idx = ALPHAS.index(0.5)
        self.at_half = collections.OrderedDict(
            (name, values[idx]) for name, values in per_alpha.items())
        mota = None
        if c.gt_det > 0:
            mota = 1.0 - (c.clr_fn + c.clr_fp + c.idsw) / c.gt_det
        self.scalars = collections.OrderedDict([
            ('MOTA', mota),
            ('MOTP', _ratio(c.motp_sum, c.clr_tp)),
            ('IDF1', _ratio(2 * c.idtp, 2 * c.idtp + c.idfp + c.idfn)),
            ('IDP', _ratio(c.idtp, c.idtp + c.idfp)),
            ('IDR', _ratio(c.idtp, c.idtp + c.idfn)),
        ])
        self.counts = collections.OrderedDict([
            ('TP', int(c.clr_tp)), ('FP', int(c.clr_fp)), ('FN', int(c.clr_fn)),
            ('IDSW', int(c.idsw)), ('IDTP', int(c.idtp)), ('IDFP', int(c.idfp)),
            ('IDFN', int(c.idfn)), ('gtDet', int(c.gt_det)), ('predDet', int(c.pred_det)),
            ('MT', int(c.mt)), ('PT', int(c.pt)), ('ML', int(c.ml)),
        ])

    def headline(self):
        """Flat dict of the reported values: alpha means, alpha 0.5 values and scalars."""
        out = collections.OrderedDict()
        for name, value in self.means.items():
            out[name] = value
        for name, value in self.at_half.items():
            out[name + '@0.5'] = value
        out.update(self.scalars)
        out.update(self.counts)
        return out


def evaluate(gt, pred, clear_threshold=0.5, id_threshold=0.5):
    return MetricsReport(sequence_counts(gt, pred, clear_threshold, id_threshold))


def _per_alpha(gt, pred, alphas, names):
    report = evaluate(gt, pred)
    index = [ALPHAS.index(round(a, 2)) for a in alphas]
    return collections.OrderedDict(
        (name, [report.per_alpha[name][i] for i in index]) for name in names)


def owta(gt, pred, alphas=ALPHAS):
    """Per-alpha OWTA, DetRe and AssA; None everywhere when gt is empty."""
    result = _per_alpha(gt, pred, alphas, ('OWTA', 'DetRe', 'AssA'))
    if not sum(len(rows) for rows in (gt or {}).values()):
        result = collections.OrderedDict((k, [None] * len(v)) for k, v in result.items())
    return result


def hota(gt, pred, alphas=ALPHAS):
    return _per_alpha(gt, pred, alphas, ('HOTA', 'DetA', 'AssA'))


def teta(gt, pred, alphas=ALPHAS):
    """Per-alpha TETA, LocA, AssocA and ClsA."""
    return _per_alpha(gt, pred, alphas, ('TETA', 'LocA', 'AssocA', 'ClsA'))


def mota(gt, pred, threshold=0.5):
    frames, n_gt, _ = prepare(gt, pred)
    counts = SequenceCounts()
    counts.gt_det = _detections(frames, 'gt')
    _clear_counts(frames, n_gt, counts, threshold)
    if counts.gt_det == 0:
        return None
    return 1.0 - (counts.clr_fn + counts.clr_fp + counts.idsw) / counts.gt_det


def idf1(gt, pred, threshold=0.5):
    frames, n_gt, n_pred = prepare(gt, pred)
    counts = SequenceCounts()
    _identity_counts(frames, n_gt, n_pred, counts, threshold)
    return _ratio(2 * counts.idtp, 2 * counts.idtp + counts.idfp + counts.idfn)


def _histogram(values, width, upper, overflow):
    n_bins = int(round(upper / width))
    edges = [round(k * width, 10) for k in range(n_bins + 1)]
    counts = [0] * n_bins
    extra = 0
    for v in values:
        k = int(math.floor(v / width + 1e-9))
        if k >= n_bins:
            if overflow:
                extra += 1
                continue
            k = n_bins - 1
        counts[max(k, 0)] += 1
    return Histogram(edges, counts, extra if overflow else None)


def attribute_pairs(gt):
    """AttributePairs of every gt id between consecutive frames it is present in."""
    by_id = collections.defaultdict(dict)
    for frame, rows in (gt or {}).items():
        for row in rows:
            by_id[row.id][frame] = row.box
    pairs = []
    for object_id in sorted(by_id):
        boxes = by_id[object_id]
        for frame in sorted(boxes):
            if frame + 1 in boxes:
                pairs.append(geometry.attribute_pair(boxes[frame], boxes[frame + 1]))
    return pairs


def dynamicity_report(gt):
    """Histograms of adjacent IOU, ARC, AC and OM over gt tracks.

    `gt` is one sequence (dict frame -> rows) or a list of them.
    """
    sequences = [gt] if isinstance(gt, dict) or gt is None else gt
    pairs = [p for seq in sequences for p in attribute_pairs(seq)]
    histograms = collections.OrderedDict()
    stats = collections.OrderedDict()
    for name, (width, upper, overflow) in ATTRIBUTE_BINS.items():
        values = [getattr(p, name) for p in pairs if getattr(p, name) is not None]
        histograms[name] = _histogram(values, width, upper, overflow)
        if values:
            stats[name] = AttributeStats(len(values), float(np.mean(values)),
                                         float(np.median(values)))
        else:
            stats[name] = AttributeStats(0, None, None)
    return DynamicityReport(histograms, stats)
