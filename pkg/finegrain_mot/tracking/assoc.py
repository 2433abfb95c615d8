"""Association core: fine and coarse score matrices, assignment, the two-stage
cascade and the track lifecycle.

The fine score of net i against detection j is

    S[i, j] = w[i, j] * |P_i inside b_j| / |P_i|,  w[i, j] = min(1, A(b_pred_i) / A(b_j))

where P_i are the net's POIs visible at the matching frame and b_pred_i is the
Kalman-predicted box of the track at that frame.
"""

import collections
import logging
import math

import numpy as np
import scipy.optimize

from finegrain_mot.tracking import geometry
from finegrain_mot.tracking import motion


logger = logging.getLogger(__name__)

ACTIVE = 'active'
LOST = 'lost'

FUSION_MODES = ('convex', 'max')

TIE_BREAK_SCALE = 1e-9

Detection = collections.namedtuple('Detection', ['box', 'score', 'class_id'])
Detection.__new__.__defaults__ = (1,)

# trajectories: list of points.PointTrajectory sharing one track id.
Net = collections.namedtuple('Net', ['track_id', 'trajectories'])

ScoreMatrix = collections.namedtuple('ScoreMatrix', ['values', 'row_ids', 'col_ids'])

AssocConfig = collections.namedtuple('AssocConfig', [
    'det_high',
    'det_low',
    'new_track_score',
    'match_threshold',
    'fusion_lambda',
    'max_lost',
    'low_match_threshold',
    'fusion_mode',
    # Nets with fewer visible POIs than this share of the sampled count fall
    # back to the coarse score.
    'min_poi_fraction',
])
AssocConfig.__new__.__defaults__ = (0.5, 0.1, 0.6, 0.2, 0.5, 30, 0.5, 'convex', 0.5)

# matches: list of (track index, detection index, stage); spawn: detection
# indices that start new tracks.
CascadeOutcome = collections.namedtuple('CascadeOutcome', [
    'tracks', 'detections', 'matches', 'unmatched_tracks',
    'unmatched_detections', 'spawn'])


def validate_config(cfg):
    if not 0 <= cfg.det_low <= cfg.det_high <= 1:
        raise ValueError('Expected 0 <= det_low <= det_high <= 1, got %s, %s' % (
            cfg.det_low, cfg.det_high))
    for name in ('new_track_score', 'match_threshold', 'fusion_lambda',
                 'low_match_threshold', 'min_poi_fraction'):
        value = getattr(cfg, name)
        if not 0 <= value <= 1:
            raise ValueError('%s must be in [0, 1], got %s' % (name, value))
    if cfg.max_lost < 0:
        raise ValueError('max_lost must be >= 0, got %s' % cfg.max_lost)
    if cfg.fusion_mode not in FUSION_MODES:
        raise ValueError('Unknown fusion mode: %s' % cfg.fusion_mode)


class IdCounter(object):
    """Per-sequence id source; ids start at 1 and are never handed out twice."""

    def __init__(self, start=1):
        self._next = start

    def allocate(self):
        value = self._next
        self._next += 1
        return value

    def peek(self):
        return self._next


class Track(object):

    def __init__(self, track_id, detection, frame, motion_cfg=motion.MotionConfig()):
        self.id = track_id
        self.kf = motion.kf_init(detection.box, motion_cfg)
        self.last_box = detection.box
        self.predicted = detection.box
        self.status = ACTIVE
        self.frames_lost = 0
        self.class_id = detection.class_id
        self.scores = [detection.score]
        self.start_frame = frame
        self.last_frame = frame
        self.predicted_frame = frame

    def predict(self, frame=None, motion_cfg=motion.MotionConfig()):
        """Propagates the filter to `frame`, one frame ahead when omitted."""
        steps = 1 if frame is None else frame - self.predicted_frame
        if steps < 1:
            raise ValueError('Track %d was predicted to frame %d already, got %d' % (
                self.id, self.predicted_frame, frame))
        self.kf = motion.kf_predict(self.kf, steps, motion_cfg)
        self.predicted = motion.state_to_box(self.kf)
        self.predicted_frame += steps

    def update(self, detection, frame, motion_cfg=motion.MotionConfig()):
        self.kf = motion.kf_update(self.kf, detection.box, motion_cfg)
        self.last_box = detection.box
        self.status = ACTIVE
        self.frames_lost = 0
        self.class_id = detection.class_id
        self.scores.append(detection.score)
        self.last_frame = frame

    def mark_missed(self):
        self.status = LOST
        self.frames_lost += 1

    @property
    def is_active(self):
        return self.status == ACTIVE

    def copy(self):
        other = Track.__new__(Track)
        other.__dict__.update(self.__dict__)
        other.scores = list(self.scores)
        return other

    def __repr__(self):
        return 'Track(id=%d, %s, lost=%d)' % (self.id, self.status, self.frames_lost)


def net_points(net, stride_frame):
    """(k, 2) array of the net's POIs visible at a window index."""
    points = [t.positions[stride_frame] for t in net.trajectories
              if 0 <= stride_frame < len(t.visible) and t.visible[stride_frame]]
    if not points:
        return np.zeros((0, 2))
    return np.asarray(points, dtype=np.float64)


def fine_score_matrix(nets, detections, predicted, stride_frame):
    """Containment score of every net against every detection box.

    Args:
        nets: list of Net.
        detections: list of Detection.
        predicted: list of predicted Box, one per net.
        stride_frame: window index the detections belong to.

    Returns:
        ScoreMatrix with rows keyed by net track id; rows of nets with no
        visible POI are all zero.
    """
    if len(predicted) != len(nets):
        raise ValueError('Expected one predicted box per net, got %d for %d nets' % (
            len(predicted), len(nets)))
    values = np.zeros((len(nets), len(detections)))
    det = geometry.boxes_to_array([d.box for d in detections])
    det_areas = (det[:, 2] - det[:, 0]) * (det[:, 3] - det[:, 1])
    for i, net in enumerate(nets):
        points = net_points(net, stride_frame)
        if not len(points) or not len(detections):
            continue
        inside = ((points[:, None, 0] >= det[None, :, 0]) &
                  (points[:, None, 0] <= det[None, :, 2]) &
                  (points[:, None, 1] >= det[None, :, 1]) &
                  (points[:, None, 1] <= det[None, :, 3]))
        fraction = inside.sum(axis=0) / len(points)
        pred_area = geometry.area(predicted[i])
        weight = np.zeros(len(detections))
        positive = det_areas > 0
        weight[positive] = np.minimum(1.0, pred_area / det_areas[positive])
        weight = np.clip(weight, 0.0, 1.0)
        values[i] = weight * fraction
    return ScoreMatrix(values, [n.track_id for n in nets], list(range(len(detections))))


def min_visible_points(num_pois, fraction):
    """Smallest visible POI count a net needs for its fine score to count."""
    return max(1, int(math.ceil(num_pois * fraction)))


def visible_rows(nets, stride_frame, min_points=1):
    return np.array([len(net_points(net, stride_frame)) >= max(1, min_points) for net in nets],
                    dtype=bool)


def coarse_score_matrix(predicted, detections, row_ids=None, col_ids=None):
    values = geometry.iou_matrix(predicted, [d.box for d in detections])
    if row_ids is None:
        row_ids = list(range(len(predicted)))
    if col_ids is None:
        col_ids = list(range(len(detections)))
    return ScoreMatrix(values, list(row_ids), list(col_ids))


def fuse_scores(fine, coarse, fusion_lambda=0.5, mode='convex', valid_rows=None):
    """Combines fine and coarse scores entry-wise.

    Rows flagged invalid (nets without visible POIs) take the coarse score.
    """
    if fine.values.shape != coarse.values.shape:
        raise ValueError('Score matrix shapes differ: %s vs %s' % (
            fine.values.shape, coarse.values.shape))
    if list(fine.row_ids) != list(coarse.row_ids) or list(fine.col_ids) != list(coarse.col_ids):
        raise ValueError('Score matrices are keyed differently')
    if mode == 'convex':
        values = fusion_lambda * fine.values + (1 - fusion_lambda) * coarse.values
    elif mode == 'max':
        values = np.maximum(fine.values, coarse.values)
    else:
        raise ValueError('Unknown fusion mode: %s' % mode)
    if valid_rows is not None:
        invalid = ~np.asarray(valid_rows, dtype=bool)
        values[invalid] = coarse.values[invalid]
    return ScoreMatrix(np.clip(values, 0.0, 1.0), list(coarse.row_ids), list(coarse.col_ids))


def _tie_break(n_rows, n_cols):
    """Cost offsets k * (r + c) - r * c, far below any score difference.

    Summed over an assignment they are smallest for pairs that keep low rows
    on low columns.
    """
    k = max(n_rows, n_cols)
    r = np.arange(n_rows, dtype=np.float64)[:, None]
    c = np.arange(n_cols, dtype=np.float64)[None, :]
    return (k * (r + c) - r * c) * (TIE_BREAK_SCALE / float(k) ** 3)


def hungarian(scores, threshold):
    """Maximum-total-score one-to-one assignment.

    Entries below `threshold` cannot be matched; the assignment runs on cost
    1 - score with those entries zeroed, then any pair below threshold is
    dropped. Among assignments of equal total, lower row and column indices
    win: an all-tied square matrix yields the identity.

    Returns:
        (matches, unmatched_rows, unmatched_cols): matches is a list of
        (row, col) sorted by row; the others are sorted index lists.
    """
    values = scores.values if isinstance(scores, ScoreMatrix) else np.asarray(scores, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError('Expected a 2-D score matrix, got shape %s' % (values.shape,))
    n_rows, n_cols = values.shape
    if n_rows == 0 or n_cols == 0:
        return [], list(range(n_rows)), list(range(n_cols))
    if not np.all(np.isfinite(values)):
        raise ValueError('Score matrix has non-finite entries')
    feasible = np.where(values >= threshold, values, 0.0)
    rows, cols = scipy.optimize.linear_sum_assignment(
        1.0 - feasible + _tie_break(n_rows, n_cols))
    matches = sorted((int(r), int(c)) for r, c in zip(rows, cols)
                     if values[r, c] >= threshold)
    matched_rows = set(r for r, _ in matches)
    matched_cols = set(c for _, c in matches)
    return (matches,
            [r for r in range(n_rows) if r not in matched_rows],
            [c for c in range(n_cols) if c not in matched_cols])


def split_detections(detections, cfg):
    """Indices of high-score and low-score detections; degenerate boxes are dropped."""
    high, low = [], []
    for j, d in enumerate(detections):
        if geometry.is_degenerate(d.box):
            continue
        if d.score >= cfg.det_high:
            high.append(j)
        elif d.score >= cfg.det_low:
            low.append(j)
    return high, low


def byte_cascade(tracks, detections, fused_first_stage, cfg, low_stage=True,
                 spawn_extra=()):
    """Two-stage matching of tracks to one frame's detections.

    Args:
        tracks: list of Track (active and lost), already predicted.
        detections: list of Detection.
        fused_first_stage: ScoreMatrix of tracks x high-score detections, the
            columns ordered as `split_detections` returns them.
        cfg: AssocConfig.
        low_stage: run the second, low-score IOU stage.
        spawn_extra: detection indices allowed to spawn regardless of
            new_track_score.

    Returns:
        CascadeOutcome.
    """
    high, low = split_detections(detections, cfg)
    if fused_first_stage.values.shape != (len(tracks), len(high)):
        raise ValueError('First-stage matrix has shape %s, expected %s' % (
            fused_first_stage.values.shape, (len(tracks), len(high))))
    matches = []
    first, free_rows, free_high = hungarian(fused_first_stage, cfg.match_threshold)
    for r, c in first:
        matches.append((r, high[c], 1))

    free_low = list(range(len(low)))
    if low_stage and low:
        remaining = [r for r in free_rows if tracks[r].is_active]
        if remaining:
            iou = coarse_score_matrix([tracks[r].predicted for r in remaining],
                                      [detections[j] for j in low])
            second, _, free_low = hungarian(iou, cfg.low_match_threshold)
            for r, c in second:
                matches.append((remaining[r], low[c], 2))
    matched_tracks = set(m[0] for m in matches)
    unmatched_tracks = [r for r in range(len(tracks)) if r not in matched_tracks]
    unmatched_detections = sorted([high[c] for c in free_high] + [low[c] for c in free_low])
    extra = set(spawn_extra)
    spawn = [j for j in unmatched_detections
             if (j in extra or detections[j].score >= cfg.new_track_score)
             and detections[j].score >= cfg.det_low]
    return CascadeOutcome(tracks, detections, sorted(matches), unmatched_tracks,
                          unmatched_detections, spawn)


def lifecycle_step(outcome, cfg, frame, new_id, motion_cfg=motion.MotionConfig()):
    """Applies a cascade outcome to the track set.

    Args:
        outcome: CascadeOutcome.
        cfg: AssocConfig.
        frame: current frame number.
        new_id: callable mapping a spawning detection index to a track id.

    Returns:
        (tracks, born): surviving tracks followed by the new ones, and the
        new tracks alone.
    """
    tracks = outcome.tracks
    for r, j, _ in outcome.matches:
        tracks[r].update(outcome.detections[j], frame, motion_cfg)
    survivors = []
    matched = set(m[0] for m in outcome.matches)
    for r, track in enumerate(tracks):
        if r not in matched:
            track.mark_missed()
            if track.frames_lost > cfg.max_lost:
                logger.debug('Removing track %d at frame %d', track.id, frame)
                continue
        survivors.append(track)
    born = [Track(new_id(j), outcome.detections[j], frame, motion_cfg)
            for j in outcome.spawn]
    return survivors + born, born
