"""Seeded synthetic sequences with fast motion, deformation and occlusion.

Objects move with bounded random turns and speed changes, bouncing off the
canvas edges. Their aspect ratio oscillates at constant area. Optional
crossing pairs fly straight through a common point. Static occluders and
depth ordering produce partial visibility. Detections
are ground-truth boxes with centre and size jitter, occlusion-dependent
misses and confidence, class flips and Poisson false positives.
"""

import collections
import json
import logging
import math
import os

import numpy as np
from cached_property import cached_property

from finegrain_mot.dataset import mot_io
from finegrain_mot.tracking import geometry


logger = logging.getLogger(__name__)

ScenarioConfig = collections.namedtuple('ScenarioConfig', [
    'n_objects',
    'frames',
    'width',
    'height',
    # Kinematics: px/frame and rad/frame.
    'speed_min',
    'speed_max',
    'speed_jitter',
    'turn_max',
    # Shape: base height range, base aspect range, oscillation.
    'size_min',
    'size_max',
    'aspect_min',
    'aspect_max',
    'amplitude',
    'frequency',
    # Occlusion.
    'crossing_prob',
    'n_occluders',
    'occluder_size',
    # Detection noise.
    'center_jitter',
    'size_jitter',
    'miss_prob',
    'occlusion_miss',
    'fp_rate',
    'fp_conf_mean',
    'conf_mean',
    'conf_std',
    'conf_occlusion_drop',
    'conf_jitter_drop',
    # Labels and lifetimes.
    'n_classes',
    'class_flip_prob',
    'spawn_spread',
    'seed',
])
ScenarioConfig.__new__.__defaults__ = (
    6, 80, 640.0, 480.0,
    2.0, 8.0, 0.1, 0.15,
    30.0, 60.0, 0.5, 2.0, 0.0, 0.1,
    0.0, 0, 60.0,
    0.0, 0.0, 0.0, 0.0, 0.0, 0.4, 0.9, 0.0, 0.5, 0.0,
    1, 0.0, 0.0, 0)

VISIBILITY_LATTICE = 10


def validate_config(cfg):
    if cfg.width <= 0 or cfg.height <= 0:
        raise ValueError('Canvas must have positive area, got %sx%s' % (cfg.width, cfg.height))
    if cfg.n_objects < 0 or cfg.frames < 0 or cfg.n_occluders < 0:
        raise ValueError('Counts must be >= 0')
    if not 0 <= cfg.speed_min <= cfg.speed_max:
        raise ValueError('Expected 0 <= speed_min <= speed_max')
    if not 0 < cfg.size_min <= cfg.size_max:
        raise ValueError('Expected 0 < size_min <= size_max')
    if not 0 < cfg.aspect_min <= cfg.aspect_max:
        raise ValueError('Expected 0 < aspect_min <= aspect_max')
    if not 0 <= cfg.amplitude < 1:
        raise ValueError('amplitude must be in [0, 1), got %s' % cfg.amplitude)
    for name in ('crossing_prob', 'miss_prob', 'occlusion_miss', 'class_flip_prob',
                 'spawn_spread'):
        value = getattr(cfg, name)
        if not 0 <= value <= 1:
            raise ValueError('%s must be in [0, 1], got %s' % (name, value))
    for name in ('speed_jitter', 'turn_max', 'center_jitter', 'size_jitter', 'fp_rate',
                 'conf_std', 'frequency'):
        if getattr(cfg, name) < 0:
            raise ValueError('%s must be >= 0' % name)
    if cfg.n_classes < 1:
        raise ValueError('n_classes must be >= 1')


class SequenceBundle(object):
    """Ground truth, oracle poses and detections of one sequence.

    gt and detections: OrderedDict frame -> list of MotRow (detections carry
    id -1); poses: OrderedDict frame -> {object id: PoseRow}.
    """

    def __init__(self, gt, poses, detections, n_frames, meta=None):
        self.gt = gt
        self.poses = poses
        self.detections = detections
        self.n_frames = n_frames
        self.meta = dict(meta or {})

    @cached_property
    def gt_boxes(self):
        """frame -> {object id: Box}."""
        return {frame: {row.id: row.box for row in rows} for frame, rows in self.gt.items()}

    @cached_property
    def object_ids(self):
        return sorted(set(row.id for rows in self.gt.values() for row in rows))

    @cached_property
    def n_detections(self):
        return sum(len(rows) for rows in self.detections.values())

    def __eq__(self, other):
        return (isinstance(other, SequenceBundle) and self.gt == other.gt and
                self.poses == other.poses and self.detections == other.detections and
                self.n_frames == other.n_frames)

    def __ne__(self, other):
        return not self == other


class _Object(object):

    def __init__(self, object_id, class_id, depth, area, aspect, phase, birth):
        self.id = object_id
        self.class_id = class_id
        self.depth = depth
        self.area = area
        self.aspect = aspect
        self.phase = phase
        self.birth = birth
        self.centers = {}

    def size(self, frame, cfg):
        aspect = self.aspect * (1 + cfg.amplitude * math.sin(
            2 * math.pi * cfg.frequency * frame + self.phase))
        h = math.sqrt(self.area / aspect)
        return aspect * h, h

    def box(self, frame, cfg):
        w, h = self.size(frame, cfg)
        cx, cy = self.centers[frame]
        return geometry.Box(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)


def _reflect(value, limit):
    if value < 0:
        return -value, True
    if value > limit:
        return 2 * limit - value, True
    return value, False


def _random_walk(obj, cfg, rng):
    cx = rng.uniform(0, cfg.width)
    cy = rng.uniform(0, cfg.height)
    heading = rng.uniform(-math.pi, math.pi)
    speed = rng.uniform(cfg.speed_min, cfg.speed_max)
    for frame in range(1, cfg.frames + 1):
        turn = rng.uniform(-cfg.turn_max, cfg.turn_max)
        change = rng.normal(0.0, 1.0) * cfg.speed_jitter
        if frame < obj.birth:
            continue
        if frame > obj.birth:
            heading += turn
            speed = min(max(speed * (1 + change), cfg.speed_min), cfg.speed_max)
            cx += speed * math.cos(heading)
            cy += speed * math.sin(heading)
            cx, bounced_x = _reflect(cx, cfg.width)
            cy, bounced_y = _reflect(cy, cfg.height)
            if bounced_x:
                heading = math.pi - heading
            if bounced_y:
                heading = -heading
        obj.centers[frame] = (cx, cy)


def _crossing_pair(first, second, cfg, rng):
    """Straight paths through a common point at a common frame; alive while on canvas."""
    tc = rng.randint(max(1, cfg.frames // 4), max(1, 3 * cfg.frames // 4) + 1)
    px = rng.uniform(0.25 * cfg.width, 0.75 * cfg.width)
    py = rng.uniform(0.25 * cfg.height, 0.75 * cfg.height)
    heading = rng.uniform(-math.pi, math.pi)
    other = heading + rng.choice([-1, 1]) * rng.uniform(math.pi / 4, 3 * math.pi / 4)
    for obj, angle in ((first, heading), (second, other)):
        speed = rng.uniform(cfg.speed_min, cfg.speed_max)
        obj.birth = 1
        for frame in range(1, cfg.frames + 1):
            cx = px + speed * math.cos(angle) * (frame - tc)
            cy = py + speed * math.sin(angle) * (frame - tc)
            if 0 <= cx <= cfg.width and 0 <= cy <= cfg.height:
                obj.centers[frame] = (cx, cy)


def _lattice(box):
    n = VISIBILITY_LATTICE
    xs = box.x1 + (np.arange(n) + 0.5) * geometry.width(box) / n
    ys = box.y1 + (np.arange(n) + 0.5) * geometry.height(box) / n
    return np.array([(x, y) for y in ys for x in xs])


def _covered(points, box):
    return ((points[:, 0] >= box.x1) & (points[:, 0] <= box.x2) &
            (points[:, 1] >= box.y1) & (points[:, 1] <= box.y2))


def visibility(box, occluding_boxes):
    """Fraction of a lattice over the box not covered by any occluding box."""
    points = _lattice(box)
    hidden = np.zeros(len(points), dtype=bool)
    for other in occluding_boxes:
        hidden |= _covered(points, other)
    return 1.0 - hidden.mean()


def _detect(obj_box, vis, class_id, cfg, rng):
    """One detection row for a visible object, or None when missed."""
    miss_draw = rng.uniform()
    jitter = rng.normal(0.0, 1.0, size=4)
    conf_noise = rng.normal(0.0, 1.0)
    flip_draw = rng.uniform()
    flip_to = rng.randint(0, max(1, cfg.n_classes - 1))
    p_miss = min(1.0, cfg.miss_prob + cfg.occlusion_miss * (1 - vis))
    if miss_draw < p_miss:
        return None
    c = geometry.center(obj_box)
    w, h = geometry.width(obj_box), geometry.height(obj_box)
    cx = c.x + jitter[0] * cfg.center_jitter
    cy = c.y + jitter[1] * cfg.center_jitter
    dw = max(1.0, w * (1 + jitter[2] * cfg.size_jitter))
    dh = max(1.0, h * (1 + jitter[3] * cfg.size_jitter))
    box = geometry.box_from_center(cx, cy, dw, dh)
    if cfg.center_jitter == 0 and cfg.size_jitter == 0:
        box = obj_box
    score = (cfg.conf_mean - cfg.conf_occlusion_drop * (1 - vis) -
             cfg.conf_jitter_drop * (1 - geometry.iou(obj_box, box)) +
             conf_noise * cfg.conf_std)
    score = min(max(score, 0.01), 1.0)
    if cfg.n_classes > 1 and flip_draw < cfg.class_flip_prob:
        # Uniform over the other classes.
        others = [k for k in range(1, cfg.n_classes + 1) if k != class_id]
        class_id = others[flip_to % len(others)]
    return box, score, class_id


def _false_positives(cfg, rng):
    rows = []
    for _ in range(rng.poisson(cfg.fp_rate) if cfg.fp_rate > 0 else 0):
        h = rng.uniform(cfg.size_min, cfg.size_max)
        w = h * rng.uniform(cfg.aspect_min, cfg.aspect_max)
        cx = rng.uniform(0, cfg.width)
        cy = rng.uniform(0, cfg.height)
        score = min(max(rng.normal(cfg.fp_conf_mean, 0.15), 0.01), 1.0)
        class_id = rng.randint(1, cfg.n_classes + 1)
        rows.append((geometry.box_from_center(cx, cy, w, h), score, class_id))
    return rows


def generate(cfg):
    """Generates one sequence bundle; identical configs give identical bundles."""
    validate_config(cfg)
    rng = np.random.RandomState(cfg.seed)
    objects = []
    for k in range(cfg.n_objects):
        h0 = rng.uniform(cfg.size_min, cfg.size_max)
        aspect = rng.uniform(cfg.aspect_min, cfg.aspect_max)
        birth = 1 + int(rng.uniform(0, cfg.spawn_spread) * cfg.frames)
        objects.append(_Object(
            object_id=k + 1,
            class_id=rng.randint(1, cfg.n_classes + 1),
            depth=rng.uniform(),
            area=aspect * h0 * h0,
            aspect=aspect,
            phase=rng.uniform(0, 2 * math.pi),
            birth=min(birth, max(cfg.frames, 1))))
    crossing = set()
    for k in range(0, cfg.n_objects - 1, 2):
        if rng.uniform() < cfg.crossing_prob:
            _crossing_pair(objects[k], objects[k + 1], cfg, rng)
            crossing.update((k, k + 1))
    for k, obj in enumerate(objects):
        if k not in crossing:
            _random_walk(obj, cfg, rng)
    occluders = []
    for _ in range(cfg.n_occluders):
        cx, cy = rng.uniform(0, cfg.width), rng.uniform(0, cfg.height)
        occluders.append(geometry.box_from_center(
            cx, cy, cfg.occluder_size, cfg.occluder_size))

    gt = collections.OrderedDict()
    poses = collections.OrderedDict()
    detections = collections.OrderedDict()
    for frame in range(1, cfg.frames + 1):
        alive = [o for o in objects if frame in o.centers]
        boxes = {o.id: o.box(frame, cfg) for o in alive}
        gt_rows, frame_poses, det_rows = [], collections.OrderedDict(), []
        for obj in alive:
            box = boxes[obj.id]
            front = [boxes[o.id] for o in alive if o.depth < obj.depth]
            vis = visibility(box, front + occluders)
            gt_rows.append(mot_io.MotRow.from_box(
                frame, obj.id, box, conf=1.0, class_id=obj.class_id, visibility=vis))
            c = geometry.center(box)
            frame_poses[obj.id] = mot_io.PoseRow(
                frame, obj.id, c.x, c.y, geometry.width(box), geometry.height(box), vis)
            detected = _detect(box, vis, obj.class_id, cfg, rng)
            if detected is not None:
                det_box, score, class_id = detected
                det_rows.append(mot_io.MotRow.from_box(
                    frame, -1, det_box, conf=score, class_id=class_id))
        for det_box, score, class_id in _false_positives(cfg, rng):
            det_rows.append(mot_io.MotRow.from_box(
                frame, -1, det_box, conf=score, class_id=class_id))
        if gt_rows:
            gt[frame] = gt_rows
            poses[frame] = frame_poses
        if det_rows:
            detections[frame] = det_rows
    meta = {'config': dict(cfg._asdict()), 'seed': cfg.seed, 'decimation': 1}
    logger.debug('Generated %d frames, %d objects, seed %d', cfg.frames, cfg.n_objects, cfg.seed)
    return SequenceBundle(gt, poses, detections, cfg.frames, meta)


def _renumber(grouped, factor, build):
    out = collections.OrderedDict()
    for frame, value in grouped.items():
        if (frame - 1) % factor:
            continue
        out[(frame - 1) // factor + 1] = build((frame - 1) // factor + 1, value)
    return out


def decimate(bundle, factor):
    """Keeps frames 1, 1 + factor, 1 + 2 * factor, ... renumbered 1, 2, 3, ..."""
    if factor < 1 or int(factor) != factor:
        raise ValueError('Decimation factor must be a positive integer, got %s' % factor)
    factor = int(factor)
    if factor == 1:
        return bundle

    def rows(frame, values):
        return [r._replace(frame=frame) for r in values]

    def pose_rows(frame, values):
        return collections.OrderedDict(
            (k, r._replace(frame=frame)) for k, r in values.items())

    n_frames = (bundle.n_frames - 1) // factor + 1 if bundle.n_frames else 0
    meta = dict(bundle.meta)
    meta['decimation'] = meta.get('decimation', 1) * factor
    return SequenceBundle(_renumber(bundle.gt, factor, rows),
                          _renumber(bundle.poses, factor, pose_rows),
                          _renumber(bundle.detections, factor, rows),
                          n_frames, meta)


GT_FILE = 'gt.txt'
DET_FILE = 'det.txt'
POSES_FILE = 'poses.txt'


def write_bundle(bundle, directory):
    if not os.path.exists(directory):
        os.makedirs(directory)
    mot_io.write_mot(bundle.gt, os.path.join(directory, GT_FILE))
    mot_io.write_mot(bundle.detections, os.path.join(directory, DET_FILE))
    mot_io.write_poses(bundle.poses, os.path.join(directory, POSES_FILE))


def read_bundle(directory, n_frames=None, meta=None):
    """Loads a bundle written by write_bundle; poses are optional.

    Without `n_frames` the sequence ends at the last frame any file mentions.
    """
    gt_path = os.path.join(directory, GT_FILE)
    det_path = os.path.join(directory, DET_FILE)
    if not os.path.exists(det_path):
        raise mot_io.DataError('No detections file in %s' % directory)
    gt = mot_io.read_mot(gt_path, is_gt=True) if os.path.exists(gt_path) else collections.OrderedDict()
    detections = mot_io.read_mot(det_path)
    poses_path = os.path.join(directory, POSES_FILE)
    poses = mot_io.read_poses(poses_path) if os.path.exists(poses_path) else None
    last = max([0] + list(gt) + list(detections) + list(poses or []))
    if n_frames is None:
        n_frames = last
    elif last > n_frames:
        raise mot_io.DataError('%s mentions frame %d beyond its length %d' % (
            directory, last, n_frames))
    return SequenceBundle(gt, poses, detections, n_frames, meta)


def write_manifest(entries, path):
    """entries: list of dicts (name, seed, n_frames, ...), written as sorted JSON."""
    with open(path, 'w') as f:
        json.dump({'sequences': entries}, f, indent=2, sort_keys=True)
        f.write('\n')


def read_manifest(path):
    with open(path) as f:
        return json.load(f)['sequences']
