"""Points-of-interest discovery over a stride window.

The importance weight of a candidate point is the indicator of membership in
a track's coarse box, and the target density is a uniform lattice of cell
centres inside that box. A seeded uniform-in-box variant serves POI-count
sweeps.
"""

import collections

import numpy as np

from finegrain_mot.tracking import geometry


PoiQuery = collections.namedtuple(
    'PoiQuery', ['track_id', 'stride_frame', 'position', 'poi_index'])

SamplerConfig = collections.namedtuple(
    'SamplerConfig', ['rows', 'cols', 'mode', 'seed', 'seed_unmatched', 'exclusive'])
# exclusive: drop points that also fall inside another track's box at the
# query frame.
SamplerConfig.__new__.__defaults__ = (3, 3, 'grid', 0, False, True)

SAMPLER_MODES = ('grid', 'uniform')

MIN_GRID_ASPECT = 1. / 3
MAX_GRID_ASPECT = 3.


def num_pois(cfg):
    return cfg.rows * cfg.cols


def grid_shapes(count):
    """All rows x cols decompositions of `count` with aspect in [1/3, 3].

    Ordered squarest first; among equally square shapes, fewer rows first.
    """
    shapes = []
    for rows in range(1, count + 1):
        if count % rows:
            continue
        cols = count // rows
        if MIN_GRID_ASPECT <= float(cols) / rows <= MAX_GRID_ASPECT:
            shapes.append((rows, cols))
    shapes.sort(key=lambda rc: (max(rc) - min(rc), rc[0]))
    return shapes


def grid_shape(count):
    if count < 1:
        raise ValueError('POI count must be positive, got %d' % count)
    shapes = grid_shapes(count)
    if not shapes:
        raise ValueError(
            'POI count %d has no grid decomposition with aspect in [1/3, 3]' % count)
    return shapes[0]


def config_for_count(count, mode='grid', seed=0, seed_unmatched=False, exclusive=True):
    rows, cols = grid_shape(count)
    return SamplerConfig(rows, cols, mode, seed, seed_unmatched, exclusive)


def sample_grid(box, cfg):
    """Cell centres of a rows x cols lattice over the box."""
    if geometry.is_degenerate(box):
        return []
    w, h = geometry.width(box), geometry.height(box)
    points = []
    for r in range(cfg.rows):
        for c in range(cfg.cols):
            points.append(geometry.Point(
                box.x1 + (c + 0.5) * w / cfg.cols,
                box.y1 + (r + 0.5) * h / cfg.rows))
    return points


def sample_uniform(box, count, rng):
    if geometry.is_degenerate(box):
        return []
    xs = rng.uniform(box.x1, box.x2, size=count)
    ys = rng.uniform(box.y1, box.y2, size=count)
    return [geometry.Point(float(x), float(y)) for x, y in zip(xs, ys)]


def _anchors(coarse_tracks):
    """Earliest window frame and box of every track id."""
    anchors = collections.OrderedDict()
    for stride_frame, boxes in enumerate(coarse_tracks):
        for track_id in sorted(boxes):
            if track_id not in anchors:
                anchors[track_id] = (stride_frame, boxes[track_id])
    return anchors


def sample_pois(coarse_tracks, cfg):
    """Samples POI queries for every track present in the stride window.

    Args:
        coarse_tracks: list (one entry per window frame) of {track_id: Box}.
        cfg: SamplerConfig.

    Returns:
        list of PoiQuery sorted by (track_id, poi_index); each track is
        queried at the first window frame where its box is known. With
        `cfg.exclusive`, points covered by another box of that frame are
        dropped and the survivors keep their poi_index.
    """
    queries = []
    anchors = _anchors(coarse_tracks)
    for track_id in sorted(anchors):
        stride_frame, box = anchors[track_id]
        others = []
        if cfg.exclusive:
            others = [other_box for other, other_box in coarse_tracks[stride_frame].items()
                      if other != track_id]
        if cfg.mode == 'grid':
            points = sample_grid(box, cfg)
        elif cfg.mode == 'uniform':
            # Per-track stream so adding a track does not perturb the others.
            rng = np.random.RandomState(
                (cfg.seed * 1000003 + track_id * 7919 + stride_frame) % (2 ** 32))
            points = sample_uniform(box, num_pois(cfg), rng)
        else:
            raise ValueError('Unknown sampler mode: %s' % cfg.mode)
        for poi_index, position in enumerate(points):
            if any(geometry.contains(other_box, position) for other_box in others):
                continue
            queries.append(PoiQuery(track_id, stride_frame, position, poi_index))
    return queries
