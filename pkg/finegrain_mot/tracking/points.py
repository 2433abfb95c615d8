"""Point trackers: trajectories of POI queries across a stride window.

Two implementations share the `PointTracker.track` contract:

  - OraclePointTracker transports each POI with the ground-truth pose of the
    object it lies on (box-local normalised coordinates), then adds Gaussian
    jitter, random dropout and occlusion-induced invisibility.
  - FilePointTracker serves trajectories precomputed by an external point
    tracker and stored in the point-trajectory CSV format, matching each
    query to the stored point nearest to it at the query frame.

Tracking is forward-only: frames before a query's frame are invisible.
"""

import collections
import logging

import numpy as np

from finegrain_mot.dataset import mot_io
from finegrain_mot.tracking import geometry


logger = logging.getLogger(__name__)

# frames: global frame numbers; positions: (n, 2) float array (NaN where
# unknown); visible: (n,) bool array.
PointTrajectory = collections.namedtuple(
    'PointTrajectory', ['track_id', 'poi_index', 'frames', 'positions', 'visible'])

OracleNoiseConfig = collections.namedtuple(
    'OracleNoiseConfig', ['sigma', 'dropout', 'seed'])
OracleNoiseConfig.__new__.__defaults__ = (0.0, 0.0, 0)

BINDING_MODES = ('identity', 'surface')

# Pixels between a query and the stored point it may pick up.
DEFAULT_MATCH_RADIUS = 3.0


class PointTrackerError(RuntimeError):
    pass


def position_at(trajectory, frame):
    """Point at a global frame, or None when missing or invisible."""
    for k, f in enumerate(trajectory.frames):
        if f == frame:
            if trajectory.visible[k]:
                return geometry.Point(*trajectory.positions[k])
            return None
    return None


def validate_noise(noise):
    if noise.sigma < 0:
        raise ValueError('sigma must be >= 0, got %s' % noise.sigma)
    if not 0 <= noise.dropout <= 1:
        raise ValueError('dropout must be in [0, 1], got %s' % noise.dropout)


def _window_rng(seed, window_frames):
    return np.random.RandomState((seed * 1000003 + window_frames[0]) % (2 ** 32))


def _bind_surface(frame_poses, point):
    """Object whose box holds the point: most visible first, then nearest centre."""
    best, best_key = None, None
    for track_id, pose in frame_poses.items():
        left, top = pose.cx - pose.w / 2.0, pose.cy - pose.h / 2.0
        if not (left <= point.x <= left + pose.w and top <= point.y <= top + pose.h):
            continue
        distance = (abs(point.x - pose.cx) / pose.w + abs(point.y - pose.cy) / pose.h)
        key = (-pose.visibility, distance, track_id)
        if best_key is None or key < best_key:
            best, best_key = track_id, key
    return best


def oracle_track(poses, queries, noise, window_frames, bind='identity',
                 occlusion_threshold=0.5):
    """Ground-truth driven point tracking over one window.

    Args:
        poses: dict frame -> {object_id: PoseRow}.
        queries: iterable of PoiQuery; stride_frame indexes `window_frames`.
        noise: OracleNoiseConfig.
        window_frames: list of global frame numbers of the window.
        bind: 'identity' binds a query to the object named by its track_id,
            which must then be a ground-truth id;
            'surface' binds it to the object under the point at the query
            frame (points on no object stay put as background).
        occlusion_threshold: poses less visible than this hide their points.

    Returns:
        list of PointTrajectory ordered like the sorted queries.
    """
    validate_noise(noise)
    if bind not in BINDING_MODES:
        raise ValueError('Unknown binding mode: %s' % bind)
    window_frames = list(window_frames)
    n = len(window_frames)
    rng = _window_rng(noise.seed, window_frames) if n else None
    trajectories = []
    for query in sorted(queries, key=lambda q: (q.track_id, q.poi_index, q.stride_frame)):
        if not 0 <= query.stride_frame < n:
            raise PointTrackerError('Query %s lies outside the window %s' % (
                query, window_frames))
        query_frame = window_frames[query.stride_frame]
        frame_poses = poses.get(query_frame)
        if frame_poses is None:
            raise PointTrackerError('Query %s refers to frame %d with no poses' % (
                query, query_frame))
        if bind == 'identity':
            if query.track_id not in frame_poses:
                raise PointTrackerError('Query %s refers to unknown object %d in frame %d' % (
                    query, query.track_id, query_frame))
            object_id = query.track_id
        else:
            object_id = _bind_surface(frame_poses, query.position)

        # Noise is drawn for every window frame so the stream does not depend
        # on visibility.
        jitter = rng.normal(0.0, 1.0, size=(n, 2)) * noise.sigma
        dropped = rng.uniform(size=n) < noise.dropout

        positions = np.full((n, 2), np.nan)
        visible = np.zeros(n, dtype=bool)
        positions[query.stride_frame] = query.position
        visible[query.stride_frame] = True
        if object_id is not None:
            anchor = frame_poses[object_id]
            u = (query.position.x - (anchor.cx - anchor.w / 2.0)) / anchor.w
            v = (query.position.y - (anchor.cy - anchor.h / 2.0)) / anchor.h
        for k in range(query.stride_frame + 1, n):
            if object_id is None:
                x, y = query.position
            else:
                pose = poses.get(window_frames[k], {}).get(object_id)
                if pose is None:
                    continue
                if pose.visibility < occlusion_threshold:
                    continue
                x = pose.cx - pose.w / 2.0 + u * pose.w
                y = pose.cy - pose.h / 2.0 + v * pose.h
            if dropped[k]:
                continue
            positions[k] = (x + jitter[k, 0], y + jitter[k, 1])
            visible[k] = True
        trajectories.append(PointTrajectory(
            query.track_id, query.poi_index, tuple(window_frames), positions, visible))
    return trajectories


class PointTracker(object):
    """Base class: maps POI queries to trajectories over a window."""

    def track(self, queries, window_frames):
        raise NotImplementedError(
            'The point tracker %s does not implement track().' % self.__class__.__name__)


class OraclePointTracker(PointTracker):

    def __init__(self, poses, noise=OracleNoiseConfig(), bind='surface',
                 occlusion_threshold=0.5):
        self.poses = poses
        self.noise = noise
        self.bind = bind
        self.occlusion_threshold = occlusion_threshold

    def track(self, queries, window_frames):
        return oracle_track(self.poses, queries, self.noise, window_frames,
                            bind=self.bind,
                            occlusion_threshold=self.occlusion_threshold)


class FilePointTracker(PointTracker):
    """Serves precomputed trajectories, matched to queries by position.

    The ids stored in the file only tell trajectories apart; they need not
    agree with the tracker's ids. A query takes the stored trajectory that is
    visible at the query frame with the nearest point, within `radius`
    pixels, and follows its displacement from there. Ties go to the lowest
    (track_id, poi_index). Queries with no stored point in reach are visible
    at their own frame only.
    """

    def __init__(self, trajectories, radius=DEFAULT_MATCH_RADIUS):
        if radius < 0:
            raise ValueError('radius must be >= 0, got %s' % radius)
        self.trajectories = sorted(trajectories, key=lambda t: (t.track_id, t.poi_index))
        self.radius = radius
        by_frame = collections.OrderedDict()
        for t in self.trajectories:
            for k, frame in enumerate(t.frames):
                if t.visible[k]:
                    by_frame.setdefault(frame, []).append((t, k))
        self._by_frame = {
            frame: (entries, np.array([t.positions[k] for t, k in entries]))
            for frame, entries in by_frame.items()}

    @classmethod
    def from_file(cls, path, radius=DEFAULT_MATCH_RADIUS):
        return cls(load_point_tracks(path), radius)

    def nearest(self, frame, position):
        """(trajectory, index into its frames) closest to position, or None."""
        if frame not in self._by_frame:
            return None
        entries, stored = self._by_frame[frame]
        distance = np.hypot(stored[:, 0] - position.x, stored[:, 1] - position.y)
        best = int(np.argmin(distance))
        if distance[best] > self.radius:
            return None
        return entries[best]

    def track(self, queries, window_frames):
        window_frames = list(window_frames)
        n = len(window_frames)
        result = []
        for query in sorted(queries, key=lambda q: (q.track_id, q.poi_index)):
            if not 0 <= query.stride_frame < n:
                raise PointTrackerError('Query %s lies outside the window %s' % (
                    query, window_frames))
            positions = np.full((n, 2), np.nan)
            visible = np.zeros(n, dtype=bool)
            match = self.nearest(window_frames[query.stride_frame], query.position)
            if match is None:
                logger.debug('No stored point within %s px of query %s', self.radius, query)
            positions[query.stride_frame] = query.position
            visible[query.stride_frame] = True
            if match is not None:
                stored, start = match
                offset = np.asarray(query.position, dtype=float) - stored.positions[start]
                for k in range(query.stride_frame + 1, n):
                    point = position_at(stored, window_frames[k])
                    if point is not None:
                        positions[k] = np.asarray(point) + offset
                        visible[k] = True
            result.append(PointTrajectory(
                query.track_id, query.poi_index, tuple(window_frames), positions, visible))
        return result


def load_point_tracks(path):
    """Reads a point-trajectory CSV.

    Returns:
        list of PointTrajectory sorted by (track_id, poi_index); frames are the
        frames present in the file for that point, rows marked invisible keep
        NaN positions.
    """
    grouped = collections.OrderedDict()
    seen = set()
    for line_number, row in mot_io.read_point_rows(path):
        key = (row.track_id, row.poi_index, row.frame)
        if key in seen:
            raise mot_io.FormatError(
                path, line_number, 'duplicate point (track %d, poi %d, frame %d)' % key)
        seen.add(key)
        grouped.setdefault((row.track_id, row.poi_index), []).append(row)
    trajectories = []
    for (track_id, poi_index) in sorted(grouped):
        rows = sorted(grouped[(track_id, poi_index)], key=lambda r: r.frame)
        positions = np.full((len(rows), 2), np.nan)
        visible = np.zeros(len(rows), dtype=bool)
        for k, row in enumerate(rows):
            if row.visible:
                positions[k] = (row.x, row.y)
                visible[k] = True
        trajectories.append(PointTrajectory(
            track_id, poi_index, tuple(r.frame for r in rows), positions, visible))
    return trajectories


def write_point_tracks(trajectories, path, include_hidden=False):
    rows = []
    for t in trajectories:
        for k, frame in enumerate(t.frames):
            if t.visible[k]:
                rows.append(mot_io.PointRow(
                    t.track_id, t.poi_index, frame,
                    float(t.positions[k, 0]), float(t.positions[k, 1]), True))
            elif include_hidden:
                rows.append(mot_io.PointRow(t.track_id, t.poi_index, frame, 0.0, 0.0, False))
    mot_io.write_point_rows(rows, path)
