"""Stride-buffered tracking: coarse per-frame association, then fine re-matching.

Every frame goes through the coarse tracker (Kalman prediction, IOU cascade,
lifecycle) and into the stride buffer. When S new frames are buffered the
stride is flushed:

  1. POIs are sampled on every track's box at its first known window frame.
  2. The point tracker follows them across the window.
  3. The buffered detections are re-matched frame by frame, starting from the
     state at the beginning of the stride, with fine scores fused into the
     first cascade stage.
  4. The fine tracks replace the coarse state and the stride is emitted.

The window of a flush is the last frame of the previous stride (the seed)
followed by the buffered frames. Output frames are emitted exactly once,
after their stride is flushed; with S = 1 no fine stage runs and the output
is the coarse tracker's.
"""

import collections
import logging

from finegrain_mot.common.pipes.pipe import Pipe
from finegrain_mot.common.pipes.compose import Compose
from finegrain_mot.common.tools.timer import Timer
from finegrain_mot.dataset import mot_io
from finegrain_mot.tracking import assoc
from finegrain_mot.tracking import motion
from finegrain_mot.tracking import points
from finegrain_mot.tracking import sampler


logger = logging.getLogger(__name__)

MODES = ('finenet', 'coarse-byte', 'coarse-iou')

PipelineConfig = collections.namedtuple(
    'PipelineConfig', ['stride', 'mode', 'assoc', 'sampler', 'motion'])
PipelineConfig.__new__.__defaults__ = (
    8, 'finenet', assoc.AssocConfig(), sampler.SamplerConfig(), motion.MotionConfig())

TrackedObject = collections.namedtuple(
    'TrackedObject', ['track_id', 'box', 'score', 'class_id'])

StrideReport = collections.namedtuple(
    'StrideReport', ['start_frame', 'end_frame', 'n_queries', 'fallback', 'elapsed'])

# One associated frame: reported objects, detection index -> owning track id,
# and detections left unmatched without spawning.
_FrameOutcome = collections.namedtuple(
    '_FrameOutcome', ['reported', 'owners', 'leftovers'])


def validate_config(cfg):
    if cfg.stride < 1:
        raise ValueError('stride must be >= 1, got %s' % cfg.stride)
    if cfg.mode not in MODES:
        raise ValueError('Unknown tracking mode: %s' % cfg.mode)
    if cfg.sampler.mode not in sampler.SAMPLER_MODES:
        raise ValueError('Unknown sampler mode: %s' % cfg.sampler.mode)
    if cfg.sampler.rows < 1 or cfg.sampler.cols < 1:
        raise ValueError('Sampler grid must be at least 1x1')
    assoc.validate_config(cfg.assoc)


class TrackingResult(object):
    """Per-frame tracker output, frames in increasing order."""

    def __init__(self):
        self.frames = collections.OrderedDict()

    def add_frame(self, frame, objects):
        if frame in self.frames:
            raise ValueError('Frame %d emitted twice' % frame)
        if self.frames and frame < next(reversed(self.frames)):
            raise ValueError('Frame %d emitted out of order' % frame)
        self.frames[frame] = sorted(objects, key=lambda o: o.track_id)

    def to_mot_rows(self):
        return [mot_io.MotRow.from_box(frame, o.track_id, o.box, conf=o.score,
                                       class_id=o.class_id)
                for frame, objects in self.frames.items() for o in objects]

    def track_ids(self):
        return sorted(set(o.track_id for objects in self.frames.values() for o in objects))

    def __len__(self):
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames.items())

    def __eq__(self, other):
        return isinstance(other, TrackingResult) and self.frames == other.frames

    def __ne__(self, other):
        return not self == other


class StrideBuffer(object):
    """Frames buffered since the last flush plus the retained seed frame."""

    def __init__(self):
        self.seed = None
        self.reset()

    def reset(self, seed=None):
        # seed: (frame, {track_id: Box}) of the last flushed frame.
        self.seed = seed
        self.frames = []
        self.detections = []
        self.coarse_owners = []
        self.coarse_reported = []
        self.candidates = []

    def append(self, frame, detections, coarse_owners, coarse_reported, candidates=()):
        """Buffers one frame.

        Args:
            coarse_owners: {detection index: track id} from the coarse pass.
            coarse_reported: the coarse TrackedObjects of the frame.
            candidates: boxes of unmatched detections that spawned nothing.
        """
        if self.frames and frame != self.frames[-1] + 1:
            raise ValueError('Buffered frames must be contiguous: %d after %d' % (
                frame, self.frames[-1]))
        self.frames.append(frame)
        self.detections.append(list(detections))
        self.coarse_owners.append(dict(coarse_owners))
        self.coarse_reported.append(list(coarse_reported))
        self.candidates.append(list(candidates))

    @property
    def offset(self):
        return 1 if self.seed is not None else 0

    def window_frames(self):
        head = [self.seed[0]] if self.seed is not None else []
        return head + list(self.frames)

    def window_states(self):
        head = [dict(self.seed[1])] if self.seed is not None else []
        return head + [{track_id: dets[j].box for j, track_id in owners.items()}
                       for dets, owners in zip(self.detections, self.coarse_owners)]

    def __len__(self):
        return len(self.frames)


class FineTracker(object):
    """Semi-online tracker: coarse association per frame, fine re-matching per stride."""

    def __init__(self, cfg=PipelineConfig(), point_tracker=None, id_counter=None):
        validate_config(cfg)
        if cfg.mode == 'finenet' and cfg.stride > 1 and point_tracker is None:
            raise ValueError('finenet mode needs a point tracker')
        self.cfg = cfg
        self.point_tracker = point_tracker
        self.ids = id_counter or assoc.IdCounter()
        self.tracks = []
        self.buffer = StrideBuffer()
        self.reports = []
        self._stride_start = []
        self._emitted = collections.deque()
        self._last_frame = None
        self.timer = Timer()

    @property
    def fine_enabled(self):
        return self.cfg.mode == 'finenet' and self.cfg.stride > 1

    def _associate(self, tracks, detections, frame, score_fn, new_id, spawn_extra=()):
        for track in tracks:
            track.predict(frame, self.cfg.motion)
        high, _ = assoc.split_detections(detections, self.cfg.assoc)
        high_dets = [detections[j] for j in high]
        coarse = assoc.coarse_score_matrix(
            [t.predicted for t in tracks], high_dets, [t.id for t in tracks], high)
        first_stage = score_fn(tracks, high_dets, coarse)
        outcome = assoc.byte_cascade(
            tracks, detections, first_stage, self.cfg.assoc,
            low_stage=self.cfg.mode != 'coarse-iou', spawn_extra=spawn_extra)
        matched = [(tracks[r], j) for r, j, _ in outcome.matches]
        survivors, born = assoc.lifecycle_step(
            outcome, self.cfg.assoc, frame, new_id, self.cfg.motion)
        owners = {j: track.id for track, j in matched}
        owners.update((j, track.id) for j, track in zip(outcome.spawn, born))
        reported = [TrackedObject(owners[j], detections[j].box, detections[j].score,
                                  detections[j].class_id)
                    for j in sorted(owners)]
        leftovers = [j for j in outcome.unmatched_detections if j not in owners]
        return survivors, _FrameOutcome(reported, owners, leftovers)

    @staticmethod
    def _coarse_scores(tracks, high_dets, coarse):
        return coarse

    def process_frame(self, frame, detections):
        """Advances the coarse tracker by one frame and buffers it.

        Returns:
            list of TrackedObject: the provisional coarse output of the frame.
        """
        if self._last_frame is not None and frame <= self._last_frame:
            raise ValueError('Frames must be strictly increasing: %d after %d' % (
                frame, self._last_frame))
        if len(self.buffer) and frame != self._last_frame + 1:
            # The buffered window must stay contiguous.
            self.flush_stride()
        self._last_frame = frame
        if self.fine_enabled and not len(self.buffer):
            self._stride_start = [t.copy() for t in self.tracks]
        self.tracks, result = self._associate(
            self.tracks, detections, frame, self._coarse_scores,
            lambda j: self.ids.allocate())
        logger.debug('Frame %d: %d tracks, %d reported', frame, len(self.tracks),
                     len(result.reported))
        if not self.fine_enabled:
            self._emitted.append((frame, result.reported))
            return result.reported
        candidates = []
        if self.cfg.sampler.seed_unmatched:
            candidates = [detections[j].box for j in result.leftovers
                          if detections[j].score >= self.cfg.assoc.det_low]
        self.buffer.append(frame, detections, result.owners, result.reported, candidates)
        if len(self.buffer) >= self.cfg.stride:
            self.flush_stride()
        return result.reported

    def _queries(self):
        """POI queries for the window; candidate boxes get negative ids.

        Returns:
            (queries, {candidate id: (window index, anchor Box)}).
        """
        states = self.buffer.window_states()
        candidates = {}
        for k, boxes in enumerate(self.buffer.candidates):
            index = k + self.buffer.offset
            for box in boxes:
                candidate_id = -(len(candidates) + 1)
                states[index][candidate_id] = box
                candidates[candidate_id] = (index, box)
        return sampler.sample_pois(states, self.cfg.sampler), candidates

    def _emit_coarse(self):
        for frame, reported in zip(self.buffer.frames, self.buffer.coarse_reported):
            self._emitted.append((frame, reported))
        return self.buffer.coarse_reported[-1]

    def flush_stride(self):
        """Re-matches the buffered stride with fine scores and emits it.

        Returns:
            StrideReport, or None when the buffer is empty.
        """
        if not len(self.buffer):
            return None
        self.timer.reset()
        elapsed = 0.0
        frames = list(self.buffer.frames)
        queries, candidates = self._queries()
        fallback = False
        if not queries:
            last = self._emit_coarse()
        else:
            try:
                trajectories = self.point_tracker.track(queries, self.buffer.window_frames())
            except points.PointTrackerError as e:
                logger.warning('Point tracking failed for frames %d-%d, keeping coarse result: %s',
                               frames[0], frames[-1], e)
                fallback = True
                last = self._emit_coarse()
            else:
                elapsed += self.timer.acc('points')
                last = self._fine_pass(trajectories, candidates)
        elapsed += self.timer.acc('match')
        report = StrideReport(frames[0], frames[-1], len(queries), fallback, elapsed)
        logger.debug('Flushed frames %d-%d: %d queries', frames[0], frames[-1], len(queries))
        self.reports.append(report)
        self.buffer.reset(seed=(frames[-1], {o.track_id: o.box for o in last}))
        return report

    def _fine_pass(self, trajectories, candidates):
        grouped = collections.OrderedDict()
        for t in trajectories:
            grouped.setdefault(t.track_id, []).append(t)
        nets = {track_id: assoc.Net(track_id, ts)
                for track_id, ts in grouped.items() if track_id > 0}
        candidate_nets = [(candidates[track_id][0], candidates[track_id][1],
                           assoc.Net(track_id, ts))
                          for track_id, ts in grouped.items() if track_id < 0]
        fine_cfg = self.cfg.assoc
        min_points = assoc.min_visible_points(
            sampler.num_pois(self.cfg.sampler), fine_cfg.min_poi_fraction)
        tracks = [t.copy() for t in self._stride_start]
        used_ids = set(t.id for t in tracks)
        last = []
        for i, frame in enumerate(self.buffer.frames):
            window_index = i + self.buffer.offset
            detections = self.buffer.detections[i]
            coarse_owners = self.buffer.coarse_owners[i]
            captured = self._captured_by_candidates(candidate_nets, detections, window_index)

            def fused(tracks_, high_dets, coarse):
                row_nets = [nets.get(t.id, assoc.Net(t.id, [])) for t in tracks_]
                fine = assoc.fine_score_matrix(
                    row_nets, high_dets, [t.predicted for t in tracks_], window_index)
                return assoc.fuse_scores(
                    fine._replace(col_ids=coarse.col_ids), coarse,
                    fine_cfg.fusion_lambda, fine_cfg.fusion_mode,
                    assoc.visible_rows(row_nets, window_index, min_points))

            def new_id(j):
                # Keep the coarse id of the same detection when it is still free.
                track_id = coarse_owners.get(j)
                if track_id is None or track_id in used_ids:
                    track_id = self.ids.allocate()
                used_ids.add(track_id)
                if j in captured and track_id not in nets:
                    nets[track_id] = assoc.Net(track_id, captured[j].trajectories)
                return track_id

            tracks, result = self._associate(
                tracks, detections, frame, fused, new_id, spawn_extra=sorted(captured))
            self._emitted.append((frame, result.reported))
            last = result.reported
        self.tracks = tracks
        return last

    def _captured_by_candidates(self, candidate_nets, detections, window_index):
        """Detection index -> candidate Net holding it, among candidates anchored earlier."""
        earlier = [(box, net) for index, box, net in candidate_nets if index < window_index]
        if not earlier or not detections:
            return {}
        nets = [net for _, net in earlier]
        scores = assoc.fine_score_matrix(
            nets, detections, [box for box, _ in earlier], window_index).values
        captured = {}
        for j, detection in enumerate(detections):
            if detection.score < self.cfg.assoc.det_low:
                continue
            best = int(scores[:, j].argmax())
            if scores[best, j] >= self.cfg.assoc.match_threshold:
                captured[j] = nets[best]
        return captured

    def pop_emitted(self):
        """Frames finalised since the last call, in order."""
        out = list(self._emitted)
        self._emitted.clear()
        return out

    def finish(self):
        """Flushes the partial stride at the end of a sequence."""
        self.flush_stride()
        return self.pop_emitted()


class DetectionFrames(Pipe):
    """Yields (frame, [Detection]) for frames 1..n_frames, empty where no row exists."""

    def __init__(self, det_rows, n_frames=None):
        self.det_rows = det_rows
        last = max(det_rows) if det_rows else 0
        self.n_frames = max(n_frames or 0, last)

    def __iter__(self):
        for frame in range(1, self.n_frames + 1):
            rows = self.det_rows.get(frame, [])
            yield frame, [assoc.Detection(r.box, r.conf, r.class_id) for r in rows]

    def __len__(self):
        return self.n_frames


class TrackerPipe(Pipe):
    """Feeds frames to a FineTracker and yields finalised (frame, objects)."""

    def __init__(self, tracker):
        self.tracker = tracker

    def __iter__(self):
        for frame, detections in self.input:
            self.tracker.process_frame(frame, detections)
            for item in self.tracker.pop_emitted():
                yield item
        for item in self.tracker.finish():
            yield item


def track_sequence(frames, point_tracker=None, cfg=PipelineConfig()):
    """Runs the tracker over an iterable of (frame, [Detection]).

    Returns:
        (TrackingResult, list of StrideReport).
    """
    tracker = FineTracker(cfg, point_tracker)
    result = TrackingResult()
    with Compose([frames, TrackerPipe(tracker)]) as stream:
        for frame, objects in stream:
            result.add_frame(frame, objects)
    n_fallback = sum(1 for r in tracker.reports if r.fallback)
    if n_fallback:
        logger.warning('%d of %d strides fell back to the coarse result',
                       n_fallback, len(tracker.reports))
    if tracker.reports:
        logger.debug('Stride time: %s', tracker.timer.summary())
    return result, tracker.reports
