import collections

import pytest

from finegrain_mot.dataset import mot_io
from finegrain_mot.eval import metrics
from finegrain_mot.tracking import assoc
from finegrain_mot.tracking import geometry
from finegrain_mot.tracking import pipeline
from finegrain_mot.tracking import points
from finegrain_mot.tracking import sampler


def _scene(tracks, score=0.9):
    """Ground truth, poses and detections from object_id -> {frame: (cx, cy, w, h)}.

    Integer geometry keeps every box conversion exact.
    """
    gt, poses, dets = (collections.OrderedDict() for _ in range(3))
    frames = sorted(set(f for boxes in tracks.values() for f in boxes))
    for frame in frames:
        for object_id in sorted(tracks):
            if frame not in tracks[object_id]:
                continue
            cx, cy, w, h = tracks[object_id][frame]
            box = geometry.box_from_center(cx, cy, w, h)
            gt.setdefault(frame, []).append(mot_io.MotRow.from_box(frame, object_id, box))
            poses.setdefault(frame, collections.OrderedDict())[object_id] = mot_io.PoseRow(
                frame, object_id, cx, cy, w, h, 1.0)
            dets.setdefault(frame, []).append(
                mot_io.MotRow.from_box(frame, -1, box, conf=score))
    return gt, poses, dets, frames[-1]


def _run(dets, n_frames, poses=None, **kwargs):
    cfg = pipeline.PipelineConfig(**kwargs)
    tracker = points.OraclePointTracker(poses) if poses is not None else None
    return pipeline.track_sequence(pipeline.DetectionFrames(dets, n_frames), tracker, cfg)


def _linear_scene(n_frames=20):
    return _scene({
        1: {f: (40 + 4 * f, 60, 20, 40) for f in range(1, n_frames + 1)},
        2: {f: (300, 100 + 2 * f, 30, 30) for f in range(1, n_frames + 1)},
        3: {f: (500 - 3 * f, 300, 24, 48) for f in range(3, n_frames + 1)},
    })


@pytest.mark.timeout(10)
def test_perfect_input_scores_perfectly():
    gt, poses, dets, n_frames = _linear_scene()
    result, reports = _run(dets, n_frames, poses)
    assert list(result.frames) == list(range(1, n_frames + 1))
    assert not any(r.fallback for r in reports)
    assert [(r.start_frame, r.end_frame) for r in reports] == [(1, 8), (9, 16), (17, 20)]
    report = metrics.evaluate(gt, mot_io.group_by_frame(result.to_mot_rows()))
    assert report.scalars['MOTA'] == 1.0
    assert report.scalars['IDF1'] == 1.0
    assert report.means['HOTA'] == 1.0
    assert report.means['OWTA'] == 1.0
    assert result.track_ids() == [1, 2, 3]


@pytest.mark.timeout(10)
def test_stride_one_equals_coarse_byte():
    _, poses, dets, n_frames = _linear_scene()
    fine, _ = _run(dets, n_frames, poses, stride=1)
    coarse, _ = _run(dets, n_frames, mode='coarse-byte')
    assert fine == coarse
    assert fine.to_mot_rows() == coarse.to_mot_rows()


def _crossing():
    # The two objects trade places between frames 4 and 5; the box of object 2
    # after the jump overlaps where object 1 used to be.
    return _scene({
        1: dict([(f, (20, 100, 20, 40)) for f in range(1, 5)] +
                [(f, (100, 100, 20, 40)) for f in range(5, 9)]),
        2: dict([(f, (100, 100, 20, 40)) for f in range(1, 5)] +
                [(f, (26, 100, 20, 40)) for f in range(5, 9)]),
    })


def _box_of(result, frame, track_id):
    return [o.box for o in result.frames[frame] if o.track_id == track_id][0]


def test_fine_matching_keeps_identity_through_a_swap():
    gt, poses, dets, n_frames = _crossing()
    fine, _ = _run(dets, n_frames, poses)
    coarse, _ = _run(dets, n_frames, mode='coarse-byte')
    assert geometry.center(_box_of(fine, 5, 1)).x == 100
    assert geometry.center(_box_of(coarse, 5, 1)).x == 26
    for frame in range(5, 9):
        assert geometry.center(_box_of(fine, frame, 1)).x == 100
        assert geometry.center(_box_of(fine, frame, 2)).x == 26
    fine_counts = metrics.sequence_counts(gt, mot_io.group_by_frame(fine.to_mot_rows()))
    coarse_counts = metrics.sequence_counts(gt, mot_io.group_by_frame(coarse.to_mot_rows()))
    assert fine_counts.idsw == 0
    assert coarse_counts.idsw == 2


class _FailingTracker(points.PointTracker):

    def track(self, queries, window_frames):
        raise points.PointTrackerError('no points today')


def test_point_tracker_failure_falls_back_to_coarse():
    gt, _, dets, n_frames = _crossing()
    cfg = pipeline.PipelineConfig()
    result, reports = pipeline.track_sequence(
        pipeline.DetectionFrames(dets, n_frames), _FailingTracker(), cfg)
    coarse, _ = _run(dets, n_frames, mode='coarse-byte')
    assert all(r.fallback for r in reports)
    assert result == coarse


def test_unmatched_detections_can_seed_tracks():
    _, poses, dets, n_frames = _scene(
        {1: {f: (50, 50, 20, 40) for f in range(1, 9)}}, score=0.4)
    plain, _ = _run(dets, n_frames, poses)
    assert all(not objects for _, objects in plain)
    seeded, _ = _run(dets, n_frames, poses,
                     sampler=sampler.SamplerConfig(seed_unmatched=True))
    assert [f for f, objects in seeded if objects] == list(range(2, 9))
    assert seeded.track_ids() == [1]


def test_finenet_needs_a_point_tracker():
    with pytest.raises(ValueError):
        pipeline.FineTracker(pipeline.PipelineConfig(), None)
    pipeline.FineTracker(pipeline.PipelineConfig(stride=1), None)


def test_frames_must_increase():
    tracker = pipeline.FineTracker(pipeline.PipelineConfig(mode='coarse-iou'))
    tracker.process_frame(3, [])
    with pytest.raises(ValueError):
        tracker.process_frame(3, [])


def test_frame_gap_flushes_the_stride():
    _, poses, dets, _ = _linear_scene(6)
    tracker = pipeline.FineTracker(pipeline.PipelineConfig(), points.OraclePointTracker(poses))
    for frame in (1, 2, 3):
        tracker.process_frame(frame, [assoc.Detection(r.box, r.conf) for r in dets[frame]])
    assert tracker.pop_emitted() == []
    tracker.process_frame(5, [assoc.Detection(r.box, r.conf) for r in dets[5]])
    assert [frame for frame, _ in tracker.pop_emitted()] == [1, 2, 3]
    assert [frame for frame, _ in tracker.finish()] == [5]


def test_tracking_result_rejects_out_of_order_frames():
    result = pipeline.TrackingResult()
    result.add_frame(2, [])
    with pytest.raises(ValueError):
        result.add_frame(1, [])
    with pytest.raises(ValueError):
        result.add_frame(2, [])


def test_coarse_prediction_spans_frame_gaps():
    tracker = pipeline.FineTracker(pipeline.PipelineConfig(mode='coarse-iou'))
    for frame in list(range(1, 12)) + [14]:
        box = geometry.box_from_center(10 * frame, 50, 20, 40)
        reported = tracker.process_frame(frame, [assoc.Detection(box, 0.9)])
    assert [o.track_id for o in reported] == [1]


def test_strides_are_timed():
    _, poses, dets, n_frames = _linear_scene()
    tracker = pipeline.FineTracker(pipeline.PipelineConfig(), points.OraclePointTracker(poses))
    for frame in range(1, n_frames + 1):
        tracker.process_frame(frame, [assoc.Detection(r.box, r.conf) for r in dets[frame]])
    tracker.finish()
    assert tracker.timer.counts['points'] == 3
    assert tracker.timer.counts['match'] == 3
    assert tracker.timer.summary().startswith('points=')
    assert sum(r.elapsed for r in tracker.reports) == pytest.approx(
        sum(tracker.timer.tags.values()))


def _overlap_scene():
    # In the first frame object 2 covers the right column of object 1's grid
    # and object 1 the left column of object 2's; both then move apart.
    return _scene({
        1: {f: (40 - 4 * (f - 1), 100, 40, 40) for f in range(1, 9)},
        2: {f: (70 + 4 * (f - 1), 100, 40, 40) for f in range(1, 9)},
    })


def test_overlapping_tracks_keep_their_own_points():
    gt, poses, dets, n_frames = _overlap_scene()
    fine, reports = _run(dets, n_frames, poses)
    assert reports[0].n_queries == 12
    assert not reports[0].fallback
    counts = metrics.sequence_counts(gt, mot_io.group_by_frame(fine.to_mot_rows()))
    assert counts.idsw == 0
    assert fine.track_ids() == [1, 2]
