import numpy as np
import pytest

from finegrain_mot.dataset import mot_io
from finegrain_mot.dataset import simulator
from finegrain_mot.eval import metrics
from finegrain_mot.tracking import geometry


def test_generation_is_deterministic():
    cfg = simulator.ScenarioConfig(n_objects=5, frames=30, n_occluders=2, fp_rate=1.0,
                                   center_jitter=2.0, miss_prob=0.1, seed=3)
    assert simulator.generate(cfg) == simulator.generate(cfg)
    assert simulator.generate(cfg) != simulator.generate(cfg._replace(seed=4))


def test_bundle_contents():
    bundle = simulator.generate(simulator.ScenarioConfig(n_objects=4, frames=10, seed=1))
    assert bundle.object_ids == [1, 2, 3, 4]
    assert list(bundle.gt) == list(range(1, 11))
    for frame, rows in bundle.gt.items():
        assert sorted(bundle.poses[frame]) == [r.id for r in rows]
        # Noise-free detections are the ground-truth boxes.
        assert sorted(r.box for r in bundle.detections[frame]) == sorted(r.box for r in rows)
        assert all(r.id == -1 for r in bundle.detections[frame])
    assert bundle.n_detections == 40


def test_misses_and_false_positives():
    missed = simulator.generate(simulator.ScenarioConfig(frames=10, miss_prob=1.0))
    assert missed.n_detections == 0
    noisy = simulator.generate(simulator.ScenarioConfig(n_objects=0, frames=50, fp_rate=2.0))
    assert not noisy.gt
    assert noisy.n_detections > 0


def test_visibility_lattice():
    box = geometry.Box(0, 0, 10, 10)
    assert simulator.visibility(box, []) == 1.0
    assert simulator.visibility(box, [geometry.Box(0, 0, 5, 10)]) == 0.5
    assert simulator.visibility(box, [geometry.Box(-1, -1, 11, 11)]) == 0.0


def test_crossing_pair_meets():
    cfg = simulator.ScenarioConfig(n_objects=2, frames=40, crossing_prob=1.0, seed=2)
    bundle = simulator.generate(cfg)
    met = False
    for frame, boxes in bundle.gt_boxes.items():
        if len(boxes) == 2:
            a, b = (geometry.center(boxes[k]) for k in (1, 2))
            met = met or (a.x == pytest.approx(b.x) and a.y == pytest.approx(b.y))
    assert met


def test_decimation_renumbers_frames():
    bundle = simulator.generate(simulator.ScenarioConfig(n_objects=2, frames=10, seed=5))
    half = simulator.decimate(bundle, 4)
    assert half.n_frames == 3
    assert list(half.gt) == [1, 2, 3]
    for new, old in ((1, 1), (2, 5), (3, 9)):
        assert [r.box for r in half.gt[new]] == [r.box for r in bundle.gt[old]]
        assert all(r.frame == new for r in half.gt[new])
        assert all(p.frame == new for p in half.poses[new].values())
    assert half.meta['decimation'] == 4
    assert simulator.decimate(bundle, 1) is bundle
    with pytest.raises(ValueError):
        simulator.decimate(bundle, 0)


def test_decimation_scales_object_motion():
    cfg = simulator.ScenarioConfig(n_objects=1, frames=41, width=1e6, height=1e6,
                                   speed_min=5.0, speed_max=5.0, speed_jitter=0.0,
                                   turn_max=0.0, seed=7)
    bundle = simulator.generate(cfg)

    def motions(b):
        frames = sorted(b.gt_boxes)
        return [geometry.attribute_pair(b.gt_boxes[f][1], b.gt_boxes[f + 1][1]).object_motion
                for f in frames[:-1]]

    base = motions(bundle)
    coarse = motions(simulator.decimate(bundle, 4))
    assert len(coarse) == 10
    assert all(m == pytest.approx(base[0]) for m in base)
    assert all(m == pytest.approx(4 * base[0]) for m in coarse)


def test_bundle_round_trip(tmpdir):
    bundle = simulator.generate(simulator.ScenarioConfig(
        n_objects=3, frames=12, n_occluders=1, center_jitter=1.5, fp_rate=0.5, seed=9))
    directory = str(tmpdir.join('seq'))
    simulator.write_bundle(bundle, directory)
    assert simulator.read_bundle(directory, bundle.n_frames) == bundle


def test_read_bundle_errors(tmpdir):
    with pytest.raises(mot_io.DataError):
        simulator.read_bundle(str(tmpdir))
    tmpdir.join('det.txt').write('5,-1,0,0,10,10,0.9,1,1\n')
    assert simulator.read_bundle(str(tmpdir)).n_frames == 5
    assert simulator.read_bundle(str(tmpdir)).poses is None
    with pytest.raises(mot_io.DataError):
        simulator.read_bundle(str(tmpdir), n_frames=4)


def test_manifest_round_trip(tmpdir):
    entries = [{'name': 'seq-000001', 'seed': 1, 'n_frames': 20}]
    path = str(tmpdir.join('manifest.json'))
    simulator.write_manifest(entries, path)
    assert simulator.read_manifest(path) == entries


def test_invalid_scenarios():
    for bad in (dict(amplitude=1.0), dict(width=0.0), dict(miss_prob=2.0),
                dict(speed_min=3.0, speed_max=2.0), dict(n_classes=0)):
        with pytest.raises(ValueError):
            simulator.generate(simulator.ScenarioConfig(**bad))


def _arc_deviations(amplitude, seeds=range(20)):
    deviations, reports = [], []
    for seed in seeds:
        cfg = simulator.ScenarioConfig(frames=40, amplitude=amplitude, seed=seed)
        gt = simulator.generate(cfg).gt
        deviations.extend(abs(p.arc - 1) for p in metrics.attribute_pairs(gt))
        reports.append(gt)
    return np.mean(deviations), metrics.dynamicity_report(reports)


@pytest.mark.timeout(60)
def test_amplitude_raises_aspect_ratio_change():
    results = [_arc_deviations(amplitude) for amplitude in (0.0, 0.3, 0.6)]
    means = [mean for mean, _ in results]
    assert means[0] == pytest.approx(0.0, abs=1e-9)
    assert means[0] < means[1] < means[2]
    # Pairs near ARC = 1 can only leave the [1.0, 1.2) bin as the amplitude grows.
    near_one = [report.histograms['arc'].counts[5] for _, report in results]
    assert near_one[0] >= near_one[1] >= near_one[2]
    assert near_one[0] > near_one[2]


def test_speed_scales_object_motion():
    base = dict(width=1e6, height=1e6, speed_jitter=0.0, frames=30)
    motions = []
    for factor in (1, 2, 4):
        pairs = []
        for seed in range(20):
            cfg = simulator.ScenarioConfig(
                speed_min=2.0 * factor, speed_max=8.0 * factor, seed=seed, **base)
            pairs.extend(metrics.attribute_pairs(simulator.generate(cfg).gt))
        motions.append(np.mean([p.object_motion for p in pairs]))
    assert motions[1] == pytest.approx(2 * motions[0], rel=0.01)
    assert motions[2] == pytest.approx(4 * motions[0], rel=0.01)
