import collections

import numpy as np
import pytest

from finegrain_mot.dataset import mot_io
from finegrain_mot.tracking import geometry


def test_read_mot_row(tmpdir):
    path = tmpdir.join('gt.txt')
    path.write('1,3,10,20,30,40,0.9,1,1.0\n')
    rows = mot_io.read_mot(str(path))
    assert list(rows) == [1]
    row = rows[1][0]
    assert row.id == 3
    assert row.box == geometry.Box(10, 20, 40, 60)
    assert row.conf == 0.9


def test_empty_file_is_empty_sequence(tmpdir):
    path = tmpdir.join('det.txt')
    path.write('')
    assert mot_io.read_mot(str(path)) == collections.OrderedDict()


@pytest.mark.parametrize('line, message', [
    ('1,3,10,20,30,40,0.9,1', 'expected 9 fields'),
    ('1,3,ten,20,30,40,0.9,1,1.0', 'not numeric'),
    ('0,3,10,20,30,40,0.9,1,1.0', 'frame must be >= 1'),
    ('1,3,10,20,-1,40,0.9,1,1.0', 'invalid box size'),
    ('1,3,10,20,30,40,nan,1,1.0', 'not finite'),
    ('1.5,3,10,20,30,40,0.9,1,1.0', 'not an integer'),
    ('1,3,10,20,30,40,0.9', 'expected 9 fields'),
])
def test_malformed_rows(tmpdir, line, message):
    path = tmpdir.join('bad.txt')
    path.write('1,1,0,0,1,1,1,1,1\n' + line + '\n')
    with pytest.raises(mot_io.FormatError) as error:
        mot_io.read_mot(str(path))
    assert error.value.line_number == 2
    assert message in str(error.value)


def test_gt_rows_need_positive_size(tmpdir):
    path = tmpdir.join('gt.txt')
    path.write('1,1,0,0,0,10,1,1,1\n')
    assert len(mot_io.read_mot(str(path))[1]) == 1
    with pytest.raises(mot_io.FormatError):
        mot_io.read_mot(str(path), is_gt=True)


def test_mot_round_trip_is_lossless(tmpdir):
    rng = np.random.RandomState(0)
    rows = []
    for frame in range(1, 30):
        for id_ in rng.choice(50, size=rng.randint(0, 5), replace=False):
            rows.append(mot_io.MotRow(
                frame, int(id_), float(rng.normal(0, 300)), float(rng.normal(0, 300)),
                float(rng.uniform(0.1, 100)), float(rng.uniform(0.1, 100)),
                float(rng.uniform()), int(rng.randint(1, 4)), float(rng.uniform())))
    path = str(tmpdir.join('out.txt'))
    mot_io.write_mot(list(reversed(rows)), path)
    loaded = mot_io.read_mot(path)
    flat = [r for frame_rows in loaded.values() for r in frame_rows]
    assert flat == sorted(rows, key=lambda r: (r.frame, r.id))
    mot_io.write_mot(loaded, str(tmpdir.join('again.txt')))
    assert tmpdir.join('again.txt').read() == tmpdir.join('out.txt').read()


def test_pose_round_trip(tmpdir):
    poses = collections.OrderedDict()
    for frame in (1, 2):
        poses[frame] = collections.OrderedDict(
            (k, mot_io.PoseRow(frame, k, 10.0 * k + 0.1, 5.5, 3.25, 7.0, 0.5)) for k in (1, 2))
    path = str(tmpdir.join('poses.txt'))
    mot_io.write_poses(poses, path)
    assert mot_io.read_poses(path) == poses


def test_duplicate_pose_is_rejected(tmpdir):
    path = tmpdir.join('poses.txt')
    path.write('frame,track_id,cx,cy,w,h,visibility\n1,1,0,0,1,1,1\n1,1,2,2,1,1,1\n')
    with pytest.raises(mot_io.FormatError) as error:
        mot_io.read_poses(str(path))
    assert error.value.line_number == 3


def test_point_rows_visible_flag(tmpdir):
    path = tmpdir.join('points.csv')
    path.write('track_id,poi_index,frame,x,y,visible\n1,0,1,1.0,2.0,2\n')
    with pytest.raises(mot_io.FormatError):
        mot_io.read_point_rows(str(path))


def test_blank_lines_keep_line_numbers(tmpdir):
    path = tmpdir.join('poses.txt')
    path.write('\n1,1,0,0,1,1,1\n\n1,2,0,0,0,1,1\n')
    with pytest.raises(mot_io.FormatError) as error:
        mot_io.read_poses(str(path))
    assert error.value.line_number == 4
    assert 'positive' in str(error.value)
