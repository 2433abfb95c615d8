import filecmp
import os
import shutil

import pytest

from finegrain_mot import cli


SUITE = ['--set', 'suite.n_seeds=2', '--set', 'simulator.frames=20',
         '--set', 'simulator.n_objects=3']


@pytest.fixture
def suite(tmpdir):
    out = str(tmpdir.join('suite'))
    assert cli.main(['simulate', '--out', out] + SUITE) == cli.EXIT_OK
    return out


def _files(directory):
    found = []
    for root, _, names in os.walk(directory):
        found.extend(os.path.relpath(os.path.join(root, n), directory) for n in names)
    return sorted(found)


def test_simulate_is_reproducible(tmpdir, suite):
    again = str(tmpdir.join('again'))
    assert cli.main(['simulate', '--out', again] + SUITE) == cli.EXIT_OK
    assert _files(suite) == _files(again)
    assert 'manifest.json' in _files(suite)
    assert 'seq-000000/poses.txt' in _files(suite)
    _, mismatch, errors = filecmp.cmpfiles(suite, again, _files(suite), shallow=False)
    assert not mismatch and not errors


def test_stride_one_matches_coarse_byte(tmpdir, suite):
    fine = str(tmpdir.join('fine'))
    coarse = str(tmpdir.join('coarse'))
    assert cli.main(['track', suite, '--out', fine, '--stride', '1']) == cli.EXIT_OK
    assert cli.main(['track', suite, '--out', coarse, '--mode', 'coarse-byte']) == cli.EXIT_OK
    for name in ('seq-000000.txt', 'seq-000001.txt'):
        assert filecmp.cmp(os.path.join(fine, name), os.path.join(coarse, name), shallow=False)
    assert os.path.exists(os.path.join(fine, 'report.json'))
    assert os.path.exists(os.path.join(fine, 'config.json'))


def test_track_then_eval(tmpdir, suite):
    results = str(tmpdir.join('results'))
    assert cli.main(['track', suite, '--out', results]) == cli.EXIT_OK
    report = str(tmpdir.join('report'))
    assert cli.main(['eval', '--gt', suite, '--results', results, '--out', report,
                     '--tag', 'finenet']) == cli.EXIT_OK
    assert os.path.exists(os.path.join(report, 'metrics.csv'))
    assert open(os.path.join(report, 'summary.md')).read().startswith('# finenet')


def _metric(report_dir, sequence, metric):
    for line in open(os.path.join(report_dir, 'metrics.csv')).read().splitlines()[1:]:
        name, key, value, _ = line.split(',')
        if (name, key) == (sequence, metric):
            return value


def test_eval_of_ground_truth_is_perfect(tmpdir, suite):
    results = tmpdir.mkdir('results')
    for name in ('seq-000000', 'seq-000001'):
        shutil.copy(os.path.join(suite, name, 'gt.txt'), str(results.join(name + '.txt')))
    report = str(tmpdir.join('report'))
    assert cli.main(['eval', '--gt', suite, '--results', str(results),
                     '--out', report]) == cli.EXIT_OK
    assert _metric(report, 'COMBINED', 'MOTA') == '1.0'
    assert _metric(report, 'COMBINED', 'IDF1') == '1.0'
    assert float(_metric(report, 'COMBINED', 'HOTA')) == pytest.approx(1.0)


def test_missing_results_are_flagged(tmpdir, suite):
    results = tmpdir.mkdir('results')
    report = str(tmpdir.join('report'))
    assert cli.main(['eval', '--gt', suite, '--results', str(results),
                     '--out', report]) == cli.EXIT_OK
    assert _metric(report, 'seq-000000', 'MOTA') == '0.0'


def test_attrs_outputs(tmpdir, suite):
    out = str(tmpdir.join('attrs'))
    assert cli.main(['attrs', '--gt', suite, '--out', out]) == cli.EXIT_OK
    lines = open(os.path.join(out, 'attrs.csv')).read().splitlines()
    assert lines[0] == 'attribute,lower,upper,count'
    # Two sequences of three objects over 20 frames.
    om = [int(line.split(',')[-1]) for line in lines[1:] if line.startswith('object_motion')]
    assert sum(om) == 2 * 3 * 19
    for name in ('adjacent_iou', 'arc', 'area_change', 'object_motion'):
        assert os.path.exists(os.path.join(out, 'attrs_%s.svg' % name))


def test_configuration_errors_exit_with_2(tmpdir, suite):
    out = str(tmpdir.join('out'))
    assert cli.main(['track', suite, '--out', out, '--set', 'pipeline.strid=2']) == \
        cli.EXIT_CONFIG
    assert cli.main(['track', suite, '--out', out, '--stride', '0']) == cli.EXIT_CONFIG
    assert cli.main(['track', suite, '--out', out,
                     '--config', str(tmpdir.join('missing.ini'))]) == cli.EXIT_CONFIG
    assert cli.main(['simulate', '--out', out, '--decimate', '0']) == cli.EXIT_CONFIG


def test_data_errors_exit_with_3(tmpdir):
    out = str(tmpdir.join('out'))
    empty = tmpdir.mkdir('empty')
    assert cli.main(['track', str(empty), '--out', out]) == cli.EXIT_DATA

    bad = tmpdir.mkdir('bad')
    bad.join('det.txt').write('1,-1,0,0,10\n')
    assert cli.main(['track', str(bad), '--out', out, '--mode', 'coarse-byte']) == \
        cli.EXIT_DATA

    no_poses = tmpdir.mkdir('no_poses')
    no_poses.join('det.txt').write('1,-1,0,0,10,10,0.9,1,1\n')
    assert cli.main(['track', str(no_poses), '--out', out]) == cli.EXIT_DATA
    assert cli.main(['track', str(no_poses), '--out', out, '--stride', '1']) == cli.EXIT_OK
    assert os.path.exists(os.path.join(out, 'no_poses.txt'))


def test_preset_reaches_the_saved_config(tmpdir):
    out = str(tmpdir.join('suite'))
    assert cli.main(['simulate', '--out', out, '--preset', 'dynamic'] + SUITE) == cli.EXIT_OK
    saved = open(os.path.join(out, 'config.json')).read()
    assert '"crossing_prob": 1.0' in saved
    assert '"frames": 20' in saved
