import argparse

from finegrain_mot.dataset import config as config_lib
from finegrain_mot.tracking import pipeline

COMMANDS = ('simulate', 'track', 'eval', 'attrs', 'bench')


def _add_common(parser):
    parser.add_argument('--verbose', action='store_true', default=False)
    parser.add_argument('--config', type=str, default=None,
                        help='INI file with [section] key = value entries')
    parser.add_argument('--preset', choices=list(config_lib.PRESETS), default=None,
                        help='named settings applied below --config')
    # Repeatable; wins over --config.
    parser.add_argument('--set', dest='overrides', action='append', default=[],
                        metavar='SECTION.KEY=VALUE')
    parser.add_argument('--stride', type=int, default=None)
    parser.add_argument('--seed', type=int, default=None,
                        help='simulator seed; suites use seed, seed + 1, ...')
    parser.add_argument('--jobs', type=int, default=None)
    parser.add_argument('--out', type=str, required=True)


def get_arg_parser(title='Fine-grained multi-object tracking'):
    parser = argparse.ArgumentParser(description=title)
    subparsers = parser.add_subparsers(dest='command')
    subparsers.required = True

    simulate = subparsers.add_parser('simulate', help='generate a seeded scenario suite')
    _add_common(simulate)
    simulate_group = simulate.add_argument_group('simulate')
    simulate_group.add_argument('--decimate', type=int, default=1)

    track = subparsers.add_parser('track', help='track detections into MOT result files')
    _add_common(track)
    track_group = track.add_argument_group('track')
    track_group.add_argument('inputs', nargs='+',
                             help='sequence directories or suite directories with manifest.json')
    track_group.add_argument('--mode', choices=pipeline.MODES, default=None)
    track_group.add_argument('--points', type=str, default=None,
                             help='point-track CSV (single sequence only)')

    evaluate = subparsers.add_parser('eval', help='score MOT results against ground truth')
    _add_common(evaluate)
    eval_group = evaluate.add_argument_group('eval')
    eval_group.add_argument('--gt', type=str, required=True)
    eval_group.add_argument('--results', type=str, required=True)
    eval_group.add_argument('--tag', type=str, default='eval')

    attrs = subparsers.add_parser('attrs', help='dynamicity attribute histograms')
    _add_common(attrs)
    attrs.add_argument_group('attrs').add_argument('--gt', type=str, required=True)

    subparsers.add_parser('bench', help='mode x decimation x POI sweep')
    _add_common(subparsers.choices['bench'])
    return parser


def config_overrides(args):
    """--set values followed by the flag aliases, in precedence order."""
    overrides = list(args.overrides)
    if args.stride is not None:
        overrides.append(('pipeline', 'stride', str(args.stride)))
    if args.seed is not None:
        overrides.append(('simulator', 'seed', str(args.seed)))
    if args.jobs is not None:
        overrides.append(('suite', 'jobs', str(args.jobs)))
    if getattr(args, 'mode', None):
        overrides.append(('pipeline', 'mode', args.mode))
    return overrides
