"""Layered run configuration: built-in defaults < preset < INI file < command-line overrides.

Every value is typed by its default. Overrides are `section.key=value`, or a
bare `key=value` when the key exists in exactly one section.
"""

import collections
import configparser
import os

from finegrain_mot.common.tools.saver import ArgsDict
from finegrain_mot.dataset import mot_io
from finegrain_mot.dataset import simulator
from finegrain_mot.tracking import assoc
from finegrain_mot.tracking import motion
from finegrain_mot.tracking import pipeline
from finegrain_mot.tracking import points
from finegrain_mot.tracking import sampler


class ConfigError(ValueError):
    """Invalid configuration; `key` names the offending entry."""

    def __init__(self, key, message):
        super(ConfigError, self).__init__('%s: %s' % (key, message))
        self.key = key


def _defaults():
    sections = collections.OrderedDict()
    sections['pipeline'] = collections.OrderedDict([('stride', 8), ('mode', 'finenet')])
    sections['assoc'] = collections.OrderedDict(assoc.AssocConfig()._asdict())
    sections['motion'] = collections.OrderedDict(motion.MotionConfig()._asdict())
    sections['sampler'] = collections.OrderedDict([
        ('rows', 3), ('cols', 3), ('pois', 0), ('mode', 'grid'), ('seed', 0),
        ('seed_unmatched', False), ('exclusive', True)])
    sections['points'] = collections.OrderedDict([
        ('source', 'oracle'), ('sigma', 0.0), ('dropout', 0.0), ('seed', 0),
        ('occlusion_threshold', 0.5), ('match_radius', points.DEFAULT_MATCH_RADIUS)])
    sections['simulator'] = collections.OrderedDict(simulator.ScenarioConfig()._asdict())
    sections['metrics'] = collections.OrderedDict([
        ('clear_threshold', 0.5), ('id_threshold', 0.5)])
    sections['suite'] = collections.OrderedDict([
        ('n_seeds', 20), ('jobs', 1), ('fps', 25.0),
        ('modes', ('finenet', 'coarse-iou', 'coarse-byte')),
        ('decimation', (1, 2, 4, 8)), ('pois', (1, 4, 9, 16))])
    return sections


DEFAULTS = _defaults()

# Named override layers, applied on top of the defaults and below the INI file.
PRESETS = collections.OrderedDict([
    # Fast crossing objects with deforming boxes and a noisy point tracker.
    ('dynamic', (
        'simulator.n_objects=6', 'simulator.frames=96',
        'simulator.speed_min=2', 'simulator.speed_max=20',
        'simulator.amplitude=0.4', 'simulator.crossing_prob=1',
        'points.sigma=2', 'points.dropout=0.1', 'suite.n_seeds=20')),
])

_TRUE = ('true', '1', 'yes', 'on')
_FALSE = ('false', '0', 'no', 'off')


def _convert(key, text, default):
    text = text.strip()
    try:
        if isinstance(default, bool):
            if text.lower() in _TRUE:
                return True
            if text.lower() in _FALSE:
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            item_type = type(default[0]) if default else str
            items = [t.strip() for t in text.split(',') if t.strip()]
            return tuple(item_type(t) for t in items)
    except ValueError:
        raise ConfigError(key, 'expected %s, got %r' % (type(default).__name__, text))
    return text


def _resolve_key(key):
    if '.' in key:
        section, name = key.split('.', 1)
        if section not in DEFAULTS:
            raise ConfigError(key, 'unknown section %r' % section)
        if name not in DEFAULTS[section]:
            raise ConfigError(key, 'unknown key %r in section %r' % (name, section))
        return section, name
    owners = [s for s, values in DEFAULTS.items() if key in values]
    if not owners:
        raise ConfigError(key, 'unknown key %r' % key)
    if len(owners) > 1:
        raise ConfigError(key, 'ambiguous key, qualify it with one of %s' % ', '.join(
            '%s.%s' % (s, key) for s in owners))
    return owners[0], key


def parse_override(text):
    if '=' not in text:
        raise ConfigError(text, 'expected key=value')
    key, value = text.split('=', 1)
    section, name = _resolve_key(key.strip())
    return section, name, value


def _apply(values, overrides):
    for override in overrides:
        if isinstance(override, tuple):
            section, name, text = override
            _resolve_key('%s.%s' % (section, name))
        else:
            section, name, text = parse_override(override)
        default = DEFAULTS[section][name]
        if not isinstance(text, str):
            text = ','.join(str(t) for t in text) if isinstance(text, (list, tuple)) else str(text)
        values[section][name] = _convert('%s.%s' % (section, name), text, default)


def read_config(path=None, overrides=(), base=None, preset=None):
    """Resolves the full configuration.

    Args:
        path: optional INI file.
        overrides: iterable of 'section.key=value' / 'key=value' strings, or
            (section, key, value) triples.
        base: resolved config to start from instead of the built-in defaults.
        preset: optional name from PRESETS, layered right above the start.

    Returns:
        ArgsDict of section name -> ArgsDict of typed values.
    """
    start = base if base is not None else DEFAULTS
    values = collections.OrderedDict(
        (section, collections.OrderedDict(start[section])) for section in DEFAULTS)
    if preset:
        if preset not in PRESETS:
            raise ConfigError('preset', 'unknown preset %r, expected one of %s' % (
                preset, ', '.join(PRESETS)))
        _apply(values, PRESETS[preset])
    if path:
        if not os.path.exists(path):
            raise ConfigError(path, 'no such config file')
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            with open(path) as f:
                parser.read_file(f)
        except configparser.Error as e:
            raise ConfigError(path, 'cannot parse config file: %s' % e)
        for section in parser.sections():
            if section not in DEFAULTS:
                raise ConfigError(section, 'unknown section %r' % section)
            for name, text in parser.items(section):
                if name not in DEFAULTS[section]:
                    raise ConfigError(name, 'unknown key %r in section %r' % (name, section))
                values[section][name] = _convert(
                    '%s.%s' % (section, name), text, DEFAULTS[section][name])
    _apply(values, overrides)
    cfg = ArgsDict(**{section: ArgsDict(**items) for section, items in values.items()})
    validate(cfg)
    return cfg


def _checked(section, build):
    try:
        return build()
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(section, str(e))


def sampler_config(cfg):
    s = cfg.sampler
    if s.pois:
        return _checked('sampler.pois', lambda: sampler.config_for_count(
            s.pois, s.mode, s.seed, s.seed_unmatched, s.exclusive))
    return sampler.SamplerConfig(s.rows, s.cols, s.mode, s.seed, s.seed_unmatched, s.exclusive)


def pipeline_config(cfg):
    built = pipeline.PipelineConfig(
        stride=cfg.pipeline.stride,
        mode=cfg.pipeline.mode,
        assoc=assoc.AssocConfig(**cfg.assoc),
        sampler=sampler_config(cfg),
        motion=motion.MotionConfig(**cfg.motion))
    _checked('pipeline', lambda: pipeline.validate_config(built))
    return built


def scenario_config(cfg, seed=None):
    values = dict(cfg.simulator)
    if seed is not None:
        values['seed'] = seed
    built = simulator.ScenarioConfig(**values)
    _checked('simulator', lambda: simulator.validate_config(built))
    return built


def oracle_noise(cfg):
    noise = points.OracleNoiseConfig(cfg.points.sigma, cfg.points.dropout, cfg.points.seed)
    _checked('points', lambda: points.validate_noise(noise))
    return noise


def point_tracker(cfg, poses=None, points_path=None):
    """Point tracker for a sequence, or None when the run needs none.

    Raises:
        mot_io.DataError: fine matching is on but neither a point-track file
            nor oracle poses are available.
    """
    built = pipeline_config(cfg)
    if built.mode != 'finenet' or built.stride <= 1:
        return None
    if points_path:
        return points.FilePointTracker.from_file(points_path, cfg.points.match_radius)
    if cfg.points.source == 'file':
        raise mot_io.DataError('points.source is "file" but no point-track file was given')
    if poses is None:
        raise mot_io.DataError(
            'Mode finenet needs either oracle poses (poses.txt next to det.txt) '
            'or a point-track file (--points); alternatively run with '
            '--set pipeline.mode=coarse-byte or --stride 1')
    return points.OraclePointTracker(
        poses, oracle_noise(cfg),
        occlusion_threshold=cfg.points.occlusion_threshold)


def validate(cfg):
    """Range checks across sections; raises ConfigError naming the section."""
    pipeline_config(cfg)
    scenario_config(cfg)
    oracle_noise(cfg)
    if cfg.points.source not in ('oracle', 'file'):
        raise ConfigError('points.source', 'expected oracle or file, got %r' % cfg.points.source)
    if cfg.points.match_radius < 0:
        raise ConfigError('points.match_radius', 'must be >= 0')
    if not 0 <= cfg.points.occlusion_threshold <= 1:
        raise ConfigError('points.occlusion_threshold', 'must be in [0, 1]')
    for name in ('clear_threshold', 'id_threshold'):
        if not 0 < cfg.metrics[name] <= 1:
            raise ConfigError('metrics.' + name, 'must be in (0, 1]')
    suite = cfg.suite
    if suite.n_seeds < 1 or suite.jobs < 1 or suite.fps <= 0:
        raise ConfigError('suite', 'n_seeds, jobs and fps must be positive')
    for mode in suite.modes:
        if mode not in pipeline.MODES:
            raise ConfigError('suite.modes', 'unknown mode %r' % mode)
    if any(f < 1 for f in suite.decimation):
        raise ConfigError('suite.decimation', 'factors must be >= 1')
    for count in suite.pois:
        _checked('suite.pois', lambda: sampler.grid_shape(count))
