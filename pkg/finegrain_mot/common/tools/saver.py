"""Resolved-configuration containers and their JSON echo."""

import json
import os


class ArgsDict(dict):
    """dict whose keys are also attributes."""

    def __init__(self, **kwargs):
        super(ArgsDict, self).__init__()
        for key, value in kwargs.items():
            self[key] = value
        self.__dict__ = self

    def __reduce__(self):
        return (self.__class__, (), None, None, iter(self.items()))


def to_plain(value):
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    return value


def save_args(args, directory, filename='config.json'):
    """Writes `args` as sorted, indented JSON; returns the path."""
    if not os.path.exists(directory):
        os.makedirs(directory)
    path = os.path.join(directory, filename)
    with open(path, 'w') as f:
        json.dump(to_plain(args), f, indent=2, sort_keys=True)
        f.write('\n')
    return path


def restore_args(directory, filename='config.json'):
    path = os.path.join(directory, filename)
    if not os.path.exists(path):
        raise IOError('{} does not exist'.format(path))
    with open(path) as f:
        sections = json.load(f)
    return ArgsDict(**{name: ArgsDict(**values) if isinstance(values, dict) else values
                       for name, values in sections.items()})
