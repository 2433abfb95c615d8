import pytest

from finegrain_mot.common.pipes.compose import Compose
from finegrain_mot.common.pipes.pipe import Pipe


class Recorder(Pipe):

    def __init__(self, log, name):
        self.log = log
        self.name = name

    def __iter__(self):
        for item in self.input:
            yield item * 10

    def enter(self):
        self.log.append('enter ' + self.name)

    def exit(self):
        self.log.append('exit ' + self.name)


def test_compose_chains_stages():
    log = []
    with Compose([[1, 2, 3], lambda x: x + 1, Recorder(log, 'scale')]) as stream:
        assert list(stream) == [20, 30, 40]
    assert log == ['enter scale', 'exit scale']


def test_entering_enters_inputs_first():
    log = []
    first, second = Recorder(log, 'a'), Recorder(log, 'b')
    with Compose([[1], first, second]) as stream:
        assert list(stream) == [100]
    assert log == ['enter a', 'enter b', 'exit b', 'exit a']


def test_compose_needs_stages():
    with pytest.raises(ValueError):
        Compose([])
