"""Chains stages into one pipe.

    frames = Compose([
        DetectionFrames(det_rows, n_frames),
        TrackerPipe(tracker)])
    for frame, objects in frames:
        ...

The first element may be a plain iterable; plain callables are wrapped into
CallablePipe.
"""

from finegrain_mot.common.pipes.pipe import Pipe, CallablePipe


class Compose(Pipe):

    def __init__(self, pipes):
        if not pipes:
            raise ValueError('Compose needs at least one stage')
        self._pipes = [
            CallablePipe(p) if not isinstance(p, Pipe) and callable(p) else p
            for p in pipes]
        for curr, prev in zip(self._pipes[1:], self._pipes[:-1]):
            curr.input = prev

    def __iter__(self):
        return iter(self._pipes[-1])

    def __enter__(self):
        last = self._pipes[-1]
        if isinstance(last, Pipe):
            last.__enter__()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        last = self._pipes[-1]
        if isinstance(last, Pipe):
            last.__exit__(exc_type, exc_val, exc_tb)

    def __len__(self):
        return len(self._pipes[-1])
