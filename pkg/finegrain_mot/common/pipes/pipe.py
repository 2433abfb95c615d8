"""Base class for streaming stages.

A pipe reads from its `input` (another pipe or any iterable) and yields
transformed items. Stages that hold state (a tracker, an open file) set it up
in `enter` and release it in `exit`; entering a pipe enters its input first.
"""


class Pipe(object):

    input = None

    def __iter__(self):
        raise NotImplementedError(
            'The pipe %s does not produce output.' % self.__class__.__name__)

    def enter(self):
        pass

    def exit(self):
        pass

    def __enter__(self):
        if isinstance(self.input, Pipe):
            self.input.__enter__()
        self.enter()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.exit()
        if isinstance(self.input, Pipe):
            self.input.__exit__(exc_type, exc_val, exc_tb)

    def __len__(self):
        raise NotImplementedError(
            'The pipe %s does not know its length.' % self.__class__.__name__)


class CallablePipe(Pipe):
    """Applies a function to every item of the input."""

    def __init__(self, callable_):
        self._callable = callable_

    def __iter__(self):
        return (self._callable(item) for item in self.input)

    def __len__(self):
        return len(self.input)
