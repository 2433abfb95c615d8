import collections
import time


class Timer(object):
    """Accumulates wall-clock time per tag.

    `acc` adds the time since the last mark to the tag's running total and
    counts the call.
    """

    def __init__(self, clock=time.perf_counter):
        self._clock = clock
        self.tag_order = []
        self.tags = collections.defaultdict(float)
        self.counts = collections.defaultdict(int)
        self.last_time = self._clock()

    def reset(self):
        self.last_time = self._clock()

    def _mark(self):
        now = self._clock()
        elapsed = now - self.last_time
        self.last_time = now
        return elapsed

    def acc(self, tag):
        if tag not in self.tag_order:
            self.tag_order.append(tag)
        elapsed = self._mark()
        self.tags[tag] += elapsed
        self.counts[tag] += 1
        return elapsed

    def summary(self):
        return ', '.join(
            '%s=%.5f (%d)' % (tag, self.tags[tag], self.counts[tag])
            for tag in self.tag_order)
