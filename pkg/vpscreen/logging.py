import sys
from typing import Callable
from tqdm import tqdm


class LoggingWrapper(object):
    def __init__(self, func: Callable[[object, int, float], None], per_iter: int):
        """
        Progress reporting of the long sweeps (frequencies times partial waves, charges of a run).
        :param func: Receives the label of the sweep, the iteration and the magnitude of the running sum
        :param per_iter: Report every `per_iter` iterations
        """

        if per_iter < 1:
            raise ValueError(f"per_iter must be at least 1, got {per_iter}")

        self._func = func
        self._per_iter = per_iter

    def set_num_iter(self, iters: int):
        """
        Announces a new sweep of `iters` iterations.
        """

        return self

    def do_log(self, iteration: int, obj, value):
        if iteration % self._per_iter == 0:
            self._func(obj, iteration, value)

    def close(self):
        return


class DefaultLogger(LoggingWrapper):
    def __init__(self):
        super(DefaultLogger, self).__init__(lambda *u: None, 1)

    def do_log(self, iteration, obj, value):
        return


class TqdmWrapper(LoggingWrapper):
    def __init__(self, max_iter: int = None, leave: bool = True, per_iter: int = 1):
        """
        Progress bar on stderr. Every call to `set_num_iter` restarts the bar, and its description follows the label
        of the sweep being run.
        """

        super(TqdmWrapper, self).__init__(self._update, per_iter)
        self._bar = tqdm(total=max_iter, leave=leave, file=sys.stderr)
        self._label = None

    def set_num_iter(self, iters):
        self._bar.reset(total=iters)
        self._label = None

        return self

    def _update(self, obj, it, value):
        label = str(obj)
        if label != self._label:
            self._bar.set_description(label)
            self._label = label

        self._bar.set_postfix_str(f"|sum| = {value:.6e}" if isinstance(value, float) else str(value))
        self._bar.update(it - self._bar.n)

    def close(self):
        self._bar.close()
