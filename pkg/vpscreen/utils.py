import torch
import numpy as np
from typing import Union, Sequence
from torch.nn import Module
from .constants import DTYPE


ArrayLike = Union[float, int, Sequence[float], np.ndarray, torch.Tensor]


class ConvergenceError(RuntimeError):
    def __init__(self, msg: str, estimate: float = None, error: float = None):
        """
        Raised when an iterative or refined computation does not reach its tolerance.
        :param msg: The diagnostic
        :param estimate: The best estimate available when giving up
        :param error: The error estimate of `estimate`
        """

        super().__init__(msg)
        self.estimate = estimate
        self.error = error


def as_tensor(x: ArrayLike, dtype=DTYPE) -> torch.Tensor:
    """
    Converts `x` to an at least one dimensional tensor of type `dtype`.
    """

    if isinstance(x, torch.Tensor):
        return x.to(dtype).reshape(-1) if x.dim() == 0 else x.to(dtype)

    return torch.as_tensor(np.atleast_1d(np.asarray(x)), dtype=dtype)


KEY_PREFIX = "item"


class TensorTuple(Module):
    def __init__(self, *args):
        """
        Ordered collection of tensors stored as buffers, so that the collection survives `state_dict` round trips.
        """

        super().__init__()
        self._i = -1

        for a in args:
            self.append(a)

        self._register_load_state_dict_pre_hook(self._hook)

    @staticmethod
    def _make_key(i: int):
        return f"{KEY_PREFIX}_{i}"

    def append(self, x: torch.Tensor):
        self._i += 1
        self.register_buffer(self._make_key(self._i), x)

    def __getitem__(self, item: int):
        if item < 0:
            item += len(self)

        return self._buffers[self._make_key(item)]

    def __iter__(self):
        return (self._buffers[self._make_key(i)] for i in range(len(self)))

    def __len__(self):
        return len(self._buffers)

    def values(self) -> torch.Tensor:
        if len(self) == 0:
            return torch.empty(0, dtype=DTYPE)

        return torch.stack(tuple(self), 0)

    def _hook(self, state_dict, prefix, local_metadata, strict, missing_keys, unexpected_keys, error_msgs):
        for k, v in state_dict.items():
            if not k.startswith(prefix):
                continue

            k = k[len(prefix):]
            if not k.startswith(KEY_PREFIX) or "." in k:
                continue

            self.register_buffer(k, v)
            self._i = max(self._i, int(k.split("_")[-1]))
