import unittest
import io
import contextlib
import torch
from vpscreen.utils import TensorTuple, ConvergenceError, as_tensor
from vpscreen.logging import DefaultLogger, LoggingWrapper, TqdmWrapper


class Tests(unittest.TestCase):
    def test_TensorTuple(self):
        terms = [torch.empty(10, dtype=torch.float64).normal_() for _ in range(5)]
        tens_tuple = TensorTuple(*terms)

        to_load = TensorTuple()
        to_load.load_state_dict(tens_tuple.state_dict())

        self.assertEqual(len(to_load), 5)
        self.assertTrue((to_load.values() == tens_tuple.values()).all())

    def test_AsTensor(self):
        self.assertEqual(as_tensor(1.5).shape, torch.Size([1]))
        self.assertEqual(as_tensor(torch.tensor(2.0)).dtype, torch.float64)
        self.assertEqual(as_tensor([1, 2, 3]).shape, torch.Size([3]))

    def test_ConvergenceError(self):
        e = ConvergenceError("no convergence", 1.25, 0.5)

        self.assertIsInstance(e, RuntimeError)
        self.assertEqual((e.estimate, e.error), (1.25, 0.5))

    def test_Logging(self):
        calls = list()
        logger = LoggingWrapper(lambda obj, it, value: calls.append(it), 3)

        for i in range(10):
            logger.do_log(i, "loop", float(i))

        self.assertEqual(calls, [0, 3, 6, 9])

        silent = DefaultLogger()
        silent.do_log(0, "loop", 1.0)
        self.assertIs(silent.set_num_iter(5), silent)

        with self.assertRaises(ValueError):
            LoggingWrapper(lambda *u: None, 0)

    def test_TqdmSweeps(self):
        with contextlib.redirect_stderr(io.StringIO()):
            bar = TqdmWrapper(leave=False)

            bar.set_num_iter(4)
            for i in range(1, 5):
                bar.do_log(i, "density", 0.5 * i)

            self.assertEqual(bar._bar.n, 4)
            self.assertEqual(bar._label, "density")

            bar.set_num_iter(6)
            self.assertEqual(bar._bar.n, 0)
            self.assertIsNone(bar._label)

            bar.do_log(2, "screening", 1.0)
            self.assertEqual(bar._bar.n, 2)
            self.assertEqual(bar._label, "screening")

            bar.close()


if __name__ == "__main__":
    unittest.main()
