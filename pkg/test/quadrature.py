import unittest
import math
import torch
from vpscreen.quadrature import gauss_legendre, panel_rule, integrate_semi_infinite, integrate_log_endpoint, \
    semi_infinite_rule
from vpscreen.utils import ConvergenceError


class Tests(unittest.TestCase):
    def test_PolynomialExactness(self):
        rule = gauss_legendre(2)
        self.assertTrue(abs(rule.integrate(lambda x: x ** 2) - 2.0 / 3.0) < 1e-15)

        rule = gauss_legendre(8)
        for degree in range(16):
            expected = 0.0 if degree % 2 else 2.0 / (degree + 1)
            assert abs(rule.integrate(lambda x: x ** degree) - expected) < 1e-14

    def test_MappedRule(self):
        rule = gauss_legendre(16).mapped(0.0, 1.0)

        self.assertTrue(abs(rule.integrate(torch.exp) - (math.e - 1.0)) < 1e-14)
        self.assertTrue(abs(rule.weights.sum() - 1.0) < 1e-13)
        self.assertTrue((rule.weights > 0.0).all())

    def test_NodeRange(self):
        for n in (1, 513):
            with self.assertRaises(ValueError):
                gauss_legendre(n)

    def test_CoshSubstitution(self):
        umax = math.acosh(2.0)
        rule = gauss_legendre(64).mapped(0.0, umax)

        value = rule.integrate(lambda u: torch.sinh(u) ** 2)
        expected = math.sqrt(3.0) - 0.5 * math.log(2.0 + math.sqrt(3.0))

        self.assertTrue(abs(value - expected) < 1e-12)

    def test_PanelRule(self):
        rule = panel_rule([0.0, 0.5, 0.5, 2.0, 10.0], 12)

        self.assertTrue(rule.nodes.numel() == 3 * 12)
        self.assertTrue(abs(rule.integrate(lambda x: torch.exp(-x)) - (1.0 - math.exp(-10.0))) < 1e-13)

    def test_SemiInfinite(self):
        res = integrate_semi_infinite(lambda x: torch.exp(-x), tol=1e-12)
        self.assertTrue(abs(res.value - 1.0) < 1e-11)

        res = integrate_semi_infinite(lambda x: 1.0 / (1.0 + x ** 2), tol=1e-12)
        self.assertTrue(abs(res.value - 0.5 * math.pi) < 1e-10)
        self.assertTrue(res.error_estimate >= 0.0 and res.evaluations > 0)

    def test_ErrorEstimateBoundsError(self):
        for a in (0.5, 1.0, 3.0):
            res = integrate_semi_infinite(lambda x: torch.exp(-a * x) * torch.cos(x), tol=1e-8)
            expected = a / (a ** 2 + 1.0)

            assert abs(res.value - expected) <= max(res.error_estimate, 1e-14)

    def test_FixedSemiInfiniteRule(self):
        rule = semi_infinite_rule(64, 2.0)
        self.assertTrue(abs(rule.integrate(lambda x: torch.exp(-x / 2.0)) - 2.0) < 1e-12)

    def test_LogEndpoint(self):
        res = integrate_log_endpoint(torch.log, 0.0, 1.0, tol=1e-12)
        self.assertTrue(abs(res.value + 1.0) < 1e-10)

        res = integrate_log_endpoint(lambda x: torch.log(x) / (1.0 + x), 0.0, 1.0, tol=1e-12)
        self.assertTrue(abs(res.value + math.pi ** 2 / 12.0) < 1e-10)

    def test_ConvergenceError(self):
        with self.assertRaises(ConvergenceError) as ctx:
            integrate_log_endpoint(lambda x: x ** -0.999, 0.0, 1.0, tol=1e-12)

        self.assertTrue(ctx.exception.estimate is not None and ctx.exception.estimate > 0.0)


if __name__ == "__main__":
    unittest.main()
