import torch
import numpy as np
from functools import lru_cache
from typing import Callable, NamedTuple, Tuple, Sequence
from .constants import DTYPE
from .utils import ConvergenceError


MIN_NODES = 2
MAX_NODES = 512

Integrand = Callable[[torch.Tensor], torch.Tensor]


class QuadratureRule(NamedTuple):
    nodes: torch.Tensor
    weights: torch.Tensor
    domain: Tuple[float, float]

    def integrate(self, f: Integrand) -> torch.Tensor:
        return (f(self.nodes) * self.weights).sum(-1)

    def mapped(self, a: float, b: float):
        """
        Maps a rule defined on [-1, 1] affinely onto [a, b].
        """

        lo, hi = self.domain
        scale = (b - a) / (hi - lo)

        return QuadratureRule(a + (self.nodes - lo) * scale, self.weights * scale, (a, b))


class IntegralEstimate(NamedTuple):
    value: float
    error_estimate: float
    evaluations: int


@lru_cache(maxsize=64)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def gauss_legendre(n: int) -> QuadratureRule:
    """
    Gauss-Legendre rule on [-1, 1], exact for polynomials of degree 2n - 1.
    :param n: The number of nodes
    """

    if not (MIN_NODES <= n <= MAX_NODES):
        raise ValueError(f"Number of nodes must be in [{MIN_NODES}, {MAX_NODES}], got {n}")

    x, w = _leggauss(n)

    return QuadratureRule(torch.from_numpy(x).to(DTYPE), torch.from_numpy(w).to(DTYPE), (-1.0, 1.0))


def panel_rule(breaks: Sequence[float], n: int) -> QuadratureRule:
    """
    Composite Gauss-Legendre rule with `n` nodes on each panel between consecutive `breaks`. Empty panels are skipped.
    """

    breaks = torch.as_tensor(breaks, dtype=DTYPE)
    base = gauss_legendre(n)

    lo, hi = breaks[:-1], breaks[1:]
    keep = hi > lo
    lo, hi = lo[keep], hi[keep]

    half = 0.5 * (hi - lo)
    nodes = (lo + half).unsqueeze(-1) + half.unsqueeze(-1) * base.nodes
    weights = half.unsqueeze(-1) * base.weights

    return QuadratureRule(nodes.reshape(-1), weights.reshape(-1), (float(breaks[0]), float(breaks[-1])))


def cosh_rule(umax: float = 40.0, width: float = 0.5, n: int = 10) -> QuadratureRule:
    """
    Rule in u for integrals over t = cosh(u), which removes the square root endpoint singularity at t = 1.
    """

    num = max(int(np.ceil(umax / width)), 1)

    return panel_rule(np.linspace(0.0, umax, num + 1), n)


def _refine(rule_factory: Callable[[int], Tuple[torch.Tensor, torch.Tensor]], f: Integrand, tol: float,
            abs_floor: float, n0: int) -> IntegralEstimate:
    n = n0
    x, w = rule_factory(n)
    old = float((f(x) * w).sum())
    evaluations = n
    error = float("inf")

    while 2 * n <= MAX_NODES:
        n *= 2
        x, w = rule_factory(n)
        new = float((f(x) * w).sum())
        evaluations += n

        error = abs(new - old)
        if error <= max(tol * abs(new), abs_floor):
            return IntegralEstimate(new, error, evaluations)

        old = new

    raise ConvergenceError(f"No convergence after {evaluations} evaluations, last change {error:.3e}", old, error)


def integrate_semi_infinite(f: Integrand, decay_scale: float = 1.0, tol: float = 1e-10, abs_floor: float = 1e-300,
                            n0: int = 16) -> IntegralEstimate:
    """
    Integrates `f` over [0, inf) using x = s u / (1 - u) and Gauss-Legendre rules in u, doubling the number of nodes
    until the change is below tolerance.
    :param f: Vectorized integrand
    :param decay_scale: The scale s, roughly where the integrand has decayed by one e-fold
    :param tol: Relative tolerance
    :param abs_floor: Absolute error accepted regardless of `tol`
    :param n0: Initial number of nodes
    """

    if decay_scale <= 0.0:
        raise ValueError(f"Decay scale must be positive, got {decay_scale}")

    return _refine(lambda n: semi_infinite_rule(n, decay_scale)[:2], f, tol, abs_floor, n0)


def integrate_log_endpoint(f: Integrand, a: float, b: float, tol: float = 1e-10, abs_floor: float = 1e-300,
                           n0: int = 16, power: int = 5) -> IntegralEstimate:
    """
    Integrates `f` over [a, b] where `f` may have a logarithmic singularity at `a`. Uses x = a + (b - a) u^p, which
    makes the transformed integrand vanish to high order at the endpoint.
    """

    if b <= a:
        raise ValueError(f"Expected a < b, got [{a}, {b}]")

    return _refine(lambda n: log_endpoint_rule(n, a, b, power)[:2], f, tol, abs_floor, n0)


def semi_infinite_rule(n: int, decay_scale: float = 1.0) -> QuadratureRule:
    """
    Fixed rule over [0, inf) with the same mapping as `integrate_semi_infinite`, for vectorized nested integrals.
    """

    u, w = gauss_legendre(n).mapped(0.0, 1.0)[:2]

    return QuadratureRule(decay_scale * u / (1.0 - u), w * decay_scale / (1.0 - u) ** 2, (0.0, float("inf")))


def log_endpoint_rule(n: int, a: float, b: float, power: int = 5) -> QuadratureRule:
    u, w = gauss_legendre(n).mapped(0.0, 1.0)[:2]

    return QuadratureRule(a + (b - a) * u ** power, w * power * (b - a) * u ** (power - 1), (a, b))
