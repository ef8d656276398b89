"""
Uehling potentials of point and extended nuclei, the approximate extended form V(r) chi(r), and the screening factor
chi(s) of the two-body Uehling operator.

All t integrals over [1, inf) use t = cosh(u), which turns sqrt(t^2 - 1) dt into sinh(u)^2 du.
"""

import math
import numpy as np
import torch
from torch.nn import Module
from typing import Callable, Optional
from scipy.interpolate import CubicSpline
from .constants import ALPHA, DTYPE
from .nucleus import NuclearModel
from .quadrature import cosh_rule
from .utils import ArrayLike, as_tensor


PREFACTOR = 2.0 * ALPHA / (3.0 * math.pi)

EULER_GAMMA = 0.5772156649015329

_RULE = cosh_rule()


def _spectral_weight(u: torch.Tensor) -> torch.Tensor:
    t = torch.cosh(u)

    return (1.0 + 0.5 / t ** 2) * torch.tanh(u) ** 2


def twobody_kernel(s: ArrayLike) -> torch.Tensor:
    """
    The screening factor chi(s) = (2 alpha / 3 pi) int_1^inf (1 + 1 / 2t^2) sqrt(t^2 - 1) / t^2 exp(-2st) dt.
    :param s: The separation(s), positive
    """

    s = as_tensor(s)
    if (s <= 0.0).any():
        raise ValueError("Separation must be positive")

    u, w = _RULE[:2]
    t = torch.cosh(u)

    integrand = _spectral_weight(u) * torch.exp(-2.0 * s.unsqueeze(-1) * t)

    return PREFACTOR * (integrand * w).sum(-1)


def uehling_point(r: ArrayLike, z: float) -> torch.Tensor:
    """
    Uehling potential of a point nucleus, -(alpha Z / r) chi(r).
    """

    r = as_tensor(r)
    if (r <= 0.0).any():
        raise ValueError("The point Uehling potential requires r > 0")

    return -ALPHA * z / r * twobody_kernel(r)


def _extended_single(model: NuclearModel, r: float, n: int) -> float:
    x, w = model.charge_rule(n=n, split=r if r > 0.0 else None)
    u, wu = _RULE[:2]
    t = torch.cosh(u)

    xx = x.unsqueeze(-1)
    lesser = torch.clamp(xx, max=r)

    # [exp(-2|r - r'|t) - exp(-2(r + r')t)] / (4 r t), with the difference formed by expm1
    arg = 4.0 * lesser * t
    damping = torch.where(arg > 1e-12, -torch.expm1(-arg) / arg.clamp_min(1e-300), 1.0 - 0.5 * arg)
    ratio = torch.where(xx > r, torch.ones_like(xx), xx / max(r, 1e-300))

    bracket = torch.exp(-2.0 * (xx - r).abs() * t) * damping * ratio
    inner = (_spectral_weight(u) * bracket * wu).sum(-1)

    return float(-ALPHA * model.z * PREFACTOR * (w / x * inner).sum())


def uehling_extended(model: NuclearModel, r: ArrayLike, n: int = 24) -> torch.Tensor:
    """
    Uehling potential of an extended nucleus, with the r' integral split at r' = r.
    :param model: The nuclear model
    :param r: The radii
    :param n: Nodes per panel of the charge quadrature
    """

    if model.is_point:
        return uehling_point(r, model.z)

    r = as_tensor(r)
    if (r < 0.0).any():
        raise ValueError("Radius must be non-negative")

    return torch.tensor([_extended_single(model, float(ri), n) for ri in r], dtype=DTYPE)


def uehling_approx(model: NuclearModel, r: ArrayLike) -> torch.Tensor:
    """
    The approximation V(r) chi(r), exact for a point nucleus.
    """

    if model.is_point:
        return uehling_point(r, model.z)

    r = as_tensor(r)

    return model.potential(r) * twobody_kernel(r.clamp_min(1e-300))


class PotentialTable(Module):
    def __init__(self, radii: torch.Tensor, values: torch.Tensor, outside: Optional[Callable] = None,
                 name: str = "potential"):
        """
        Radial tabulation of a one-body potential with cubic spline interpolation. Single signed tables are
        interpolated as log|U| in log r, tables that change sign as r U in log r.
        :param radii: Strictly increasing radii
        :param values: The potential values
        :param outside: Evaluator used outside the tabulated range, defaults to a constant inside and a power law tail
        :param name: Label used in dumps
        """

        super().__init__()

        if (radii[1:] <= radii[:-1]).any():
            raise ValueError("Table radii must be strictly increasing")

        self.register_buffer("radii", radii.to(DTYPE))
        self.register_buffer("values", values.to(DTYPE))

        self.name = name
        self._outside = outside
        self._build()

    def _build(self):
        r, v = self.radii.numpy(), self.values.numpy()

        if (v < 0.0).all() or (v > 0.0).all():
            self._sign = float(np.sign(v[0]))
            self._spline = CubicSpline(np.log(r), np.log(np.abs(v)))
            self._log_magnitude = True
        else:
            self._sign = 1.0
            self._spline = CubicSpline(np.log(r), r * v)
            self._log_magnitude = False

        # Power law exponent from the last two points
        if v[-1] * v[-2] > 0.0:
            self._tail_power = max(math.log(v[-2] / v[-1]) / math.log(r[-1] / r[-2]), 1.0)
        else:
            self._tail_power = 1.0

    def _interpolate(self, r: np.ndarray) -> np.ndarray:
        if self._log_magnitude:
            return self._sign * np.exp(self._spline(np.log(r)))

        return self._spline(np.log(r)) / r

    def forward(self, r: ArrayLike) -> torch.Tensor:
        r = as_tensor(r)
        x = r.numpy()

        lo, hi = float(self.radii[0]), float(self.radii[-1])
        inside = (x >= lo) & (x <= hi)

        out = np.empty_like(x)
        out[inside] = self._interpolate(x[inside])

        below, above = x < lo, x > hi
        if self._outside is not None and (below.any() or above.any()):
            mask = below | above
            out[mask] = self._outside(torch.from_numpy(x[mask])).numpy()
        else:
            out[below] = float(self.values[0])
            out[above] = float(self.values[-1]) * (hi / x[above]) ** self._tail_power

        return torch.from_numpy(out).to(DTYPE)

    def dump(self, path: str):
        """
        Writes the table as two columns: radius (electron Compton wavelengths) and value (electron rest energies).
        """

        data = np.stack([self.radii.numpy(), self.values.numpy()], axis=-1)
        np.savetxt(path, data, fmt="%.17e", header=f"{self.name}: radius_compton value_me")

    @classmethod
    def load(cls, path: str, name: str = "potential"):
        data = np.loadtxt(path, ndmin=2)

        return cls(torch.from_numpy(data[:, 0]), torch.from_numpy(data[:, 1]), name=name)


def table_radii(r_min: float = 1e-5, r_max: float = 20.0, n: int = 400) -> torch.Tensor:
    return torch.from_numpy(np.geomspace(r_min, r_max, n)).to(DTYPE)


def build_uehling_table(model: NuclearModel, exact: bool = True, r_min: float = 1e-5, r_max: float = 20.0,
                        n: int = 400) -> PotentialTable:
    """
    Tabulates the Uehling potential of `model`, exact or approximate, on `n` log spaced radii.
    """

    radii = table_radii(r_min, r_max, n)

    if exact:
        def evaluate(r):
            return uehling_extended(model, r)
    else:
        def evaluate(r):
            return uehling_approx(model, r)

    return PotentialTable(radii, evaluate(radii), outside=evaluate, name=f"uehling {model.descriptor()}")


class TwoBodyKernel(Module):
    def __init__(self, s_min: float = 1e-8, s_max: float = 60.0, n: int = 1200):
        """
        Tabulated chi(s), interpolating log chi in s. Below `s_min` the logarithmic small distance form is used, above
        `s_max` chi is zero to double precision relative to chi(1).
        """

        super().__init__()

        self.s_min = s_min
        self.s_max = s_max

        s = table_radii(s_min, s_max, n)
        self.register_buffer("s", s)
        self.register_buffer("log_chi", torch.log(twobody_kernel(s)))

        self._spline = CubicSpline(s.numpy(), self.log_chi.numpy())

    def forward(self, s: ArrayLike) -> torch.Tensor:
        s = as_tensor(s)
        x = s.numpy().clip(self.s_min, self.s_max)

        value = torch.from_numpy(np.exp(self._spline(x))).to(DTYPE)
        small = PREFACTOR * (-torch.log(s.clamp_min(1e-300)) - EULER_GAMMA - 5.0 / 6.0)

        value = torch.where(s < self.s_min, small, value)

        return torch.where(s > self.s_max, torch.zeros_like(value), value)
