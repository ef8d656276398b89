import math
import torch
from torch.nn import Module
from scipy.optimize import brentq
from typing import Dict, Optional, Tuple
from .constants import ALPHA, FERMI_SKIN_FM, DTYPE, fm_to_compton, compton_to_fm
from .quadrature import gauss_legendre, panel_rule
from .utils import ArrayLike, as_tensor


# Root mean square charge radii (fm)
DEFAULT_RMS_FM: Dict[int, float] = {
    20: 3.478,
    30: 3.928,
    32: 4.072,
    40: 4.270,
    50: 4.655,
    54: 4.787,
    60: 4.914,
    66: 5.224,
    70: 5.317,
    74: 5.373,
    80: 5.467,
    83: 5.533,
    90: 5.645,
    92: 5.860,
    100: 5.886,
}

# Radius to which densities are integrated, in units of the diffuseness beyond the half density radius
_FERMI_CUTOFF = 40.0
_SERIES_TERMS = 64


def default_rms_fm(z: int) -> float:
    if z not in DEFAULT_RMS_FM:
        raise ValueError(f"No default rms radius for Z = {z}, supply one explicitly")

    return DEFAULT_RMS_FM[z]


class NuclearModel(Module):
    def __init__(self, z: float):
        """
        Base class for spherically symmetric nuclear charge distributions. All lengths are in electron Compton
        wavelengths and energies in units of the electron rest energy.
        :param z: The nuclear charge number
        """

        super().__init__()

        if not (0.0 <= z < 1.0 / ALPHA):
            raise ValueError(f"Nuclear charge must satisfy 0 <= Z < 1 / alpha, got {z}")

        self.z = float(z)

    @property
    def kind(self) -> str:
        raise NotImplementedError()

    @property
    def rms(self) -> float:
        """
        The root mean square radius of the charge distribution.
        """

        raise NotImplementedError()

    @property
    def rms_fm(self) -> float:
        return compton_to_fm(self.rms)

    @property
    def extent(self) -> float:
        """
        Radius beyond which the charge density vanishes to working precision.
        """

        raise NotImplementedError()

    @property
    def is_point(self) -> bool:
        return False

    def density(self, r: ArrayLike) -> torch.Tensor:
        """
        The normalized charge density, so that int 4 pi r^2 rho(r) dr = 1.
        """

        raise NotImplementedError()

    def potential(self, r: ArrayLike) -> torch.Tensor:
        """
        The potential energy V(r) of an electron in the field of the nucleus.
        """

        raise NotImplementedError()

    def charge_rule(self, n: int = 24, split: float = None) -> Tuple[torch.Tensor, torch.Tensor]:
        """
        Nodes and weights such that sum_i w_i f(r_i) approximates int 4 pi r^2 rho(r) f(r) dr.
        :param n: The number of nodes per panel
        :param split: Optional radius at which to split the panel containing it
        """

        raise NotImplementedError()

    def descriptor(self) -> str:
        return f"{self.kind}(Z={self.z:g}, rms={self.rms_fm:.4f} fm)"

    def parameters_dict(self) -> Dict[str, object]:
        """
        The kind and the defining float parameters of the model, at full precision.
        """

        params = {k: v for k, v in vars(self).items() if isinstance(v, float) and not k.startswith("_")}

        return {"kind": self.kind, **dict(sorted(params.items()))}

    def with_charge(self, z: float):
        """
        Returns a copy of the model with the charge replaced by `z` at fixed shape.
        """

        raise NotImplementedError()

    def scaled(self, factor: float):
        """
        Returns a copy of the model with its rms radius multiplied by `factor`.
        """

        raise NotImplementedError()

    def __repr__(self):
        return self.descriptor()


class PointNucleus(NuclearModel):
    @property
    def kind(self):
        return "point"

    @property
    def rms(self):
        return 0.0

    @property
    def extent(self):
        return 0.0

    @property
    def is_point(self):
        return True

    def density(self, r):
        raise ValueError("The point nucleus has a delta distribution, use point specific expressions")

    def potential(self, r):
        r = as_tensor(r)

        return torch.where(r > 0.0, -ALPHA * self.z / r.clamp_min(1e-300), torch.full_like(r, -math.inf))

    def charge_rule(self, n=24, split=None):
        return torch.zeros(1, dtype=DTYPE), torch.ones(1, dtype=DTYPE)

    def with_charge(self, z):
        return PointNucleus(z)

    def scaled(self, factor):
        return PointNucleus(self.z)


class ShellNucleus(NuclearModel):
    def __init__(self, z: float, radius: float):
        """
        Homogeneously charged spherical shell of radius `radius`.
        """

        super().__init__(z)

        if radius <= 0.0:
            raise ValueError(f"Shell radius must be positive, got {radius}")

        self.radius = float(radius)

    @classmethod
    def from_rms(cls, z: float, rms_fm: float):
        return cls(z, fm_to_compton(rms_fm))

    @property
    def kind(self):
        return "shell"

    @property
    def rms(self):
        return self.radius

    @property
    def extent(self):
        return self.radius

    def density(self, r):
        raise ValueError("The shell nucleus has a surface delta distribution, use `charge_rule`")

    def potential(self, r):
        r = as_tensor(r)

        return -ALPHA * self.z / r.clamp_min(self.radius)

    def charge_rule(self, n=24, split=None):
        return torch.tensor([self.radius], dtype=DTYPE), torch.ones(1, dtype=DTYPE)

    def with_charge(self, z):
        return ShellNucleus(z, self.radius)

    def scaled(self, factor):
        return ShellNucleus(self.z, self.radius * factor)


class UniformSphere(NuclearModel):
    def __init__(self, z: float, radius: float):
        """
        Homogeneously charged ball of radius `radius`.
        """

        super().__init__(z)

        if radius <= 0.0:
            raise ValueError(f"Sphere radius must be positive, got {radius}")

        self.radius = float(radius)

    @classmethod
    def from_rms(cls, z: float, rms_fm: float):
        return cls(z, math.sqrt(5.0 / 3.0) * fm_to_compton(rms_fm))

    @property
    def kind(self):
        return "uniform"

    @property
    def rms(self):
        return math.sqrt(0.6) * self.radius

    @property
    def extent(self):
        return self.radius

    def density(self, r):
        r = as_tensor(r)
        rho = 3.0 / (4.0 * math.pi * self.radius ** 3)

        return torch.where(r <= self.radius, torch.full_like(r, rho), torch.zeros_like(r))

    def potential(self, r):
        r = as_tensor(r)
        inside = -ALPHA * self.z / (2.0 * self.radius) * (3.0 - (r / self.radius) ** 2)

        return torch.where(r < self.radius, inside, -ALPHA * self.z / r.clamp_min(self.radius))

    def charge_rule(self, n=24, split=None):
        breaks = [0.0, self.radius]
        if split is not None and 0.0 < split < self.radius:
            breaks.insert(1, split)

        x, w = panel_rule(breaks, n)[:2]

        return x, 4.0 * math.pi * x ** 2 * self.density(x) * w

    def with_charge(self, z):
        return UniformSphere(z, self.radius)

    def scaled(self, factor):
        return UniformSphere(self.z, self.radius * factor)


def _fermi_series(x: float, power: int) -> float:
    """
    sum_{k >= 1} (-1)^(k + 1) x^k / k^power, for 0 <= x < 1.
    """

    return sum((-1) ** (k + 1) * x ** k / k ** power for k in range(1, _SERIES_TERMS + 1))


def _fermi_moments(c: float, a: float) -> Tuple[float, float]:
    """
    Returns the normalization integral int 4 pi r^2 / (1 + exp((r - c) / a)) dr and the mean square radius.
    """

    x = math.exp(-c / a)
    pa = (math.pi * a / c) ** 2

    norm = 1.0 + pa + 6.0 * (a / c) ** 3 * _fermi_series(x, 3)
    second = 1.0 + 10.0 / 3.0 * pa + 7.0 / 3.0 * pa ** 2 + 120.0 * (a / c) ** 5 * _fermi_series(x, 5)

    return 4.0 * math.pi / 3.0 * c ** 3 * norm, 0.6 * c ** 2 * second / norm


class FermiNucleus(NuclearModel):
    def __init__(self, z: float, c: float, a: float):
        """
        Two parameter Fermi distribution rho(r) = rho_0 / (1 + exp((r - c) / a)).
        :param z: The nuclear charge number
        :param c: The half density radius
        :param a: The diffuseness
        """

        super().__init__(z)

        if c <= 0.0 or a <= 0.0:
            raise ValueError(f"Fermi parameters must be positive, got c = {c}, a = {a}")

        self.c = float(c)
        self.a = float(a)

        norm, msr = _fermi_moments(self.c, self.a)
        self._rho0 = 1.0 / norm
        self._rms = math.sqrt(msr)

    @classmethod
    def from_rms(cls, z: float, rms_fm: float, skin_fm: float = FERMI_SKIN_FM):
        return fermi_from_rms(z, rms_fm, skin_fm)

    @property
    def kind(self):
        return "fermi"

    @property
    def rms(self):
        return self._rms

    @property
    def extent(self):
        return self.c + _FERMI_CUTOFF * self.a

    @property
    def breaks(self):
        a, c = self.a, self.c
        inner = [c - 8.0 * a, c - 3.0 * a]

        return [0.0] + [b for b in inner if b > 0.0] + [c, c + 3.0 * a, c + 8.0 * a, c + 16.0 * a, self.extent]

    def density(self, r):
        r = as_tensor(r)

        return self._rho0 * torch.sigmoid(-(r - self.c) / self.a)

    def charge_rule(self, n=24, split=None):
        breaks = self.breaks
        if split is not None and 0.0 < split < breaks[-1] and split not in breaks:
            breaks = sorted(breaks + [split])

        x, w = panel_rule(breaks, n)[:2]

        return x, 4.0 * math.pi * x ** 2 * self.density(x) * w

    def potential(self, r, n: int = 48):
        """
        V(r) = -4 pi alpha Z [ (1 / r) int_0^r rho(s) s^2 ds + int_r^inf rho(s) s ds ], with the integration panels
        clipped at r so that every panel integrand is smooth.
        """

        r = as_tensor(r)
        breaks = torch.as_tensor(self.breaks, dtype=DTYPE)
        rule = gauss_legendre(n)

        lo, hi = breaks[:-1], breaks[1:]
        rr = r.unsqueeze(-1)
        mid = torch.minimum(torch.maximum(rr, lo), hi)

        def panel_integral(a, b, f):
            half = 0.5 * (b - a)
            s = (a + half).unsqueeze(-1) + half.unsqueeze(-1) * rule.nodes

            return (half.unsqueeze(-1) * rule.weights * f(s)).sum((-1, -2))

        lo_ = lo.expand_as(mid)
        hi_ = hi.expand_as(mid)

        inner = panel_integral(lo_, mid, lambda s: self.density(s) * s ** 2)
        outer = panel_integral(mid, hi_, lambda s: self.density(s) * s)

        enclosed = torch.where(r > 0.0, inner / r.clamp_min(1e-300), torch.zeros_like(r))
        value = -4.0 * math.pi * ALPHA * self.z * (enclosed + outer)

        return torch.where(r >= breaks[-1], -ALPHA * self.z / r.clamp_min(1e-300), value)

    def with_charge(self, z):
        return FermiNucleus(z, self.c, self.a)

    def scaled(self, factor):
        return fermi_from_rms(self.z, self.rms_fm * factor, compton_to_fm(self.a) * 4.0 * math.log(3.0))


def fermi_from_rms(z: float, rms_fm: float, skin_fm: float = FERMI_SKIN_FM) -> FermiNucleus:
    """
    Constructs the Fermi model with skin thickness t = 4 ln(3) a whose rms radius equals `rms_fm`.
    :param z: The nuclear charge number
    :param rms_fm: The root mean square radius (fm)
    :param skin_fm: The skin thickness (fm)
    """

    if rms_fm <= 0.0:
        raise ValueError(f"rms radius must be positive, got {rms_fm}")

    a = fm_to_compton(skin_fm / (4.0 * math.log(3.0)))
    target = fm_to_compton(rms_fm)

    def residual(c):
        return math.sqrt(_fermi_moments(c, a)[1]) - target

    lo, hi = a, 3.0 * target
    if residual(lo) > 0.0:
        raise ValueError(f"rms radius {rms_fm} fm is too small for a Fermi distribution with skin {skin_fm} fm")

    c = brentq(residual, lo, hi, xtol=1e-15 * target, rtol=1e-15, maxiter=200)

    return FermiNucleus(z, c, a)


def make_nucleus(kind: str, z: float, rms_fm: Optional[float] = None) -> NuclearModel:
    """
    Factory for the supported nuclear models.
    :param kind: One of "point", "fermi", "shell" or "uniform"
    :param z: The nuclear charge number
    :param rms_fm: The rms radius (fm), defaults to the built-in table
    """

    if kind == "point":
        return PointNucleus(z)

    if rms_fm is None:
        rms_fm = default_rms_fm(int(round(z)))

    if kind == "fermi":
        return fermi_from_rms(z, rms_fm)
    elif kind == "shell":
        return ShellNucleus.from_rms(z, rms_fm)
    elif kind == "uniform":
        return UniformSphere.from_rms(z, rms_fm)

    raise ValueError(f"Unknown nucleus kind '{kind}', expected one of point, fermi, shell, uniform")
