"""
Radial components of the point Coulomb Dirac Green function G = (omega - H)^-1 and of the free propagator, their split
into parts odd and even in the nuclear charge, and the loop trace sums S0, S1 and S2.

Components are indexed as in (g, f), the large and small radial functions, and are given for x1 <= x2; the remaining
ordering follows from G^{ik}(x1, x2) = G^{ki}(x2, x1).

Whittaker functions depend on kappa only through |kappa|, so they are tabulated once per (omega, |kappa|, Z) on a set
of radii and combined into the blocks A, B, C, D for any pair of tabulated radii.
"""

import cmath
import math
import torch
from typing import NamedTuple, Union
from .constants import ALPHA, CDTYPE, DTYPE
from .dirac.spectrum import orbital_angular_momentum
from .specfun import WhittakerParams, bessel_ikl, log_gamma, log_whittaker_m, log_whittaker_w
from .utils import ArrayLike, as_tensor


Number = Union[float, complex]

# Distance below which a real frequency is considered to sit on a bound state pole
POLE_THRESHOLD = 1e-6


class GreenComponents(NamedTuple):
    g11: torch.Tensor
    g12: torch.Tensor
    g21: torch.Tensor
    g22: torch.Tensor

    def transpose(self):
        """
        Components with the radial arguments exchanged.
        """

        return GreenComponents(self.g11, self.g21, self.g12, self.g22)

    def add(self, other: "GreenComponents"):
        return GreenComponents(*(a + b for a, b in zip(self, other)))

    def subtract(self, other: "GreenComponents"):
        return GreenComponents(*(a - b for a, b in zip(self, other)))


class GreenBlocks(NamedTuple):
    a: torch.Tensor
    b: torch.Tensor
    c: torch.Tensor
    d: torch.Tensor

    def conj(self):
        return GreenBlocks(*(v.conj() for v in self))


class GreenSplit(NamedTuple):
    odd: GreenComponents
    even: GreenComponents


class TraceSums(NamedTuple):
    s0: torch.Tensor
    s1: torch.Tensor
    s2: torch.Tensor


class CoulombParameters(NamedTuple):
    omega: complex
    d: complex
    lam: float
    nu: complex
    zeta: complex
    gamma: complex

    @property
    def log_q0(self) -> complex:
        """
        log[Gamma(lambda - nu) / (4 d^2 Gamma(1 + 2 lambda))].
        """

        return log_gamma(self.lam - self.nu) - log_gamma(1.0 + 2.0 * self.lam) - cmath.log(4.0 * self.d ** 2)


class FreeKernel(NamedTuple):
    identity: complex
    beta: complex
    alpha: complex


def _wavenumber(omega: Number) -> complex:
    d = cmath.sqrt(1.0 - complex(omega) ** 2)
    if d.real <= 0.0:
        raise ValueError(f"Require Re d > 0 for d = sqrt(1 - omega^2), got omega = {omega}")

    return d


def coulomb_parameters(omega: Number, kappa_abs: int, z: float) -> CoulombParameters:
    """
    The parameters d, lambda = sqrt(kappa^2 - (alpha Z)^2), nu = alpha Z omega / d, alpha Z / d and
    gamma = kappa^2 - (alpha Z / d)^2 of the radial Coulomb Green function.
    """

    if kappa_abs < 1:
        raise ValueError(f"|kappa| must be at least 1, got {kappa_abs}")

    az = ALPHA * z
    if abs(az) >= kappa_abs:
        raise ValueError(f"alpha Z = {az} exceeds |kappa| = {kappa_abs}")

    omega = complex(omega)
    d = _wavenumber(omega)
    lam = math.sqrt(kappa_abs ** 2 - az ** 2)
    nu = az * omega / d
    zeta = az / d

    _check_pole(omega, lam, nu, az)

    return CoulombParameters(omega, d, lam, nu, zeta, kappa_abs ** 2 - zeta ** 2)


def _check_pole(omega: complex, lam: float, nu: complex, az: float):
    if omega.imag != 0.0 or az <= 0.0:
        return

    radial = round(nu.real - lam)
    if radial < 0:
        return

    energy = 1.0 / math.sqrt(1.0 + (az / (radial + lam)) ** 2)
    if abs(omega.real - energy) < POLE_THRESHOLD:
        raise ValueError(f"omega = {omega.real} lies within {POLE_THRESHOLD} of the bound state pole at {energy}")


class WhittakerTable(NamedTuple):
    x: torch.Tensor
    log_m_minus: torch.Tensor
    log_m_plus: torch.Tensor
    log_w_minus: torch.Tensor
    log_w_plus: torch.Tensor
    params: CoulombParameters


def whittaker_table(omega: Number, kappa_abs: int, z: float, x: ArrayLike) -> WhittakerTable:
    """
    Logarithms of M_{nu -+ 1/2, lambda}(2dx) and W_{nu -+ 1/2, lambda}(2dx) at the radii `x`.
    """

    p = coulomb_parameters(omega, kappa_abs, z)
    x = as_tensor(x)

    if (x <= 0.0).any():
        raise ValueError("Radii must be positive")

    if abs(p.d.imag) > 1e-15 * abs(p.d):
        raise ValueError(f"Whittaker tables require real d, got omega = {omega}")

    def tabulate(func, k):
        values = [func(WhittakerParams(k, p.lam, 2.0 * p.d.real * float(xi))) for xi in x]

        return torch.tensor(values, dtype=CDTYPE)

    return WhittakerTable(
        x,
        tabulate(log_whittaker_m, p.nu - 0.5),
        tabulate(log_whittaker_m, p.nu + 0.5),
        tabulate(log_whittaker_w, p.nu - 0.5),
        tabulate(log_whittaker_w, p.nu + 0.5),
        p
    )


def table_blocks(table: WhittakerTable, rows: torch.Tensor, cols: torch.Tensor) -> GreenBlocks:
    """
    Blocks A, B, C, D for the pairs (x[rows], x[cols]) of tabulated radii, each pair taken in increasing order. The
    products of Whittaker functions are formed in log space.
    :param table: The Whittaker table
    :param rows: Indices of the first radii, shape (n,)
    :param cols: Indices of the second radii, shape (m,)
    :return: Blocks of shape (n, m)
    """

    x = table.x
    p = table.params

    r, c = rows.unsqueeze(-1), cols.unsqueeze(0)
    first_less = x[r] <= x[c]
    lesser = torch.where(first_less, r, c)
    greater = torch.where(first_less, c, r)

    prefix = p.log_q0 - 1.5 * (torch.log(x[lesser]) + torch.log(x[greater])).to(CDTYPE)
    scale = p.lam - p.nu

    def block(log_m, log_w):
        return -torch.exp(prefix + log_m[lesser] + log_w[greater])

    return GreenBlocks(
        scale * block(table.log_m_minus, table.log_w_minus),
        scale * block(table.log_m_minus, table.log_w_plus),
        block(table.log_m_plus, table.log_w_minus),
        block(table.log_m_plus, table.log_w_plus)
    )


def green_blocks(omega: Number, kappa_abs: int, x1: float, x2: float, z: float) -> GreenBlocks:
    """
    The blocks A, B, C, D at a single pair of radii, ordered so that the Whittaker M carries the smaller one.
    """

    table = whittaker_table(omega, kappa_abs, z, [x1, x2])
    blocks = table_blocks(table, torch.tensor([0]), torch.tensor([1]))

    return GreenBlocks(*(v[0, 0] for v in blocks))


def components_from_blocks(blocks: GreenBlocks, kappa: int, params: CoulombParameters) -> GreenComponents:
    a, b, c, d = blocks
    k, z, g, w = kappa, params.zeta, params.gamma, params.omega

    return GreenComponents(
        (1.0 + w) * (k * (a - d) + z * (a + d) + b - g * c),
        params.d * (k * (a + d) + z * (a - d) - b - g * c),
        params.d * (k * (a + d) + z * (a - d) + b + g * c),
        (1.0 - w) * (k * (a - d) + z * (a + d) - b + g * c)
    )


def coulomb_green(omega: Number, kappa: int, x1: float, x2: float, z: float) -> GreenComponents:
    """
    Radial components G^{ik}_kappa(omega, x1, x2) of the point Coulomb Dirac Green function.
    :param omega: The frequency, imaginary or real below threshold
    :param kappa: The relativistic angular quantum number
    :param x1: First radius
    :param x2: Second radius
    :param z: The nuclear charge number, of either sign
    """

    if x1 <= 0.0 or x2 <= 0.0:
        raise ValueError(f"Radii must be positive, got {x1}, {x2}")

    params = coulomb_parameters(omega, abs(kappa), z)
    lesser, greater = min(x1, x2), max(x1, x2)

    blocks = green_blocks(omega, abs(kappa), lesser, greater, z)
    components = components_from_blocks(blocks, kappa, params)

    return components if x1 <= x2 else components.transpose()


def split_from_blocks(blocks: GreenBlocks, kappa: int, params: CoulombParameters) -> GreenSplit:
    """
    Parts odd and even in Z, for imaginary omega, where Z -> -Z conjugates the blocks.
    """

    if params.omega.real != 0.0:
        raise ValueError(f"The odd and even split requires imaginary omega, got {params.omega}")

    a, b, c, d = blocks
    k, z, g, w = kappa, params.zeta.real, params.gamma.real, params.omega
    i = 1j

    odd = GreenComponents(
        (1.0 + w) * (i * (k * (a - d).imag + b.imag - g * c.imag) + z * (a + d).real),
        params.d * (i * (k * (a + d).imag - b.imag - g * c.imag) + z * (a - d).real),
        params.d * (i * (k * (a + d).imag + b.imag + g * c.imag) + z * (a - d).real),
        (1.0 - w) * (i * (k * (a - d).imag - b.imag + g * c.imag) + z * (a + d).real)
    )

    even = GreenComponents(
        (1.0 + w) * (k * (a - d).real + b.real - g * c.real + i * z * (a + d).imag),
        params.d * (k * (a + d).real - b.real - g * c.real + i * z * (a - d).imag),
        params.d * (k * (a + d).real + b.real + g * c.real + i * z * (a - d).imag),
        (1.0 - w) * (k * (a - d).real - b.real + g * c.real + i * z * (a + d).imag)
    )

    return GreenSplit(odd, even)


def green_split(omega: Number, kappa: int, x1: float, x2: float, z: float) -> GreenSplit:
    if x1 <= 0.0 or x2 <= 0.0:
        raise ValueError(f"Radii must be positive, got {x1}, {x2}")

    params = coulomb_parameters(omega, abs(kappa), z)
    blocks = green_blocks(omega, abs(kappa), min(x1, x2), max(x1, x2), z)

    split = split_from_blocks(blocks, kappa, params)
    if x1 <= x2:
        return split

    return GreenSplit(split.odd.transpose(), split.even.transpose())


def trace_sums_from_blocks(blocks: GreenBlocks, primed: GreenBlocks, params: CoulombParameters,
                           params_primed: CoulombParameters, kappa_abs: int) -> TraceSums:
    """
    The loop trace sums, summed over the sign of kappa and restricted to the part even in Z, in closed form. `primed`
    holds the blocks of |kappa'| = |kappa| + 1.
    """

    eps = params.omega.imag
    if params.omega.real != 0.0:
        raise ValueError(f"The trace sums require imaginary omega, got {params.omega}")

    k = kappa_abs
    z = params.zeta.real
    g = params.gamma.real
    gp = params_primed.gamma.real
    d2 = (params.d ** 2).real

    a1, a2 = blocks.a.real, blocks.a.imag
    b1, b2 = blocks.b.real, blocks.b.imag
    c1, c2 = blocks.c.real, blocks.c.imag
    e1, e2 = blocks.d.real, blocks.d.imag

    squares = a1 ** 2 + e1 ** 2 - a2 ** 2 - e2 ** 2

    s0 = 8.0 * ((z ** 2 + k ** 2) * squares + b1 ** 2 - b2 ** 2 + g ** 2 * (c1 ** 2 - c2 ** 2)) \
        - 16.0 * eps * z * ((a1 + e1) * (b2 - g * c2) + (a2 + e2) * (b1 - g * c1)) \
        + 16.0 * eps ** 2 * g * (a1 * e1 - a2 * e2 + b1 * c1 - b2 * c2)

    s1 = 8.0 * d2 * ((k ** 2 + z ** 2) * squares + b2 ** 2 - b1 ** 2 + g ** 2 * (c2 ** 2 - c1 ** 2))

    ap, bp, cp, dp = primed
    s2 = 16.0 * d2 * (
        (k * (k + 1) - z ** 2) * (a2 * ap.imag + e2 * dp.imag - a1 * ap.real - e1 * dp.real)
        + b2 * bp.imag - b1 * bp.real
        + g * gp * (c2 * cp.imag - c1 * cp.real)
    )

    return TraceSums(s0, s1, s2)


def trace_sums(omega: Number, kappa_abs: int, x: float, y: float, z: float) -> TraceSums:
    """
    S0, S1 and S2 at a single pair of radii.
    """

    lesser, greater = min(x, y), max(x, y)
    params = coulomb_parameters(omega, kappa_abs, z)
    params_primed = coulomb_parameters(omega, kappa_abs + 1, z)

    blocks = green_blocks(omega, kappa_abs, lesser, greater, z)
    primed = green_blocks(omega, kappa_abs + 1, lesser, greater, z)

    return trace_sums_from_blocks(blocks, primed, params, params_primed, kappa_abs)


def _direct_sums(components, kappa_abs: int) -> TraceSums:
    s0 = s1 = s2 = 0.0

    for sign in (-1, 1):
        kappa = sign * kappa_abs
        primed = -sign * (kappa_abs + 1)

        g = components(kappa)
        gp = components(primed)

        s0 = s0 + sum(v ** 2 for v in g).real
        s1 = s1 + 2.0 * (g.g11 * g.g22 + g.g12 * g.g21).real
        s2 = s2 + 2.0 * (g.g11 * gp.g22 + g.g22 * gp.g11 + g.g12 * gp.g21 + g.g21 * gp.g12).real

    return TraceSums(torch.as_tensor(s0), torch.as_tensor(s1), torch.as_tensor(s2))


def trace_sums_direct(omega: Number, kappa_abs: int, x1: float, x2: float, z: float) -> TraceSums:
    """
    S0, S1 and S2 summed directly from the components of the full Green function, without the restriction to even
    powers of Z.
    """

    return _direct_sums(lambda kappa: coulomb_green(omega, kappa, x1, x2, z), kappa_abs)


def free_trace_sums(omega: Number, kappa_abs: int, x1: float, x2: float) -> TraceSums:
    return _direct_sums(lambda kappa: free_green(omega, kappa, x1, x2), kappa_abs)


def free_pair_sums(omega: Number, kappa_abs: int, lesser: torch.Tensor, greater: torch.Tensor) -> TraceSums:
    """
    Free loop trace sums for arrays of ordered radius pairs.
    """

    return _direct_sums(lambda kappa: free_green_pairs(omega, kappa, lesser, greater), kappa_abs)


# ===== Free propagator ===== #
def _free_wavenumber(omega: Number) -> float:
    d = _wavenumber(omega)
    if abs(d.imag) > 1e-15 * abs(d):
        raise ValueError(f"The free radial propagator requires real d, got omega = {omega}")

    return d.real


def _conjugate_orders(kappa: int):
    l = orbital_angular_momentum(kappa)
    lb = kappa - 1 if kappa > 0 else -kappa

    return l, lb


def free_green_pairs(omega: Number, kappa: int, x1: torch.Tensor, x2: torch.Tensor) -> GreenComponents:
    """
    Radial components of the free propagator for arrays of radii with x1 <= x2 elementwise, from scaled modified
    spherical Bessel functions.
    """

    d = _free_wavenumber(omega)
    w = complex(omega)
    l, lb = _conjugate_orders(kappa)

    z1, z2 = (d * x1).numpy(), (d * x2).numpy()

    i_l, _ = bessel_ikl(l, z1, scaled=True)
    i_lb, _ = bessel_ikl(lb, z1, scaled=True)
    _, k_l = bessel_ikl(l, z2, scaled=True)
    _, k_lb = bessel_ikl(lb, z2, scaled=True)

    damping = torch.exp(d * (x1 - x2))

    def t(v):
        return torch.from_numpy(v).to(DTYPE) * damping

    c1 = 2.0 * d / math.pi
    c2 = 2.0 * d ** 2 / math.pi

    return GreenComponents(
        (-c1 * (1.0 + w) * t(i_l * k_l)).to(CDTYPE),
        (c2 * t(i_l * k_lb)).to(CDTYPE),
        (-c2 * t(i_lb * k_l)).to(CDTYPE),
        (c1 * (1.0 - w) * t(i_lb * k_lb)).to(CDTYPE)
    )


def free_green(omega: Number, kappa: int, x1: float, x2: float) -> GreenComponents:
    """
    Radial components of the free electron propagator.
    """

    if x1 <= 0.0 or x2 <= 0.0:
        raise ValueError(f"Radii must be positive, got {x1}, {x2}")

    lesser, greater = as_tensor(min(x1, x2)), as_tensor(max(x1, x2))
    components = GreenComponents(*(v[0] for v in free_green_pairs(omega, kappa, lesser, greater)))

    return components if x1 <= x2 else components.transpose()


def free_propagator(omega: Number, x: float) -> FreeKernel:
    """
    The free propagator F = -[omega + beta + i alpha.n (d + 1 / x)] exp(-dx) / (4 pi x) at separation x, returned as
    the coefficients of the identity, beta and i alpha.n.
    """

    if x <= 0.0:
        raise ValueError(f"Separation must be positive, got {x}")

    w = complex(omega)
    d = _wavenumber(w)
    base = -cmath.exp(-d * x) / (4.0 * math.pi * x)

    return FreeKernel(base * w, base, base * (d + 1.0 / x))


def free_green_domega(omega: Number, x: float) -> FreeKernel:
    """
    The frequency derivative dF/domega = -[i alpha.n d + beta + omega + d / (omega x)] exp(-dx) omega / (4 pi d), as
    coefficients of the identity, beta and i alpha.n.
    """

    w = complex(omega)
    if w == 0.0:
        raise ValueError("The frequency derivative kernel is singular at omega = 0")

    if x <= 0.0:
        raise ValueError(f"Separation must be positive, got {x}")

    d = _wavenumber(w)
    base = -cmath.exp(-d * x) * w / (4.0 * math.pi * d)

    return FreeKernel(base * (w + d / (w * x)), base, base * d)
