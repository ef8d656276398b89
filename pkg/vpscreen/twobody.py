import torch
from typing import Callable, NamedTuple, Optional
from .constants import ALPHA, to_ev
from .dirac import RadialGrid, RadialOrbital
from .quadrature import gauss_legendre
from .uehling import TwoBodyKernel
from .utils import ArrayLike, as_tensor


Density = Callable[[torch.Tensor], torch.Tensor]
Kernel = Optional[TwoBodyKernel]

# Angular coefficient of the L = 1 magnetic integral of a (1s)^2 J = 0 pair
MAGNETIC_COEFFICIENT = 8.0 / 3.0


class OrbitalPair(NamedTuple):
    first: RadialOrbital
    second: RadialOrbital

    def validate(self):
        grid = self.first.basis.grid
        if not torch.equal(grid.knots, self.second.basis.grid.knots):
            raise ValueError("Orbitals of a pair must share the radial grid")

        for o in self:
            if o.kappa != -1:
                raise ValueError(f"Only s1/2 orbitals are supported, got kappa = {o.kappa}")

        return self

    @property
    def grid(self) -> RadialGrid:
        return self.first.basis.grid


class RadialIntegralSet(NamedTuple):
    coulomb: float
    magnetic: float

    @property
    def total(self) -> float:
        return self.coulomb + self.magnetic


def _legendre(l: int, x: torch.Tensor) -> torch.Tensor:
    previous, current = torch.ones_like(x), x

    if l == 0:
        return previous

    for k in range(1, l):
        previous, current = current, ((2 * k + 1) * x * current - k * previous) / (k + 1)

    return current


def multipole_kernel(l: int, kernel: Kernel, r1: ArrayLike, r2: ArrayLike, n: int = 24) -> torch.Tensor:
    """
    The L-th Legendre coefficient of f(|x - y|) / |x - y| at radii (r1, r2), where f is one for the bare kernel
    (`kernel` is None) and chi for the screened one. The screened coefficient is
        (2L + 1) / (2 r1 r2) int_{|r1 - r2|}^{r1 + r2} P_L(mu(s)) chi(s) ds,
    with nodes graded towards the lower limit, where chi has its logarithmic singularity when r1 = r2.
    :param l: The multipole order
    :param kernel: None for the bare kernel, otherwise the tabulated screening factor
    :param r1: First radii
    :param r2: Second radii, broadcast against `r1`
    :param n: Number of nodes of the screened quadrature
    """

    if l < 0:
        raise ValueError(f"Multipole order must be non-negative, got {l}")

    r1, r2 = torch.broadcast_tensors(as_tensor(r1), as_tensor(r2))

    if kernel is None:
        lesser, greater = torch.minimum(r1, r2), torch.maximum(r1, r2)

        return lesser ** l / greater ** (l + 1)

    u, w = gauss_legendre(n).mapped(0.0, 1.0)[:2]
    power = 5

    lo = (r1 - r2).abs().unsqueeze(-1)
    width = (r1 + r2).unsqueeze(-1) - lo

    s = lo + width * u ** power
    ws = width * power * u ** (power - 1) * w

    a, b = r1.unsqueeze(-1), r2.unsqueeze(-1)
    mu = ((a ** 2 + b ** 2 - s ** 2) / (2.0 * a * b)).clamp(-1.0, 1.0)

    chi = kernel(s.reshape(-1)).reshape(s.shape)
    integral = (_legendre(l, mu) * chi * ws).sum(-1)

    return (2 * l + 1) / (2.0 * r1 * r2) * integral


def multipole_potential(l: int, density: Density, grid: RadialGrid, r: ArrayLike, kernel: Kernel = None,
                        n: int = 16, chunk: int = 32) -> torch.Tensor:
    """
    Y(r) = int_0^r_max density(s) K_L(r, s) ds, with every grid panel split at r. The screened kernel pieces use
    nodes graded towards r.
    :param l: The multipole order
    :param density: Radial density, evaluable at arbitrary radii
    :param grid: The radial grid, whose breaks define the panels
    :param r: The radii at which to evaluate
    :param kernel: None for the bare kernel, otherwise the screening factor
    :param n: Nodes per panel piece
    :param chunk: Number of radii evaluated at once
    """

    r = as_tensor(r)
    u, w = gauss_legendre(n).mapped(0.0, 1.0)[:2]
    power = 1 if kernel is None else 3

    g = u ** power
    dg = power * u ** (power - 1) * w

    lo, hi = grid.breaks[:-1], grid.breaks[1:]
    result = list()

    for start in range(0, r.shape[0], chunk):
        rr = r[start:start + chunk].unsqueeze(-1)
        mid = torch.minimum(torch.maximum(rr, lo), hi)

        # ===== Pieces below and above r, graded towards r ===== #
        below = mid.unsqueeze(-1) - (mid - lo).unsqueeze(-1) * g
        w_below = (mid - lo).unsqueeze(-1) * dg
        above = mid.unsqueeze(-1) + (hi - mid).unsqueeze(-1) * g
        w_above = (hi - mid).unsqueeze(-1) * dg

        nodes = torch.cat([below, above], dim=-1).reshape(rr.shape[0], -1)
        weights = torch.cat([w_below, w_above], dim=-1).reshape(rr.shape[0], -1)

        keep = weights > 0.0
        values = torch.zeros_like(nodes)
        values[keep] = density(nodes[keep])

        k = torch.zeros_like(nodes)
        target = rr.expand_as(nodes)
        k[keep] = multipole_kernel(l, kernel, target[keep], nodes[keep])

        result.append((values * k * weights).sum(-1))

    return torch.cat(result)


def pair_density(first: RadialOrbital, second: RadialOrbital) -> Density:
    """
    P1 P2 + Q1 Q2 at arbitrary radii.
    """

    def density(r: torch.Tensor) -> torch.Tensor:
        p1, q1 = first(r)
        p2, q2 = second(r)

        return p1 * p2 + q1 * q2

    return density


def pair_current(first: RadialOrbital, second: RadialOrbital) -> Density:
    """
    (P1 Q2 + Q1 P2) / 2 at arbitrary radii.
    """

    def current(r: torch.Tensor) -> torch.Tensor:
        p1, q1 = first(r)
        p2, q2 = second(r)

        return 0.5 * (p1 * q2 + q1 * p2)

    return current


def slater_integral(l: int, f: torch.Tensor, g: Density, grid: RadialGrid, kernel: Kernel = None) -> float:
    """
    R^L(f, g) = int int f(r1) g(r2) K_L(r1, r2) dr1 dr2, with `f` given on the grid nodes.
    """

    y = multipole_potential(l, g, grid, grid.nodes, kernel)

    return float((grid.weights * f * y).sum())


def radial_integrals(bra: OrbitalPair, ket: OrbitalPair, kernel: Kernel = None) -> RadialIntegralSet:
    """
    The timelike (monopole of the pair densities) and spacelike (L = 1 of the pair currents) parts of
    <bra| alpha (1 - alpha_1 . alpha_2) f(r12) / r12 |ket> for s1/2 pairs coupled to J = 0, in units of the electron
    rest energy.
    """

    bra.validate()
    ket.validate()

    grid = bra.grid
    if not torch.equal(grid.knots, ket.grid.knots):
        raise ValueError("Bra and ket orbitals must share the radial grid")

    p1, q1 = bra.first.on_nodes()
    p3, q3 = ket.first.on_nodes()

    rho = p1 * p3 + q1 * q3
    current = 0.5 * (p1 * q3 + q1 * p3)

    coulomb = slater_integral(0, rho, pair_density(bra.second, ket.second), grid, kernel)
    magnetic = slater_integral(1, current, pair_current(bra.second, ket.second), grid, kernel)

    return RadialIntegralSet(ALPHA * coulomb, ALPHA * MAGNETIC_COEFFICIENT * magnetic)


def i0_matrix_element(bra: OrbitalPair, ket: OrbitalPair) -> float:
    """
    Matrix element of the zero frequency photon exchange between s1/2 pairs coupled to J = 0 (electron rest energy).
    """

    return radial_integrals(bra, ket).total


def uehling_b_matrix_element(a: RadialOrbital, b: RadialOrbital, kernel: Optional[TwoBodyKernel] = None) -> float:
    """
    Permutation summed matrix element of the two-body Uehling operator on the (1s)^2 ground state, in eV.
    """

    kernel = kernel if kernel is not None else TwoBodyKernel()
    pair = OrbitalPair(a, b)

    return to_ev(radial_integrals(pair, pair, kernel).total)
