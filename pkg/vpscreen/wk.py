"""
Wichman-Kroll parts of the vacuum polarization: the one-body potential of the loop charge density beyond the Uehling
order, and the two-body loop energy of the (1s)^2 ground state.

Both are evaluated on the imaginary frequency axis omega = i eps as partial wave sums over |kappa|. The radial loop
integrals run over a panel grid whose breaks double as the outer evaluation points, so that the cusp of the Green
function at coinciding radii always sits on a panel boundary of the inner integral.
"""

import math
from functools import lru_cache
import numpy as np
import torch
from torch.nn import Module
from typing import Dict, NamedTuple, Optional, Sequence, Tuple
from scipy.interpolate import CubicSpline
from scipy.special import lpmv
from .constants import ALPHA, DTYPE, to_ev
from .dirac import RadialOrbital, orbital_angular_momentum
from .greens import free_green_pairs, free_pair_sums, split_from_blocks, table_blocks, trace_sums_from_blocks, \
    whittaker_table, WhittakerTable
from .logging import DefaultLogger, LoggingWrapper
from .nucleus import NuclearModel
from .quadrature import gauss_legendre, panel_rule, semi_infinite_rule
from .twobody import multipole_potential, pair_current, pair_density
from .uehling import PotentialTable
from .utils import ArrayLike, ConvergenceError, TensorTuple, as_tensor


class WKConfig(object):
    def __init__(self, kappa_max: int = 5, omega_nodes: int = 24, omega_scale: float = 1.0, r_min: float = 1e-4,
                 r_max: float = 20.0, panels: int = 40, nodes_per_panel: int = 6, extrapolate: bool = True,
                 tol: float = 1e-3, strict: bool = True):
        """
        Numerical parameters of the loop integrals.
        :param kappa_max: The largest |kappa| of the partial wave sum
        :param omega_nodes: Number of nodes of the imaginary frequency rule
        :param omega_scale: Scale of the map eps = s u / (1 - u)
        :param r_min: First non-zero break of the radial loop grid (Compton wavelengths)
        :param r_max: End of the radial loop grid
        :param panels: Number of radial panels
        :param nodes_per_panel: Gauss-Legendre nodes per panel
        :param extrapolate: Whether to add a geometric tail estimate to the partial wave sums
        :param tol: Relative tolerance of the partial wave tail
        :param strict: Whether a partial wave sum above tolerance raises `ConvergenceError`
        """

        if kappa_max < 1:
            raise ValueError(f"kappa_max must be at least 1, got {kappa_max}")

        if not (0.0 < r_min < r_max):
            raise ValueError(f"Require 0 < r_min < r_max, got r_min = {r_min}, r_max = {r_max}")

        if panels < 4 or nodes_per_panel < 2 or omega_nodes < 2:
            raise ValueError("Require at least 4 panels, 2 nodes per panel and 2 frequency nodes")

        self.kappa_max = int(kappa_max)
        self.omega_nodes = int(omega_nodes)
        self.omega_scale = float(omega_scale)
        self.r_min = float(r_min)
        self.r_max = float(r_max)
        self.panels = int(panels)
        self.nodes_per_panel = int(nodes_per_panel)
        self.extrapolate = extrapolate
        self.tol = float(tol)
        self.strict = strict

    def __repr__(self):
        return f"WKConfig(kappa_max={self.kappa_max}, omega_nodes={self.omega_nodes}, panels={self.panels})"


class KappaSeries(Module):
    def __init__(self, terms: Sequence[torch.Tensor] = (), extrapolate: bool = True):
        """
        Partial wave series, one term per |kappa| starting at one. Terms may be scalars or arrays over a common
        abscissa, in which case ratios are taken in the maximum norm.
        :param terms: The terms
        :param extrapolate: Whether the reported sum includes a geometric tail estimate
        """

        super().__init__()

        self.extrapolate = extrapolate
        self.terms = TensorTuple()

        for t in terms:
            self.append(t)

    def append(self, term: ArrayLike):
        self.terms.append(as_tensor(term))

    def __len__(self):
        return len(self.terms)

    @property
    def partial(self) -> torch.Tensor:
        return self.terms.values().sum(0)

    def _ratio(self) -> float:
        if len(self) < 2:
            return float("nan")

        last, previous = self.terms[-1].abs().max(), self.terms[-2].abs().max()
        if previous == 0.0:
            return 0.0 if last == 0.0 else float("inf")

        return float(last / previous)

    @property
    def tail(self) -> torch.Tensor:
        last = self.terms[-1]
        if not self.extrapolate or len(self) < 2:
            return torch.zeros_like(last)

        q = self._ratio()
        if not q < 1.0:
            return last.clone()

        return last * q / (1.0 - q)

    @property
    def sum(self) -> torch.Tensor:
        return self.partial + self.tail

    @property
    def last_ratio(self) -> float:
        """
        Size of the last term relative to the accumulated sum.
        """

        return float(self.terms[-1].abs().max() / self.partial.abs().max().clamp_min(1e-300))

    def converged(self, tol: float, floor: float = 0.0) -> bool:
        remainder = self.tail if self.extrapolate else self.terms[-1]
        if self.extrapolate and len(self) >= 2 and not self._ratio() < 1.0:
            return False

        return float(remainder.abs().max()) <= max(tol * float(self.sum.abs().max()), floor)

    def map(self, func) -> "KappaSeries":
        return KappaSeries([func(t) for t in self.terms], self.extrapolate)

    def dump(self, path: str, abscissa: Optional[torch.Tensor] = None, name: str = "series"):
        """
        Writes the terms as text. Scalar series are written as rows (kappa, term, accumulated), array series as
        columns (abscissa, term for every kappa, tail, sum).
        """

        if abscissa is None:
            terms = self.terms.values().reshape(len(self), -1)[:, 0].numpy()
            data = np.stack([np.arange(1, len(self) + 1), terms, np.cumsum(terms)], axis=-1)
            np.savetxt(path, data, fmt="%.17e", header=f"{name}: kappa term accumulated")
            return

        columns = [abscissa.numpy()] + [t.numpy() for t in self.terms] + [self.tail.numpy(), self.sum.numpy()]
        header = " ".join(["radius"] + [f"kappa_{k + 1}" for k in range(len(self))] + ["tail", "sum"])

        np.savetxt(path, np.stack(columns, axis=-1), fmt="%.17e", header=f"{name}: {header}")


def _check(series: KappaSeries, config: WKConfig, what: str, floor: float = 0.0):
    if series.converged(config.tol, floor) or not config.strict:
        return

    raise ConvergenceError(
        f"Partial wave sum of {what} not converged at |kappa| = {len(series)}, last ratio {series.last_ratio:.3e}",
        series.sum,
        series.tail
    )


# ===== Radial loop grid ===== #
class LoopGrid(Module):
    def __init__(self, r_min: float = 1e-4, r_max: float = 20.0, panels: int = 40, nodes_per_panel: int = 6):
        """
        Panels [0, b_1], [b_1, b_2], ... with geometric breaks b_i. Inner integrals use the Gauss-Legendre nodes,
        outer integrals the breaks, through a cubic spline in log r.
        """

        super().__init__()

        outer = np.geomspace(r_min, r_max, panels)
        rule = panel_rule(np.concatenate([[0.0], outer]), nodes_per_panel)

        self.register_buffer("outer", torch.from_numpy(outer).to(DTYPE))
        self.register_buffer("nodes", rule.nodes)
        self.register_buffer("weights", rule.weights)
        self.register_buffer("points", torch.cat([self.outer, self.nodes]))

    @classmethod
    def from_config(cls, config: WKConfig):
        return cls(config.r_min, config.r_max, config.panels, config.nodes_per_panel)

    @property
    def rows(self) -> torch.Tensor:
        return torch.arange(self.outer.shape[0])

    @property
    def cols(self) -> torch.Tensor:
        return torch.arange(self.outer.shape[0], self.points.shape[0])

    def pairs(self) -> Tuple[torch.Tensor, torch.Tensor]:
        """
        The ordered pairs (min, max) of every outer point with every inner node.
        """

        b, z = self.outer.unsqueeze(-1), self.nodes.unsqueeze(0)

        return torch.minimum(b, z), torch.maximum(b, z)

    def integrate_outer(self, values: torch.Tensor, power: int = 2) -> float:
        """
        int_0^r_max r^power f(r) dr for f given at the outer points, constant below the first one.
        """

        t = np.log(self.outer.numpy())
        h = self.outer.numpy() ** (power + 1) * values.numpy()

        spline = CubicSpline(t, h)

        return float(spline.integrate(t[0], t[-1]) + h[0] / (power + 1))

    def monopole(self, values: torch.Tensor, x: ArrayLike) -> torch.Tensor:
        """
        int_0^r_max r^2 f(r) / max(x, r) dr for x within the outer points.
        """

        x = as_tensor(x).numpy()
        if (x < float(self.outer[0]) * (1.0 - 1e-12)).any() or (x > float(self.outer[-1]) * (1.0 + 1e-12)).any():
            raise ValueError("Monopole radii must lie within the loop grid")

        r = self.outer.numpy()
        t = np.log(r)
        f = values.numpy()

        inner = CubicSpline(t, r ** 3 * f).antiderivative()
        outer = CubicSpline(t, r ** 2 * f).antiderivative()

        tx = np.log(np.clip(x, r[0], r[-1]))
        below = r[0] ** 3 * f[0] / 3.0 + inner(tx) - inner(t[0])
        above = outer(t[-1]) - outer(tx)

        return torch.from_numpy(below / x + above).to(DTYPE)


# ===== Loop integrals ===== #
class CoulombLoop(Module):
    def __init__(self, z: float, config: WKConfig = None, logging: LoggingWrapper = None):
        """
        Frequency and partial wave loop over the point Coulomb Green function of charge `z`, with the Whittaker
        tables of every (eps, |kappa|) kept for reuse between the one-body and two-body parts.
        """

        super().__init__()

        self.z = float(z)
        self.config = config or WKConfig()
        self.grid = LoopGrid.from_config(self.config)

        rule = semi_infinite_rule(self.config.omega_nodes, self.config.omega_scale)
        self.register_buffer("frequencies", rule.nodes)
        self.register_buffer("frequency_weights", rule.weights)

        self._tables: Dict[Tuple[int, int], WhittakerTable] = dict()
        self._logging = logging or DefaultLogger()

    def __repr__(self):
        return f"CoulombLoop(Z={self.z:g})"

    def table(self, i: int, kappa_abs: int) -> WhittakerTable:
        key = (i, kappa_abs)
        if key not in self._tables:
            omega = 1j * float(self.frequencies[i])
            self._tables[key] = whittaker_table(omega, kappa_abs, self.z, self.grid.points)

        return self._tables[key]

    def _blocks(self, i: int, kappa_abs: int):
        table = self.table(i, kappa_abs)

        return table_blocks(table, self.grid.rows, self.grid.cols), table.params

    def _sweep(self, kappa_max: int, func, what: str) -> torch.Tensor:
        """
        Accumulates sum_eps w(eps) func(i, |kappa|) for every |kappa| up to `kappa_max`.
        """

        n = self.frequencies.shape[0]
        self._logging.set_num_iter(n * kappa_max)

        result = None
        iteration = 0

        for i in range(n):
            w = float(self.frequency_weights[i])

            for k in range(1, kappa_max + 1):
                term = w * func(i, k)
                if result is None:
                    result = torch.zeros((kappa_max,) + term.shape, dtype=DTYPE)

                result[k - 1] += term

                iteration += 1
                self._logging.do_log(iteration, f"{self!r} {what}", float(result.abs().max()))

        return result

    def _density_term(self, i: int, k: int) -> torch.Tensor:
        omega = 1j * float(self.frequencies[i])
        blocks, params = self._blocks(i, k)
        lesser, greater = self.grid.pairs()

        kernel = torch.zeros(lesser.shape, dtype=DTYPE)
        for kappa in (-k, k):
            even = split_from_blocks(blocks, kappa, params).even
            free = free_green_pairs(omega, kappa, lesser, greater)

            for g, f in zip(even, free):
                kernel += (f * (g - f)).real

        z = self.grid.nodes
        source = self.grid.weights * z ** 2 * (-ALPHA * self.z / z)

        return k * (kernel * source).sum(-1)

    def density_series(self) -> KappaSeries:
        """
        Partial waves of the loop charge density n(y) beyond the Uehling order, at the outer points, normalized so that
        the potential is int y^2 n(y) / max(x, y) dy.
        """

        terms = self._sweep(self.config.kappa_max, self._density_term, "density")

        return KappaSeries(list(2.0 * ALPHA / math.pi * terms), self.config.extrapolate)

    def _screening_term(self, sources: torch.Tensor):
        """
        Contractions of the free subtracted trace sums with inner source functions, returns shape (3, m, outer).
        """

        lesser, greater = self.grid.pairs()
        weights = sources * self.grid.weights * self.grid.nodes ** 2

        def term(i: int, k: int) -> torch.Tensor:
            omega = 1j * float(self.frequencies[i])

            blocks, params = self._blocks(i, k)
            primed, params_primed = self._blocks(i, k + 1)

            coulomb = trace_sums_from_blocks(blocks, primed, params, params_primed, k)
            free = free_pair_sums(omega, k, lesser, greater)

            delta = torch.stack([c - f for c, f in zip(coulomb, free)])

            return torch.einsum("kbz,mz->kmb", delta, weights)

        return term

    def screening_sums(self, sources: torch.Tensor) -> torch.Tensor:
        """
        For inner source functions s_m given on the nodes, the frequency integrated
            int dz z^2 s_m(z) [S_j(Z) - S_j(0)](y, z),   j = 0, 1, 2,
        per |kappa| at the outer points y, with shape (kappa_max, 3, m, outer).
        """

        return self._sweep(self.config.kappa_max, self._screening_term(sources), "screening")


# ===== One-body WK potential ===== #
class WKPotential(Module):
    def __init__(self, loop: CoulombLoop, density: KappaSeries):
        """
        The WK potential of a point nucleus, from the partial waves of its loop charge density.
        """

        super().__init__()

        self.z = loop.z
        self.grid = loop.grid
        self.density = density

    def series_at(self, x: ArrayLike) -> KappaSeries:
        return self.density.map(lambda n: self.grid.monopole(n, x))

    def forward(self, x: ArrayLike) -> torch.Tensor:
        return self.grid.monopole(self.density.sum, x)

    def table(self, n: int = 200) -> PotentialTable:
        radii = self.grid.outer
        radii = torch.from_numpy(np.geomspace(float(radii[0]), float(radii[-1]), n)).to(DTYPE)

        return PotentialTable(radii, self.forward(radii), name=f"wichman-kroll point Z={self.z:g}")


def wk_loop_potential(z: float, config: WKConfig = None, loop: CoulombLoop = None,
                      logging: LoggingWrapper = None) -> WKPotential:
    loop = loop or CoulombLoop(z, config, logging)
    if loop.z != float(z):
        raise ValueError(f"Loop was built for Z = {loop.z}, requested Z = {z}")

    density = loop.density_series()
    _check(density, loop.config, f"the WK density at Z = {z:g}")

    return WKPotential(loop, density)


def wk_potential_a(x: ArrayLike, z: float, config: WKConfig = None, logging: LoggingWrapper = None) -> torch.Tensor:
    """
    The WK potential energy U(x) of an electron in the field of a point nucleus, in units of the electron rest energy.
    :param x: Radii within the loop grid (Compton wavelengths)
    :param z: The nuclear charge number
    :param config: Numerical parameters
    :param logging: Progress logger
    """

    if (as_tensor(x) <= 0.0).any():
        raise ValueError("Radius must be positive")

    return wk_loop_potential(z, config, logging=logging)(x)


def build_wk_table(z: float, config: WKConfig = None, n: int = 200, loop: CoulombLoop = None,
                   logging: LoggingWrapper = None) -> Tuple[PotentialTable, KappaSeries]:
    """
    Tabulates the point nucleus WK potential, returns the table and the partial wave series of the density.
    """

    potential = wk_loop_potential(z, config, loop, logging)

    return potential.table(n), potential.density


def wk_potential_approx(model: NuclearModel, table: PotentialTable) -> PotentialTable:
    """
    Extended nucleus WK potential approximated as U_point(r) V(r) / V_point(r).
    """

    if model.is_point:
        return table

    radii = table.radii
    scale = model.potential(radii) * radii / (-ALPHA * model.z)

    return PotentialTable(radii, table.values * scale, name=f"wichman-kroll approx {model.descriptor()}")


# ===== Magnetic loop couplings ===== #
def _spherical_harmonic(l: int, m: int, cos_theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    if abs(m) > l:
        return np.zeros(np.broadcast(cos_theta, phi).shape, dtype=complex)

    am = abs(m)
    norm = math.sqrt((2 * l + 1) / (4.0 * math.pi) * math.factorial(l - am) / math.factorial(l + am))
    y = norm * lpmv(am, l, cos_theta) * np.exp(1j * am * phi)

    return y if m >= 0 else (-1) ** am * np.conj(y)


def spinor_harmonic(kappa: int, m: float, cos_theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """
    The spherical spinor Omega_{kappa m}, returns the two spin components stacked along the first axis.
    """

    j = abs(kappa) - 0.5
    if abs(m) > j or (m - 0.5) != round(m - 0.5):
        raise ValueError(f"Invalid projection m = {m} for kappa = {kappa}")

    l = orbital_angular_momentum(kappa)
    denominator = 2 * l + 1

    if kappa < 0:
        up, down = math.sqrt((l + m + 0.5) / denominator), math.sqrt((l - m + 0.5) / denominator)
    else:
        up, down = -math.sqrt((l - m + 0.5) / denominator), math.sqrt((l + m + 0.5) / denominator)

    lower, upper = int(round(m - 0.5)), int(round(m + 0.5))

    return np.stack([
        up * _spherical_harmonic(l, lower, cos_theta, phi),
        down * _spherical_harmonic(l, upper, cos_theta, phi)
    ])


def _angular_rule(n: int):
    x, w = (v.numpy() for v in gauss_legendre(n)[:2])
    phi = 2.0 * math.pi * np.arange(2 * n) / (2 * n)

    cos_theta, phi = np.meshgrid(x, phi, indexing="ij")
    weights = np.repeat(w[:, None], 2 * n, axis=1) * math.pi / n

    return cos_theta, phi, weights


def _projections(kappa: int):
    j = abs(kappa) - 0.5

    return np.arange(-j, j + 0.5, 1.0)


def magnetic_coupling(kappa: int, kappa2: int, n: int = 32) -> float:
    """
    T(kappa, kappa2) = sum_{m, m2} |<kappa2 m2| sigma . (n x e_z) |-kappa m>|^2 over the unit sphere.
    """

    cos_theta, phi, w = _angular_rule(n)
    sin_theta = np.sqrt(1.0 - cos_theta ** 2)

    total = 0.0
    for m in _projections(-kappa):
        o = spinor_harmonic(-kappa, m, cos_theta, phi)
        rotated = np.stack([
            1j * sin_theta * np.exp(-1j * phi) * o[1],
            -1j * sin_theta * np.exp(1j * phi) * o[0]
        ])

        for m2 in _projections(kappa2):
            o2 = spinor_harmonic(kappa2, m2, cos_theta, phi)
            element = (w * (o2.conj() * rotated).sum(0)).sum()

            total += abs(element) ** 2

    return float(total)


def magnetic_sum_rule(kappa: int, n: int = 32) -> float:
    """
    sum_m <-kappa m| sin^2 theta |-kappa m>, which equals the sum of T(kappa, kappa2) over all kappa2.
    """

    cos_theta, phi, w = _angular_rule(n)

    total = 0.0
    for m in _projections(-kappa):
        o = spinor_harmonic(-kappa, m, cos_theta, phi)
        total += float((w * (1.0 - cos_theta ** 2) * (np.abs(o) ** 2).sum(0)).sum())

    return total


@lru_cache(maxsize=32)
def magnetic_couplings(kappa_abs: int) -> Tuple[float, float]:
    """
    (T(kappa, kappa), T(kappa, kappa')) for kappa = -|kappa| and kappa' = |kappa| + 1.
    """

    if kappa_abs < 1:
        raise ValueError(f"|kappa| must be at least 1, got {kappa_abs}")

    kappa = -kappa_abs

    return magnetic_coupling(kappa, kappa), magnetic_coupling(kappa, kappa_abs + 1)


# ===== Two-body WK energies ===== #
class ScreeningSources(NamedTuple):
    phi: torch.Tensor
    current: torch.Tensor


def screening_sources(state: RadialOrbital, r: torch.Tensor) -> ScreeningSources:
    """
    The monopole potential of the 1s density, Y0[P^2 + Q^2](r), and (2 / 3) Y1[PQ](r).
    """

    grid = state.basis.grid
    phi = multipole_potential(0, pair_density(state, state), grid, r)
    current = multipole_potential(1, pair_current(state, state), grid, r)

    return ScreeningSources(phi, 2.0 / 3.0 * current)


class WKScreening(NamedTuple):
    timelike: float
    magnetic: float
    control: float

    @property
    def energy(self) -> float:
        return self.timelike + self.magnetic


def wk_screening(z: float, state: RadialOrbital, config: WKConfig = None, loop: CoulombLoop = None,
                 logging: LoggingWrapper = None) -> WKScreening:
    """
    The WK energies of the loop between the two 1s electrons, split into the timelike and magnetic photon parts, and
    of the loop between one 1s electron and the static source -alpha / r, all in eV.
    """

    if state.kappa != -1:
        raise ValueError(f"The WK screening energies require a 1s state, got kappa = {state.kappa}")

    loop = loop or CoulombLoop(z, config, logging)
    if loop.z != float(z):
        raise ValueError(f"Loop was built for Z = {loop.z}, requested Z = {z}")

    config = loop.config
    grid = loop.grid

    inner = screening_sources(state, grid.nodes)
    outer = screening_sources(state, grid.outer)

    sources = torch.stack([inner.phi, inner.current, -ALPHA / grid.nodes])
    sums = loop.screening_sums(sources)

    timelike, magnetic, control = KappaSeries(), KappaSeries(), KappaSeries()

    for index in range(config.kappa_max):
        k = index + 1
        t1, t2 = magnetic_couplings(k)
        s = sums[index]

        timelike.append(2 * k * grid.integrate_outer(outer.phi * s[0, 0]))
        control.append(2 * k * grid.integrate_outer(outer.phi * s[0, 2]))
        magnetic.append(grid.integrate_outer(outer.current * (t1 * s[1, 1] + t2 * s[2, 1])))

    scale = ALPHA / math.pi

    timelike = timelike.map(lambda v: to_ev(ALPHA * scale * v))
    magnetic = magnetic.map(lambda v: to_ev(-3.0 * ALPHA * scale * v))
    control = control.map(lambda v: to_ev(scale * v))

    for series, what in ((timelike, "timelike"), (magnetic, "magnetic"), (control, "control")):
        _check(series, config, f"the {what} WK screening at Z = {z:g}", floor=1e-6)

    return WKScreening(float(timelike.sum), float(magnetic.sum), float(control.sum))


def wk_b_energy(z: float, state: RadialOrbital, config: WKConfig = None, loop: CoulombLoop = None,
                logging: LoggingWrapper = None) -> float:
    """
    WK part of the two-body vacuum polarization energy of the (1s)^2 ground state, in eV.
    """

    return wk_screening(z, state, config, loop, logging).energy


def wk_control_b(z: float, state: RadialOrbital, config: WKConfig = None, loop: CoulombLoop = None,
                 logging: LoggingWrapper = None) -> float:
    """
    WK loop energy with one photon leg attached to the 1s density and the other to the static source -alpha / r, in
    eV.
    """

    return wk_screening(z, state, config, loop, logging).control
