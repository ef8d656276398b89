import threading
import torch
from torch.nn import Module
from typing import Dict, Optional
from .result import Contribution, ControlReport, Diagram, IonProperties, ScreeningTotal
from ..constants import ALPHA, to_ev
from ..dirac import BoundState, DiracSpectrum, RadialGrid, RadialOrbital, SpectrumCache, bound_1s, build_spectrum, \
    reduced_green_apply
from ..logging import DefaultLogger, LoggingWrapper
from ..nucleus import NuclearModel, PointNucleus
from ..twobody import OrbitalPair, i0_matrix_element, uehling_b_matrix_element
from ..uehling import PotentialTable, TwoBodyKernel, build_uehling_table
from ..wk import CoulombLoop, KappaSeries, WKConfig, build_wk_table, wk_b_energy, wk_control_b, wk_potential_approx


# Relative change of the rms radius used for the quoted uncertainties
RMS_VARIATION = 0.01

# Charge step of the central difference dE/dZ
CHARGE_STEP = 0.5

_KERNEL: Optional[TwoBodyKernel] = None
_KERNEL_LOCK = threading.Lock()


def _shared_kernel() -> TwoBodyKernel:
    global _KERNEL
    if _KERNEL is None:
        with _KERNEL_LOCK:
            if _KERNEL is None:
                _KERNEL = TwoBodyKernel()

    return _KERNEL


def _matrix_element(first: RadialOrbital, second: RadialOrbital, values: torch.Tensor) -> float:
    p1, q1 = first.on_nodes()
    p2, q2 = second.on_nodes()

    return float((first.basis.grid.weights * (p1 * p2 + q1 * q2) * values).sum())


class ScreeningCalculator(Module):
    def __init__(self, model: NuclearModel, config: WKConfig = None, wk_finite_size: bool = False,
                 grid: RadialGrid = None, cache: SpectrumCache = None, table_points: int = 400,
                 loop: CoulombLoop = None, logging: LoggingWrapper = None, **grid_kwargs):
        """
        Screening corrections of the (1s)^2 ground state of a He-like ion. The spectrum, the potential tables and the
        WK loop are built on first use and kept.
        :param model: The nuclear model
        :param config: Numerical parameters of the WK loop
        :param wk_finite_size: Whether the one-body WK potential is rescaled to the extended nuclear potential
        :param grid: The radial grid of the Dirac spectrum, defaults to the charge scaled grid
        :param cache: Optional spectrum cache
        :param table_points: Number of radii of the Uehling table
        :param loop: A point Coulomb loop of the same charge, shared between calculators
        :param logging: Progress logger of the loop sweeps
        :param grid_kwargs: Passed on to `RadialGrid.for_charge`
        """

        super().__init__()

        if model.z < 1.0:
            raise ValueError(f"Screening corrections need Z >= 1, got {model.z}")

        if loop is not None and loop.z != model.z:
            raise ValueError(f"Loop was built for Z = {loop.z}, model has Z = {model.z}")

        self.model = model
        self.config = config or (loop.config if loop is not None else WKConfig())
        self.wk_finite_size = wk_finite_size
        self.table_points = table_points

        self._grid = grid
        self._grid_kwargs = grid_kwargs
        self._cache = cache
        self._logging = logging or DefaultLogger()

        self._spectrum: Optional[DiracSpectrum] = None
        self._state: Optional[BoundState] = None
        self._loop = loop
        self._tables: Dict[str, PotentialTable] = dict()
        self._perturbed: Dict[str, RadialOrbital] = dict()
        self._wk_density: Optional[KappaSeries] = None

    def __repr__(self):
        return f"ScreeningCalculator({self.model.descriptor()})"

    @property
    def z(self) -> float:
        return self.model.z

    @property
    def spectrum(self) -> DiracSpectrum:
        if self._spectrum is None:
            self._spectrum = build_spectrum(-1, self.model, self._grid, self._cache, **self._grid_kwargs)

        return self._spectrum

    @property
    def state(self) -> BoundState:
        if self._state is None:
            self._state = bound_1s(self.spectrum)

        return self._state

    @property
    def loop(self) -> CoulombLoop:
        if self._loop is None:
            self._loop = CoulombLoop(self.z, self.config, self._logging)

        return self._loop

    def sibling(self, model: NuclearModel) -> "ScreeningCalculator":
        """
        Calculator with the same numerical settings for another nuclear model. The WK loop is shared when the charge
        is unchanged.
        """

        loop = self._loop if model.z == self.z else None

        return ScreeningCalculator(model, self.config, self.wk_finite_size, self._grid, self._cache,
                                   self.table_points, loop, self._logging, **self._grid_kwargs)

    def potential_table(self, part: str) -> PotentialTable:
        """
        The one-body potential `part`, either "uehling" or "wk", in units of the electron rest energy.
        """

        if part not in self._tables:
            if part == "uehling":
                table = build_uehling_table(self.model, exact=True, n=self.table_points)
            elif part == "wk":
                table, self._wk_density = build_wk_table(self.z, self.config, loop=self.loop, logging=self._logging)
                if self.wk_finite_size:
                    table = wk_potential_approx(self.model, table)
            else:
                raise ValueError(f"Unknown potential '{part}', expected 'uehling' or 'wk'")

            self._tables[part] = table

        return self._tables[part]

    @property
    def wk_density(self) -> KappaSeries:
        """
        Partial wave series of the point nucleus WK loop density on the loop grid.
        """

        self.potential_table("wk")

        return self._wk_density

    def _potential_on_nodes(self, part: str) -> torch.Tensor:
        return self.potential_table(part)(self.spectrum.grid.nodes)

    def perturbed_orbital(self, part: str) -> RadialOrbital:
        """
        First order change of the 1s orbital in the potential `part`, sum_n |n><n|U|a> / (e_a - e_n).
        """

        if part not in self._perturbed:
            u = self._potential_on_nodes(part)
            p, q = self.state.on_nodes()

            self._perturbed[part] = reduced_green_apply(self.spectrum, self.state, (u * p, u * q))

        return self._perturbed[part]

    def one_body_energy(self, part: str) -> float:
        """
        <1s|U|1s> in eV.
        """

        return to_ev(self.state.expectation(self._potential_on_nodes(part)))

    def _value(self, diagram: Diagram) -> float:
        a = self.state

        if diagram.is_one_body:
            delta = self.perturbed_orbital("uehling" if diagram.is_uehling else "wk")

            # Both electrons and both sides of the interaction
            return to_ev(4.0 * i0_matrix_element(OrbitalPair(delta, a), OrbitalPair(a, a)))

        if diagram.is_uehling:
            return uehling_b_matrix_element(a, a, _shared_kernel())

        return wk_b_energy(self.z, a, loop=self.loop, logging=self._logging)

    def _contribution(self, diagram: Diagram, uncertainty: float = 0.0) -> Contribution:
        return Contribution(self.z, diagram, self._value(diagram), uncertainty, self.model.descriptor())

    def delta_e_a(self, part: str = "uehling") -> Contribution:
        """
        Screening of the one-body potential `part` through the perturbed 1s orbital, in eV.
        """

        return self._contribution(_diagram(part, one_body=True))

    def delta_e_b(self, part: str = "uehling") -> Contribution:
        """
        Screening through the vacuum polarization insertion in the exchanged photon, in eV.
        """

        return self._contribution(_diagram(part, one_body=False))

    def rms_uncertainty(self, diagram: Diagram) -> float:
        """
        |E(1.01 rms) - E(rms)| for `diagram`; zero for a point nucleus.
        """

        if self.model.is_point:
            return 0.0

        varied = self.sibling(self.model.scaled(1.0 + RMS_VARIATION))

        return abs(varied._value(diagram) - self._value(diagram))

    def total(self) -> ScreeningTotal:
        """
        All four diagrams. The uncertainty of the total is the rms variation of the dominant one electron Uehling
        term.
        """

        uncertainty = self.rms_uncertainty(Diagram.UehlA)
        contributions = tuple(
            self._contribution(d, uncertainty if d is Diagram.UehlA else 0.0) for d in Diagram
        )

        return ScreeningTotal(self.z, self.model.rms_fm, contributions, uncertainty)

    def first_order_energy(self) -> float:
        """
        One electron vacuum polarization energy <1s|U_Uehl + U_WK|1s> in eV.
        """

        return self.one_body_energy("uehling") + self.one_body_energy("wk")

    def control_table1(self) -> ControlReport:
        """
        The screening diagrams with the second electron replaced by an additional point charge, and the charge
        derivative of the first order energy by central differences.
        """

        if not self.model.is_point:
            raise ValueError("The control calculation is defined for a point nucleus")

        a = self.state
        source = -ALPHA / self.spectrum.grid.nodes

        uehl_a = to_ev(2.0 * _matrix_element(a, self.perturbed_orbital("uehling"), source))
        uehl_b = self.one_body_energy("uehling") / self.z
        wk_a = to_ev(2.0 * _matrix_element(a, self.perturbed_orbital("wk"), source))
        wk_b = wk_control_b(self.z, a, loop=self.loop, logging=self._logging)

        upper, lower = (
            self.sibling(self.model.with_charge(self.z + s)).first_order_energy() for s in (CHARGE_STEP, -CHARGE_STEP)
        )

        derivative = (upper - lower) / (2.0 * CHARGE_STEP)

        return ControlReport(self.z, uehl_a, uehl_b, wk_a, wk_b, derivative)

    def properties(self) -> IonProperties:
        return IonProperties(
            self.z, self.model.rms_fm, to_ev(self.state.energy - 1.0), self.one_body_energy("uehling"),
            self.one_body_energy("wk")
        )


def _diagram(part: str, one_body: bool) -> Diagram:
    if part == "uehling":
        return Diagram.UehlA if one_body else Diagram.UehlB
    elif part == "wk":
        return Diagram.WKA if one_body else Diagram.WKB

    raise ValueError(f"Unknown part '{part}', expected 'uehling' or 'wk'")


def screening_total(model: NuclearModel, config: WKConfig = None, **kwargs) -> ScreeningTotal:
    return ScreeningCalculator(model, config, **kwargs).total()


def control_table1(z: float, config: WKConfig = None, **kwargs) -> ControlReport:
    return ScreeningCalculator(PointNucleus(z), config, **kwargs).control_table1()
