import math
import warnings
import torch
from torch.nn import Module
from typing import Iterable, Optional, Tuple
from scipy.special import gammaln
from .basis import DKBBasis, RadialGrid
from ..constants import ALPHA, DTYPE
from ..nucleus import NuclearModel
from ..utils import ArrayLike, as_tensor


# Relative amplitude below which the large component is treated as zero when counting nodes
_NODE_FLOOR = 1e-8

# Sign changes beyond the last point where |P| exceeds this fraction of its peak are basis noise
_TAIL_FLOOR = 1e-4

# States with energies this close (relative) to the reference state are excluded from reduced sums
_DEGENERACY_TOL = 1e-10


def orbital_angular_momentum(kappa: int) -> int:
    return kappa if kappa > 0 else -kappa - 1


def sommerfeld_energy(n: int, kappa: int, z: float) -> float:
    """
    Point Coulomb Dirac eigenvalue in units of the electron rest energy.
    :param n: The principal quantum number
    :param kappa: The relativistic angular quantum number
    :param z: The nuclear charge number
    """

    k = abs(kappa)
    if kappa == 0 or n < k or (kappa > 0 and n == k):
        raise ValueError(f"No bound state with n = {n}, kappa = {kappa}")

    az = ALPHA * z
    if az >= k:
        raise ValueError(f"alpha Z = {az} is beyond the point Coulomb limit for kappa = {kappa}")

    gamma = math.sqrt(k ** 2 - az ** 2)

    return 1.0 / math.sqrt(1.0 + (az / (n - k + gamma)) ** 2)


class RadialOrbital(Module):
    def __init__(self, basis: DKBBasis, coefficients: torch.Tensor, energy: float = float("nan")):
        """
        Two-component radial function (P, Q), equal to r times the large and small radial components, expanded in a
        DKB basis.
        :param basis: The basis
        :param coefficients: The expansion coefficients
        :param energy: The eigenvalue, if the orbital is an eigenstate
        """

        super().__init__()

        self.basis = basis
        self.energy = float(energy)
        self.register_buffer("coefficients", coefficients.to(DTYPE))

    @property
    def kappa(self) -> int:
        return self.basis.kappa

    def forward(self, r: ArrayLike) -> Tuple[torch.Tensor, torch.Tensor]:
        return self.basis.combine(self.coefficients, r)

    def on_nodes(self) -> Tuple[torch.Tensor, torch.Tensor]:
        """
        (P, Q) on the quadrature nodes of the basis grid.
        """

        return self.coefficients @ self.basis.upper, self.coefficients @ self.basis.lower

    def overlap(self, other: "RadialOrbital") -> float:
        p1, q1 = self.on_nodes()
        p2, q2 = other.on_nodes()

        return float((self.basis.grid.weights * (p1 * p2 + q1 * q2)).sum())

    def expectation(self, values: torch.Tensor) -> float:
        """
        int (P^2 + Q^2) f(r) dr for `values` = f on the nodes.
        """

        p, q = self.on_nodes()

        return float((self.basis.grid.weights * (p ** 2 + q ** 2) * values).sum())

    def count_nodes(self) -> int:
        """
        Number of sign changes of the large component up to its exponential tail.
        """

        p, _ = self.on_nodes()
        scale = p.abs().max()

        significant = torch.nonzero(p.abs() > _TAIL_FLOOR * scale).reshape(-1)
        p = p[: int(significant[-1]) + 1]
        p = p[p.abs() > _NODE_FLOOR * scale]

        return int((p[1:] * p[:-1] < 0.0).sum())


class BoundState(RadialOrbital):
    def __init__(self, basis: DKBBasis, coefficients: torch.Tensor, energy: float, principal: int, index: int):
        """
        Bound eigenstate of a DKB spectrum, normalized with a positive large component at its largest amplitude.
        :param principal: The principal quantum number
        :param index: The position of the state in the spectrum
        """

        super().__init__(basis, coefficients, energy)

        self.principal = principal
        self.index = index

    def __repr__(self):
        return f"BoundState(n={self.principal}, kappa={self.kappa}, energy={self.energy:.12f})"


class DiracSpectrum(Module):
    def __init__(self, basis: DKBBasis, model: NuclearModel, energies: torch.Tensor, coefficients: torch.Tensor):
        """
        Pseudo-spectrum of the radial Dirac Hamiltonian in a DKB basis, containing both negative and positive energy
        states. Column i of `coefficients` is the eigenvector of `energies[i]`, normalized in the basis overlap.
        """

        super().__init__()

        self.basis = basis
        self.model = model

        self.register_buffer("energies", energies)
        self.register_buffer("coefficients", coefficients)

    @property
    def kappa(self) -> int:
        return self.basis.kappa

    @property
    def grid(self) -> RadialGrid:
        return self.basis.grid

    def __len__(self):
        return self.energies.shape[0]

    @property
    def gap_states(self) -> Tuple[int, ...]:
        """
        Indices of eigenvalues in (-1, 0]. No bound state of a nucleus with alpha Z < 1 lies there, so these are
        spurious solutions of the basis.
        """

        inside = (self.energies > -1.0) & (self.energies <= 0.0)

        return tuple(torch.nonzero(inside).reshape(-1).tolist())

    @property
    def bound_candidates(self) -> Tuple[int, ...]:
        """
        Indices of eigenvalues in (0, 1), in ascending energy.
        """

        inside = (self.energies > 0.0) & (self.energies < 1.0)

        return tuple(torch.nonzero(inside).reshape(-1).tolist())

    def orbital(self, i: int) -> RadialOrbital:
        return RadialOrbital(self.basis, self.coefficients[:, i], float(self.energies[i]))

    def project(self, large: torch.Tensor, small: torch.Tensor) -> torch.Tensor:
        """
        Overlaps <n|source> of every state with a two-component function given on the grid nodes.
        """

        return self.coefficients.T @ self.basis.project(large, small)

    def closure(self, large: torch.Tensor, small: torch.Tensor) -> RadialOrbital:
        """
        Applies sum_n |n><n| to a two-component function given on the nodes.
        """

        return RadialOrbital(self.basis, self.coefficients @ self.project(large, small))


def build_spectrum(kappa: int, model: NuclearModel, grid: Optional[RadialGrid] = None, cache=None,
                   **grid_kwargs) -> DiracSpectrum:
    """
    Diagonalizes the radial Dirac Hamiltonian of `model` in a DKB basis.
    :param kappa: The relativistic angular quantum number
    :param model: The nuclear model
    :param grid: The radial grid, defaults to `RadialGrid.for_charge(model.z, **grid_kwargs)`
    :param cache: Optional `SpectrumCache`
    """

    if grid is None:
        grid = RadialGrid.for_charge(max(model.z, 1.0), **grid_kwargs)

    basis = DKBBasis(grid, kappa)

    if cache is not None:
        stored = cache.load(kappa, model, grid)
        if stored is not None:
            return DiracSpectrum(basis, model, *stored)

    h, s = basis.matrices(model.potential(grid.nodes))

    try:
        chol = torch.linalg.cholesky(s)
    except RuntimeError as e:
        raise RuntimeError(f"Overlap matrix of kappa = {kappa} is not positive definite") from e

    tmp = torch.linalg.solve_triangular(chol, h, upper=False)
    reduced = torch.linalg.solve_triangular(chol, tmp.T, upper=False)

    energies, vectors = torch.linalg.eigh(0.5 * (reduced + reduced.T))
    coefficients = torch.linalg.solve_triangular(chol.T, vectors, upper=True)

    # ===== Fix signs so that the large component is positive where it is largest ===== #
    p = coefficients.T @ basis.upper
    peak = p.abs().argmax(dim=-1)
    signs = torch.sign(p.gather(-1, peak.unsqueeze(-1)).squeeze(-1))
    coefficients = coefficients * torch.where(signs == 0.0, torch.ones_like(signs), signs)

    if cache is not None:
        cache.store(kappa, model, grid, energies, coefficients)

    return DiracSpectrum(basis, model, energies, coefficients)


def bound_state(spectrum: DiracSpectrum, n: int) -> BoundState:
    """
    The bound state with principal quantum number `n`. The eigenvalues in (0, 1) are walked in ascending order and a
    state is accepted as the next level only if its large component has the node count of that level; candidates with
    any other count are skipped as spurious.
    """

    kappa = spectrum.kappa
    l = orbital_angular_momentum(kappa)
    lowest = l + 1

    if n < lowest:
        raise ValueError(f"No bound state with n = {n} for kappa = {kappa}")

    gap = spectrum.gap_states
    if gap:
        energies = ", ".join(f"{float(spectrum.energies[i]):.6f}" for i in gap)
        warnings.warn(f"Spurious eigenvalues in the gap for kappa = {kappa}, Z = {spectrum.model.z:g}: {energies}")

    level = lowest
    for index in spectrum.bound_candidates:
        state = BoundState(spectrum.basis, spectrum.coefficients[:, index], float(spectrum.energies[index]), level,
                           index)

        nodes, expected = state.count_nodes(), level - l - 1
        if nodes != expected:
            warnings.warn(f"Skipping spurious state at E = {state.energy:.10f}: {nodes} nodes, expected {expected}")
            continue

        if level == n:
            return state

        level += 1

    raise ValueError(f"State n = {n}, kappa = {kappa} is not bound in the basis")


def bound_1s(spectrum: DiracSpectrum) -> BoundState:
    if spectrum.kappa != -1:
        raise ValueError(f"The 1s state requires kappa = -1, got {spectrum.kappa}")

    return bound_state(spectrum, 1)


def exclusion_set(spectrum: DiracSpectrum, ref: BoundState) -> Tuple[int, ...]:
    """
    Indices of the states left out of the reduced sum: the reference state, any state degenerate with it and the
    spurious eigenvalues in the gap.
    """

    close = (spectrum.energies - ref.energy).abs() <= _DEGENERACY_TOL * abs(ref.energy)
    indices = set(torch.nonzero(close).reshape(-1).tolist())
    indices.add(ref.index)
    indices.update(spectrum.gap_states)

    return tuple(sorted(indices))


def reduced_green_apply(spectrum: DiracSpectrum, ref: BoundState, source: Tuple[torch.Tensor, torch.Tensor],
                        exclude: Optional[Iterable[int]] = None) -> RadialOrbital:
    """
    Applies sum_{n not excluded} |n><n|source> / (e_a - e_n) over the full pseudo-spectrum.
    :param spectrum: The spectrum containing `ref`
    :param ref: The reference state a
    :param source: The source (P, Q) on the grid nodes
    :param exclude: The excluded indices, defaults to `exclusion_set(spectrum, ref)`
    """

    if ref.basis is not spectrum.basis and not torch.equal(ref.basis.grid.knots, spectrum.grid.knots):
        raise ValueError("Reference state does not belong to the spectrum")

    if ref.kappa != spectrum.kappa:
        raise ValueError(f"Reference state has kappa = {ref.kappa}, spectrum has kappa = {spectrum.kappa}")

    exclude = exclusion_set(spectrum, ref) if exclude is None else tuple(exclude)

    keep = torch.ones(len(spectrum), dtype=torch.bool)
    keep[list(exclude)] = False

    denominators = ref.energy - spectrum.energies[keep]
    if (denominators.abs() <= _DEGENERACY_TOL * abs(ref.energy)).any():
        raise ValueError("Degenerate state outside the exclusion set, the reduced sum is ambiguous")

    overlaps = spectrum.project(*source)[keep]

    return RadialOrbital(spectrum.basis, spectrum.coefficients[:, keep] @ (overlaps / denominators))


class PointOneS(object):
    def __init__(self, z: float):
        """
        Analytic 1s orbital of the point Coulomb potential, P = N sqrt(1 + g) r^g exp(-aZ r) and
        Q = -N sqrt(1 - g) r^g exp(-aZ r) with g = sqrt(1 - (aZ)^2).
        """

        if not (0.0 < z < 1.0 / ALPHA):
            raise ValueError(f"Require 0 < Z < 1 / alpha, got {z}")

        self.z = float(z)
        self.gamma = math.sqrt(1.0 - (ALPHA * z) ** 2)
        self.energy = self.gamma

        lam = ALPHA * z
        g = self.gamma
        self._lam = lam
        self._log_norm = 0.5 * ((2.0 * g + 1.0) * math.log(2.0 * lam) - math.log(2.0) - gammaln(2.0 * g + 1.0))

    def __call__(self, r: ArrayLike) -> Tuple[torch.Tensor, torch.Tensor]:
        r = as_tensor(r).clamp_min(0.0)
        g = self.gamma

        radial = torch.exp(self._log_norm + g * torch.log(r.clamp_min(1e-300)) - self._lam * r)
        radial = torch.where(r > 0.0, radial, torch.zeros_like(r))

        return math.sqrt(1.0 + g) * radial, -math.sqrt(1.0 - g) * radial


def point_1s(z: float) -> PointOneS:
    return PointOneS(z)
