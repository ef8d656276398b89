import numpy as np
import torch
from torch.nn import Module
from scipy.interpolate import BSpline
from typing import Tuple
from ..constants import ALPHA, DTYPE
from ..quadrature import panel_rule
from ..utils import ArrayLike, as_tensor


class RadialGrid(Module):
    def __init__(self, n_splines: int = 60, order: int = 8, r_min: float = 1e-6, r_max: float = 40.0,
                 nodes_per_interval: int = None):
        """
        Knot sequence and quadrature of a B-spline basis on [0, r_max], with an exponential distribution of the
        interior knots starting at `r_min`.
        :param n_splines: The number of B-splines
        :param order: The order of the B-splines, i.e. the degree plus one
        :param r_min: The first non-zero knot
        :param r_max: The end of the box
        :param nodes_per_interval: Gauss-Legendre nodes per knot interval, defaults to twice the order
        """

        super().__init__()

        if n_splines < 30 or order < 6:
            raise ValueError(f"Require at least 30 splines of order 6, got {n_splines} of order {order}")

        if not (0.0 < r_min < r_max):
            raise ValueError(f"Require 0 < r_min < r_max, got r_min = {r_min}, r_max = {r_max}")

        self.n_splines = n_splines
        self.order = order
        self.r_min = float(r_min)
        self.r_max = float(r_max)
        self.nodes_per_interval = nodes_per_interval or 2 * order

        interior = np.geomspace(r_min, r_max, n_splines - order + 1)[:-1]
        knots = np.concatenate([np.zeros(order), interior, np.full(order, r_max)])
        breaks = np.concatenate([[0.0], interior, [r_max]])

        rule = panel_rule(breaks, self.nodes_per_interval)

        self.register_buffer("knots", torch.from_numpy(knots).to(DTYPE))
        self.register_buffer("breaks", torch.from_numpy(breaks).to(DTYPE))
        self.register_buffer("nodes", rule.nodes)
        self.register_buffer("weights", rule.weights)

    @classmethod
    def for_charge(cls, z: float, n_splines: int = 60, order: int = 8, r_min: float = 1e-6, r_max: float = 40.0,
                   nodes_per_interval: int = None):
        """
        Grid with `r_min` and `r_max` given in units of the hydrogenic 1s radius 1 / (alpha Z).
        """

        scale = 1.0 / (ALPHA * z)

        return cls(n_splines, order, r_min * scale, r_max * scale, nodes_per_interval)

    def parameters_dict(self):
        return {
            "n_splines": self.n_splines,
            "order": self.order,
            "r_min": self.r_min,
            "r_max": self.r_max,
            "nodes_per_interval": self.nodes_per_interval
        }

    def splines(self, r: np.ndarray, nu: int = 0) -> np.ndarray:
        """
        Evaluates the `nu`-th derivative of every B-spline at `r`, returns an array of shape (n_splines, len(r)).
        """

        spline = BSpline(self.knots.numpy(), np.eye(self.n_splines), self.order - 1, extrapolate=False)
        if nu > 0:
            spline = spline.derivative(nu)

        values = spline(r).T

        return np.nan_to_num(values, nan=0.0)


class DKBBasis(Module):
    def __init__(self, grid: RadialGrid, kappa: int):
        """
        Dual kinetic balance basis for the radial Dirac equation, built from the B-splines of `grid`. Every spline
        appears twice: once as (B, (B' + kappa B / r) / 2) and once as ((B' - kappa B / r) / 2, B), for the large
        and small components (P, Q) of r times the radial functions.
        :param grid: The radial grid
        :param kappa: The relativistic angular quantum number
        """

        super().__init__()

        if kappa == 0:
            raise ValueError("kappa must be a non-zero integer")

        self.grid = grid
        self.kappa = int(kappa)

        n = grid.n_splines
        first = 1 if kappa == -1 else 2
        second = 1 if kappa == 1 else 2

        # The first spline is non-zero at the origin and the last two violate the boundary condition at r_max
        self._large = list(range(first, n - 2))
        self._small = list(range(second, n - 2))

        u, l, du = self._components(grid.nodes.numpy())

        self.register_buffer("upper", u)
        self.register_buffer("lower", l)
        self.register_buffer("d_upper", du)

    def __len__(self):
        return len(self._large) + len(self._small)

    def _components(self, r: np.ndarray) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        k = self.kappa
        r = np.maximum(np.asarray(r, dtype=float), 1e-300)

        b0, b1, b2 = (self.grid.splines(r, nu) for nu in range(3))

        # ===== Large component splines ===== #
        large = self._large
        u1 = b0[large]
        du1 = b1[large]
        l1 = 0.5 * (b1[large] + k * b0[large] / r)

        # ===== Small component splines ===== #
        small = self._small
        u2 = 0.5 * (b1[small] - k * b0[small] / r)
        du2 = 0.5 * (b2[small] - k * b1[small] / r + k * b0[small] / r ** 2)
        l2 = b0[small]

        def stack(a, b):
            return torch.from_numpy(np.concatenate([a, b], axis=0)).to(DTYPE)

        return stack(u1, u2), stack(l1, l2), stack(du1, du2)

    def evaluate(self, r: ArrayLike) -> Tuple[torch.Tensor, torch.Tensor]:
        """
        Evaluates the basis functions at arbitrary radii, returns the large and small components with shape
        (len(self), len(r)). Both vanish outside [0, r_max].
        """

        r = as_tensor(r)
        u, l, _ = self._components(r.numpy())

        outside = (r > self.grid.r_max) | (r < 0.0)

        return u.masked_fill(outside, 0.0), l.masked_fill(outside, 0.0)

    def combine(self, coefficients: torch.Tensor, r: ArrayLike) -> Tuple[torch.Tensor, torch.Tensor]:
        """
        Evaluates sum_i c_i (U_i, L_i) at arbitrary radii through two scalar splines, which avoids forming the full
        basis on large point sets.
        """

        r = as_tensor(r)
        x = np.maximum(r.numpy(), 1e-300)
        c = coefficients.detach().numpy()

        n_large = len(self._large)
        first = np.zeros(self.grid.n_splines)
        second = np.zeros(self.grid.n_splines)
        first[self._large] = c[:n_large]
        second[self._small] = c[n_large:]

        k = self.kappa
        knots = self.grid.knots.numpy()
        order = self.grid.order - 1

        s1 = BSpline(knots, first, order, extrapolate=False)
        s2 = BSpline(knots, second, order, extrapolate=False)

        v1, d1 = np.nan_to_num(s1(x)), np.nan_to_num(s1.derivative()(x))
        v2, d2 = np.nan_to_num(s2(x)), np.nan_to_num(s2.derivative()(x))

        large = v1 + 0.5 * (d2 - k * v2 / x)
        small = 0.5 * (d1 + k * v1 / x) + v2

        outside = (r.numpy() > self.grid.r_max) | (r.numpy() < 0.0)
        large[outside] = 0.0
        small[outside] = 0.0

        return torch.from_numpy(large).to(DTYPE), torch.from_numpy(small).to(DTYPE)

    def matrices(self, potential: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        """
        Hamiltonian and overlap matrices for the potential energy values `potential` on the grid nodes. The kinetic
        terms are integrated by parts, which renders the Hamiltonian symmetric.
        """

        u, l, du = self.upper, self.lower, self.d_upper
        r, w = self.grid.nodes, self.grid.weights

        h = (u * w * (potential + 1.0)) @ u.T + (l * w * (potential - 1.0)) @ l.T
        kinetic = (du * w) @ l.T + self.kappa * (u * w / r) @ l.T
        h = h + kinetic + kinetic.T

        s = (u * w) @ u.T + (l * w) @ l.T

        return 0.5 * (h + h.T), 0.5 * (s + s.T)

    def project(self, large: torch.Tensor, small: torch.Tensor) -> torch.Tensor:
        """
        Overlaps int (U_i P + L_i Q) dr of every basis function with a two-component function given on the nodes.
        """

        w = self.grid.weights

        return self.upper @ (w * large) + self.lower @ (w * small)
