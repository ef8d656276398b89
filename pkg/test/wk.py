import unittest
import os
import math
import tempfile
import numpy as np
import torch
from vpscreen.wk import WKConfig, KappaSeries, LoopGrid, CoulombLoop, wk_potential_a, wk_loop_potential, \
    build_wk_table, wk_potential_approx, magnetic_coupling, magnetic_couplings, magnetic_sum_rule, wk_screening, \
    spinor_harmonic
from vpscreen.nucleus import PointNucleus, UniformSphere
from vpscreen.dirac import build_spectrum, bound_1s
from vpscreen.utils import ConvergenceError
from vpscreen.constants import to_ev


ACCEPTANCE = os.environ.get("VPSCREEN_ACCEPTANCE")

_SMALL = dict(kappa_max=2, omega_nodes=4, panels=8, nodes_per_panel=3, strict=False)


class Tests(unittest.TestCase):
    def test_Config(self):
        with self.assertRaises(ValueError):
            WKConfig(kappa_max=0)

        with self.assertRaises(ValueError):
            WKConfig(r_min=1.0, r_max=0.5)

        self.assertEqual(WKConfig().kappa_max, 5)

    def test_KappaSeries(self):
        series = KappaSeries([1.0, 0.1, 0.01])

        self.assertTrue(abs(float(series.partial) - 1.11) < 1e-12)
        self.assertTrue(abs(float(series.tail) - 0.01 * 0.1 / 0.9) < 1e-12)
        self.assertTrue(abs(float(series.sum) - float(series.partial + series.tail)) < 1e-15)

        self.assertTrue(series.converged(1e-2))
        self.assertFalse(series.converged(1e-4))

        diverging = KappaSeries([1.0, 2.0])
        self.assertFalse(diverging.converged(1.0))

        plain = KappaSeries([1.0, 0.5], extrapolate=False)
        self.assertEqual(float(plain.tail), 0.0)

    def test_KappaSeriesArrays(self):
        terms = [torch.ones(3, dtype=torch.float64) * 10.0 ** -k for k in range(4)]
        series = KappaSeries(terms)

        self.assertEqual(series.sum.shape, torch.Size([3]))
        self.assertTrue(abs(series.last_ratio - 1e-3 / 1.111) < 1e-12)

        doubled = series.map(lambda t: 2.0 * t)
        self.assertTrue(torch.allclose(doubled.sum, 2.0 * series.sum))

    def test_KappaSeriesDump(self):
        terms = [torch.tensor([1.0, 2.0], dtype=torch.float64), torch.tensor([0.1, 0.2], dtype=torch.float64)]
        series = KappaSeries(terms)

        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, "series.txt")
            series.dump(path, abscissa=torch.tensor([0.5, 1.0], dtype=torch.float64), name="density")

            data = np.loadtxt(path)
            self.assertEqual(data.shape, (2, 5))

            with open(path) as f:
                self.assertTrue(f.readline().startswith("# density: radius kappa_1 kappa_2 tail sum"))

            scalar = os.path.join(d, "scalar.txt")
            KappaSeries([1.0, 0.5, 0.25]).dump(scalar)

            rows = np.loadtxt(scalar)
            self.assertTrue(np.allclose(rows[:, 2], [1.0, 1.5, 1.75]))

    def test_LoopGridIntegrals(self):
        grid = LoopGrid(1e-4, 20.0, 60, 6)

        f = torch.exp(-grid.outer)
        expected = 2.0 - math.exp(-20.0) * (400.0 + 40.0 + 2.0)

        self.assertTrue(abs(grid.integrate_outer(f) / expected - 1.0) < 1e-4)

        # ===== Monopole potential of exp(-r) ===== #
        x = torch.tensor([0.01, 0.5, 3.0], dtype=torch.float64)
        u = grid.monopole(f, x)

        for xi, ui in zip(x.tolist(), u.tolist()):
            below = (2.0 - math.exp(-xi) * (xi ** 2 + 2.0 * xi + 2.0)) / xi
            above = math.exp(-xi) * (xi + 1.0) - math.exp(-20.0) * 21.0

            self.assertTrue(abs(ui / (below + above) - 1.0) < 1e-4)

        with self.assertRaises(ValueError):
            grid.monopole(f, [30.0])

    def test_SpinorNormalization(self):
        z, w = np.polynomial.legendre.leggauss(24)
        phi = 2.0 * math.pi * np.arange(48) / 48
        ct, ph = np.meshgrid(z, phi, indexing="ij")
        weights = np.repeat(w[:, None], 48, axis=1) * 2.0 * math.pi / 48

        for kappa in (-1, 1, -2, 2, 3):
            j = abs(kappa) - 0.5

            for m in np.arange(-j, j + 0.5):
                o = spinor_harmonic(kappa, m, ct, ph)
                norm = (weights * (np.abs(o) ** 2).sum(0)).sum()

                self.assertTrue(abs(norm - 1.0) < 1e-12)

        with self.assertRaises(ValueError):
            spinor_harmonic(-1, 1.5, ct, ph)

    def test_MagneticSumRule(self):
        t1, t2 = magnetic_couplings(1)

        self.assertTrue(t1 > 0.0 and t2 > 0.0)
        self.assertTrue(abs(t1 + t2 - 4.0 / 3.0) < 1e-12)
        self.assertTrue(abs(magnetic_sum_rule(-1) - 4.0 / 3.0) < 1e-12)

        for kappa in (-2, -3, 2):
            k = abs(kappa)
            s = -1 if kappa > 0 else 1

            total = magnetic_coupling(kappa, kappa) + magnetic_coupling(kappa, s * (k + 1)) + \
                magnetic_coupling(kappa, s * (k - 1))

            self.assertTrue(abs(total - magnetic_sum_rule(kappa)) < 1e-10, f"kappa={kappa}")

    def test_MagneticSelection(self):
        # Same parity as -kappa
        self.assertTrue(magnetic_coupling(-1, 1) < 1e-14)
        self.assertTrue(magnetic_coupling(-1, -2) < 1e-14)

        # Beyond rank one
        self.assertTrue(magnetic_coupling(-1, -3) < 1e-14)

    def test_ApproximatePotential(self):
        table = build_wk_table(60, WKConfig(**_SMALL))[0]
        self.assertIs(wk_potential_approx(PointNucleus(60), table), table)

        sphere = UniformSphere.from_rms(60, 4.914)
        approx = wk_potential_approx(sphere, table)

        r = table.radii
        inside = r < 0.5 * sphere.radius
        outside = r > 2.0 * sphere.radius

        self.assertTrue(((approx.values / table.values)[inside] < 1.0).all())
        self.assertTrue(torch.allclose(approx.values[outside], table.values[outside], rtol=1e-12))

    def test_LoopSmoke(self):
        config = WKConfig(**_SMALL)
        potential = wk_loop_potential(92, config)

        value = potential(0.01)
        self.assertTrue(torch.isfinite(value).all())

        series = potential.series_at([0.01, 0.1])
        self.assertEqual(len(series), 2)
        direct = potential.grid.monopole(potential.density.partial, [0.01, 0.1])
        self.assertTrue(torch.allclose(series.partial, direct, rtol=1e-12))

        with self.assertRaises(ValueError):
            wk_potential_a(-1.0, 92, config)

        with self.assertRaises(ValueError):
            wk_loop_potential(80, config, loop=CoulombLoop(92, config))

    def test_StrictRaises(self):
        config = WKConfig(kappa_max=2, omega_nodes=4, panels=8, nodes_per_panel=3, tol=1e-12, strict=True)

        with self.assertRaises(ConvergenceError) as e:
            wk_loop_potential(92, config)

        self.assertIsNotNone(e.exception.estimate)

    def test_ScreeningSmoke(self):
        z = 82
        state = bound_1s(build_spectrum(-1, PointNucleus(z)))
        screening = wk_screening(z, state, WKConfig(**_SMALL))

        for v in screening:
            self.assertTrue(math.isfinite(v))

        self.assertTrue(abs(screening.energy - screening.timelike - screening.magnetic) < 1e-15)

        with self.assertRaises(ValueError):
            wk_screening(z, build_spectrum(1, PointNucleus(z)).orbital(0))

    @unittest.skipUnless(ACCEPTANCE, "Full partial wave loop")
    def test_PotentialSignAndTail(self):
        potential = wk_loop_potential(92)
        series = potential.series_at(0.01)

        self.assertTrue(float(series.sum) > 0.0)
        self.assertTrue(series.last_ratio <= 1e-4)

        terms = [float(t.abs()) for t in series.terms]
        self.assertTrue(all(terms[k + 1] < terms[k] for k in range(1, len(terms) - 1)))

    @unittest.skipUnless(ACCEPTANCE, "Full partial wave loop")
    def test_PotentialScaling(self):
        u20 = float(wk_potential_a(0.01, 20))
        u40 = float(wk_potential_a(0.01, 40))

        self.assertTrue(abs(u40 / u20 / 8.0 - 1.0) < 0.25)

    @unittest.skipUnless(ACCEPTANCE, "Full partial wave loop")
    def test_ScreeningEnergies(self):
        for z, expected, tol in ((92, 0.003, 0.001), (54, 0.0, 0.0005)):
            state = bound_1s(build_spectrum(-1, PointNucleus(z)))
            energy = wk_screening(z, state).energy

            self.assertTrue(abs(energy - expected) <= tol, f"Z={z}: {energy}")

    @unittest.skipUnless(ACCEPTANCE, "Full partial wave loop")
    def test_ControlAgainstChargeDerivative(self):
        for z, expected, tol in ((40, 0.00221, 0.03), (90, 0.1711, 0.02)):
            state = bound_1s(build_spectrum(-1, PointNucleus(z)))
            control = wk_screening(z, state).control

            self.assertTrue(abs(control / expected - 1.0) < tol, f"Z={z}: {control}")

            # ===== Same quantity as the charge derivative of the loop potential at fixed orbital ===== #
            upper = build_wk_table(z + 0.5)[0]
            lower = build_wk_table(z - 0.5)[0]

            r = state.basis.grid.nodes
            derivative = to_ev(state.expectation(upper(r) - lower(r)))

            self.assertTrue(abs(control / derivative - 1.0) < 0.03, f"Z={z}: {control} vs {derivative}")
