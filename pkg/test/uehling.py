import unittest
import os
import math
import tempfile
import numpy as np
import torch
from vpscreen.uehling import twobody_kernel, uehling_point, uehling_extended, uehling_approx, PotentialTable, \
    TwoBodyKernel, build_uehling_table, table_radii, PREFACTOR
from vpscreen.nucleus import PointNucleus, fermi_from_rms
from vpscreen.dirac import build_spectrum, bound_1s
from vpscreen.quadrature import integrate_log_endpoint, integrate_semi_infinite
from vpscreen.constants import ALPHA, to_ev


class Tests(unittest.TestCase):
    def test_PointExpectation(self):
        for z, per_charge in ((40, -0.05215), (90, -0.9586)):
            state = bound_1s(build_spectrum(-1, PointNucleus(z)))
            energy = to_ev(state.expectation(uehling_point(state.basis.grid.nodes, z)))

            self.assertTrue(abs(energy / (z * per_charge) - 1.0) < 2e-3, f"Z={z}: {energy}")

    def test_PointTail(self):
        u5, u10 = uehling_point([5.0, 10.0], 50)
        slope = math.log(float(u10 / u5)) / 5.0

        self.assertTrue(-2.5 < slope < -1.9)
        self.assertTrue(float(u5) < 0.0 and float(u10) < 0.0)

    def test_PointInvalid(self):
        with self.assertRaises(ValueError):
            uehling_point(0.0, 50)

        with self.assertRaises(ValueError):
            twobody_kernel([1.0, -1.0])

    def test_Linearity(self):
        r = table_radii(1e-4, 10.0, 30)

        ratio = uehling_point(r, 80) / uehling_point(r, 40)
        self.assertTrue(((ratio - 2.0).abs() < 1e-10).all())

    def test_KernelMonotone(self):
        s = torch.from_numpy(np.geomspace(1e-4, 20.0, 50))
        chi = twobody_kernel(s)

        self.assertTrue((chi > 0.0).all())
        self.assertTrue((chi[1:] < chi[:-1]).all())

    def test_KernelRatio(self):
        for s in (3.0, 5.0, 8.0):
            ratio = float(twobody_kernel(s) / twobody_kernel(2.0 * s))

            # chi ~ exp(-2s) / s^(3 / 2) at large separation
            self.assertTrue(abs(math.log(ratio) - 2.0 * s - 1.5 * math.log(2.0)) < 0.5)

    def test_KernelSmallSeparation(self):
        s = 1e-6
        expected = PREFACTOR * (-math.log(s) - 0.5772156649015329 - 5.0 / 6.0)

        self.assertTrue(abs(float(twobody_kernel(s)) / expected - 1.0) < 1e-6)

    def test_KernelIntegral(self):
        kernel = TwoBodyKernel()

        def f(s):
            return kernel(s) * torch.exp(-s)

        near = integrate_log_endpoint(f, 0.0, 1.0, tol=1e-9)
        far = integrate_semi_infinite(lambda u: f(1.0 + u), tol=1e-9)

        total = near.value + far.value
        self.assertTrue(math.isfinite(total) and total > 0.0)
        self.assertTrue(near.error_estimate + far.error_estimate <= 1e-8 * total)

    def test_TabulatedKernel(self):
        kernel = TwoBodyKernel()
        s = torch.from_numpy(np.geomspace(2e-6, 50.0, 97))

        self.assertTrue(((kernel(s) / twobody_kernel(s) - 1.0).abs() < 1e-6).all())

        tiny = torch.tensor([1e-12], dtype=torch.float64)
        expected = PREFACTOR * (-math.log(1e-12) - 0.5772156649015329 - 5.0 / 6.0)
        self.assertTrue(abs(float(kernel(tiny)) / expected - 1.0) < 1e-12)

        self.assertEqual(float(kernel(100.0)), 0.0)

    def test_ApproximateIsExactForPoint(self):
        r = table_radii(1e-4, 10.0, 25)
        model = PointNucleus(70)

        self.assertTrue(torch.equal(uehling_approx(model, r), uehling_point(r, 70)))
        self.assertTrue(torch.equal(uehling_extended(model, r), uehling_point(r, 70)))

    def test_ChargeMomentIdentity(self):
        model = fermi_from_rms(92, 5.860)

        for r in np.geomspace(1e-3, 1.0, 10):
            x, w = model.charge_rule(n=40, split=float(r))
            moment = float((w * torch.clamp(x, max=float(r)) / x).sum())

            expected = -r * float(model.potential(float(r))) / (ALPHA * model.z)

            self.assertTrue(abs(moment / expected - 1.0) < 1e-8)

    def test_FarField(self):
        model = fermi_from_rms(92, 5.860)
        r = 20.0 * model.c

        extended = float(uehling_extended(model, r))
        point = float(uehling_point(r, 92))

        # Corrections start at <r^2> times the Laplacian of the point potential
        self.assertTrue(abs(extended / point - 1.0) < 1e-3)

    def test_Origin(self):
        model = fermi_from_rms(92, 5.860)

        origin = float(uehling_extended(model, 0.0))
        self.assertTrue(math.isfinite(origin) and origin < 0.0)
        self.assertTrue(abs(origin) < abs(float(uehling_point(0.1 * model.c, 92))))

    def test_ApproximatePointwise(self):
        model = fermi_from_rms(92, 5.860)
        r = torch.from_numpy(np.geomspace(2.0 * model.c, 5.0, 20))

        exact = uehling_extended(model, r)
        approx = uehling_approx(model, r)

        self.assertTrue(((approx / exact - 1.0).abs() < 0.05).all())
        self.assertTrue((exact < 0.0).all())

    def test_ApproximateExpectation(self):
        model = fermi_from_rms(80, 5.467)
        state = bound_1s(build_spectrum(-1, model))
        r = state.basis.grid.nodes

        exact = state.expectation(build_uehling_table(model, exact=True)(r))
        approx = state.expectation(build_uehling_table(model, exact=False)(r))

        self.assertTrue(abs(approx / exact - 1.0) < 3e-3)

    def test_TableInterpolation(self):
        table = PotentialTable(table_radii(), uehling_point(table_radii(), 60))

        # Midpoints in log r
        r = table.radii
        mid = torch.sqrt(r[1:] * r[:-1])
        mid = mid[mid < 5.0]

        error = (table(mid) / uehling_point(mid, 60) - 1.0).abs()
        self.assertTrue((error < 1e-6).all())

        self.assertTrue((table.values <= 0.0).all())

    def test_TableOutside(self):
        model = fermi_from_rms(60, 4.914)
        table = build_uehling_table(model, exact=True, n=100)

        r = torch.tensor([1e-7, 30.0], dtype=torch.float64)
        self.assertTrue(torch.allclose(table(r), uehling_extended(model, r), rtol=1e-12))

        plain = PotentialTable(table.radii, table.values)
        self.assertEqual(float(plain(1e-7)), float(table.values[0]))
        self.assertTrue(abs(float(plain(40.0))) < abs(float(table.values[-1])))

    def test_TableValidation(self):
        with self.assertRaises(ValueError):
            PotentialTable(torch.tensor([1.0, 0.5], dtype=torch.float64),
                           torch.tensor([-1.0, -2.0], dtype=torch.float64))

    def test_TableDump(self):
        table = PotentialTable(table_radii(n=50), uehling_point(table_radii(n=50), 30), name="uehling")

        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, "table.txt")
            table.dump(path)

            loaded = PotentialTable.load(path)

            self.assertTrue(torch.equal(loaded.radii, table.radii))
            self.assertTrue(torch.equal(loaded.values, table.values))

            with open(path) as f:
                self.assertTrue(f.readline().startswith("# uehling: radius_compton value_me"))
