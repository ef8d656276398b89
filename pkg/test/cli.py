import unittest
import os
import io
import csv
import json
import tempfile
import contextlib
from unittest import mock
from vpscreen.cli import COLUMNS, Runner, build_parser, emit, main, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_OK
from vpscreen.config import RunConfig
from vpscreen.uehling import PotentialTable
from vpscreen.utils import ConvergenceError


ACCEPTANCE = os.environ.get("VPSCREEN_ACCEPTANCE")

_ROW = {
    "Z": 92.0,
    "rms_fm": 5.86,
    "uehl_a_eV": 2.4931234567890123,
    "uehl_b_eV": 0.25612345678901234,
    "wk_a_eV": -0.12212345678901234,
    "wk_b_eV": 0.0031234567890123456,
    "total_eV": 2.6302469135802469,
    "unc_eV": 0.0021,
}


def _run(argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main(argv)

    return code, out.getvalue(), err.getvalue()


class Tests(unittest.TestCase):
    def test_EmitEmpty(self):
        text = emit([], "csv", COLUMNS["table2"])

        self.assertEqual(text, "Z,rms_fm,uehl_a_eV,uehl_b_eV,wk_a_eV,wk_b_eV,total_eV,unc_eV\n")
        self.assertEqual(json.loads(emit([], "json", COLUMNS["table2"])), [])

    def test_EmitCsv(self):
        text = emit([_ROW], "csv", COLUMNS["table2"])
        rows = list(csv.DictReader(io.StringIO(text)))

        self.assertEqual(len(rows), 1)
        self.assertEqual(rows[0]["Z"], "92")

        for key, value in _ROW.items():
            if key != "Z":
                self.assertEqual(float(rows[0][key]), value)

    def test_EmitJson(self):
        rows = json.loads(emit([_ROW], "json", COLUMNS["table2"]))

        self.assertEqual(list(rows[0]), COLUMNS["table2"])
        self.assertIsInstance(rows[0]["Z"], int)

        for key in COLUMNS["table2"]:
            self.assertIsInstance(rows[0][key], (int, float))
            self.assertEqual(float(rows[0][key]), _ROW[key])

    def test_EmitTable(self):
        lines = emit([_ROW, dict(_ROW, Z=100.0)], "table", COLUMNS["table2"]).splitlines()

        self.assertEqual(len(lines), 3)
        self.assertEqual(len({len(line) for line in lines}), 1)
        self.assertEqual(lines[0].split(), COLUMNS["table2"])

        with self.assertRaises(ValueError):
            emit([_ROW], "xml", COLUMNS["table2"])

    def test_Deterministic(self):
        rows = [_ROW, dict(_ROW, Z=100.0)]

        for fmt in ("csv", "json", "table"):
            self.assertEqual(emit(rows, fmt, COLUMNS["table2"]), emit(list(rows), fmt, COLUMNS["table2"]))

    def test_ConfigFile(self):
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, "run.cfg")
            with open(path, "w") as f:
                f.write("# reference settings\n")
                f.write("z_list = 40, 92\n")
                f.write("kappa-max = 4   # fewer partial waves\n")
                f.write("format = csv\n")
                f.write("verbose = yes\n")

            config = RunConfig.load(path, format="json", kappa_max=None)

            self.assertEqual(config.z_list, [40, 92])
            self.assertEqual(config.kappa_max, 4)
            self.assertEqual(config.format, "json")
            self.assertTrue(config.verbose)
            self.assertEqual(config.wk_config().kappa_max, 4)

            with open(path, "a") as f:
                f.write("splines 80\n")

            with self.assertRaises(ValueError):
                RunConfig.load(path)

    def test_ConfigValidation(self):
        for overrides in (dict(z_list=[0]), dict(z_list=[140]), dict(mode="table3"), dict(kappa_max=0),
                          dict(z_list=[40, 92], rms_fm=5.0), dict(rms_fm=-1.0), dict(threads=0)):
            with self.assertRaises(ValueError, msg=str(overrides)):
                RunConfig.load(**overrides)

        with self.assertRaises(ValueError):
            RunConfig.load(colour="red")

        config = RunConfig.load(mode="table1", z_list=[40])
        self.assertTrue(config.model(40).is_point)
        self.assertEqual(config.model(40).z, 40.0)

    def test_ExitCodes(self):
        code, out, err = _run(["--z", "0"])
        self.assertEqual(code, EXIT_CONFIG)
        self.assertEqual(out, "")
        self.assertIn("error", err)

        code, _, _ = _run(["--z", "33", "--nucleus", "fermi"])
        self.assertEqual(code, EXIT_CONFIG)

        with self.assertRaises(SystemExit) as e:
            with contextlib.redirect_stderr(io.StringIO()):
                main(["--mode", "table9"])

        self.assertEqual(e.exception.code, 2)

        def fail(runner, z):
            raise ConvergenceError(f"Z = {z}: the WK density did not converge", 1.0, 0.5)

        with mock.patch.object(Runner, "evaluate", fail):
            code, out, err = _run(["--z", "92", "--format", "csv"])

        self.assertEqual(code, EXIT_CONVERGENCE)
        self.assertIn("Z = 92", err)
        self.assertEqual(out, "")

    def test_NumericalFailureExitCode(self):
        def broken(runner, z):
            raise ValueError("State n = 1, kappa = -1 is not bound in the basis")

        with mock.patch.object(Runner, "evaluate", broken):
            code, out, err = _run(["--z", "92", "--format", "csv"])

        self.assertEqual(code, EXIT_CONVERGENCE)
        self.assertIn("numerical failure", err)
        self.assertEqual(out, "")

        # Missing default radii are reported before any computation
        with mock.patch.object(Runner, "run", side_effect=AssertionError("run reached")):
            code, _, err = _run(["--z", "33", "--nucleus", "fermi"])

        self.assertEqual(code, EXIT_CONFIG)
        self.assertIn("Z = 33", err)

        config = RunConfig.load(mode="table1", z_list=[33])
        self.assertEqual(config.model(33).z, 33)

    def test_Tolerance(self):
        config = RunConfig.load(tol=1e-5)
        self.assertEqual(config.wk_config().tol, 1e-5)

        help_text = build_parser().format_help()
        self.assertIn("partial wave tail only", " ".join(help_text.split()))

    def test_RowOrder(self):
        def fake(runner, z):
            return dict(_ROW, Z=float(z))

        with mock.patch.object(Runner, "evaluate", fake):
            code, out, _ = _run(["--z", "92", "20", "54", "--threads", "3", "--format", "csv"])

        self.assertEqual(code, EXIT_OK)
        self.assertEqual([r["Z"] for r in csv.DictReader(io.StringIO(out))], ["92", "20", "54"])

    @unittest.skipUnless(ACCEPTANCE, "End to end runs")
    def test_Potentials(self):
        with tempfile.TemporaryDirectory() as d:
            argv = ["--z", "92", "--mode", "potentials", "--output-dir", d, "--format", "json"]
            code, out, _ = _run(argv)

            self.assertEqual(code, EXIT_OK)

            row = json.loads(out)[0]
            for key in ("uehling", "wk", "wk_density"):
                self.assertTrue(os.path.exists(row[key]))

            table = PotentialTable.load(row["uehling"])
            self.assertTrue((table.values < 0.0).all())

    @unittest.skipUnless(ACCEPTANCE, "End to end runs")
    def test_Table2Deterministic(self):
        with tempfile.TemporaryDirectory() as d:
            argv = ["--z", "92", "--mode", "table2", "--format", "csv", "--cache-dir", d]

            cold = _run(argv)
            warm = _run(argv)

        self.assertEqual(cold[0], EXIT_OK)
        self.assertEqual(cold[1], warm[1])

        row = next(csv.DictReader(io.StringIO(cold[1])))
        self.assertTrue(abs(float(row["total_eV"]) / 2.630 - 1.0) < 0.015)
