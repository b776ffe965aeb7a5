#
# This file is part of qcdlab.
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <https://www.gnu.org/licenses/>.
#
import contextlib
import io
import json
import math
import os
import tempfile
import unittest

from qcdlab.cli import RunConfig, buildParser, run

DATA = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")
ONE_PLUS_ABS = os.path.join(DATA, "one_plus_abs.json")
UNIFORM = os.path.join(DATA, "uniform01.json")


def invoke(*argv):
    """Run the command line and return the status, standard output and
    standard error.
    """
    out = io.StringIO()
    err = io.StringIO()
    with contextlib.redirect_stderr(err):
        status = run(list(argv), stdout=out)
    return status, out.getvalue(), err.getvalue()


class CoeffTestCase(unittest.TestCase):
    def testPlainValue(self):
        status, out, _ = invoke("coeff", "--kind", "sigma", "--K", "0", "--N", "3", "--t", "0.5",
                                "--theta", "1")
        self.assertEqual(status, 0)
        self.assertAlmostEqual(float(out), 0.5, places=12)
        self.assertTrue(out.endswith("\n"))

    def testJson(self):
        status, out, _ = invoke("coeff", "--kind", "dmax", "--K", "1", "--N", "2", "--format", "json")
        self.assertEqual(status, 0)
        report = json.loads(out)
        self.assertEqual(report["command"], "coeff")
        self.assertAlmostEqual(report["result"]["value"], math.pi)
        self.assertIn("version", report["provenance"])

    def testGlobalOptionBeforeCommand(self):
        status, out, _ = invoke("--format", "json", "coeff", "--kind", "qcd-from-mcp", "--N", "5", "--n", "3")
        self.assertEqual(status, 0)
        self.assertEqual(json.loads(out)["result"]["value"], 4.0)

    def testInfinity(self):
        status, out, _ = invoke("coeff", "--kind", "sigma", "--K", "1", "--N", "2", "--theta", "4",
                                "--format", "json")
        self.assertEqual(status, 0)
        self.assertEqual(json.loads(out)["result"]["value"], "inf")

    def testBoundaryTime(self):
        status, _, err = invoke("coeff", "--kind", "sigma", "--N", "3", "--t", "0")
        self.assertEqual(status, 2)
        self.assertIn("qcdlab coeff: error:", err)


class DensityCommandsTestCase(unittest.TestCase):
    def testEnvelope(self):
        status, out, _ = invoke("envelope", "--density", ONE_PLUS_ABS, "--N", "2")
        self.assertEqual(status, 0)
        result = json.loads(out)["result"]
        self.assertAlmostEqual(result["q_order"], 2.0, places=6)

    def testEnvelopeCsv(self):
        status, out, _ = invoke("envelope", "--density", ONE_PLUS_ABS, "--N", "2", "--format", "csv")
        self.assertEqual(status, 0)
        lines = out.splitlines()
        self.assertEqual(lines[0], "envelope,h,x")
        self.assertEqual(len(lines), 202)

    def testClassify(self):
        status, out, _ = invoke("classify", "--density", ONE_PLUS_ABS, "--kind", "qcd", "--N", "2",
                                "--Q", "2")
        self.assertEqual(status, 0)
        self.assertTrue(json.loads(out)["result"]["passed"])
        status, out, _ = invoke("classify", "--density", ONE_PLUS_ABS, "--kind", "cd", "--N", "2")
        self.assertEqual(status, 0)
        self.assertFalse(json.loads(out)["result"]["passed"])

    def testRandomIsReproducible(self):
        argv = ("classify", "--random", "--kind", "qcd", "--N", "3", "--Q", "2", "--grid", "65",
                "--seed", "7")
        first = invoke(*argv)
        second = invoke(*argv)
        self.assertEqual(first[0], 0)
        self.assertEqual(first[1], second[1])
        self.assertEqual(json.loads(first[1])["provenance"]["seed"], 7)

    def testMissingDensity(self):
        status, _, err = invoke("classify", "--N", "2")
        self.assertEqual(status, 2)
        self.assertIn("--density or --random", err)

    def testMalformedModel(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, "model.json")
            with open(path, "w") as f:
                json.dump({"model": {"K": 0, "N": 2, "support": [0, 1], "u0": "abc", "slope0": 0}}, f)
            status, _, err = invoke("classify", "--density", path, "--kind", "cd", "--N", "2")
        self.assertEqual(status, 2)
        self.assertIn("density.model.u0", err)

    def testInterp(self):
        status, out, _ = invoke("interp", "--reference", ONE_PLUS_ABS, "--mu0=-1:-0.5", "--mu1=0.5:1",
                                "--check", "qcd", "--Q", "2", "--N", "2")
        self.assertEqual(status, 0)
        self.assertTrue(json.loads(out)["result"]["verification"]["passed"])
        status, out, _ = invoke("interp", "--reference", ONE_PLUS_ABS, "--mu0=-1:-0.5", "--mu1=0.5:1",
                                "--N", "2", "--t", "0.5")
        self.assertEqual(status, 0)
        result = json.loads(out)["result"]
        self.assertIn("passed", result["verification"])
        self.assertIn("rho_t", result["path"])

    def testInterpBlocksFile(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, "mu0.json")
            with open(path, "w") as f:
                json.dump({"blocks": [[-1.0, -0.5, 1.0]]}, f)
            status, out, _ = invoke("interp", "--reference", ONE_PLUS_ABS, "--mu0", path, "--mu1", "0.5:1",
                                    "--check", "qcd", "--Q", "2", "--N", "2")
            self.assertEqual(status, 0)
            weighted = json.loads(out)["result"]["verification"]
            with open(path, "w") as f:
                json.dump({"blocks": [[-1.0, -0.5]]}, f)
            status, out, _ = invoke("interp", "--reference", ONE_PLUS_ABS, "--mu0", path, "--mu1", "0.5:1",
                                    "--check", "qcd", "--Q", "2", "--N", "2")
            self.assertEqual(status, 0)
            self.assertEqual(json.loads(out)["result"]["verification"], weighted)
            with open(path, "w") as f:
                json.dump({"pieces": []}, f)
            status, _, _ = invoke("interp", "--reference", ONE_PLUS_ABS, "--mu0", path, "--mu1", "0.5:1",
                                  "--N", "2")
            self.assertEqual(status, 2)
            with open(path, "w") as f:
                json.dump({"blocks": [[-1.0, -0.5], [-0.5]]}, f)
            status, _, err = invoke("interp", "--reference", ONE_PLUS_ABS, "--mu0", path, "--mu1", "0.5:1",
                                    "--N", "2")
            self.assertEqual(status, 2)
            self.assertIn("mu0.blocks[1]", err)

    def testInterpCheckChoices(self):
        status, _, err = invoke("interp", "--reference", ONE_PLUS_ABS, "--mu0=-1:-0.5", "--mu1=0.5:1",
                                "--check", "cgtd", "--N", "2")
        self.assertEqual(status, 2)
        self.assertIn("--check", err)


class SpectralCommandsTestCase(unittest.TestCase):
    def testLambda(self):
        status, out, _ = invoke("lambda", "--density", UNIFORM, "--p", "2")
        self.assertEqual(status, 0)
        result = json.loads(out)["result"]
        self.assertLess(abs(result["lambda"] - math.pi**2), 0.005*math.pi**2)
        self.assertAlmostEqual(result["closed_form"], math.pi**2)

    def testTheoremGap(self):
        status, out, _ = invoke("lambda", "--density", ONE_PLUS_ABS, "--Q", "2", "--N", "2")
        self.assertEqual(status, 0)
        self.assertTrue(json.loads(out)["result"]["theorem_gap"]["passed"])

    def testBadExponent(self):
        status, _, _ = invoke("lambda", "--density", UNIFORM, "--p", "1")
        self.assertEqual(status, 2)

    def testConstantsTable(self):
        status, out, _ = invoke("constants")
        self.assertEqual(status, 0)
        with open(os.path.join(DATA, "constants_golden.txt")) as f:
            self.assertEqual(out, f.read())

    def testTableOnlyForTables(self):
        status, _, err = invoke("lambda", "--density", UNIFORM, "--format", "table")
        self.assertEqual(status, 2)
        self.assertIn("table", err)


class HeisenbergCommandsTestCase(unittest.TestCase):
    def testDistance(self):
        status, out, _ = invoke("h1", "dist", "--target", "1,0,0")
        self.assertEqual(status, 0)
        report = json.loads(out)
        self.assertEqual(report["command"], "h1 dist")
        self.assertAlmostEqual(report["result"]["distance"], 1.0, places=6)
        status, out, _ = invoke("h1", "dist", "--target", "0,3,4", "--euclidean", "--method", "bisection")
        self.assertAlmostEqual(json.loads(out)["result"]["distance"], 5.0)

    def testBudgetExhausted(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, "override.py")
            with open(path, "w") as f:
                f.write("config.h1.voxelBudget = 1\n")
            status, _, err = invoke("h1", "bm", "--centerA", "0,0,0", "--radiusA", "0.5",
                                    "--centerB", "0,0,0", "--radiusB", "0.5", "--samples", "200",
                                    "--config", path)
        self.assertEqual(status, 3)
        self.assertIn("solver failure", err)

    def testShrinkWithDefaults(self):
        status, out, err = invoke("h1", "shrink", "--radius", "0.05", "--samples", "20000")
        self.assertEqual(status, 0, err)
        report = json.loads(out)["result"]["reports"][0]
        self.assertLessEqual(report["ratio"], 0.5)
        self.assertEqual(report["limit"], 0.25)

    def testBadPoint(self):
        status, _, _ = invoke("h1", "dist", "--target", "1,0")
        self.assertEqual(status, 2)


class LocalizeTestCase(unittest.TestCase):
    def testHalfSquare(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            rays = os.path.join(tmpdir, "rays")
            status, out, _ = invoke("localize", "--grid", "16x16", "--ray-csv", rays)
            self.assertEqual(status, 0)
            result = json.loads(out)["result"]
            self.assertTrue(result["verification"]["passed"])
            self.assertNotIn("needles", result["decomposition"])
            self.assertTrue(os.path.exists(os.path.join(rays, "ray_000.csv")))

    def testOutputFile(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, "report.csv")
            status, out, _ = invoke("localize", "--grid", "8x8", "--format", "csv", "--output", path)
            self.assertEqual(status, 0)
            self.assertEqual(out, "")
            with open(path) as f:
                header = f.readline().strip().split(",")
            self.assertIn("flow", header)
            self.assertEqual(header, sorted(header))


class ConfigurationTestCase(unittest.TestCase):
    def testUnknownOverride(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, "override.py")
            with open(path, "w") as f:
                f.write("config.spectral.bogus = 1\n")
            status, _, err = invoke("constants", "--config", path)
        self.assertEqual(status, 2)
        self.assertIn("override.py", err)

    def testInvalidOverride(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, "override.py")
            with open(path, "w") as f:
                f.write("config.spectral.grid = 2\n")
            status, _, _ = invoke("constants", "--config", path)
        self.assertEqual(status, 2)

    def testUnknownCommand(self):
        self.assertEqual(invoke("transmogrify")[0], 2)

    def testParser(self):
        args = buildParser().parse_args(["coeff", "--kind", "tau", "--N", "3", "--seed", "4"])
        self.assertEqual(args.seed, 4)
        self.assertEqual(args.K, 0.0)
        self.assertIsInstance(RunConfig().spectral.grid, int)


if __name__ == "__main__":
    unittest.main()
