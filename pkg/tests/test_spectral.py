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
import math
import unittest

import numpy
from hypothesis import given, settings, strategies as st

from qcdlab.densities import ClassifyConfig, GridDensity, randomQcdDensity
from qcdlab.errors import DomainError
from qcdlab.spectral import (SpectralConfig, SpectralProblem, entropyQuotient, estimateLambdaLs,
                             lambdaPClosedForm, lichnerowicz, rayleighQuotientP, solveLambdaP, theoremGap)


def uniform(a=0.0, b=1.0, M=1025):
    return GridDensity((a, b), numpy.ones(M))


def cosDensity(M=2049):
    x = numpy.linspace(-0.5*math.pi, 0.5*math.pi, M)
    values = numpy.cos(x)
    values[0] = values[-1] = 0.0
    return GridDensity((-0.5*math.pi, 0.5*math.pi), values)


class ClosedFormTestCase(unittest.TestCase):
    def testLiYau(self):
        self.assertAlmostEqual(lambdaPClosedForm(2.0, 1.0), math.pi**2)
        self.assertAlmostEqual(lambdaPClosedForm(2.0, 2.0), math.pi**2/4.0)
        self.assertRaises(DomainError, lambdaPClosedForm, 1.0, 1.0)
        self.assertRaises(DomainError, lambdaPClosedForm, 2.0, 0.0)

    def testLichnerowicz(self):
        self.assertEqual(lichnerowicz(1.0, 2.0), 2.0)
        self.assertAlmostEqual(lichnerowicz(2.0, 5.0), 2.5)
        self.assertRaises(DomainError, lichnerowicz, 0.0, 2.0)
        self.assertRaises(DomainError, lichnerowicz, 1.0, 1.0)


class ProblemTestCase(unittest.TestCase):
    def testDefaults(self):
        problem = SpectralProblem(uniform(), 2)
        self.assertEqual(problem.p, 2.0)
        self.assertTrue(problem.isFullSupport)
        self.assertEqual(problem.hull, (0.0, 1.0))

    def testOmega(self):
        problem = SpectralProblem(uniform(), 2.0, [(0.75, 1.0), (0.0, 0.25)])
        self.assertEqual(problem.omega, [(0.0, 0.25), (0.75, 1.0)])
        self.assertFalse(problem.isFullSupport)
        self.assertTrue(problem.indicator(0.1))
        self.assertFalse(problem.indicator(0.5))

    def testRejections(self):
        self.assertRaises(DomainError, SpectralProblem, uniform(), 1.0)
        self.assertRaises(DomainError, SpectralProblem, uniform(), 2.0, [(0.0, 0.5), (0.4, 1.0)])
        self.assertRaises(DomainError, SpectralProblem, uniform(), 2.0, [(-0.5, 0.5)])
        self.assertRaises(DomainError, SpectralProblem, uniform(), 2.0, [])
        self.assertRaises(DomainError, solveLambdaP, SpectralProblem(uniform(), "ls"))
        self.assertRaises(DomainError, solveLambdaP, SpectralProblem(uniform(), 3.0),
                          SpectralConfig(method="fd-eig"))


class PoincareTestCase(unittest.TestCase):
    def testUniform(self):
        result = solveLambdaP(SpectralProblem(uniform(M=2048), 2.0))
        self.assertEqual(result.method, "fd-eig")
        self.assertLess(abs(result.lam - math.pi**2), 0.005*math.pi**2)
        # the first eigenfunction of the Neumann interval is cos(pi x)
        numpy.testing.assert_allclose(numpy.abs(result.eigenfunction),
                                      numpy.abs(numpy.cos(math.pi*result.grid)), atol=1e-2)
        self.assertIn("lambda", result.toDict())

    def testShootingAgrees(self):
        result = solveLambdaP(SpectralProblem(uniform(M=513), 2.0), SpectralConfig(method="shooting"))
        self.assertEqual(result.method, "shooting")
        self.assertLess(abs(result.lam - math.pi**2), 0.01*math.pi**2)

    def testLichnerowiczAttained(self):
        result = solveLambdaP(SpectralProblem(cosDensity(), 2.0))
        self.assertLess(abs(result.lam - 2.0), 0.02)

    def testPSpectralGaps(self):
        h = uniform(M=513)
        for p in (1.5, 3.0, 4.0):
            expected = lambdaPClosedForm(p, 1.0)
            result = solveLambdaP(SpectralProblem(h, p))
            self.assertEqual(result.method, "shooting")
            self.assertLess(abs(result.lam - expected), 0.01*expected, msg="p=%g" % p)

    def testSubintervalScaling(self):
        result = solveLambdaP(SpectralProblem(uniform(M=513), 2.0, [(0.0, 0.5)]))
        self.assertLess(abs(result.lam - 4.0*math.pi**2), 0.01*4.0*math.pi**2)

    def testOmegaMonotone(self):
        h = uniform(M=513)
        full = solveLambdaP(SpectralProblem(h, 2.0), SpectralConfig(method="shooting")).lam
        split = solveLambdaP(SpectralProblem(h, 2.0, [(0.0, 0.25), (0.75, 1.0)])).lam
        half = solveLambdaP(SpectralProblem(h, 2.0, [(0.0, 0.5)])).lam
        self.assertGreaterEqual(split, full*(1.0 - 1e-3))
        self.assertGreaterEqual(half, full*(1.0 - 1e-3))

    def testRefinementConverges(self):
        lams = []
        for M in (65, 129, 257, 513):
            h = GridDensity((0.0, 1.0), 1.0 + numpy.linspace(0.0, 1.0, M))
            lams.append(solveLambdaP(SpectralProblem(h, 2.0)).lam)
        changes = numpy.abs(numpy.diff(lams))
        for previous, current in zip(changes[:-1], changes[1:]):
            self.assertLess(current, previous)
            self.assertLess(previous, 8.0*current)
            self.assertGreater(previous, 2.0*current)

    @settings(max_examples=20, deadline=None)
    @given(coefs=st.lists(st.floats(-1.0, 1.0), min_size=3, max_size=3))
    def testStability(self, coefs):
        x = numpy.linspace(0.0, 1.0, 257)
        h = GridDensity((0.0, 1.0), 1.0 + x*x)
        bump = sum(c*numpy.cos((k + 1)*math.pi*x) for k, c in enumerate(coefs))
        if numpy.ptp(bump) > 0:
            bump = (bump - bump.min())/numpy.ptp(bump)
        perturbed = GridDensity((0.0, 1.0), h.values*(1.0 + 0.5*bump))
        lam = solveLambdaP(SpectralProblem(h, 2.0)).lam
        self.assertGreaterEqual(solveLambdaP(SpectralProblem(perturbed, 2.0)).lam, lam/2.25*(1.0 - 1e-9))

    def testRayleighQuotient(self):
        h = uniform(M=513)
        problem = SpectralProblem(h, 2.0)
        self.assertAlmostEqual(rayleighQuotientP(problem, numpy.cos(math.pi*h.grid)), math.pi**2, delta=1e-2)
        self.assertEqual(rayleighQuotientP(problem, numpy.ones(h.size)), math.inf)
        self.assertRaises(DomainError, rayleighQuotientP, problem, numpy.ones(5))

    @settings(max_examples=20, deadline=None)
    @given(coefs=st.lists(st.floats(-1.0, 1.0), min_size=4, max_size=4))
    def testRayleighBoundsEigenvalue(self, coefs):
        h = GridDensity((0.0, 1.0), 1.0 + numpy.linspace(0.0, 1.0, 129))
        problem = SpectralProblem(h, 2.0)
        lam = solveLambdaP(problem).lam
        f = sum(c*numpy.cos((k + 1)*math.pi*h.grid) for k, c in enumerate(coefs))
        if numpy.ptp(f) < 1e-6:
            return
        self.assertGreaterEqual(rayleighQuotientP(problem, f), lam*(1.0 - 1e-8))


class LogSobolevTestCase(unittest.TestCase):
    def testUniform(self):
        config = SpectralConfig(lsRestarts=2)
        result = estimateLambdaLs(SpectralProblem(uniform(-0.5, 0.5, 257), "ls"), config)
        self.assertEqual(result.status, "converged")
        self.assertLess(abs(result.lam - math.pi**2), 0.05*math.pi**2)
        # the estimate is a quotient of an admissible function
        self.assertGreaterEqual(result.lam, entropyQuotient(SpectralProblem(uniform(-0.5, 0.5, 257), "ls"),
                                                             result.eigenfunction)*(1.0 - 1e-9))

    def testConstantsAreDegenerate(self):
        problem = SpectralProblem(uniform(M=65), "ls")
        self.assertEqual(entropyQuotient(problem, numpy.ones(65)), math.inf)

    def testDeterministic(self):
        config = SpectralConfig(lsRestarts=1, lsMaxIter=50)
        problem = SpectralProblem(uniform(M=65), "ls")
        self.assertEqual(estimateLambdaLs(problem, config).lam, estimateLambdaLs(problem, config).lam)


class TheoremGapTestCase(unittest.TestCase):
    classifyConfig = ClassifyConfig(randomT=2)

    def testUniformIsSharp(self):
        report = theoremGap(uniform(M=1025), 1.0, 0.0, 2.0, 2.0, classifyConfig=self.classifyConfig)
        self.assertTrue(report.passed)
        self.assertTrue(report.upperApplicable)
        self.assertGreaterEqual(report.upperSlack, 0.0)
        self.assertLess(abs(report.attainment - 1.0), 0.005)

    def testOnePlusAbs(self):
        h = GridDensity((-1.0, 1.0), 1.0 + numpy.abs(numpy.linspace(-1.0, 1.0, 401)))
        report = theoremGap(h, 2.0, 0.0, 2.0, 2.0, classifyConfig=self.classifyConfig)
        self.assertTrue(report.passed)
        self.assertFalse(report.upperApplicable)
        self.assertAlmostEqual(report.lowerBound, math.pi**2/8.0)
        self.assertGreaterEqual(report.measured, math.pi**2/8.0)
        self.assertRaises(DomainError, theoremGap, h, 1.5, 0.0, 2.0, 2.0, classifyConfig=self.classifyConfig)

    def testLichnerowiczBound(self):
        report = theoremGap(cosDensity(1025), 1.0, 1.0, 2.0, 2.0, checkClass=False)
        self.assertEqual(report.bound, 2.0)
        self.assertTrue(report.upperApplicable)
        self.assertTrue(report.passed)

    def testNegativeCurvature(self):
        self.assertRaises(DomainError, theoremGap, uniform(), 1.0, -1.0, 2.0, 2.0)

    def testRandomSandwich(self):
        rng = numpy.random.default_rng(5)
        for _ in range(3):
            h = randomQcdDensity(rng, 2.0, 3.0, M=257)
            report = theoremGap(h, 2.0, 0.0, 3.0, 2.0, classifyConfig=self.classifyConfig)
            self.assertTrue(report.passed)
            self.assertGreaterEqual(report.measured, (1.0 - 1e-2)*math.pi**2/(2.0*h.diameter**2))


if __name__ == "__main__":
    unittest.main()
