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
import unittest

import numpy
from hypothesis import given, settings, strategies as st
from scipy import integrate

from qcdlab.coefficients import CurvatureParams
from qcdlab.densities import ClassifyConfig, ConditionSpec, GridDensity, classify, randomQcdDensity
from qcdlab.errors import DomainError
from qcdlab.transport1d import (AbsolutelyContinuousMeasure1D, TransportConfig, cumulative,
                                displacementInterpolation, interpolationWeights, monotoneMap, optimalJacobian,
                                quantiles, quasiBm1d, referenceIntegral, verifyInterpolation)


def lebesgue(a=0.0, b=1.0, M=33):
    return GridDensity((a, b), numpy.ones(M))


def onePlusAbs(M=201):
    return GridDensity((-1.0, 1.0), 1.0 + numpy.abs(numpy.linspace(-1.0, 1.0, M)))


def fastConfig():
    return TransportConfig(levels=512)


class MeasureTestCase(unittest.TestCase):
    def testReferenceIntegral(self):
        h = onePlusAbs(5)
        self.assertAlmostEqual(float(referenceIntegral(h, 1.0)), 3.0)
        self.assertAlmostEqual(float(referenceIntegral(h, 0.0)), 1.5)
        self.assertAlmostEqual(float(referenceIntegral(h, -0.75)), 0.25*1.875)

    def testNormalization(self):
        mu = AbsolutelyContinuousMeasure1D(onePlusAbs(), blocks=[(-1.0, -0.5, 1.0), (0.2, 0.4, 3.0)])
        self.assertAlmostEqual(float(mu.cdf(1.0)), 1.0, places=12)
        self.assertAlmostEqual(float(cumulative(mu)[-1]), 1.0, places=12)
        grid = AbsolutelyContinuousMeasure1D.fromGrid(onePlusAbs(), numpy.ones(201))
        self.assertAlmostEqual(float(grid.cdf(1.0)), 1.0, places=10)

    def testQuantiles(self):
        mu = AbsolutelyContinuousMeasure1D.fromBlocks(lebesgue(), [(0.0, 0.5, 1.0), (0.5, 1.0, 3.0)])
        self.assertAlmostEqual(float(mu.cdf(0.5)), 0.25, places=12)
        numpy.testing.assert_allclose(quantiles(mu, [0.0, 0.25, 0.625, 1.0]), [0.0, 0.5, 0.75, 1.0],
                                      atol=1e-12)

    def testRejections(self):
        self.assertRaises(DomainError, AbsolutelyContinuousMeasure1D.block, lebesgue(), 0.5, 1.5)
        self.assertRaises(DomainError, AbsolutelyContinuousMeasure1D, lebesgue(), blocks=[(0.0, 0.5, 0.0)])
        self.assertRaises(DomainError, AbsolutelyContinuousMeasure1D, lebesgue())


class MonotoneMapTestCase(unittest.TestCase):
    def testIdentity(self):
        mu = AbsolutelyContinuousMeasure1D(onePlusAbs(), blocks=[(-0.8, 0.3, 1.0)])
        T = monotoneMap(mu, mu, fastConfig())
        numpy.testing.assert_allclose(T.target, T.source, atol=1e-12)

    def testTranslation(self):
        ref = lebesgue()
        T = monotoneMap(AbsolutelyContinuousMeasure1D.block(ref, 0.0, 0.25),
                        AbsolutelyContinuousMeasure1D.block(ref, 0.75, 1.0), fastConfig())
        numpy.testing.assert_allclose(T.target, T.source + 0.75, atol=1e-12)

    def testContraction(self):
        ref = lebesgue()
        T = monotoneMap(AbsolutelyContinuousMeasure1D.block(ref, 0.0, 1.0),
                        AbsolutelyContinuousMeasure1D.block(ref, 0.0, 0.5), fastConfig())
        numpy.testing.assert_allclose(T.target, T.source/2.0, atol=1e-12)
        self.assertTrue(numpy.all(numpy.diff(T.target) >= 0.0))

    def testDifferentReferences(self):
        mu0 = AbsolutelyContinuousMeasure1D.block(lebesgue(), 0.0, 1.0)
        mu1 = AbsolutelyContinuousMeasure1D.block(lebesgue(M=17), 0.0, 1.0)
        self.assertRaises(DomainError, monotoneMap, mu0, mu1)


class DisplacementTestCase(unittest.TestCase):
    def testEndpoints(self):
        ref = onePlusAbs()
        mu0 = AbsolutelyContinuousMeasure1D.block(ref, -1.0, -0.5)
        mu1 = AbsolutelyContinuousMeasure1D.block(ref, 0.5, 1.0)
        start = displacementInterpolation(mu0, mu1, 0.0, fastConfig())
        end = displacementInterpolation(mu0, mu1, 1.0, fastConfig())
        numpy.testing.assert_array_equal(start.rhoT.values, mu0.relDensity.values)
        numpy.testing.assert_array_equal(end.rhoT.values, mu1.relDensity.values)
        self.assertRaises(DomainError, displacementInterpolation, mu0, mu1, 1.5)

    def testTranslation(self):
        ref = lebesgue()
        path = displacementInterpolation(AbsolutelyContinuousMeasure1D.block(ref, 0.0, 0.25),
                                         AbsolutelyContinuousMeasure1D.block(ref, 0.75, 1.0), 0.5)
        self.assertAlmostEqual(float(path.rhoT(0.5)), 4.0, places=6)
        self.assertEqual(float(path.rhoT(0.1)), 0.0)
        self.assertEqual(float(path.rhoT(0.9)), 0.0)
        self.assertLess(path.massDefect, 1e-6)
        numpy.testing.assert_allclose(path.jacobianSamples, 1.0, atol=1e-9)

    def testContraction(self):
        ref = lebesgue(M=401)
        path = displacementInterpolation(AbsolutelyContinuousMeasure1D.block(ref, 0.0, 1.0),
                                         AbsolutelyContinuousMeasure1D.block(ref, 0.0, 0.5), 0.5)
        x = numpy.linspace(0.05, 0.7, 14)
        numpy.testing.assert_allclose(path.rhoT(x), 4.0/3.0, rtol=1e-6)
        self.assertEqual(float(path.rhoT(0.8)), 0.0)
        numpy.testing.assert_allclose(path.jacobianSamples, 0.75, rtol=1e-6)
        self.assertTrue(numpy.all(numpy.diff(path.mapSamples) >= 0.0))
        self.assertIn("rho_t", path.toDict())

    def testUnitMass(self):
        ref = onePlusAbs()
        mu0 = AbsolutelyContinuousMeasure1D(ref, blocks=[(-1.0, -0.6, 1.0), (-0.2, 0.1, 2.0)])
        mu1 = AbsolutelyContinuousMeasure1D(ref, blocks=[(0.3, 0.9, 1.0)])
        for t in (0.25, 0.5, 0.75):
            path = displacementInterpolation(mu0, mu1, t, fastConfig())
            self.assertAlmostEqual(float(integrate.trapezoid(path.rhoT.values*ref.values, ref.grid)), 1.0,
                                   places=6)
            self.assertLess(path.massDefect, 1e-6)
            self.assertTrue(numpy.all(path.jacobianSamples > 0.0))

    def testSemigroup(self):
        ref = lebesgue(M=401)
        mu0 = AbsolutelyContinuousMeasure1D.block(ref, 0.0, 1.0)
        mu1 = AbsolutelyContinuousMeasure1D.block(ref, 0.0, 0.5)
        direct = displacementInterpolation(mu0, mu1, 0.75)
        half = displacementInterpolation(mu0, mu1, 0.5)
        middle = AbsolutelyContinuousMeasure1D.fromGrid(ref, half.rhoT.values)
        composed = displacementInterpolation(middle, mu1, 0.5)
        x = numpy.linspace(0.05, 0.55, 11)
        numpy.testing.assert_allclose(composed.rhoT(x), direct.rhoT(x), atol=1e-4)


class VerifyInterpolationTestCase(unittest.TestCase):
    def testLebesgueIsCd(self):
        ref = lebesgue(-1.0, 1.0, 65)
        for N in (1.5, 2.0, 5.0):
            sigma0, sigma1 = interpolationWeights("cd", CurvatureParams(K=0.0, N=N))
            mu0 = AbsolutelyContinuousMeasure1D(ref, blocks=[(-1.0, -0.7, 1.0), (-0.2, 0.0, 0.5)])
            mu1 = AbsolutelyContinuousMeasure1D(ref, blocks=[(0.4, 0.9, 1.0)])
            report = verifyInterpolation(mu0, mu1, sigma0, sigma1, N, config=fastConfig())
            self.assertTrue(report.passed)

    def testOnePlusAbs(self):
        ref = onePlusAbs()
        mu0 = AbsolutelyContinuousMeasure1D.block(ref, -1.0, -0.5)
        mu1 = AbsolutelyContinuousMeasure1D.block(ref, 0.5, 1.0)
        params = CurvatureParams(K=0.0, N=2.0)
        cd = verifyInterpolation(mu0, mu1, *interpolationWeights("cd", params), 2.0, config=fastConfig())
        self.assertFalse(cd.passed)
        self.assertLess(cd.worstViolation, -0.1)
        qcd = verifyInterpolation(mu0, mu1, *interpolationWeights("qcd", params, 2.0), 2.0,
                                  config=fastConfig())
        self.assertTrue(qcd.passed)
        mcp = verifyInterpolation(mu0, mu1, *interpolationWeights("mcp", params), 2.0, config=fastConfig())
        self.assertGreaterEqual(mcp.worstViolation, cd.worstViolation)

    def testBoundaryTimesRejected(self):
        ref = lebesgue()
        mu = AbsolutelyContinuousMeasure1D.block(ref, 0.0, 0.5)
        weights = interpolationWeights("cd", CurvatureParams(K=0.0, N=2.0))
        self.assertRaises(DomainError, verifyInterpolation, mu, mu, *weights, 2.0, tGrid=[0.0])
        self.assertRaises(DomainError, interpolationWeights, "bm", CurvatureParams())

    def testAgreesWithClassify(self):
        rng = numpy.random.default_rng(17)
        N, Q = 3.0, 2.0
        params = CurvatureParams(K=0.0, N=N)
        weights = interpolationWeights("qcd", params, Q)
        for _ in range(2):
            h = randomQcdDensity(rng, Q, N, M=129)
            self.assertTrue(classify(h, ConditionSpec(kind="qcd", K=0.0, N=N, Q=Q),
                                     ClassifyConfig(randomT=2)).passed)
            for _ in range(5):
                a = numpy.sort(rng.uniform(0.0, 1.0, 2))
                b = numpy.sort(rng.uniform(0.0, 1.0, 2))
                if a[1] - a[0] < 0.02 or b[1] - b[0] < 0.02:
                    continue
                mu0 = AbsolutelyContinuousMeasure1D.block(h, a[0], a[1])
                mu1 = AbsolutelyContinuousMeasure1D.block(h, b[0], b[1])
                self.assertTrue(verifyInterpolation(mu0, mu1, *weights, N, config=fastConfig()).passed)

    def testClassifyFailureIsWitnessed(self):
        h = onePlusAbs(101)
        cd = ConditionSpec(kind="cd", K=0.0, N=2.0)
        self.assertFalse(classify(h, cd, ClassifyConfig(randomT=2)).passed)
        mu0 = AbsolutelyContinuousMeasure1D.block(h, -1.0, -0.9)
        mu1 = AbsolutelyContinuousMeasure1D.block(h, 0.9, 1.0)
        weights = interpolationWeights("cd", CurvatureParams(K=0.0, N=2.0))
        self.assertFalse(verifyInterpolation(mu0, mu1, *weights, 2.0, config=fastConfig()).passed)


class OptimalJacobianTestCase(unittest.TestCase):
    @staticmethod
    def interpolated(J, t, s0, s1, r0, r1, N):
        """Right-hand side of the interpolation inequality divided by
        ``J_t^{1/N}``, with ``h = r^{N-1}``.
        """
        head = (1.0 - t)**(1.0/N)*(s0*r0)**((N - 1.0)/N)
        tail = (t*J)**(1.0/N)*(s1*r1)**((N - 1.0)/N)
        return (head + tail)/((1.0 - t) + t*J)**(1.0/N)

    def testValue(self):
        self.assertAlmostEqual(optimalJacobian(0.25, 2.0, 1.0, 3.0, 1.5), 0.75)
        self.assertAlmostEqual(optimalJacobian(0.5, 1.0, 1.0, 1.0, 1.0), 1.0)

    @settings(max_examples=50, deadline=None)
    @given(t=st.floats(0.05, 0.95), s0=st.floats(0.1, 2.0), s1=st.floats(0.1, 2.0),
           r0=st.floats(0.1, 3.0), r1=st.floats(0.1, 3.0), N=st.floats(1.5, 6.0),
           other=st.floats(0.01, 100.0))
    def testHolderEquality(self, t, s0, s1, r0, r1, N, other):
        J = optimalJacobian(t, s0, s1, r0, r1)
        best = self.interpolated(J, t, s0, s1, r0, r1, N)
        self.assertAlmostEqual(best, (s0*r0 + s1*r1)**((N - 1.0)/N), places=9)
        self.assertLessEqual(self.interpolated(other, t, s0, s1, r0, r1, N), best*(1.0 + 1e-12))


class QuasiBmTestCase(unittest.TestCase):
    def testEquality(self):
        report = quasiBm1d(lebesgue(), (0.0, 1.0), (0.0, 1.0), 0.3, 1.0, 2.0)
        self.assertAlmostEqual(report.slack, 0.0, places=12)
        self.assertTrue(report.passed)

    def testLebesgueIsTight(self):
        report = quasiBm1d(lebesgue(0.0, 3.0), (0.0, 1.0), (2.0, 3.0), 0.5, 1.0, 2.0)
        self.assertEqual(report.intervalZ, (1.0, 2.0))
        self.assertAlmostEqual(report.slack, 0.0, places=12)

    def testOnePlusAbs(self):
        ref = onePlusAbs()
        self.assertTrue(quasiBm1d(ref, (-1.0, -0.5), (0.5, 1.0), 0.5, 2.0, 2.0).passed)
        self.assertFalse(quasiBm1d(ref, (-1.0, -0.5), (0.5, 1.0), 0.5, 1.0, 2.0).passed)
        self.assertRaises(DomainError, quasiBm1d, ref, (-2.0, 0.0), (0.5, 1.0), 0.5, 2.0, 2.0)

    @settings(max_examples=30)
    @given(lo=st.floats(0.0, 0.4), width=st.floats(0.05, 0.5), shift=st.floats(0.0, 0.4),
           t=st.floats(0.0, 1.0))
    def testLebesgueBrunnMinkowski(self, lo, width, shift, t):
        A = (lo, lo + width)
        B = (lo + shift, lo + shift + 0.5*width)
        report = quasiBm1d(lebesgue(0.0, 2.0), A, B, t, 1.0, 1.0)
        self.assertGreaterEqual(report.slack, -1e-12)


if __name__ == "__main__":
    unittest.main()
