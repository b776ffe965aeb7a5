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

from qcdlab.errors import DomainError, VolumeBudgetError
from qcdlab.heisenberg import (H1Config, H1Point, ccBallSample, ccDistance, dilation, distance,
                               distortionBetaEstimate, expMap, groupInverse, groupMul, hamiltonian,
                               hamiltonianFlow, juilletShrinkage, midpoint, quasiBmEstimate, shootGeodesic,
                               voxelVolume)

coordinate = st.floats(-3.0, 3.0)
point = st.tuples(coordinate, coordinate, coordinate)


def randomPoints(count, seed=3):
    return numpy.random.default_rng(seed).normal(size=(count, 3))


class GroupTestCase(unittest.TestCase):
    def testProduct(self):
        self.assertEqual(groupMul((1.0, 0.0, 0.0), (0.0, 1.0, 0.0)), H1Point(1.0, 1.0, 0.5))
        self.assertEqual(groupMul((0.0, 1.0, 0.0), (1.0, 0.0, 0.0)), H1Point(1.0, 1.0, -0.5))
        self.assertEqual(groupMul((1.0, 2.0, 3.0), groupInverse((1.0, 2.0, 3.0))), H1Point(0.0, 0.0, 0.0))

    def testDilation(self):
        self.assertEqual(dilation((1.0, -2.0, 3.0), 2.0), H1Point(2.0, -4.0, 12.0))

    def testRejections(self):
        self.assertRaises(DomainError, groupMul, (1.0, 2.0), (0.0, 0.0, 0.0))
        self.assertRaises(DomainError, groupMul, (math.nan, 0.0, 0.0), (0.0, 0.0, 0.0))

    @settings(max_examples=50)
    @given(a=point, b=point, c=point)
    def testAssociative(self, a, b, c):
        left = groupMul(groupMul(a, b), c)
        right = groupMul(a, groupMul(b, c))
        numpy.testing.assert_allclose(left, right, atol=1e-9)

    @settings(max_examples=50)
    @given(a=point, b=point, lam=st.floats(0.1, 3.0))
    def testDilationIsAutomorphism(self, a, b, lam):
        numpy.testing.assert_allclose(dilation(groupMul(a, b), lam),
                                      groupMul(dilation(a, lam), dilation(b, lam)), atol=1e-9)


class FlowTestCase(unittest.TestCase):
    def testHorizontalLine(self):
        flow = hamiltonianFlow((1.0, 0.0, 0.0))
        numpy.testing.assert_allclose(flow.points[:, 0], flow.s, atol=1e-12)
        numpy.testing.assert_allclose(flow.points[:, 1:], 0.0, atol=1e-12)

    def testClosedLoop(self):
        flow = hamiltonianFlow((1.0, 0.0, 2.0*math.pi), steps=512)
        numpy.testing.assert_allclose(flow.points[-1], [0.0, 0.0, 1.0/(4.0*math.pi)], atol=1e-6)
        numpy.testing.assert_allclose(expMap((1.0, 0.0, 2.0*math.pi)), [0.0, 0.0, 1.0/(4.0*math.pi)],
                                      atol=1e-12)

    def testEnergyConserved(self):
        flow = hamiltonianFlow((0.3, -0.7, 5.0), start=(0.5, 0.2, -1.0))
        self.assertAlmostEqual(flow.energy[0], hamiltonian((0.5, 0.2, -1.0), (0.3, -0.7, 5.0)))
        self.assertLess(float(numpy.max(numpy.abs(flow.energy - flow.energy[0]))), 1e-8)

    def testClosedFormAgrees(self):
        rng = numpy.random.default_rng(11)
        for _ in range(5):
            p0 = rng.normal(size=3)*numpy.array([1.0, 1.0, 4.0])
            start = rng.normal(size=3)
            flow = hamiltonianFlow(p0, start=start, steps=2048)
            numpy.testing.assert_allclose(flow.points[-1], expMap(p0, 1.0, start), atol=1e-6)
            numpy.testing.assert_allclose(flow.points[1024], expMap(p0, 0.5, start), atol=1e-6)

    def testTooFewSteps(self):
        self.assertRaises(DomainError, hamiltonianFlow, (1.0, 0.0, 0.0), steps=8)


class DistanceTestCase(unittest.TestCase):
    def testExamples(self):
        self.assertAlmostEqual(distance((0.0, 0.0, 0.0), (1.0, 0.0, 0.0)), 1.0, places=12)
        self.assertAlmostEqual(distance((0.0, 0.0, 0.0), (0.0, 0.0, 1.0)), 2.0*math.sqrt(math.pi), places=9)
        self.assertEqual(distance((1.0, 2.0, 3.0), (1.0, 2.0, 3.0)), 0.0)

    def testShooting(self):
        self.assertAlmostEqual(ccDistance((1.0, 0.0, 0.0)), 1.0, delta=1e-6)
        self.assertAlmostEqual(ccDistance((0.0, 0.0, 1.0)), 2.0*math.sqrt(math.pi), delta=1e-3)
        self.assertEqual(ccDistance((0.0, 0.0, 0.0)), 0.0)
        for target in ((0.3, -0.2, 0.1), (1.0, 1.0, -2.0), (-0.5, 0.1, 0.02)):
            self.assertAlmostEqual(ccDistance(target), distance((0.0, 0.0, 0.0), target), delta=1e-6)

    def testShootGeodesic(self):
        target = (0.4, -1.1, 0.7)
        solution = shootGeodesic(target)
        self.assertTrue(solution.unique)
        numpy.testing.assert_allclose(expMap(solution.covector), target, atol=1e-9)
        self.assertAlmostEqual(solution.length, math.hypot(*solution.covector[:2]))
        self.assertFalse(shootGeodesic((0.0, 0.0, 1.0)).unique)

    def testEuclidean(self):
        config = H1Config(geometry="euclidean")
        self.assertAlmostEqual(distance((0.0, 0.0, 0.0), (0.0, 3.0, 4.0), config), 5.0)
        self.assertAlmostEqual(ccDistance((0.0, 3.0, 4.0), config), 5.0)

    def testInvariants(self):
        a, b, c = randomPoints(100, 1), randomPoints(100, 2), randomPoints(100, 3)
        dab = distance(a, b)
        numpy.testing.assert_allclose(distance(b, a), dab, rtol=1e-8)
        g = randomPoints(1, 4)[0]
        numpy.testing.assert_allclose(distance(groupMul(g, a), groupMul(g, b)), dab, rtol=1e-8)
        numpy.testing.assert_allclose(distance(dilation(a, 2.5), dilation(b, 2.5)), 2.5*dab, rtol=1e-8)
        self.assertTrue(numpy.all(distance(a, c) <= dab + distance(b, c) + 1e-9))
        delta = groupMul(groupInverse(a), b)
        self.assertTrue(numpy.all(dab >= numpy.hypot(delta[:, 0], delta[:, 1]) - 1e-12))


class MidpointTestCase(unittest.TestCase):
    def testHorizontal(self):
        point, unique = midpoint((0.0, 0.0, 0.0), (1.0, 0.0, 0.0), 0.5)
        numpy.testing.assert_allclose(point, (0.5, 0.0, 0.0), atol=1e-12)
        self.assertTrue(unique)

    def testVerticalAxis(self):
        point, unique = midpoint((0.0, 0.0, 0.0), (0.0, 0.0, 1.0), 0.5)
        self.assertFalse(unique)
        self.assertAlmostEqual(distance((0.0, 0.0, 0.0), point), math.sqrt(math.pi), places=6)

    def testGeodesic(self):
        a, b = randomPoints(20, 5), randomPoints(20, 6)
        for t in (0.2, 0.5, 0.9):
            d = distance(a, b)
            for k in range(len(a)):
                m, _ = midpoint(a[k], b[k], t)
                self.assertAlmostEqual(distance(a[k], m), t*d[k], delta=1e-6*max(1.0, d[k]))
                self.assertAlmostEqual(distance(m, b[k]), (1.0 - t)*d[k], delta=1e-6*max(1.0, d[k]))

    def testRejections(self):
        self.assertRaises(DomainError, midpoint, (0.0, 0.0, 0.0), (1.0, 0.0, 0.0), 0.0)
        self.assertRaises(DomainError, midpoint, (0.0, 0.0, 0.0), (1.0, 0.0, 0.0), 1.0)
        self.assertRaises(DomainError, midpoint, (1.0, 0.0, 0.0), (1.0, 0.0, 0.0), 0.5)

    def testEuclidean(self):
        point, unique = midpoint((0.0, 0.0, 0.0), (0.0, 0.0, 1.0), 0.25, H1Config(geometry="euclidean"))
        numpy.testing.assert_allclose(point, (0.0, 0.0, 0.25))
        self.assertTrue(unique)


class VolumeTestCase(unittest.TestCase):
    def testLattice(self):
        centres = (numpy.arange(10) + 0.5)*0.1
        points = numpy.stack(numpy.meshgrid(centres, centres, centres), axis=-1).reshape(-1, 3)
        self.assertAlmostEqual(voxelVolume(points, 0.1), 1.0)
        frame = numpy.diag([2.0, 1.0, 1.0])
        self.assertAlmostEqual(voxelVolume(points*numpy.array([2.0, 1.0, 1.0]), 0.1, frame), 2.0)

    def testBudget(self):
        points = numpy.array([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]])
        with self.assertRaises(VolumeBudgetError) as context:
            voxelVolume(points, 0.01, budget=1000)
        self.assertEqual(context.exception.budget, 1000)

    def testBallSamples(self):
        center = (0.3, -0.1, 0.2)
        first = ccBallSample(center, 0.5, 2000, numpy.random.default_rng(1))
        second = ccBallSample(center, 0.5, 2000, numpy.random.default_rng(1))
        numpy.testing.assert_array_equal(first, second)
        self.assertEqual(first.shape, (2000, 3))
        self.assertTrue(numpy.all(distance(numpy.array(center), first) <= 0.5*(1.0 + 1e-9)))
        self.assertRaises(DomainError, ccBallSample, center, 0.0, 10, numpy.random.default_rng(1))


class MonteCarloTestCase(unittest.TestCase):
    def testEuclideanBeta(self):
        config = H1Config(geometry="euclidean")
        report = distortionBetaEstimate((0.0, 0.0, 0.0), (1.0, 0.0, 0.0), 0.5, 0.05, 5000, config)
        self.assertAlmostEqual(report.jacobianDeterminant, 0.125, delta=1e-6)
        self.assertAlmostEqual(report.estimate, 0.125, delta=0.01)
        self.assertEqual(report.lowerBound, 0.125)

    def testBetaLowerBound(self):
        rng = numpy.random.default_rng(23)
        for _ in range(3):
            x = rng.normal(size=3)
            y = x + rng.normal(size=3)
            t = float(rng.uniform(0.2, 0.8))
            report = distortionBetaEstimate(x, y, t, 0.05, 10000)
            self.assertGreaterEqual(report.estimate, t**5 - 2.0*report.stderr)
            self.assertGreaterEqual(report.jacobianDeterminant, t**5*(1.0 - 1e-3))

    def testBetaAtOne(self):
        report = distortionBetaEstimate((0.0, 0.0, 0.0), (1.0, 0.5, 0.2), 1.0, 0.05, 5000)
        self.assertAlmostEqual(report.estimate, 1.0, delta=0.05)

    def testQuasiBrunnMinkowski(self):
        report = quasiBmEstimate((0.0, 0.0, 0.0), 0.5, (0.0, 0.0, 0.0), 0.5, 0.5, 20000)
        self.assertEqual((report.n, report.N), (3, 5))
        self.assertAlmostEqual(report.Q, 4.0)
        self.assertGreater(report.slackQbm, 0.0)
        self.assertGreater(report.slackBm, 0.0)
        again = quasiBmEstimate((0.0, 0.0, 0.0), 0.5, (0.0, 0.0, 0.0), 0.5, 0.5, 20000)
        self.assertEqual(report.toDict(), again.toDict())
        self.assertEqual(report.seed, H1Config().seed)

    def testVerticallySeparatedBalls(self):
        report = quasiBmEstimate((0.0, 0.0, 0.0), 0.2, (0.0, 0.0, 0.5), 0.2, 0.5, 20000)
        self.assertGreaterEqual(report.slackBm, -2.0*report.slackBmStderr)
        self.assertGreaterEqual(report.slackQbm, -2.0*report.slackQbmStderr)
        self.assertAlmostEqual(report.volA/report.volB, 1.0, delta=0.1)

    def testEuclideanBrunnMinkowski(self):
        report = quasiBmEstimate((0.0, 0.0, 0.0), 0.5, (2.0, 0.0, 0.0), 0.5, 0.5, 5000,
                                 H1Config(geometry="euclidean"))
        self.assertEqual((report.n, report.N), (3, 3))
        self.assertEqual(report.Q, 1.0)
        self.assertEqual(report.nonUniqueFraction, 0.0)

    def testJuilletShrinkage(self):
        reports = [juilletShrinkage(radius, 1.0, 0.5, 20000) for radius in (0.1, 0.05, 0.025)]
        ratios = [report.ratio for report in reports]
        for report in reports:
            self.assertEqual(report.limit, 0.25)
            self.assertGreater(report.ratio, 0.15)
            self.assertAlmostEqual(report.massRatio, 1.0, delta=0.05)
        self.assertLessEqual(reports[1].ratio, 0.5)
        self.assertGreater(ratios[0], ratios[1])
        self.assertGreater(ratios[1], ratios[2])

    def testEuclideanShrinkage(self):
        report = juilletShrinkage(0.05, 1.0, 0.5, 5000, H1Config(geometry="euclidean"))
        self.assertEqual(report.limit, 1.0)
        self.assertAlmostEqual(report.ratio, 1.0, delta=0.02)
        self.assertRaises(DomainError, juilletShrinkage, 1.0, 0.5, 0.5, 100)


if __name__ == "__main__":
    unittest.main()
