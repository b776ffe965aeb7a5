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
import os
import unittest

from qcdlab.errors import DomainError
from qcdlab.spaceConstants import (TABLE_SPACES, formatConstantsTable, functionalConstants,
                                   spaceConstants)

DATA = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")


class SpaceConstantsTestCase(unittest.TestCase):
    def testHeisenberg(self):
        for d in (1, 2, 5):
            row = spaceConstants("heisenberg", d=d)
            self.assertEqual(row.n, 2*d + 1)
            self.assertEqual(row.N, 2*d + 3)
            self.assertAlmostEqual(row.Q, 4.0)
            self.assertAlmostEqual(row.k, 1.0)
            self.assertTrue(row.ideal)

    def testOrders(self):
        self.assertAlmostEqual(spaceConstants("grushin").Q, 8.0)
        self.assertAlmostEqual(spaceConstants("grushin").k, 1.5)
        self.assertAlmostEqual(spaceConstants("3sasakian", d=2).Q, 64.0)
        self.assertAlmostEqual(spaceConstants("corank1", n=7).N, 9.0)
        self.assertFalse(spaceConstants("corank1").ideal)
        self.assertAlmostEqual(spaceConstants("htype", d=1, c=2).Q, 16.0)

    def testRejections(self):
        self.assertRaises(DomainError, spaceConstants, "sphere")
        self.assertRaises(DomainError, spaceConstants, "heisenberg", d=0)
        self.assertRaises(DomainError, functionalConstants, spaceConstants("grushin"), 0.0)

    def testFunctionalConstants(self):
        values = functionalConstants(spaceConstants("heisenberg"), 2.0)
        self.assertAlmostEqual(values["poincare"], math.pi**2/16.0)
        self.assertAlmostEqual(values["logSobolevTimesC"], math.pi**2/32.0)
        self.assertAlmostEqual(values["pPoincare"], values["poincare"])

    def testGoldenTable(self):
        with open(os.path.join(DATA, "constants_golden.txt")) as f:
            expected = f.read()
        rows = [spaceConstants(space) for space in TABLE_SPACES]
        self.assertEqual(formatConstantsTable(rows, 1.0), expected)


if __name__ == "__main__":
    unittest.main()
