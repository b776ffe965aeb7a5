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
"""Curvature-dimension constants of sub-Riemannian model spaces.

Each row records the topological dimension ``n``, the dimension bound ``N``
of the optimal measure contraction property, the resulting quasi-convexity
order ``Q = 2^{N-n}`` and ``k = log_4 Q``; the Poincare-type constants of
a space of diameter ``D`` in such a class are the Euclidean ones divided by
``4^k``.
"""

__all__ = ("SpaceConstants", "SPACES", "TABLE_SPACES", "spaceConstants", "functionalConstants",
           "formatConstantsTable")

import dataclasses
import fractions
import math

from .coefficients import qcdFromMcp
from .errors import DomainError
from .spectral import lambdaPClosedForm


@dataclasses.dataclass
class SpaceConstants:
    name: str
    description: str
    nSymbol: str
    NSymbol: str
    n: float
    N: float
    Q: float
    k: float
    ideal: bool

    def toDict(self):
        return dataclasses.asdict(self)


SPACES = {
    "heisenberg": "Heisenberg group H^d",
    "grushin": "Grushin plane",
    "sasakian": "Sasakian manifold of dimension 2d+1 with Ric >= K",
    "3sasakian": "3-Sasakian manifold of dimension 4d+3",
    "corank1": "corank-1 Carnot group of topological dimension n",
    "htype": "H-type foliation of corank c",
}

TABLE_SPACES = ("heisenberg", "grushin", "sasakian", "3sasakian", "corank1")


def spaceConstants(space, d=1, n=None, c=1):
    """Return the constants row of a model space.

    Parameters
    ----------
    space : `str`
        One of the keys of `SPACES`.
    d : `int`, optional
        Half the horizontal dimension for the families indexed by ``d``.
    n : `int`, optional
        Topological dimension of a corank-1 Carnot group; default ``2d+1``.
    c : `int`, optional
        Corank of an H-type foliation.

    Raises
    ------
    DomainError
        Raised for an unknown space or non-positive indices.
    """
    if space not in SPACES:
        raise DomainError("Unknown space %r; expected one of %s" % (space, ", ".join(SPACES)))
    if d < 1 or c < 1:
        raise DomainError("d and c must be positive integers")
    if space == "heisenberg" or space == "sasakian":
        row = ("2d+1", "2d+3", 2*d + 1, 2*d + 3, True)
    elif space == "grushin":
        row = ("2", "5", 2, 5, True)
    elif space == "3sasakian":
        row = ("4d+3", "4d+9", 4*d + 3, 4*d + 9, True)
    elif space == "corank1":
        n = 2*d + 1 if n is None else n
        row = ("n", "n+2", n, n + 2, False)
    else:
        row = ("2d+c", "2d+3c", 2*d + c, 2*d + 3*c, True)
    nSymbol, NSymbol, nValue, NValue, ideal = row
    Q = qcdFromMcp(float(NValue), float(nValue))
    return SpaceConstants(name=space, description=SPACES[space], nSymbol=nSymbol, NSymbol=NSymbol,
                          n=float(nValue), N=float(NValue), Q=Q, k=math.log(Q, 4.0), ideal=ideal)


def functionalConstants(row, D, p=2.0):
    """Poincare-type lower bounds for spaces of the row's class with
    diameter ``D``.

    Returns
    -------
    constants : `dict`
        ``poincare`` ``pi^2/(4^k D^2)``, ``pPoincare`` the p-spectral gap
        of the line divided by ``4^k``, and ``logSobolevTimesC``
        ``pi^2/(2 4^k D^2)``, the log-Sobolev bound up to the unspecified
        universal factor ``1/C``.
    """
    if not D > 0:
        raise DomainError("D must be positive, got %r" % (D,))
    scale = 4.0**row.k
    return {"poincare": math.pi**2/(scale*D**2),
            "pPoincare": lambdaPClosedForm(p, D)/scale,
            "logSobolevTimesC": math.pi**2/(2.0*scale*D**2),
            "p": p, "D": D}


def formatConstantsTable(rows, D):
    """Render rows as tab-separated text with a ``# D = ...`` header line.
    """
    lines = ["# D = %g" % D,
             "\t".join(("space", "n", "N", "Q", "k", "ideal", "poincare", "log_sobolev_times_C"))]
    for row in rows:
        values = functionalConstants(row, D)
        k = fractions.Fraction(row.k).limit_denominator(64)
        lines.append("\t".join((row.name, row.nSymbol, row.NSymbol, "%d" % round(row.Q), str(k),
                                "yes" if row.ideal else "no", "%.6f" % values["poincare"],
                                "%.6f" % values["logSobolevTimesC"])))
    return "\n".join(lines) + "\n"
