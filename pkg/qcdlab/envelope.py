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
"""CD(K,N) upper envelope of a one-dimensional density.

The envelope of ``h`` is the smallest CD(K,N) density above it. At a grid
point ``x`` it is the largest chord value over pairs of grid points
``x0 <= x <= x1``, computed in the root scale ``h^{1/(N-1)}``. Its ratio to
``h`` is the smallest ``Q`` for which ``h`` is QCD(Q,K,N).
"""

__all__ = ("EnvelopeConfig", "EnvelopeResult", "chordValue", "cdUpperEnvelope")

import dataclasses
import logging
import math

import numpy

from .config import Config, Field
from .rangeField import RangeField
from .coefficients import sigma, extMul, maxDiameter
from .densities import GridDensity
from .errors import DomainError
from .parallel import parallelMap

_log = logging.getLogger(__name__)


class EnvelopeConfig(Config):
    grid = RangeField("Largest grid used for the envelope; denser inputs are resampled, "
                      "model densities are materialized at this size.", int, default=512, min=3)
    epsilon = RangeField("Relative floor of h below which h/envelope is not formed.", float,
                         default=1e-6, min=0.0)
    prune = Field("Skip pairs whose chord cannot beat the current value (K <= 0 only).", bool,
                  default=True)
    tolerance = RangeField("Tolerance of the sandwich checks.", float, default=1e-6, min=0.0)
    chunkSize = RangeField("Grid points per parallel task.", int, default=16, min=1)


@dataclasses.dataclass
class EnvelopeResult:
    """Envelope ``f`` of ``h`` with ``h <= f <= qOrder h``.
    """

    envelope: GridDensity
    qOrder: float
    sandwichMargin: float
    K: float
    N: float
    spacing: float

    def toDict(self):
        return {"envelope": self.envelope.toDict(), "q_order": self.qOrder,
                "sandwich_margin": self.sandwichMargin, "K": self.K, "N": self.N,
                "spacing": self.spacing}


def chordValue(h, params, x, x0, x1):
    """Value at ``x`` of the model chord through ``(x0, h(x0))`` and
    ``(x1, h(x1))``.

    Parameters
    ----------
    h : `GridDensity`
        The density.
    params : `qcdlab.coefficients.CurvatureParams`
        Curvature and dimension.
    x, x0, x1 : `float`
        Points of the support with ``x0 <= x <= x1``.

    Returns
    -------
    value : `float`
        ``(sigma^{(1-t)} h(x0)^{1/(N-1)} + sigma^{(t)} h(x1)^{1/(N-1)})^{N-1}``
        with ``x = (1-t) x0 + t x1``; ``h(x)`` when the chord is degenerate or
        ``x`` is an endpoint; ``inf`` for chords at least as long as the
        maximal diameter unless both end values vanish.
    """
    a, b = h.support
    if not (a <= x0 <= x <= x1 <= b):
        raise DomainError("Need a <= x0 <= x <= x1 <= b, got x0=%g, x=%g, x1=%g on [%g, %g]"
                          % (x0, x, x1, a, b))
    if x == x0:
        return float(h(x0))
    if x == x1:
        return float(h(x1))
    N = params.N
    theta = x1 - x0
    t = (x - x0)/theta
    r0 = float(h(x0))**(1.0/(N - 1.0))
    r1 = float(h(x1))**(1.0/(N - 1.0))
    root = extMul(sigma(1.0 - t, theta, params), r0) + extMul(sigma(t, theta, params), r1)
    return root**(N - 1.0)


def _envelopeRoots(grid, root, params, indices, prune):
    M = grid.size
    out = numpy.empty(len(indices))
    for n, k in enumerate(indices):
        best = root[k]
        i = numpy.arange(0, k + 1)
        j = numpy.arange(k, M)
        ri = root[i][:, None]
        rj = root[j][None, :]
        mask = (i[:, None] < k) & (j[None, :] > k)
        if prune:
            mask &= numpy.maximum(ri, rj) > best
        if not numpy.any(mask):
            out[n] = best
            continue
        ii, jj = numpy.nonzero(mask)
        x0 = grid[i[ii]]
        x1 = grid[j[jj]]
        theta = x1 - x0
        t = (grid[k] - x0)/theta
        t = numpy.clip(t, 1e-15, 1.0 - 1e-15)
        values = extMul(sigma(1.0 - t, theta, params), root[i[ii]]) + \
            extMul(sigma(t, theta, params), root[j[jj]])
        out[n] = max(best, float(numpy.max(values)))
    return out


def cdUpperEnvelope(h, params, config=None):
    """Compute the CD(K,N) upper envelope of ``h`` and its order ``Q``.

    Parameters
    ----------
    h : `GridDensity`
        The density.
    params : `qcdlab.coefficients.CurvatureParams`
        Curvature and dimension.
    config : `EnvelopeConfig`, optional
        Grid and tolerance settings.

    Returns
    -------
    result : `EnvelopeResult`
        ``qOrder`` is ``inf`` when no finite sandwich exists, for example
        when ``h`` vanishes inside its support.

    Raises
    ------
    DomainError
        Raised if ``K > 0`` and the support is longer than the maximal
        diameter.

    Notes
    -----
    The cost is cubic in the grid size. For ``K <= 0`` the two coefficients
    of a chord sum to at most one, so a chord can only beat the current
    value when one of its end values does; those pairs are skipped.
    """
    if config is None:
        config = EnvelopeConfig()
    config.validate()
    params.validate()
    dmax = maxDiameter(params)
    if h.diameter > dmax*(1.0 + 1e-12):
        raise DomainError("Support diameter %.6g exceeds the maximal diameter %.6g"
                          % (h.diameter, dmax))
    if h.size > config.grid:
        _log.info("Resampling density from %d to %d points", h.size, config.grid)
        grid = numpy.linspace(h.support[0], h.support[1], config.grid)
        h = GridDensity(h.support, h(grid))

    prune = config.prune
    if prune and params.K > 0:
        _log.info("Pruning disabled for K=%g > 0", params.K)
        prune = False

    N = params.N
    grid = h.grid
    root = h.rootValues(N)
    chunks = [list(range(s, min(s + config.chunkSize, h.size)))
              for s in range(0, h.size, config.chunkSize)]
    parts = parallelMap(lambda idx: _envelopeRoots(grid, root, params, idx, prune), chunks)
    envRoot = numpy.concatenate(parts)
    env = GridDensity(h.support, envRoot**(N - 1.0))

    f = env.values
    hv = h.values
    floor = config.epsilon*float(numpy.max(hv))
    positive = hv > floor
    vanishing = (hv == 0.0) & (f > 1e-12*float(numpy.max(f)))
    if numpy.any(vanishing) or not numpy.any(positive):
        qOrder = math.inf
        _log.warning("Envelope is positive where the density vanishes; no finite order")
    else:
        qOrder = max(1.0, float(numpy.max(f[positive]/hv[positive])))

    lower = float(numpy.min(f - hv))
    if math.isfinite(qOrder):
        upper = float(numpy.min(qOrder*hv[positive] - f[positive]))
        margin = min(lower, upper)
    else:
        margin = -math.inf
    _log.debug("Envelope on %d points: q_order=%.6g, margin=%.3g", h.size, qOrder, margin)
    return EnvelopeResult(envelope=env, qOrder=qOrder, sandwichMargin=margin,
                          K=params.K, N=N, spacing=h.spacing)
