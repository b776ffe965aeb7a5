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
"""Optimal transport on the line: monotone rearrangement, displacement
interpolation and the interpolation inequalities checked along it.

Measures are absolutely continuous with respect to a reference
``m = h dx`` given by a `~qcdlab.densities.GridDensity`. The relative
density is either piecewise constant on finitely many blocks, for which all
masses are exact, or piecewise linear on a grid.
"""

__all__ = ("TransportConfig", "AbsolutelyContinuousMeasure1D", "MonotoneMap", "DisplacementPath",
           "QuasiBmReport", "referenceIntegral", "cumulative", "quantiles", "monotoneMap",
           "displacementInterpolation", "interpolationWeights", "verifyInterpolation",
           "optimalJacobian", "quasiBm1d")

import dataclasses
import logging
import math

import numpy
from scipy import integrate

from .config import Config
from .rangeField import RangeField
from .listField import ListField
from .coefficients import sigma, extMul
from .densities import GridDensity, ClassificationReport
from .errors import DomainError
from .parallel import parallelMap

_log = logging.getLogger(__name__)


class TransportConfig(Config):
    levels = RangeField("Number of probability levels of the quantile grid.", int, default=4096, min=2)
    rhoThreshold = RangeField("Relative floor of rho0 below which samples are not checked.", float,
                              default=1e-8, min=0.0)
    massTolerance = RangeField("Allowed deviation from unit mass.", float, default=1e-6, min=0.0)
    bisectionSteps = RangeField("Bisection steps per quantile.", int, default=64, min=10)
    refinement = RangeField("Subdivision of reference cells when integrating grid densities.", int,
                            default=8, min=1)
    baseTolerance = RangeField("Absolute part of the pass threshold.", float, default=1e-9, min=0.0)
    tGrid = ListField("Interpolation times checked.", float,
                      default=[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
                      itemCheck=lambda t: 0.0 < t < 1.0, minLength=1)


def referenceIntegral(h, x):
    """Exact integral of the piecewise-linear ``h`` from its left end to ``x``.

    ``x`` is clipped to the support.
    """
    x = numpy.clip(numpy.asarray(x, dtype=float), h.support[0], h.support[1])
    v = h.values
    d = h.spacing
    cum = numpy.concatenate([[0.0], numpy.cumsum(0.5*d*(v[:-1] + v[1:]))])
    i = numpy.clip(numpy.floor((x - h.support[0])/d).astype(int), 0, h.size - 2)
    s = numpy.clip(x - (h.support[0] + i*d), 0.0, d)
    slope = (v[i + 1] - v[i])/d
    return cum[i] + v[i]*s + 0.5*slope*s**2


class AbsolutelyContinuousMeasure1D:
    """Probability measure ``rho m`` on the support of a reference density.

    Use `block`, `fromBlocks` or `fromGrid` to construct one.

    Parameters
    ----------
    reference : `GridDensity`
        Reference density ``h``.
    blocks : `list` of `tuple`, optional
        ``(lo, hi, weight)`` triples: ``rho`` equals ``weight`` on
        ``[lo, hi)``, after normalization.
    relDensity : `GridDensity`, optional
        Piecewise-linear ``rho`` on the reference grid.

    Raises
    ------
    DomainError
        Raised if the measure has zero mass or leaves the support of ``h``.
    """

    def __init__(self, reference, blocks=None, relDensity=None, refinement=8):
        if (blocks is None) == (relDensity is None):
            raise DomainError("Give exactly one of blocks and relDensity")
        self.reference = reference
        self.refinement = refinement
        a, b = reference.support
        if blocks is not None:
            clean = []
            for lo, hi, weight in blocks:
                if not (a <= lo < hi <= b):
                    raise DomainError("Block [%g, %g] is not inside the support [%g, %g]" % (lo, hi, a, b))
                if weight < 0:
                    raise DomainError("Block weights must be non-negative")
                clean.append((float(lo), float(hi), float(weight)))
            total = sum(w*(referenceIntegral(reference, hi) - referenceIntegral(reference, lo))
                        for lo, hi, w in clean)
            if not total > 0:
                raise DomainError("Measure has zero mass")
            self.blocks = [(lo, hi, w/total) for lo, hi, w in clean]
            self.relDensity = GridDensity(reference.support, self.rho(reference.grid))
        else:
            if relDensity.support != reference.support or relDensity.size != reference.size:
                raise DomainError("Relative density must live on the reference grid")
            self.blocks = None
            fine, p = self._fineDensity(relDensity.values)
            total = float(integrate.trapezoid(p, fine))
            if not total > 0:
                raise DomainError("Measure has zero mass")
            self.relDensity = GridDensity(reference.support, relDensity.values/total)
            fine, p = self._fineDensity(self.relDensity.values)
            self._fine = fine
            self._fineCdf = numpy.concatenate(
                [[0.0], numpy.cumsum(0.5*(p[:-1] + p[1:])*numpy.diff(fine))])

    @classmethod
    def block(cls, reference, a, b):
        """Normalized restriction of the reference measure to ``[a, b]``.
        """
        return cls(reference, blocks=[(a, b, 1.0)])

    @classmethod
    def fromBlocks(cls, reference, blocks):
        """Finite union of blocks with relative weights.
        """
        return cls(reference, blocks=list(blocks))

    @classmethod
    def fromGrid(cls, reference, values, refinement=8):
        """Measure with piecewise-linear relative density ``values``.
        """
        return cls(reference, relDensity=GridDensity(reference.support, values), refinement=refinement)

    def _fineDensity(self, relValues):
        ref = self.reference
        count = (ref.size - 1)*self.refinement + 1
        fine = numpy.linspace(ref.support[0], ref.support[1], count)
        p = numpy.interp(fine, ref.grid, relValues)*ref(fine)
        return fine, p

    def rho(self, x):
        """Relative density with respect to the reference measure.
        """
        x = numpy.asarray(x, dtype=float)
        if self.blocks is None:
            return self.relDensity(x)
        out = numpy.zeros(x.shape)
        for lo, hi, w in self.blocks:
            out = out + numpy.where((x >= lo) & (x < hi), w, 0.0)
        return out

    def cdf(self, x):
        """Distribution function ``F(x) = mu((-inf, x])``.
        """
        x = numpy.asarray(x, dtype=float)
        if self.blocks is None:
            return numpy.interp(x, self._fine, self._fineCdf)
        out = numpy.zeros(x.shape)
        for lo, hi, w in self.blocks:
            out = out + w*(referenceIntegral(self.reference, numpy.clip(x, lo, hi)) -
                           referenceIntegral(self.reference, lo))
        return out

    def sameReference(self, other):
        ref0 = self.reference
        ref1 = other.reference
        return ref0 is ref1 or (ref0.support == ref1.support and ref0.size == ref1.size and
                                numpy.array_equal(ref0.values, ref1.values))


def cumulative(measure, x=None):
    """Distribution function of ``measure`` on ``x`` (default: the
    reference grid).
    """
    if x is None:
        x = measure.reference.grid
    return measure.cdf(x)


def quantiles(measure, levels, steps=64):
    """Generalized inverse ``inf{x : F(x) >= level}`` by vectorized bisection.
    """
    levels = numpy.asarray(levels, dtype=float)
    lo = numpy.full(levels.shape, measure.reference.support[0])
    hi = numpy.full(levels.shape, measure.reference.support[1])
    for _ in range(steps):
        mid = 0.5*(lo + hi)
        above = measure.cdf(mid) >= levels
        hi = numpy.where(above, mid, hi)
        lo = numpy.where(above, lo, mid)
    return hi


@dataclasses.dataclass
class MonotoneMap:
    """Samples ``target = T(source)`` of the monotone rearrangement at the
    probability ``levels``.
    """

    levels: numpy.ndarray
    source: numpy.ndarray
    target: numpy.ndarray

    def __call__(self, x):
        return numpy.interp(x, self.source, self.target)

    def toDict(self):
        return {"levels": self.levels, "source": self.source, "target": self.target}


def _levels(count):
    return (numpy.arange(count) + 0.5)/count


def monotoneMap(mu0, mu1, config=None):
    """Monotone map ``T = G^{-1} o F`` pushing ``mu0`` to ``mu1``.

    Parameters
    ----------
    mu0, mu1 : `AbsolutelyContinuousMeasure1D`
        Measures over the same reference density.
    config : `TransportConfig`, optional
        Quantile grid settings.

    Returns
    -------
    T : `MonotoneMap`
        Quantiles of both measures at levels ``(k + 1/2)/levels``.
    """
    if config is None:
        config = TransportConfig()
    if not mu0.sameReference(mu1):
        raise DomainError("Both measures must share the same reference density")
    levels = _levels(config.levels)
    source = quantiles(mu0, levels, config.bisectionSteps)
    target = quantiles(mu1, levels, config.bisectionSteps)
    return MonotoneMap(levels=levels, source=source, target=target)


@dataclasses.dataclass
class DisplacementPath:
    """The interpolant ``mu_t`` at one time.

    ``mapSamples`` are ``T_t(x0) = (1-t) x0 + t T(x0)`` at the quantile
    points ``sourceSamples`` of ``mu0`` and ``jacobianSamples`` are
    ``J_t = (1-t) + t T'``. ``rhoT`` is the relative density of ``mu_t``
    on the reference grid, renormalized; ``massDefect`` is its mass error
    before renormalization.
    """

    t: float
    sourceSamples: numpy.ndarray
    mapSamples: numpy.ndarray
    jacobianSamples: numpy.ndarray
    rhoT: GridDensity
    massDefect: float

    def toDict(self):
        return {"t": self.t, "source": self.sourceSamples, "map": self.mapSamples,
                "jacobian": self.jacobianSamples, "rho_t": self.rhoT.toDict(),
                "mass_defect": self.massDefect}


def _jacobian(mu0, mu1, x0, x1):
    ref = mu0.reference
    num = mu0.rho(x0)*ref(x0)
    den = mu1.rho(x1)*ref(x1)
    with numpy.errstate(divide="ignore", invalid="ignore"):
        return numpy.where(den > 0, num/numpy.where(den > 0, den, 1.0), numpy.inf)


def displacementInterpolation(mu0, mu1, t, config=None):
    """Displacement interpolation between ``mu0`` and ``mu1`` at time ``t``.

    Parameters
    ----------
    mu0, mu1 : `AbsolutelyContinuousMeasure1D`
        Endpoint measures over the same reference.
    t : `float`
        Time in ``[0, 1]``.
    config : `TransportConfig`, optional
        Quantile grid settings.

    Returns
    -------
    path : `DisplacementPath`
        ``rhoT`` is rebuilt on the reference grid from the distribution
        function of the pushed quantiles; the endpoints return the input
        densities unchanged.

    Raises
    ------
    DomainError
        Raised if ``t`` is outside ``[0, 1]``.
    """
    if config is None:
        config = TransportConfig()
    if not 0.0 <= t <= 1.0:
        raise DomainError("t must lie in [0, 1], got %r" % (t,))
    T = monotoneMap(mu0, mu1, config)
    ref = mu0.reference
    xt = (1.0 - t)*T.source + t*T.target
    J1 = _jacobian(mu0, mu1, T.source, T.target)
    Jt = (1.0 - t) + t*J1
    if t == 0.0:
        return DisplacementPath(t=0.0, sourceSamples=T.source, mapSamples=xt, jacobianSamples=Jt,
                                rhoT=mu0.relDensity, massDefect=0.0)
    if t == 1.0:
        return DisplacementPath(t=1.0, sourceSamples=T.source, mapSamples=xt, jacobianSamples=Jt,
                                rhoT=mu1.relDensity, massDefect=0.0)

    ends = numpy.array([1e-14, 1.0 - 1e-14])
    end0 = quantiles(mu0, ends, config.bisectionSteps)
    end1 = quantiles(mu1, ends, config.bisectionSteps)
    knots = numpy.concatenate([[(1.0 - t)*end0[0] + t*end1[0]], xt, [(1.0 - t)*end0[1] + t*end1[1]]])
    levels = numpy.concatenate([[0.0], T.levels, [1.0]])
    grid = ref.grid
    d = ref.spacing
    edges = numpy.concatenate([[grid[0]], 0.5*(grid[:-1] + grid[1:]), [grid[-1]]])
    cdf = numpy.interp(edges, knots, levels, left=0.0, right=1.0)
    widths = numpy.diff(edges)
    p = numpy.diff(cdf)/widths
    h = ref.values
    rho = numpy.where(h > 0, p/numpy.where(h > 0, h, 1.0), 0.0)
    mass = float(integrate.trapezoid(rho*h, dx=d))
    if not mass > 0:
        raise DomainError("Interpolated measure lost all its mass on the reference grid")
    defect = abs(mass - 1.0)
    if defect > config.massTolerance:
        _log.info("Displacement interpolation at t=%g: mass defect %.3g before renormalization", t, defect)
    return DisplacementPath(t=float(t), sourceSamples=T.source, mapSamples=xt, jacobianSamples=Jt,
                            rhoT=GridDensity(ref.support, rho/mass), massDefect=defect)


def interpolationWeights(kind, params, Q=1.0):
    """Coefficient functions ``(sigma0, sigma1)`` of ``(s, theta)`` for an
    interpolation check.

    ``kind`` is ``"cd"``, ``"qcd"`` (both weights scaled by
    ``Q^{-1/(N-1)}``) or ``"mcp"`` (second weight zero).
    """
    N = params.N
    if kind == "cd":
        scale = 1.0
    elif kind == "qcd":
        if Q < 1:
            raise DomainError("Q must be at least 1")
        scale = Q**(-1.0/(N - 1.0))
    elif kind == "mcp":
        return (lambda s, theta: sigma(s, theta, params),
                lambda s, theta: numpy.zeros(numpy.broadcast(s, theta).shape))
    else:
        raise DomainError("Unknown interpolation condition %r" % (kind,))
    weight = (lambda s, theta: scale*sigma(s, theta, params))
    return weight, weight


def optimalJacobian(t, sigma0, sigma1, r0, r1):
    """Endpoint Jacobian ``(1-t) sigma1 r1/(t sigma0 r0)`` at which the
    interpolation inequality at one triple reduces to the density inequality
    in the root scale.
    """
    return (1.0 - t)*sigma1*r1/(t*sigma0*r0)


def verifyInterpolation(mu0, mu1, sigma0, sigma1, N, tGrid=None, config=None):
    """Check the interpolation inequality along the monotone transport.

    At every quantile point ``x0`` of ``mu0`` with
    ``rho0(x0) >= rhoThreshold max(rho0)``, and every ``t``, the check is

    ``(h_t J_t)^{1/N} >= (1-t)^{1/N} s0^{(N-1)/N} h0^{1/N}
    + t^{1/N} s1^{(N-1)/N} (h1 J1)^{1/N}``

    with ``s0 = sigma0(1-t, theta)``, ``s1 = sigma1(t, theta)``,
    ``theta = |T(x0) - x0|``, ``J1 = rho0 h0/(rho1 h1)`` and
    ``J_t = (1-t) + t J1``. This is the inequality for ``rho_t^{-1/N}``
    multiplied by ``(rho0 h0)^{1/N}``; using the exact ``J1`` keeps density
    reconstruction error out of the check.

    Parameters
    ----------
    mu0, mu1 : `AbsolutelyContinuousMeasure1D`
        Endpoint measures.
    sigma0, sigma1 : callable
        Coefficient functions of ``(s, theta)``; see `interpolationWeights`.
    N : `float`
        Dimension parameter.
    tGrid : sequence of `float`, optional
        Times; default ``config.tGrid``.
    config : `TransportConfig`, optional
        Quantile grid and tolerance settings.

    Returns
    -------
    report : `qcdlab.densities.ClassificationReport`
        Witness ``(x0, T(x0), t)`` of the worst slack.
    """
    if config is None:
        config = TransportConfig()
    if tGrid is None:
        tGrid = list(config.tGrid)
    T = monotoneMap(mu0, mu1, config)
    ref = mu0.reference
    x0 = T.source
    x1 = T.target
    rho0 = mu0.rho(x0)
    keep = (rho0 >= config.rhoThreshold*float(numpy.max(rho0))) & (mu1.rho(x1) > 0)
    x0 = x0[keep]
    x1 = x1[keep]
    J1 = _jacobian(mu0, mu1, x0, x1)
    theta = numpy.abs(x1 - x0)
    h0 = ref(x0)
    h1 = ref(x1)
    root = ref.values**(1.0/N)
    lipschitz = float(numpy.max(numpy.abs(numpy.diff(root))))/ref.spacing
    tol = config.baseTolerance + lipschitz*ref.spacing

    def check(t):
        if not 0.0 < t < 1.0:
            raise DomainError("Interpolation times must lie in (0, 1), got %r" % (t,))
        xt = (1.0 - t)*x0 + t*x1
        Jt = (1.0 - t) + t*J1
        lhs = (ref(xt)*Jt)**(1.0/N)
        s0 = numpy.asarray(sigma0(1.0 - t, theta), dtype=float)
        s1 = numpy.asarray(sigma1(t, theta), dtype=float)
        first = (1.0 - t)**(1.0/N)*extMul(s0**((N - 1.0)/N), h0**(1.0/N))
        second = t**(1.0/N)*extMul(s1**((N - 1.0)/N), (h1*J1)**(1.0/N))
        with numpy.errstate(invalid="ignore"):
            slack = lhs - (first + second)
        slack = numpy.where(numpy.isnan(slack), -numpy.inf, slack)
        if slack.size == 0:
            return math.inf, None
        k = int(numpy.argmin(slack))
        return float(slack[k]), (float(x0[k]), float(x1[k]), float(t))

    results = parallelMap(check, list(tGrid))
    worst = math.inf
    witness = None
    for value, where in results:
        if value < worst:
            worst = value
            witness = where
    checks = int(x0.size*len(tGrid))
    _log.debug("verifyInterpolation: worst slack %.3g at %s over %d checks", worst, witness, checks)
    return ClassificationReport(passed=bool(worst >= -tol), worstViolation=float(worst), witness=witness,
                                checksPerformed=checks, tolerance=float(tol), kind="interpolation(N=%g)" % N)


@dataclasses.dataclass
class QuasiBmReport:
    """Slack of the one-dimensional quasi Brunn-Minkowski inequality.
    """

    massA: float
    massB: float
    massZ: float
    intervalZ: tuple
    slack: float
    passed: bool

    def toDict(self):
        return dataclasses.asdict(self)


def quasiBm1d(reference, A, B, t, Q, N, tolerance=1e-9):
    """Evaluate ``m(Z)^{1/N} >= Q^{-1/N}((1-t) m(A)^{1/N} + t m(B)^{1/N})``
    for intervals ``A``, ``B`` and ``Z = (1-t) A + t B``.

    Parameters
    ----------
    reference : `GridDensity`
        The measure ``m``.
    A, B : `tuple` of `float`
        Intervals inside the support.
    t : `float`
        Time in ``[0, 1]``.
    Q : `float`
        Order, at least 1.
    N : `float`
        Dimension parameter.
    tolerance : `float`, optional
        Pass threshold.
    """
    a, b = reference.support
    for name, (lo, hi) in (("A", A), ("B", B)):
        if not (a <= lo <= hi <= b):
            raise DomainError("%s = [%g, %g] is not inside the support [%g, %g]" % (name, lo, hi, a, b))
    if not 0.0 <= t <= 1.0:
        raise DomainError("t must lie in [0, 1], got %r" % (t,))
    if Q < 1:
        raise DomainError("Q must be at least 1")

    def mass(lo, hi):
        return float(referenceIntegral(reference, hi) - referenceIntegral(reference, lo))

    z = ((1.0 - t)*A[0] + t*B[0], (1.0 - t)*A[1] + t*B[1])
    mA = mass(*A)
    mB = mass(*B)
    mZ = mass(*z)
    slack = mZ**(1.0/N) - Q**(-1.0/N)*((1.0 - t)*mA**(1.0/N) + t*mB**(1.0/N))
    return QuasiBmReport(massA=mA, massB=mB, massZ=mZ, intervalZ=z, slack=slack,
                         passed=bool(slack >= -tolerance))
