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
"""One-dimensional densities and their classification against the
curvature-dimension family of interpolation inequalities.

Every condition is checked in the root scale ``r = h^{1/(N-1)}``. For a pair
of points ``x0, x1`` at distance ``theta`` and a time ``t`` write
``a = sigma^{(1-t)}(theta) r(x0)`` and ``b = sigma^{(t)}(theta) r(x1)``. The
required lower bound for ``r((1-t) x0 + t x1)`` is

- ``a + b`` for CD(K,N);
- ``(a + b)/Q^{1/(N-1)}`` for QCD(Q,K,N);
- ``a`` for MCP(K,N), over ordered pairs;
- ``(a^q + b^q)^{1/q}`` with ``q = (N-1)/(n-1)`` for CGTD(K,N,n), and
  ``max(a, b)`` when ``n = 1``.
"""

__all__ = ("GridDensity", "ModelDensity", "ConditionSpec", "ClassifyConfig",
           "ClassificationReport", "modelDensity", "sampleModel", "classify",
           "oneSidedMcp", "randomQcdDensity", "DEFAULT_MODEL_GRID")

import dataclasses
import json
import logging
import math

import numpy
from scipy import integrate

from .config import Config, Field
from .rangeField import RangeField
from .choiceField import ChoiceField
from .listField import ListField
from .coefficients import CurvatureParams, sigma, maxDiameter, extMul
from .errors import DomainError
from .parallel import parallelMap

_log = logging.getLogger(__name__)

DEFAULT_MODEL_GRID = 513
DEFAULT_SEED = 20240229


@dataclasses.dataclass
class GridDensity:
    """A continuous density on ``[a, b]`` sampled on a uniform grid and
    linearly interpolated between grid points.

    Parameters
    ----------
    support : `tuple` of `float`
        The interval ``(a, b)`` with ``b > a``.
    values : `numpy.ndarray`
        ``M >= 2`` finite non-negative samples at ``linspace(a, b, M)``.
    """

    support: tuple
    values: numpy.ndarray

    def __post_init__(self):
        a, b = (float(s) for s in self.support)
        if not (math.isfinite(a) and math.isfinite(b)) or not b > a:
            raise DomainError("Support must be a bounded interval [a, b] with b > a, got %r"
                              % (self.support,))
        values = numpy.array(self.values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise DomainError("A grid density needs at least 2 values")
        if not numpy.all(numpy.isfinite(values)):
            raise DomainError("Density values must be finite")
        if numpy.any(values < 0):
            raise DomainError("Density values must be non-negative")
        self.support = (a, b)
        self.values = values

    @property
    def size(self):
        return self.values.size

    @property
    def grid(self):
        return numpy.linspace(self.support[0], self.support[1], self.size)

    @property
    def spacing(self):
        return (self.support[1] - self.support[0])/(self.size - 1)

    @property
    def diameter(self):
        return self.support[1] - self.support[0]

    def __call__(self, x):
        """Evaluate the piecewise-linear interpolant; zero off the support.
        """
        return numpy.interp(x, self.grid, self.values, left=0.0, right=0.0)

    def rootValues(self, N):
        """Return ``h^{1/(N-1)}`` at the grid points.
        """
        return self.values**(1.0/(N - 1.0))

    def lipschitzBound(self, N):
        """Largest grid difference quotient of ``h^{1/(N-1)}``.
        """
        return float(numpy.max(numpy.abs(numpy.diff(self.rootValues(N)))))/self.spacing

    def mass(self):
        """Integral of the interpolant (trapezoidal rule, exact for it).
        """
        return float(integrate.trapezoid(self.values, dx=self.spacing))

    def restrict(self, a, b):
        """Resample the interpolant on ``[a, b]`` at the same spacing.
        """
        if a < self.support[0] or b > self.support[1] or not b > a:
            raise DomainError("[%g, %g] is not a sub-interval of [%g, %g]"
                              % (a, b, self.support[0], self.support[1]))
        count = max(3, int(round((b - a)/self.spacing)) + 1)
        grid = numpy.linspace(a, b, count)
        return GridDensity((a, b), numpy.interp(grid, self.grid, self.values))

    def toDict(self):
        return {"support": list(self.support), "values": self.values.tolist()}

    @classmethod
    def fromDict(cls, data, modelGrid=DEFAULT_MODEL_GRID):
        """Build a density from its JSON form.

        Parameters
        ----------
        data : `dict`
            Either ``{"support": [a, b], "values": [...]}`` or
            ``{"model": {"K": ..., "N": ..., "support": [a, b], "u0": ...,
            "slope0": ...}}``.
        modelGrid : `int`, optional
            Number of samples used to materialize a model density.

        Raises
        ------
        DomainError
            Raised with a field-level message if the document is malformed.
        """
        if not isinstance(data, dict):
            raise DomainError("density: expected a JSON object")
        if "model" in data:
            spec = data["model"]
            if not isinstance(spec, dict):
                raise DomainError("density.model: expected a JSON object")
            for key in ("K", "N", "support", "u0", "slope0"):
                if key not in spec:
                    raise DomainError("density.model.%s: missing" % key)
            try:
                params = CurvatureParams(K=float(spec["K"]), N=float(spec["N"]))
            except (TypeError, ValueError) as e:
                raise DomainError("density.model: %s" % e)
            support = _readSupport(spec["support"], "density.model.support")
            start = []
            for key in ("u0", "slope0"):
                try:
                    start.append(float(spec[key]))
                except (TypeError, ValueError):
                    raise DomainError("density.model.%s: expected a number, got %r" % (key, spec[key]))
            model = modelDensity(params, support, *start)
            return sampleModel(model, modelGrid)
        for key in ("support", "values"):
            if key not in data:
                raise DomainError("density.%s: missing" % key)
        support = _readSupport(data["support"], "density.support")
        try:
            values = numpy.array(data["values"], dtype=float)
        except (TypeError, ValueError):
            raise DomainError("density.values: expected a list of numbers")
        try:
            return cls(support, values)
        except DomainError as e:
            raise DomainError("density.values: %s" % e)

    @classmethod
    def load(cls, path, modelGrid=DEFAULT_MODEL_GRID):
        """Read a density JSON file.
        """
        with open(path, "r") as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as e:
                raise DomainError("%s: malformed JSON (%s)" % (path, e))
        return cls.fromDict(data, modelGrid=modelGrid)

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.toDict(), f, indent=2)
            f.write("\n")


def _readSupport(value, where):
    try:
        a, b = (float(v) for v in value)
    except (TypeError, ValueError):
        raise DomainError("%s: expected [a, b]" % where)
    return (a, b)


@dataclasses.dataclass
class ModelDensity:
    """Density ``u^{N-1}`` with ``u'' + (K/(N-1)) u = 0`` on its support.

    ``u`` is written in the fundamental basis at the left endpoint ``a``,
    with ``s = x - a`` and ``w = sqrt(|K|/(N-1))``: ``A cos(w s) +
    B sin(w s)`` for ``K > 0``, ``A + B s`` for ``K = 0`` and
    ``A cosh(w s) + B sinh(w s)`` for ``K < 0``.
    """

    params: CurvatureParams
    support: tuple
    coefA: float
    coefB: float

    @property
    def omega(self):
        return math.sqrt(abs(self.params.kappa))

    def u(self, x):
        s = numpy.asarray(x, dtype=float) - self.support[0]
        K = self.params.K
        w = self.omega
        if K > 0:
            out = self.coefA*numpy.cos(w*s) + self.coefB*numpy.sin(w*s)
        elif K < 0:
            out = self.coefA*numpy.cosh(w*s) + self.coefB*numpy.sinh(w*s)
        else:
            out = self.coefA + self.coefB*s
        # roots of u land on rounding noise at the support ends
        floor = 1e-12*(abs(self.coefA) + abs(self.coefB)*max(1.0, self.support[1] - self.support[0]))
        return numpy.where(out > floor, out, 0.0)

    def __call__(self, x):
        return self.u(x)**(self.params.N - 1.0)

    def toDict(self):
        return {"K": self.params.K, "N": self.params.N, "support": list(self.support),
                "coefA": self.coefA, "coefB": self.coefB}


def _firstZero(K, w, A, B):
    """Smallest ``s > 0`` where the model ``u`` vanishes (``inf`` if none).
    """
    if K > 0:
        if A == 0 and B == 0:
            return 0.0
        psi = math.atan2(A, B)
        if psi >= math.pi or psi < 0:
            return 0.0
        return (math.pi - psi)/w
    if K < 0:
        if A == 0:
            return math.inf if B > 0 else 0.0
        if B >= 0:
            return math.inf
        ratio = -A/B
        if ratio >= 1.0:
            return math.inf
        return math.atanh(ratio)/w
    if A == 0:
        return math.inf if B > 0 else 0.0
    if B >= 0:
        return math.inf
    return -A/B


def modelDensity(params, support, u0, slope0):
    """Build the CD(K,N) model density with ``u(a) = u0`` and
    ``u'(a) = slope0`` at the left endpoint ``a`` of ``support``.

    Parameters
    ----------
    params : `CurvatureParams`
        Curvature and dimension.
    support : `tuple` of `float`
        Interval ``(a, b)``.
    u0 : `float`
        Non-negative value of ``u = f^{1/(N-1)}`` at ``a``.
    slope0 : `float`
        Derivative of ``u`` at ``a``.

    Returns
    -------
    model : `ModelDensity`

    Raises
    ------
    DomainError
        Raised if the support is longer than the Bonnet-Myers diameter or if
        ``u`` vanishes inside the support.
    """
    params.validate()
    a, b = (float(s) for s in support)
    if not b > a:
        raise DomainError("Support must satisfy b > a, got %r" % (support,))
    if u0 < 0:
        raise DomainError("u0 must be non-negative, got %r" % (u0,))
    length = b - a
    dmax = maxDiameter(params)
    if length > dmax*(1.0 + 1e-12):
        raise DomainError("Support diameter %.6g exceeds the maximal diameter %.6g for K=%g, N=%g"
                          % (length, dmax, params.K, params.N))
    w = math.sqrt(abs(params.kappa))
    A = float(u0)
    B = float(slope0)/w if params.K != 0 else float(slope0)
    zero = _firstZero(params.K, w, A, B)
    if zero < length*(1.0 - 1e-12):
        raise DomainError("Model density u crosses zero at distance %.6g inside the support of length %.6g"
                          % (zero, length))
    return ModelDensity(params=params, support=(a, b), coefA=A, coefB=B)


def sampleModel(m, M):
    """Sample a model density uniformly at ``M >= 2`` points of its support.
    """
    if M < 2:
        raise DomainError("Need at least 2 samples, got %d" % M)
    grid = numpy.linspace(m.support[0], m.support[1], M)
    return GridDensity(m.support, m(grid))


class ConditionSpec(Config):
    """Which interpolation condition to check, with its parameters.
    """

    kind = ChoiceField("Condition family.", str,
                       allowed={"cd": "curvature-dimension CD(K,N)",
                                "mcp": "measure contraction MCP(K,N)",
                                "qcd": "quasi curvature-dimension QCD(Q,K,N)",
                                "cgtd": "curvature geodesic-topological dimension CGTD(K,N,n)"},
                       default="cd", optional=False)
    K = Field("Curvature lower bound.", float, default=0.0)
    N = RangeField("Dimension upper bound.", float, default=2.0, min=1.0, inclusiveMin=False)
    Q = RangeField("Quasi-convexity order (QCD only).", float, default=1.0, min=1.0)
    n = RangeField("Topological dimension (CGTD only).", float, default=None, optional=True, min=1.0)

    def validate(self):
        super().validate()
        if self.kind == "cgtd":
            if self.n is None:
                raise DomainError("CGTD needs the topological dimension n")
            if self.n > self.N:
                raise DomainError("CGTD needs n <= N, got n=%g, N=%g" % (self.n, self.N))

    @property
    def params(self):
        return CurvatureParams(K=self.K, N=self.N)

    def label(self):
        if self.kind == "qcd":
            return "QCD(%g,%g,%g)" % (self.Q, self.K, self.N)
        if self.kind == "cgtd":
            return "CGTD(%g,%g,%g)" % (self.K, self.N, self.n)
        return "%s(%g,%g)" % (self.kind.upper(), self.K, self.N)


class ClassifyConfig(Config):
    tGrid = ListField("Fixed interpolation times checked for every pair.", float,
                      default=[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
                      itemCheck=lambda t: 0.0 < t < 1.0, minLength=1)
    randomT = RangeField("Additional uniformly random times per pair.", int, default=16, min=0)
    seed = Field("Seed of the random times.", int, default=DEFAULT_SEED)
    baseTolerance = RangeField("Absolute part of the pass threshold.", float, default=1e-9, min=0.0)
    chunkSize = RangeField("Rows of the pair matrix evaluated per task.", int, default=32, min=1)


@dataclasses.dataclass
class ClassificationReport:
    """Verdict of a grid check of an interpolation inequality.

    ``worstViolation`` is the smallest signed slack found (negative means
    violated) and ``witness`` the ``(x0, x1, t)`` attaining it.
    """

    passed: bool
    worstViolation: float
    witness: tuple
    checksPerformed: int
    tolerance: float
    kind: str
    nullSetCaveat: bool = True
    diagnostic: str = None

    def toDict(self):
        return dataclasses.asdict(self)


def _requiredRoot(a, b, spec):
    """Lower bound for the root value at the intermediate point.
    """
    if spec.kind == "cd":
        return a + b
    if spec.kind == "qcd":
        return (a + b)*spec.Q**(-1.0/(spec.N - 1.0))
    if spec.kind == "mcp":
        return a
    n = spec.n
    if n <= 1.0:
        return numpy.maximum(a, b)
    q = (spec.N - 1.0)/(n - 1.0)
    with numpy.errstate(over="ignore", invalid="ignore"):
        scale = numpy.maximum(a, b)
        safe = numpy.where((scale > 0) & numpy.isfinite(scale), scale, 1.0)
        norm = safe*((a/safe)**q + (b/safe)**q)**(1.0/q)
    return numpy.where(numpy.isinf(scale), numpy.inf, numpy.where(scale > 0, norm, 0.0))


def oneSidedMcp(r0, r1, sigma0, sigma1):
    """Two-sided maximum of measure-contraction bounds,
    ``max(sigma0 r0, sigma1 r1)`` with ``inf * 0 = 0``; the requirement of
    CGTD(K,N,1).
    """
    return numpy.maximum(extMul(sigma0, r0), extMul(sigma1, r1))


def classify(h, spec, config=None):
    """Check a grid density against a condition on all pairs of grid points.

    Parameters
    ----------
    h : `GridDensity`
        Density with at least 3 samples.
    spec : `ConditionSpec`
        Condition to check.
    config : `ClassifyConfig`, optional
        Times, seed and tolerance.

    Returns
    -------
    report : `ClassificationReport`
        Passes when the worst slack is at least ``-(baseTolerance + L delta)``
        with ``delta`` the grid spacing and ``L`` the Lipschitz bound of
        ``h^{1/(N-1)}``.

    Raises
    ------
    DomainError
        Raised for grids with fewer than 3 points, invalid specs, or, for
        QCD and CGTD, densities vanishing at an interior grid point.
    """
    if config is None:
        config = ClassifyConfig()
    config.validate()
    spec.validate()
    if h.size < 3:
        raise DomainError("Classification needs at least 3 grid points")
    params = spec.params
    N = spec.N
    if spec.kind in ("qcd", "cgtd"):
        interior = h.values[1:-1]
        if numpy.any(interior == 0.0):
            raise DomainError("Density vanishes in the interior of its support; "
                              "the support of a %s density is an interval" % spec.kind.upper())

    tol = config.baseTolerance + h.lipschitzBound(N)*h.spacing
    dmax = maxDiameter(params)
    if h.diameter > dmax*(1.0 + 1e-12):
        msg = "support diameter %.6g exceeds maximal diameter %.6g" % (h.diameter, dmax)
        _log.info("classify %s: %s", spec.label(), msg)
        return ClassificationReport(passed=False, worstViolation=-math.inf, witness=None,
                                    checksPerformed=0, tolerance=tol, kind=spec.label(),
                                    diagnostic=msg)

    grid = h.grid
    root = h.rootValues(N)
    fixedT = numpy.array(list(config.tGrid), dtype=float)
    M = h.size
    starts = list(range(0, M, config.chunkSize))

    def evaluate(index):
        start = starts[index]
        rows = numpy.arange(start, min(start + config.chunkSize, M))
        rng = numpy.random.default_rng([config.seed, index])
        randomT = numpy.clip(rng.random((rows.size, M, config.randomT)), 1e-12, 1.0 - 1e-12)
        t = numpy.concatenate([numpy.broadcast_to(fixedT, (rows.size, M, fixedT.size)), randomT],
                              axis=2)
        x0 = grid[rows][:, None, None]
        x1 = grid[None, :, None]
        theta = numpy.broadcast_to(numpy.abs(x1 - x0), t.shape)
        xt = (1.0 - t)*x0 + t*x1
        lhs = h(xt)**(1.0/(N - 1.0))
        a = extMul(sigma(1.0 - t, theta, params), root[rows][:, None, None])
        b = extMul(sigma(t, theta, params), root[None, :, None])
        with numpy.errstate(invalid="ignore"):
            slack = lhs - _requiredRoot(a, b, spec)
        slack = numpy.where(numpy.isnan(slack), -numpy.inf, slack)
        slack[rows[:, None] == numpy.arange(M)[None, :]] = numpy.inf
        flat = int(numpy.argmin(slack))
        i, j, k = numpy.unravel_index(flat, slack.shape)
        return (float(slack[i, j, k]), (float(grid[rows[i]]), float(grid[j]), float(t[i, j, k])),
                slack.size - rows.size*t.shape[2])

    results = parallelMap(evaluate, range(len(starts)))
    worst = math.inf
    witness = None
    checks = 0
    for value, where, count in results:
        checks += count
        if value < worst:
            worst = value
            witness = where
    passed = worst >= -tol
    _log.debug("classify %s: worst slack %.3g at %s over %d checks (tolerance %.3g)",
               spec.label(), worst, witness, checks, tol)
    return ClassificationReport(passed=bool(passed), worstViolation=float(worst), witness=witness,
                                checksPerformed=int(checks), tolerance=float(tol), kind=spec.label())


def randomQcdDensity(rng, Q, N, M=DEFAULT_MODEL_GRID, support=(0.0, 1.0)):
    """Draw a QCD(Q,0,N) density: a CD(0,N) model sample times an
    oscillation with values in ``[1, Q]``.

    Parameters
    ----------
    rng : `numpy.random.Generator`
        Source of randomness.
    Q : `float`
        Quasi-convexity order, at least 1.
    N : `float`
        Dimension bound.
    M : `int`, optional
        Number of samples.
    support : `tuple` of `float`, optional
        Support interval.

    Returns
    -------
    h : `GridDensity`
        A density with ``f <= h <= Q f`` for a CD(0,N) density ``f``.
    """
    a, b = support
    uLeft, uRight = rng.uniform(0.3, 1.5, size=2)
    params = CurvatureParams(K=0.0, N=N)
    model = modelDensity(params, (a, b), uLeft, (uRight - uLeft)/(b - a))
    grid = numpy.linspace(a, b, M)
    frequency = rng.uniform(1.0, 6.0)*2.0*math.pi/(b - a)
    phase = rng.uniform(0.0, 2.0*math.pi)
    wave = 1.0 + (Q - 1.0)*0.5*(1.0 + numpy.sin(frequency*(grid - a) + phase))
    return GridDensity((a, b), model(grid)*wave)
