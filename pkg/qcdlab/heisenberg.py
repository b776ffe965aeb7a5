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
"""Sub-Riemannian geometry of the first Heisenberg group.

Points are ``(x, y, t)`` with ``z = x + iy`` and group law
``(z, t)(z', t') = (z + z', t + t' + Im(conj(z) z')/2)``. The horizontal
frame is ``X = d_x - (y/2) d_t``, ``Y = d_y + (x/2) d_t`` and the normal
geodesics are the projections of the flow of
``H = ((p_x - y p_t/2)^2 + (p_y + x p_t/2)^2)/2``.

Writing ``w = h_X + i h_Y`` for the horizontal velocity, Hamilton's
equations reduce to ``w' = i p_t w`` with ``p_t`` constant, so a geodesic
leaving the identity with covector ``(p_x, p_y, phi)`` is

    z(s) = w0 (exp(i phi s) - 1)/(i phi),
    t(s) = |w0|^2 (phi s - sin(phi s))/(2 phi^2),

with ``w0 = p_x + i p_y`` and length ``|w0|`` at time one. It minimizes up
to ``|phi| = 2 pi``. For a target with ``r = |z| > 0`` the minimizing
``phi`` is the unique root in ``(-2 pi, 2 pi)`` of
``(phi - sin phi)/(8 sin^2(phi/2)) = t/r^2``; targets on the ``t`` axis are
reached by a circle of geodesics with ``phi = 2 pi sign(t)`` and length
``2 sqrt(pi |t|)``.

Two shooting solvers are provided: the bisection on ``phi`` above, which
is vectorized and drives the Monte-Carlo estimates, and `ccDistance`, a
multi-start damped Newton iteration on the full covector that serves as
the reference. ``geometry="euclidean"`` in `H1Config` swaps in flat
``R^3`` for sanity checks.
"""

__all__ = ("H1Point", "H1Covector", "H1Config", "GeodesicSamples", "ShootingSolution", "BMReport",
           "BetaEstimate", "ShrinkageReport", "groupMul", "groupInverse", "dilation", "hamiltonian",
           "hamiltonianFlow", "expMap", "shootGeodesic", "ccDistance", "distance", "midpoint",
           "ccBallSample", "voxelVolume", "distortionBetaEstimate", "quasiBmEstimate",
           "juilletShrinkage")

import cmath
import dataclasses
import logging
import math
import typing

import numpy

from .config import Config, Field
from .rangeField import RangeField
from .choiceField import ChoiceField
from .coefficients import qcdFromMcp
from .densities import DEFAULT_SEED
from .errors import ConvergenceError, DomainError, VolumeBudgetError
from .parallel import parallelMap

_log = logging.getLogger(__name__)

TWO_PI = 2.0*math.pi
AXIS_TOLERANCE = 1e-10
BISECTION_STEPS = 80
CHUNK = 1 << 16
MAX_SAMPLING_ROUNDS = 200
JACOBIAN_STEP = 1e-6


class H1Point(typing.NamedTuple):
    x: float
    y: float
    t: float


class H1Covector(typing.NamedTuple):
    px: float
    py: float
    pt: float


class H1Config(Config):
    geometry = ChoiceField("Metric used for distances and midpoints.", str,
                           allowed={"heisenberg": "Carnot-Caratheodory metric of H^1",
                                    "euclidean": "flat R^3"},
                           default="heisenberg", optional=False)
    ptGridSize = RangeField("Number of vertical momenta in the Newton start grid.", int, default=17,
                            min=1)
    ptRange = RangeField("Start grid covers p_t in [-ptRange, ptRange].", float, default=4.0*math.pi,
                         min=0.0)
    angularStarts = RangeField("Horizontal directions tried per vertical momentum.", int, default=4,
                               min=1)
    newtonMaxIter = RangeField("Newton iterations per start.", int, default=60, min=1)
    newtonTolerance = RangeField("Endpoint error accepted by the Newton shooter, relative to "
                                 "max(1, |target|).", float, default=1e-11, min=0.0, inclusiveMin=False)
    flowSteps = RangeField("RK4 steps of the Hamiltonian flow.", int, default=256, min=16)
    voxelFraction = RangeField("Voxel edge relative to the ball frame in volume estimates.", float,
                               default=0.1, min=0.0, max=1.0, inclusiveMin=False, inclusiveMax=True)
    betaVoxelFraction = RangeField("Voxel edge relative to the ball frame in distortion estimates.",
                                   float, default=0.125, min=0.0, max=1.0, inclusiveMin=False,
                                   inclusiveMax=True)
    voxelBudget = RangeField("Largest voxel index box, in cells; occupied voxels are counted sparsely.",
                             int, default=500000000, min=1)
    batches = RangeField("Batches of the batch-means standard errors.", int, default=10, min=2)
    seed = Field("Seed of the Monte-Carlo estimates.", int, default=DEFAULT_SEED)


@dataclasses.dataclass
class GeodesicSamples:
    """Samples of a normal geodesic at the times ``s``.
    """

    s: numpy.ndarray
    points: numpy.ndarray
    covectors: numpy.ndarray
    energy: numpy.ndarray

    def toDict(self):
        return {"s": self.s, "points": self.points, "covectors": self.covectors,
                "energy": self.energy}


@dataclasses.dataclass
class ShootingSolution:
    covector: H1Covector
    length: float
    unique: bool

    def toDict(self):
        return {"covector": list(self.covector), "length": self.length, "unique": self.unique}


@dataclasses.dataclass
class BMReport:
    """Monte-Carlo Brunn-Minkowski experiment on two balls.

    ``slackBm`` is ``m(Z)^{1/n} - (1-t)^{N/n} m(A)^{1/n} - t^{N/n} m(B)^{1/n}``
    and ``slackQbm`` is
    ``m(Z)^{1/N} - Q^{-1/N} ((1-t) m(A)^{1/N} + t m(B)^{1/N})``, where ``Z``
    is the set of ``t``-midpoints. Standard errors come from batch means.
    """

    volA: float
    volAStderr: float
    volB: float
    volBStderr: float
    volZ: float
    volZStderr: float
    slackBm: float
    slackBmStderr: float
    slackQbm: float
    slackQbmStderr: float
    t: float
    n: int
    N: int
    Q: float
    samples: int
    seed: int
    geometry: str
    nonUniqueFraction: float

    def toDict(self):
        return {"vol_a": self.volA, "vol_a_stderr": self.volAStderr,
                "vol_b": self.volB, "vol_b_stderr": self.volBStderr,
                "vol_z": self.volZ, "vol_z_stderr": self.volZStderr,
                "slack_bm": self.slackBm, "slack_bm_stderr": self.slackBmStderr,
                "slack_qbm": self.slackQbm, "slack_qbm_stderr": self.slackQbmStderr,
                "t": self.t, "n": self.n, "N": self.N, "Q": self.Q, "samples": self.samples,
                "seed": self.seed, "geometry": self.geometry,
                "non_unique_fraction": self.nonUniqueFraction}


@dataclasses.dataclass
class BetaEstimate:
    estimate: float
    stderr: float
    jacobianDeterminant: float
    lowerBound: float
    t: float
    r: float
    samples: int
    seed: int
    geometry: str

    def toDict(self):
        return {"estimate": self.estimate, "stderr": self.stderr,
                "jacobian_determinant": self.jacobianDeterminant, "lower_bound": self.lowerBound,
                "t": self.t, "r": self.r, "samples": self.samples, "seed": self.seed,
                "geometry": self.geometry}


@dataclasses.dataclass
class ShrinkageReport:
    ratio: float
    stderr: float
    massRatio: float
    limit: float
    radius: float
    height: float
    t: float
    samples: int
    seed: int
    geometry: str

    def toDict(self):
        return {"ratio": self.ratio, "stderr": self.stderr, "mass_ratio": self.massRatio,
                "limit": self.limit, "radius": self.radius, "height": self.height, "t": self.t,
                "samples": self.samples, "seed": self.seed, "geometry": self.geometry}


def _g(u):
    """``(u - sin u)/u^2``, odd, with ``_g(0) = 0``.
    """
    u = numpy.asarray(u, dtype=float)
    small = numpy.abs(u) < 1e-3
    safe = numpy.where(small, 1.0, u)
    exact = (safe - numpy.sin(safe))/safe**2
    series = u/6.0 - u**3/120.0 + u**5/5040.0
    return numpy.where(small, series, exact)


def _sincHalf(u):
    """``2 sin(u/2)/u``.
    """
    return numpy.sinc(numpy.asarray(u, dtype=float)/TWO_PI)


def _gScalar(u):
    if abs(u) < 1e-3:
        return u/6.0 - u**3/120.0 + u**5/5040.0
    return (u - math.sin(u))/u**2


def _sincHalfScalar(u):
    if abs(u) < 1e-4:
        return 1.0 - u*u/24.0
    return 2.0*math.sin(0.5*u)/u


def _solvePhi(m):
    """Solve ``_g(phi)/(2 _sincHalf(phi)^2) = m`` for ``phi`` in
    ``(-2 pi, 2 pi)``; the left side increases from ``-inf`` to ``inf``.
    """
    lo = numpy.full(numpy.shape(m), -TWO_PI)
    hi = numpy.full(numpy.shape(m), TWO_PI)
    for _ in range(BISECTION_STEPS):
        mid = 0.5*(lo + hi)
        below = _g(mid)/(2.0*_sincHalf(mid)**2) < m
        lo = numpy.where(below, mid, lo)
        hi = numpy.where(below, hi, mid)
    return 0.5*(lo + hi)


def _expFromIdentity(w0, phi, s):
    u = phi*s
    z = w0*s*numpy.exp(0.5j*u)*_sincHalf(u)
    t = numpy.abs(w0)**2*s**2*_g(u)/2.0
    return numpy.stack(numpy.broadcast_arrays(z.real, z.imag, t), axis=-1)


class _HeisenbergGeometry:
    name = "heisenberg"
    n = 3
    N = 5

    def mul(self, a, b):
        out = a + b
        out[..., 2] += 0.5*(a[..., 0]*b[..., 1] - a[..., 1]*b[..., 0])
        return out

    def inverse(self, a):
        return -a

    def translationFrame(self, a):
        """Matrix of the affine map ``w -> a w`` minus ``a``.
        """
        return numpy.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-0.5*a[1], 0.5*a[0], 1.0]])

    def ballFrame(self, r):
        # Dido: a ball of radius r reaches |t| <= r^2/(2 pi)
        return numpy.diag([r, r, r*r/TWO_PI])

    def shoot(self, g):
        x, y, t = g[..., 0], g[..., 1], g[..., 2]
        r = numpy.hypot(x, y)
        zero = (r == 0.0) & (t == 0.0)
        axis = ~zero & (r <= AXIS_TOLERANCE*numpy.sqrt(numpy.abs(t)))
        regular = ~zero & ~axis
        phi = numpy.zeros_like(r)
        length = numpy.zeros_like(r)
        if numpy.any(regular):
            phi[regular] = _solvePhi(t[regular]/r[regular]**2)
            length[regular] = r[regular]/_sincHalf(phi[regular])
        phi[axis] = TWO_PI*numpy.sign(t[axis])
        length[axis] = 2.0*numpy.sqrt(math.pi*numpy.abs(t[axis]))
        w0 = length*numpy.exp(1j*(numpy.arctan2(y, x) - 0.5*phi))
        return w0, phi, length, ~axis

    def distanceFromIdentity(self, g):
        return self.shoot(g)[2]

    def midpointFromIdentity(self, g, t):
        w0, phi, _, unique = self.shoot(g)
        return _expFromIdentity(w0, phi, t), unique


class _EuclideanGeometry:
    name = "euclidean"
    n = 3
    N = 3

    def mul(self, a, b):
        return a + b

    def inverse(self, a):
        return -a

    def translationFrame(self, a):
        return numpy.eye(3)

    def ballFrame(self, r):
        return r*numpy.eye(3)

    def distanceFromIdentity(self, g):
        return numpy.linalg.norm(g, axis=-1)

    def midpointFromIdentity(self, g, t):
        return t*g, numpy.ones(g.shape[:-1], dtype=bool)


_GEOMETRIES = {"heisenberg": _HeisenbergGeometry(), "euclidean": _EuclideanGeometry()}
_HEISENBERG = _GEOMETRIES["heisenberg"]


def _geometry(config):
    if config is None:
        return _HEISENBERG
    return _GEOMETRIES[config.geometry]


def _asPoints(points):
    arr = numpy.array(points, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] != 3:
        raise DomainError("Points need three coordinates, got shape %s" % (arr.shape,))
    if not numpy.all(numpy.isfinite(arr)):
        raise DomainError("Points must be finite")
    return arr


def _point(arr):
    if arr.ndim == 1:
        return H1Point(*(float(v) for v in arr))
    return arr


def _chunked(func, *arrays):
    n = len(arrays[0])
    if n <= CHUNK:
        return func(*arrays)
    parts = parallelMap(lambda s: func(*(arr[s:s + CHUNK] for arr in arrays)), range(0, n, CHUNK))
    if isinstance(parts[0], tuple):
        return tuple(numpy.concatenate(p) for p in zip(*parts))
    return numpy.concatenate(parts)


def _checkTime(t, allowOne=False):
    if not (0.0 < t < 1.0 or (allowOne and t == 1.0)):
        raise DomainError("Interpolation time must lie in (0, 1), got %r" % (t,))


def groupMul(a, b):
    """Group product ``a b`` of points or stacks of points.
    """
    return _point(_HEISENBERG.mul(_asPoints(a), _asPoints(b)))


def groupInverse(a):
    return _point(-_asPoints(a))


def dilation(a, lam):
    """Carnot dilation ``(x, y, t) -> (lam x, lam y, lam^2 t)``.
    """
    arr = _asPoints(a)*numpy.array([lam, lam, lam*lam])
    return _point(arr)


def hamiltonian(point, covector):
    x, y, _ = point
    px, py, pt = covector
    hX = px - 0.5*y*pt
    hY = py + 0.5*x*pt
    return 0.5*(hX*hX + hY*hY)


def _hamiltonField(state):
    x, y, _, px, py, pt = state
    hX = px - 0.5*y*pt
    hY = py + 0.5*x*pt
    return numpy.array([hX, hY, 0.5*(x*hY - y*hX), -0.5*hY*pt, 0.5*hX*pt, 0.0])


def hamiltonianFlow(p0, start=(0.0, 0.0, 0.0), duration=1.0, steps=256):
    """Integrate Hamilton's equations with the classical RK4 scheme.

    Parameters
    ----------
    p0 : `H1Covector` or sequence
        Initial covector ``(p_x, p_y, p_t)``.
    start : `H1Point` or sequence, optional
        Initial point.
    duration : `float`, optional
        Final time.
    steps : `int`, optional
        Number of RK4 steps, at least 16.

    Returns
    -------
    samples : `GeodesicSamples`
        ``steps + 1`` samples of the point, the covector and ``H``.
    """
    if steps < 16:
        raise DomainError("hamiltonianFlow needs at least 16 steps, got %d" % steps)
    state = numpy.concatenate([_asPoints(start), numpy.asarray(p0, dtype=float)])
    dt = duration/steps
    states = numpy.empty((steps + 1, 6))
    states[0] = state
    for k in range(steps):
        k1 = _hamiltonField(state)
        k2 = _hamiltonField(state + 0.5*dt*k1)
        k3 = _hamiltonField(state + 0.5*dt*k2)
        k4 = _hamiltonField(state + dt*k3)
        state = state + dt*(k1 + 2.0*k2 + 2.0*k3 + k4)/6.0
        states[k + 1] = state
    energy = numpy.array([hamiltonian(s[:3], s[3:]) for s in states])
    return GeodesicSamples(s=numpy.linspace(0.0, duration, steps + 1), points=states[:, :3],
                           covectors=states[:, 3:], energy=energy)


def expMap(p0, s=1.0, start=None):
    """Closed-form point at time ``s`` of the geodesic with initial
    covector ``p0`` at ``start`` (default the identity).
    """
    px, py, pt = (float(v) for v in p0)
    if start is None:
        w0 = complex(px, py)
    else:
        base = _asPoints(start)
        w0 = complex(px - 0.5*base[1]*pt, py + 0.5*base[0]*pt)
    pts = _expFromIdentity(w0, pt, numpy.asarray(s, dtype=float))
    if start is not None:
        pts = _HEISENBERG.mul(base, pts)
    return _point(pts)


def shootGeodesic(target):
    """Solve for the minimizing geodesic from the identity to ``target``.

    Returns
    -------
    solution : `ShootingSolution`
        Time-one covector, length, and whether the minimizer is unique;
        on the ``t`` axis one member of the circle of minimizers is
        returned.
    """
    g = numpy.atleast_2d(_asPoints(target))
    w0, phi, length, unique = _HEISENBERG.shoot(g)
    return ShootingSolution(covector=H1Covector(float(w0[0].real), float(w0[0].imag), float(phi[0])),
                            length=float(length[0]), unique=bool(unique[0]))


def _endpoint(p):
    u = p[2]
    w0 = complex(p[0], p[1])
    z = w0*cmath.exp(0.5j*u)*_sincHalfScalar(u)
    return numpy.array([z.real, z.imag, abs(w0)**2*_gScalar(u)/2.0])


def _endpointJacobian(p):
    jac = numpy.empty((3, 3))
    for k in range(3):
        h = 1e-7*(1.0 + abs(p[k]))
        dp = numpy.zeros(3)
        dp[k] = h
        jac[:, k] = (_endpoint(p + dp) - _endpoint(p - dp))/(2.0*h)
    return jac


def _newton(target, p, config):
    tolerance = config.newtonTolerance*max(1.0, float(numpy.linalg.norm(target)))
    residual = _endpoint(p) - target
    norm = float(numpy.linalg.norm(residual))
    for _ in range(config.newtonMaxIter):
        if norm <= tolerance:
            break
        step = numpy.linalg.lstsq(_endpointJacobian(p), -residual, rcond=None)[0]
        damping = 1.0
        while damping >= 1.0/1024:
            trial = p + damping*step
            trialResidual = _endpoint(trial) - target
            trialNorm = float(numpy.linalg.norm(trialResidual))
            if trialNorm < norm:
                break
            damping *= 0.5
        else:
            break
        p, residual, norm = trial, trialResidual, trialNorm
    return p, norm, norm <= tolerance


def _newtonStarts(target, config):
    x, y, t = target
    r = math.hypot(x, y)
    starts = []
    for phi in numpy.linspace(-config.ptRange, config.ptRange, config.ptGridSize):
        if r > 0.0 and abs(phi) < TWO_PI - 1e-3:
            length = r/_sincHalfScalar(phi)
        else:
            length = max(r, 2.0*math.sqrt(math.pi*abs(t)))
        for k in range(config.angularStarts):
            angle = math.atan2(y, x) - 0.5*phi + TWO_PI*k/config.angularStarts
            starts.append(numpy.array([length*math.cos(angle), length*math.sin(angle), phi]))
    return starts


def ccDistance(target, config=None):
    """Carnot-Caratheodory distance from the identity to ``target`` by
    multi-start Newton shooting.

    Every start solves ``exp(p) = target`` for the time-one covector ``p``
    with a damped Newton iteration; the distance is the smallest length
    ``|p_x + i p_y|`` among the starts that converge.

    Parameters
    ----------
    target : `H1Point` or sequence
        The end point.
    config : `H1Config`, optional
        Start grid and Newton settings.

    Returns
    -------
    distance : `float`

    Raises
    ------
    ConvergenceError
        Raised if no start converges; carries the best residual.
    """
    if config is None:
        config = H1Config()
    config.validate()
    target = _asPoints(target)
    if config.geometry == "euclidean":
        return float(numpy.linalg.norm(target))
    if not numpy.any(target):
        return 0.0
    results = parallelMap(lambda p: _newton(target, p, config), _newtonStarts(target, config))
    lengths = [math.hypot(p[0], p[1]) for p, _, ok in results if ok]
    if not lengths:
        raise ConvergenceError("No shooting start reached (%g, %g, %g)" % tuple(target),
                               residual=min(norm for _, norm, _ in results))
    _log.debug("ccDistance: %d of %d starts converged", len(lengths), len(results))
    return min(lengths)


def _distances(geometry, a, b):
    a, b = numpy.broadcast_arrays(numpy.atleast_2d(a), numpy.atleast_2d(b))
    return _chunked(lambda a, b: geometry.distanceFromIdentity(geometry.mul(geometry.inverse(a), b)),
                    a, b)


def _midpoints(geometry, a, b, t):
    a, b = numpy.broadcast_arrays(numpy.atleast_2d(a), numpy.atleast_2d(b))

    def work(a, b):
        mid, unique = geometry.midpointFromIdentity(geometry.mul(geometry.inverse(a), b), t)
        return geometry.mul(a, mid), unique

    return _chunked(work, a, b)


def distance(a, b, config=None):
    """Distance between points, or elementwise between stacks of points,
    by the bisection shooter.
    """
    a = _asPoints(a)
    b = _asPoints(b)
    d = _distances(_geometry(config), a, b)
    if a.ndim == 1 and b.ndim == 1:
        return float(d[0])
    return d


def midpoint(a, b, t, config=None):
    """Return the point at time ``t`` of a minimizing geodesic from ``a``
    to ``b``.

    Returns
    -------
    point : `H1Point`
    unique : `bool`
        False when ``b`` lies above or below ``a`` on the ``t`` axis of
        ``a``; one of the circle of minimizers is returned then.
    """
    _checkTime(t)
    a = _asPoints(a)
    b = _asPoints(b)
    if numpy.array_equal(a, b):
        raise DomainError("midpoint needs distinct points")
    points, unique = _midpoints(_geometry(config), a, b, t)
    if not unique[0]:
        _log.info("Minimizing geodesics from %s to %s are not unique", tuple(a), tuple(b))
    return _point(points[0]), bool(unique[0])


def ccBallSample(center, r, count, rng, config=None):
    """Uniform samples of the closed ball of radius ``r`` around
    ``center``.

    Candidates are drawn from the box ``|x|, |y| <= r``,
    ``|t| <= r^2/(2 pi)`` around the identity, rejected by distance and
    left-translated to ``center``.

    Raises
    ------
    VolumeBudgetError
        Raised if the rejection loop starves.
    """
    geometry = _geometry(config)
    center = _asPoints(center)
    if not r > 0.0:
        raise DomainError("Ball radius must be positive, got %r" % (r,))
    if count < 1:
        raise DomainError("Need at least one sample")
    half = numpy.diag(geometry.ballFrame(r))
    batch = max(2*count, 1024)
    accepted = []
    total = 0
    rounds = 0
    while total < count:
        if rounds == MAX_SAMPLING_ROUNDS:
            raise VolumeBudgetError("Ball sampling starved after %d candidates" % (rounds*batch),
                                    budget=rounds*batch, requested=count)
        candidates = rng.uniform(-half, half, size=(batch, 3))
        keep = candidates[_chunked(geometry.distanceFromIdentity, candidates) <= r]
        accepted.append(keep)
        total += len(keep)
        rounds += 1
    samples = numpy.concatenate(accepted)[:count]
    return geometry.mul(center, samples)


def _voxelCount(points, cell, frame, origin, budget):
    if len(points) == 0:
        return 0
    q = points - origin
    if frame is not None:
        q = numpy.linalg.solve(frame, q.T).T
    index = numpy.floor(q/cell).astype(numpy.int64)
    extent = index.max(axis=0) - index.min(axis=0) + 1
    requested = int(numpy.prod([int(e) for e in extent]))
    if budget is not None and requested > budget:
        raise VolumeBudgetError("Voxel grid of %d cells exceeds the budget" % requested,
                                budget=budget, requested=requested)
    return len(numpy.unique(index, axis=0))


def voxelVolume(points, cell, frame=None, origin=None, budget=None):
    """Volume of the union of voxels hit by ``points``.

    Parameters
    ----------
    points : `numpy.ndarray`, (n, 3)
        Sample points.
    cell : `float`
        Voxel edge in frame coordinates.
    frame : `numpy.ndarray`, (3, 3), optional
        Voxels are cubes in the coordinates ``q`` with
        ``points = origin + frame q``; the volume carries ``|det frame|``.
    origin : sequence, optional
        Origin of the frame coordinates.
    budget : `int`, optional
        Largest admissible bounding box, in cells.

    Raises
    ------
    VolumeBudgetError
        Raised if the bounding box exceeds ``budget``.
    """
    points = numpy.atleast_2d(numpy.asarray(points, dtype=float))
    origin = numpy.zeros(3) if origin is None else numpy.asarray(origin, dtype=float)
    scale = 1.0 if frame is None else abs(float(numpy.linalg.det(frame)))
    return _voxelCount(points, cell, frame, origin, budget)*cell**3*scale


def _batchStderr(values):
    values = numpy.asarray(values, dtype=float)
    return float(numpy.std(values, ddof=1)/math.sqrt(len(values)))


def _midpointJacobian(geometry, a, b, t, wrt):
    """Central-difference Jacobian of the midpoint map in its first
    (``wrt=0``) or second argument.
    """
    shifted = numpy.repeat(numpy.array([a, b], dtype=float)[None], 6, axis=0)
    for k in range(3):
        shifted[2*k, wrt, k] += JACOBIAN_STEP
        shifted[2*k + 1, wrt, k] -= JACOBIAN_STEP
    images = _midpoints(geometry, shifted[:, 0], shifted[:, 1], t)[0]
    return ((images[0::2] - images[1::2])/(2.0*JACOBIAN_STEP)).T


def distortionBetaEstimate(x, y, t, r, samples, config=None):
    """Monte-Carlo estimate of the volume distortion ``beta_t(x, y)``.

    Samples of the ball ``B_r(y)`` are mapped to their ``t``-midpoints with
    ``x``. Both clouds are voxelized in frames adapted to the ball: the
    ball in ``y (S q)`` coordinates, with ``S`` the ball box, and the image
    in the same coordinates pushed forward by the Jacobian ``G`` of
    ``y -> midpoint(x, y, t)``. The estimate is ``|det G|`` times the ratio
    of occupied voxels, and its standard error comes from batch means.

    Returns
    -------
    estimate : `BetaEstimate`
        ``lowerBound`` is ``t^N``.
    """
    if config is None:
        config = H1Config()
    config.validate()
    _checkTime(t, allowOne=True)
    geometry = _geometry(config)
    x = _asPoints(x)
    y = _asPoints(y)
    separation = float(_distances(geometry, x, y)[0])
    if not 0.0 < r < separation:
        raise DomainError("Need 0 < r < d(x, y) = %g, got r=%r" % (separation, r))
    rng = numpy.random.default_rng(config.seed)
    ball = ccBallSample(y, r, samples, rng, config)
    images = _midpoints(geometry, x, ball, t)[0]
    center = _midpoints(geometry, x, y, t)[0][0]
    jac = _midpointJacobian(geometry, x, y, t, wrt=1)
    ballFrame = geometry.translationFrame(y) @ geometry.ballFrame(r)
    imageFrame = jac @ ballFrame
    det = abs(float(numpy.linalg.det(jac)))
    cell = config.betaVoxelFraction

    def ratio(index):
        countBall = _voxelCount(ball[index], cell, ballFrame, y, config.voxelBudget)
        countImage = _voxelCount(images[index], cell, imageFrame, center, config.voxelBudget)
        return det*countImage/countBall

    full = numpy.arange(samples)
    estimate = ratio(full)
    stderr = _batchStderr([ratio(index) for index in numpy.array_split(full, config.batches)])
    _log.debug("beta estimate %.6g +- %.2g, |det G| = %.6g", estimate, stderr, det)
    return BetaEstimate(estimate=estimate, stderr=stderr, jacobianDeterminant=det,
                        lowerBound=t**geometry.N, t=t, r=r, samples=samples, seed=config.seed,
                        geometry=geometry.name)


def _bmSlacks(volA, volB, volZ, t, n, N, Q):
    bm = volZ**(1.0/n) - ((1.0 - t)**(N/n)*volA**(1.0/n) + t**(N/n)*volB**(1.0/n))
    qbm = volZ**(1.0/N) - Q**(-1.0/N)*((1.0 - t)*volA**(1.0/N) + t*volB**(1.0/N))
    return bm, qbm


def quasiBmEstimate(centerA, radiusA, centerB, radiusB, t, samples, config=None):
    """Monte-Carlo Brunn-Minkowski experiment on two balls.

    ``samples`` uniform points of each ball are paired and mapped to their
    ``t``-midpoints. All three clouds are voxelized in the frame of the
    smaller ball's box, so that voxels resolve the flat vertical extent of
    small balls.

    Parameters
    ----------
    centerA, centerB : sequence
        Ball centres.
    radiusA, radiusB : `float`
        Ball radii.
    t : `float`
        Interpolation time in ``(0, 1)``.
    samples : `int`
        Points per ball.
    config : `H1Config`, optional
        Geometry, voxel and seed settings.

    Returns
    -------
    report : `BMReport`

    Raises
    ------
    VolumeBudgetError
        Raised if a voxel grid exceeds the budget.
    """
    if config is None:
        config = H1Config()
    config.validate()
    _checkTime(t)
    geometry = _geometry(config)
    rng = numpy.random.default_rng(config.seed)
    a = ccBallSample(centerA, radiusA, samples, rng, config)
    b = ccBallSample(centerB, radiusB, samples, rng, config)
    z, unique = _midpoints(geometry, a, b, t)
    frame = geometry.ballFrame(min(radiusA, radiusB))
    cell = config.voxelFraction
    n, N = geometry.n, geometry.N
    Q = qcdFromMcp(float(N), float(n))

    def volumes(index):
        return tuple(voxelVolume(cloud[index], cell, frame, budget=config.voxelBudget)
                     for cloud in (a, b, z))

    full = numpy.arange(samples)
    volA, volB, volZ = volumes(full)
    slackBm, slackQbm = _bmSlacks(volA, volB, volZ, t, n, N, Q)
    batch = numpy.array([volumes(index) for index in numpy.array_split(full, config.batches)])
    batchSlacks = numpy.array([_bmSlacks(va, vb, vz, t, n, N, Q) for va, vb, vz in batch])
    nonUnique = float(numpy.mean(~unique))
    if nonUnique > 0.0:
        _log.info("%.3g of the midpoint pairs have non-unique minimizers", nonUnique)
    return BMReport(volA=volA, volAStderr=_batchStderr(batch[:, 0]),
                    volB=volB, volBStderr=_batchStderr(batch[:, 1]),
                    volZ=volZ, volZStderr=_batchStderr(batch[:, 2]),
                    slackBm=slackBm, slackBmStderr=_batchStderr(batchSlacks[:, 0]),
                    slackQbm=slackQbm, slackQbmStderr=_batchStderr(batchSlacks[:, 1]),
                    t=t, n=n, N=N, Q=Q, samples=samples, seed=config.seed, geometry=geometry.name,
                    nonUniqueFraction=nonUnique)


def _unitBall(rng, count):
    directions = rng.normal(size=(count, 3))
    directions /= numpy.linalg.norm(directions, axis=1)[:, None]
    return directions*rng.uniform(size=(count, 1))**(1.0/3.0)


def juilletShrinkage(radius, height, t, samples, config=None):
    """Midpoint set of two small sets of equal measure that shrinks by
    ``1/2^{N-n}``.

    ``A`` is the Euclidean ball of the given radius around the identity and
    ``B = b0 + L2^{-1} L1 (A)`` with ``b0 = (height, 0, 0)``, where ``L1``
    and ``L2`` are the Jacobians of the midpoint map at ``(0, b0)`` in its
    two arguments. ``height`` is the separation of the two sets. It is
    taken along a horizontal axis because ``b0`` then lies on a straight
    horizontal geodesic through the identity, where the midpoint map is
    smooth and ``|det L1| = (1-t)^N``. A vertical offset puts
    ``b0`` on the cut locus of the identity; there the midpoint map has no
    Jacobian and the construction does not apply. Shaping ``B`` by
    ``L2^{-1} L1`` makes both arguments move the midpoint by the same linear
    image, so to first order the midpoint set is ``L1 (A + A)``, whose
    volume is ``8 |det L1| m(A)``, that is ``m(A)/2^{N-n}`` at ``t = 1/2``.

    The same pairs are mapped through this linearization as well, and the
    voxel volume of the true midpoints is taken relative to the voxel
    volume of the linear ones; pairing bias of the voxel count cancels in
    the quotient. Both clouds are voxelized in the ``L1`` frame, whose thin
    direction the curvature of the true midpoints fills over many cells, so
    the index box grows as ``radius`` grows. Voxels are counted sparsely and
    ``H1Config.voxelBudget`` only bounds that box.

    Parameters
    ----------
    radius : `float`
        Radius of ``A``; must satisfy ``0 < radius < height``.
    height : `float`
        Distance from the centre of ``A`` to the centre of ``B``.
    t : `float`
        Interpolation time in ``(0, 1)``.
    samples : `int`
        Number of sampled pairs.
    config : `H1Config`, optional
        Geometry, voxel and batch settings.

    Returns
    -------
    report : `ShrinkageReport`
        ``ratio`` estimates ``m(Z_t(A, B))/m(A)``; ``massRatio`` is
        ``m(B)/m(A)`` and ``limit`` is ``1/2^{N-n}``.

    Raises
    ------
    DomainError
        Raised unless ``0 < radius < height`` and ``0 < t < 1``.
    VolumeBudgetError
        Raised if a voxel index box exceeds the budget.
    """
    if config is None:
        config = H1Config()
    config.validate()
    _checkTime(t)
    if not 0.0 < radius < height:
        raise DomainError("Need 0 < radius < height, got radius=%r, height=%r" % (radius, height))
    geometry = _geometry(config)
    rng = numpy.random.default_rng(config.seed)
    a0 = numpy.zeros(3)
    b0 = numpy.array([height, 0.0, 0.0])
    L1 = _midpointJacobian(geometry, a0, b0, t, wrt=0)
    L2 = _midpointJacobian(geometry, a0, b0, t, wrt=1)
    shape = numpy.linalg.solve(L2, L1)
    a = radius*_unitBall(rng, samples)
    other = radius*_unitBall(rng, samples)
    b = b0 + other @ shape.T
    z = _midpoints(geometry, a, b, t)[0]
    center = _midpoints(geometry, a0, b0, t)[0][0]
    linear = center + (a + other) @ L1.T
    cell = config.voxelFraction*radius
    scale = 8.0*abs(float(numpy.linalg.det(L1)))

    def ratio(index):
        volZ = voxelVolume(z[index], cell, L1, center, config.voxelBudget)
        volLinear = voxelVolume(linear[index], cell, L1, center, config.voxelBudget)
        return scale*volZ/volLinear

    full = numpy.arange(samples)
    value = ratio(full)
    stderr = _batchStderr([ratio(index) for index in numpy.array_split(full, config.batches)])
    limit = 2.0**(-(geometry.N - geometry.n))
    _log.debug("shrinkage at radius %g: %.4g +- %.2g (limit %g)", radius, value, stderr, limit)
    return ShrinkageReport(ratio=value, stderr=stderr, massRatio=abs(float(numpy.linalg.det(shape))),
                           limit=limit, radius=radius, height=height, t=t, samples=samples,
                           seed=config.seed, geometry=geometry.name)
