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
"""Needle decomposition of a balanced function on a planar grid.

A `PlanarInstance` is a function ``g`` on the cells of a rectangular grid
with ``sum(g m) = 0``. Its positive and negative parts are clustered into
atoms, transported onto each other at minimal ``L^1`` cost with the POT
network simplex, and the sink duals are extended to the Kantorovich
potential ``u(x) = min_j (|x - y_j| - v_j)``, which is 1-Lipschitz and
drops at unit rate along every transported pair. Collinear transported
pairs are chained into rays, and the cells near each ray form a needle,
a one-dimensional density along the ray, on which ``g`` must balance.
"""

__all__ = ("LocalizationConfig", "PlanarInstance", "Atoms", "TransportSolution", "Ray", "Needle",
           "NeedleDecomposition", "NeedleReport", "halfSquareInstance", "annulusInstance",
           "loadInstance", "clusterAtoms", "solveL1Ot", "extractRays", "needleDisintegration",
           "verifyNeedles")

import dataclasses
import logging
import math

import numpy
import ot
from scipy.spatial import distance as spatialDistance

from .config import Config
from .rangeField import RangeField
from .densities import ConditionSpec, GridDensity, classify
from .errors import ConvergenceError, DomainError
from .parallel import parallelMap

_log = logging.getLogger(__name__)

BALANCE_TOLERANCE = 1e-10
FLOW_THRESHOLD = 1e-12


class LocalizationConfig(Config):
    atomCap = RangeField("Largest number of atoms per sign.", int, default=400, min=1)
    maxBlock = RangeField("Largest block factor the clustering may coarsen to.", int, default=8, min=1)
    simplexMaxIter = RangeField("Iteration limit of the network simplex.", int, default=1000000, min=1)
    saturationTolerance = RangeField("Slack allowed in u(x) - u(y) = |x - y| on transported pairs, "
                                     "relative to the domain size.", float, default=1e-9, min=0.0)
    angleTolerance = RangeField("Largest angle, in radians, between directions that count as "
                                "collinear.", float, default=0.1, min=0.0)
    lineTolerance = RangeField("Largest offset between collinear segments that are chained, "
                               "in blocks.", float, default=0.5, min=0.0)
    tubeWidth = RangeField("Distance within which cells belong to a ray; default the larger of one "
                           "cell diagonal and half a block diagonal.", float, default=None,
                           optional=True, min=0.0, inclusiveMin=False)
    balanceTolerance = RangeField("Largest |int g m_q| relative to the needle mass.", float,
                                  default=1e-3, min=0.0)
    leakTolerance = RangeField("Largest |g| mass off all rays relative to the total.", float,
                               default=1e-9, min=0.0)
    concavityCells = RangeField("Concavity slack allowed on needles, in units of the grid tolerance "
                                "of the needle density.", float, default=5.0, min=0.0)


@dataclasses.dataclass
class PlanarInstance:
    """A balanced function on the cells of ``[0, ex] x [0, ey]``.

    Parameters
    ----------
    g : `numpy.ndarray`, (H, W)
        Cell values; row 0 is the bottom row.
    extent : `tuple` of `float`, optional
        Size of the rectangle.
    weights : `numpy.ndarray`, (H, W), optional
        Density of the reference measure; default Lebesgue.
    """

    g: numpy.ndarray
    extent: tuple = (1.0, 1.0)
    weights: numpy.ndarray = None

    def __post_init__(self):
        g = numpy.array(self.g, dtype=float)
        if g.ndim != 2 or g.size == 0:
            raise DomainError("g must be a non-empty two-dimensional array")
        if not numpy.all(numpy.isfinite(g)):
            raise DomainError("g must be finite")
        self.g = g
        self.extent = tuple(float(e) for e in self.extent)
        if len(self.extent) != 2 or min(self.extent) <= 0:
            raise DomainError("extent must be two positive lengths, got %r" % (self.extent,))
        if self.weights is not None:
            weights = numpy.array(self.weights, dtype=float)
            if weights.shape != g.shape or numpy.any(weights < 0):
                raise DomainError("weights must be non-negative with the shape of g")
            self.weights = weights
        imbalance = float(numpy.sum(self.g*self.cellMass))
        scale = max(1.0, float(numpy.sum(numpy.abs(self.g)*self.cellMass)))
        if abs(imbalance) > BALANCE_TOLERANCE*scale:
            raise DomainError("g is not balanced: sum(g m) = %.3g" % imbalance)

    @property
    def shape(self):
        return self.g.shape

    @property
    def cellWidth(self):
        H, W = self.g.shape
        return (self.extent[0]/W, self.extent[1]/H)

    @property
    def cellMass(self):
        dx, dy = self.cellWidth
        if self.weights is None:
            return numpy.full(self.g.shape, dx*dy)
        return self.weights*dx*dy

    @property
    def centers(self):
        """Cell centres, shape ``(H, W, 2)``.
        """
        H, W = self.g.shape
        dx, dy = self.cellWidth
        xs = (numpy.arange(W) + 0.5)*dx
        ys = (numpy.arange(H) + 0.5)*dy
        return numpy.stack(numpy.meshgrid(xs, ys), axis=-1)


def halfSquareInstance(width=64, height=64):
    """``g = +1`` on the left half of the unit square and ``-1`` on the
    right half.
    """
    if width % 2:
        raise DomainError("The half-square instance needs an even width, got %d" % width)
    g = numpy.ones((height, width))
    g[:, width//2:] = -1.0
    return PlanarInstance(g)


def annulusInstance(width=64, height=64, inner=0.15, middle=0.3, outer=0.45):
    """Radially balanced ``g`` around the centre of the unit square:
    ``+1`` on ``inner <= r < middle`` and a negative constant on
    ``middle <= r < outer`` chosen to balance the cell sums.
    """
    if not 0.0 <= inner < middle < outer:
        raise DomainError("Need 0 <= inner < middle < outer")
    centers = PlanarInstance(numpy.zeros((height, width))).centers
    r = numpy.hypot(centers[..., 0] - 0.5, centers[..., 1] - 0.5)
    positive = (r >= inner) & (r < middle)
    negative = (r >= middle) & (r < outer)
    if not positive.any() or not negative.any():
        raise DomainError("Annulus rings are empty on a %dx%d grid" % (width, height))
    g = numpy.zeros((height, width))
    g[positive] = 1.0
    g[negative] = -positive.sum()/negative.sum()
    return PlanarInstance(g)


def loadInstance(path, width=None, height=None):
    """Read ``g`` from a CSV file of ``H`` rows of ``W`` values, the first
    row being the bottom row.
    """
    try:
        g = numpy.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as err:
        raise DomainError("Cannot read %s: %s" % (path, err)) from err
    if (width is not None and g.shape[1] != width) or (height is not None and g.shape[0] != height):
        raise DomainError("%s holds a %dx%d grid, expected %sx%s"
                          % (path, g.shape[1], g.shape[0], width, height))
    return PlanarInstance(g)


@dataclasses.dataclass
class Atoms:
    """Clustered part of ``g``: atom positions, masses, and the atom index
    of every cell (``-1`` where the part vanishes).
    """

    positions: numpy.ndarray
    masses: numpy.ndarray
    labels: numpy.ndarray
    factor: int

    def __len__(self):
        return len(self.masses)


def clusterAtoms(instance, sign, atomCap=400, maxBlock=None):
    """Cluster the part ``max(sign g, 0) m`` into at most ``atomCap`` atoms.

    Cells are grouped in ``f x f`` blocks with the smallest ``f`` giving at
    most ``atomCap`` non-empty blocks; each atom sits at the mass-weighted
    centroid of its block.

    Raises
    ------
    DomainError
        Raised if no block factor up to ``maxBlock`` meets the cap.
    """
    H, W = instance.shape
    part = numpy.maximum(sign*instance.g, 0.0)*instance.cellMass
    labels = numpy.full((H, W), -1)
    rows, cols = numpy.nonzero(part > 0)
    if rows.size == 0:
        return Atoms(numpy.empty((0, 2)), numpy.empty(0), labels, 1)
    limit = max(H, W) if maxBlock is None else maxBlock
    counts = []
    for factor in range(1, limit + 1):
        blockId = (rows//factor)*(-(-W//factor)) + cols//factor
        blocks, inverse = numpy.unique(blockId, return_inverse=True)
        counts.append(len(blocks))
        if len(blocks) <= atomCap:
            break
    else:
        raise DomainError("The %s part of g needs more than %d atoms up to block factor %d "
                          "(atoms per factor: %s)" % ("positive" if sign > 0 else "negative", atomCap,
                                                     limit, counts))
    weights = part[rows, cols]
    masses = numpy.bincount(inverse, weights=weights)
    centers = instance.centers[rows, cols]
    positions = numpy.stack([numpy.bincount(inverse, weights=weights*centers[:, k])/masses
                             for k in range(2)], axis=1)
    labels[rows, cols] = inverse
    return Atoms(positions, masses, labels, factor)


@dataclasses.dataclass
class TransportSolution:
    """Optimal ``L^1`` plan between the atoms and its potentials.

    ``potential`` holds ``u(x) = min_j (|x - y_j| - v_j)`` at the cell
    centres; ``dualityGap`` is ``cost - (sum a u + sum b v)``.
    """

    sources: Atoms
    sinks: Atoms
    plan: numpy.ndarray
    cost: float
    sourceDuals: numpy.ndarray
    sinkDuals: numpy.ndarray
    dualityGap: float
    potential: numpy.ndarray
    scale: float
    cellWidth: tuple

    def potentialAt(self, points):
        points = numpy.atleast_2d(points)
        if len(self.sinks) == 0:
            return numpy.zeros(len(points))
        dist = spatialDistance.cdist(points, self.sinks.positions)
        return numpy.min(dist - self.sinkDuals[None, :], axis=1)


def solveL1Ot(instance, config=None):
    """Solve the ``L^1`` transport between ``g+ m`` and ``g- m`` exactly on
    the clustered atoms.

    Returns
    -------
    solution : `TransportSolution`

    Raises
    ------
    DomainError
        Raised if the clustering exceeds the atom cap or one part is empty
        while the other is not.
    ConvergenceError
        Raised if the network simplex stops before optimality.
    """
    if config is None:
        config = LocalizationConfig()
    config.validate()
    sources = clusterAtoms(instance, 1.0, config.atomCap, config.maxBlock)
    sinks = clusterAtoms(instance, -1.0, config.atomCap, config.maxBlock)
    scale = math.hypot(*instance.extent)
    H, W = instance.shape
    if len(sources) == 0 and len(sinks) == 0:
        return TransportSolution(sources, sinks, numpy.zeros((0, 0)), 0.0, numpy.empty(0),
                                 numpy.empty(0), 0.0, numpy.zeros((H, W)), scale,
                                 instance.cellWidth)
    if len(sources) == 0 or len(sinks) == 0:
        raise DomainError("g has only one sign; no transport is possible")
    a = sources.masses
    b = sinks.masses*(a.sum()/sinks.masses.sum())
    cost = spatialDistance.cdist(sources.positions, sinks.positions)
    plan, log = ot.emd(a, b, cost, numItermax=config.simplexMaxIter, log=True)
    if log["warning"] is not None:
        raise ConvergenceError("Network simplex stopped: %s" % log["warning"])
    u = numpy.asarray(log["u"])
    v = numpy.asarray(log["v"])
    gap = float(log["cost"]) - float(a @ u + b @ v)
    _log.debug("L1 transport on %d x %d atoms (block factors %d, %d): cost %.6g, gap %.3g",
               len(a), len(b), sources.factor, sinks.factor, log["cost"], gap)
    solution = TransportSolution(sources, sinks, plan, float(log["cost"]), u, v, gap,
                                 numpy.zeros((H, W)), scale, instance.cellWidth)
    solution.potential = solution.potentialAt(instance.centers.reshape(-1, 2)).reshape(H, W)
    return solution


@dataclasses.dataclass
class Ray:
    """Directed segment ``origin + s direction``, ``0 <= s <= length``,
    along which ``u`` drops at unit rate.
    """

    origin: numpy.ndarray
    direction: numpy.ndarray
    length: float
    flow: float
    sourceAtoms: list
    sinkAtoms: list

    def project(self, points):
        return (numpy.atleast_2d(points) - self.origin) @ self.direction

    def distance(self, points):
        points = numpy.atleast_2d(points)
        s = numpy.clip(self.project(points), 0.0, self.length)
        return numpy.linalg.norm(points - (self.origin + s[:, None]*self.direction), axis=1)

    def toDict(self):
        return {"origin": self.origin, "direction": self.direction, "length": self.length,
                "flow": self.flow, "source_atoms": self.sourceAtoms, "sink_atoms": self.sinkAtoms}


class _UnionFind:

    def __init__(self, size):
        self.parent = list(range(size))

    def find(self, k):
        while self.parent[k] != k:
            self.parent[k] = self.parent[self.parent[k]]
            k = self.parent[k]
        return k

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _angles(d0, d1):
    cross = d0[..., 0]*d1[..., 1] - d0[..., 1]*d1[..., 0]
    dot = numpy.sum(d0*d1, axis=-1)
    return numpy.arctan2(numpy.abs(cross), dot)


def _branchingAtoms(atomIndex, directions, tolerance):
    branching = set()
    for atom in numpy.unique(atomIndex):
        dirs = directions[atomIndex == atom]
        if len(dirs) > 1 and numpy.any(_angles(dirs[:1], dirs) > tolerance):
            branching.add(int(atom))
    return branching


def extractRays(solution, config=None):
    """Chain the transported pairs of ``solution`` into rays.

    Pairs carrying more than ``1e-12`` of the total mass and saturating
    ``u(x) - u(y) = |x - y|`` are kept. An atom whose pairs leave in two
    non-collinear directions is a branching atom and all its pairs are
    dropped. The remaining pairs are joined when they share an atom or
    are collinear and overlapping; every group becomes one ray.

    Returns
    -------
    rays : `list` of `Ray`
    """
    if config is None:
        config = LocalizationConfig()
    config.validate()
    if solution.plan.size == 0:
        return []
    plan = solution.plan
    src, snk = numpy.nonzero(plan > FLOW_THRESHOLD*plan.sum())
    x0 = solution.sources.positions[src]
    x1 = solution.sinks.positions[snk]
    lengths = numpy.linalg.norm(x1 - x0, axis=1)
    drop = solution.potentialAt(x0) - solution.potentialAt(x1) - lengths
    keep = (lengths > 0.0) & (drop >= -config.saturationTolerance*solution.scale)
    if not keep.all():
        _log.info("Dropping %d unsaturated or degenerate pairs", int((~keep).sum()))
    src, snk, x0, x1, lengths = src[keep], snk[keep], x0[keep], x1[keep], lengths[keep]
    directions = (x1 - x0)/lengths[:, None]
    branchingSources = _branchingAtoms(src, directions, config.angleTolerance)
    branchingSinks = _branchingAtoms(snk, directions, config.angleTolerance)
    if branchingSources or branchingSinks:
        _log.info("Excluding %d branching source and %d branching sink atoms",
                  len(branchingSources), len(branchingSinks))
    keep = numpy.array([i not in branchingSources and j not in branchingSinks
                        for i, j in zip(src, snk)], dtype=bool)
    src, snk, x0, x1 = src[keep], snk[keep], x0[keep], x1[keep]
    lengths, directions = lengths[keep], directions[keep]
    count = len(src)
    if count == 0:
        return []

    groups = _UnionFind(count)
    for atoms in (src, snk):
        first = {}
        for k, atom in enumerate(atoms):
            groups.union(first.setdefault(int(atom), k), k)
    block = max(solution.sources.factor, solution.sinks.factor)
    lineTolerance = config.lineTolerance*block*max(solution.cellWidth)
    for k in range(count):
        aligned = _angles(directions[k][None], directions) <= config.angleTolerance
        normal = numpy.array([-directions[k, 1], directions[k, 0]])
        offset = numpy.maximum(numpy.abs((x0 - x0[k]) @ normal), numpy.abs((x1 - x0[k]) @ normal))
        s0 = (x0 - x0[k]) @ directions[k]
        s1 = (x1 - x0[k]) @ directions[k]
        overlap = (numpy.minimum(s0, s1) <= lengths[k]) & (numpy.maximum(s0, s1) >= 0.0)
        for other in numpy.nonzero(aligned & (offset <= lineTolerance) & overlap)[0]:
            groups.union(k, int(other))

    members = {}
    for k in range(count):
        members.setdefault(groups.find(k), []).append(k)
    rays = []
    for index in members.values():
        flow = plan[src[index], snk[index]]
        direction = numpy.sum(flow[:, None]*directions[index], axis=0)
        direction /= numpy.linalg.norm(direction)
        anchor = numpy.sum(flow[:, None]*(x0[index] + x1[index]), axis=0)/(2.0*flow.sum())
        s = numpy.concatenate([(x0[index] - anchor) @ direction, (x1[index] - anchor) @ direction])
        rays.append(Ray(origin=anchor + s.min()*direction, direction=direction,
                        length=float(s.max() - s.min()), flow=float(flow.sum()),
                        sourceAtoms=sorted(set(int(i) for i in src[index])),
                        sinkAtoms=sorted(set(int(j) for j in snk[index]))))
    _log.debug("Chained %d pairs into %d rays", count, len(rays))
    return rays


@dataclasses.dataclass
class Needle:
    """Cells of one ray projected onto it and binned.

    ``values`` is the mass per unit length in bins of width ``binWidth``
    centred at ``start + k binWidth``; ``gValues`` the same for ``g m``.
    """

    ray: Ray
    start: float
    binWidth: float
    values: numpy.ndarray
    gValues: numpy.ndarray
    mass: float
    gMass: float

    @property
    def grid(self):
        return self.start + self.binWidth*numpy.arange(len(self.values))

    def density(self):
        """The needle density as a `GridDensity`, or None for a single bin.
        """
        if len(self.values) < 2:
            return None
        return GridDensity((self.start, self.grid[-1]), self.values)

    def toDict(self):
        return {"ray": self.ray.toDict(), "start": self.start, "bin_width": self.binWidth,
                "values": self.values, "g_values": self.gValues, "mass": self.mass,
                "g_mass": self.gMass}


@dataclasses.dataclass
class NeedleDecomposition:
    potential: numpy.ndarray
    needles: list
    uncoveredMass: float
    uncoveredGMass: float
    totalGMass: float
    transportMass: float
    ambiguousFraction: float
    tubeWidth: float
    cost: float
    dualityGap: float

    @property
    def projectedMass(self):
        return float(sum(needle.mass for needle in self.needles))

    def toDict(self):
        return {"rays": len(self.needles), "needles": [needle.toDict() for needle in self.needles],
                "uncovered_mass": self.uncoveredMass, "uncovered_g_mass": self.uncoveredGMass,
                "transport_mass": self.transportMass, "projected_mass": self.projectedMass,
                "ambiguous_fraction": self.ambiguousFraction, "tube_width": self.tubeWidth,
                "cost": self.cost, "duality_gap": self.dualityGap}


def needleDisintegration(instance, solution, rays, config=None):
    """Project the cells of ``instance`` onto the rays.

    Every cell where ``g`` does not vanish and whose centre lies within the
    tube width of a ray segment goes to the nearest ray; a cell equidistant
    to several rays is split evenly between them. A ray's parameter range
    grows to cover its cells, and the projected masses are binned at the
    cell extent along the ray.

    Returns
    -------
    decomposition : `NeedleDecomposition`

    Raises
    ------
    DomainError
        Raised if the tube is narrower than one cell diagonal.
    """
    if config is None:
        config = LocalizationConfig()
    config.validate()
    dx, dy = instance.cellWidth
    diagonal = math.hypot(dx, dy)
    block = max(solution.sources.factor, solution.sinks.factor)
    tube = config.tubeWidth if config.tubeWidth is not None else max(1.0, 0.5*block)*diagonal
    if tube < diagonal*(1.0 - 1e-12):
        raise DomainError("Tube width %.3g is below the cell diagonal %.3g" % (tube, diagonal))
    support = instance.g.ravel() != 0.0
    points = instance.centers.reshape(-1, 2)[support]
    mass = instance.cellMass.ravel()[support]
    gMass = (instance.g.ravel()*instance.cellMass.ravel())[support]
    totalGMass = float(numpy.sum(numpy.abs(gMass)))
    if not rays:
        return NeedleDecomposition(solution.potential, [], float(mass.sum()),
                                   totalGMass, totalGMass, 0.0, 0.0, tube,
                                   solution.cost, solution.dualityGap)

    dist = numpy.stack([ray.distance(points) for ray in rays], axis=1)
    nearest = dist.min(axis=1)
    within = nearest <= tube
    tied = within[:, None] & (dist <= nearest[:, None] + 1e-9*diagonal)
    shares = tied/numpy.maximum(tied.sum(axis=1), 1)[:, None]
    ambiguous = float(mass[tied.sum(axis=1) > 1].sum())
    transportMass = float(mass[within].sum())
    if ambiguous > 0.0:
        _log.info("%.3g of the transport mass lies on cells split between rays",
                  ambiguous/transportMass)

    needles = []
    for k, ray in enumerate(rays):
        cells = shares[:, k] > 0.0
        if not cells.any():
            continue
        s = ray.project(points[cells])
        weight = shares[cells, k]*mass[cells]
        gWeight = shares[cells, k]*gMass[cells]
        start = min(0.0, float(s.min()))
        binWidth = abs(ray.direction[0])*dx + abs(ray.direction[1])*dy
        bins = numpy.rint((s - start)/binWidth).astype(int)
        size = int(bins.max()) + 1
        needles.append(Needle(ray=ray, start=start, binWidth=binWidth,
                              values=numpy.bincount(bins, weights=weight, minlength=size)/binWidth,
                              gValues=numpy.bincount(bins, weights=gWeight, minlength=size)/binWidth,
                              mass=float(weight.sum()), gMass=float(gWeight.sum())))
    return NeedleDecomposition(solution.potential, needles,
                               uncoveredMass=float(mass[~within].sum()),
                               uncoveredGMass=float(numpy.abs(gMass[~within]).sum()),
                               totalGMass=totalGMass, transportMass=transportMass,
                               ambiguousFraction=ambiguous/transportMass if transportMass else 0.0,
                               tubeWidth=tube, cost=solution.cost, dualityGap=solution.dualityGap)


@dataclasses.dataclass
class NeedleReport:
    records: list
    leak: float
    passed: bool
    ambientN: float

    def toDict(self):
        return {"records": self.records, "leak": self.leak, "passed": self.passed,
                "ambient_n": self.ambientN}


def _checkNeedle(needle, ambientN, config, classifyConfig):
    residual = abs(needle.gMass)
    relative = residual/needle.mass if needle.mass > 0 else 0.0
    slack, tolerance = math.inf, 0.0
    density = needle.density()
    if density is not None and density.size >= 3:
        report = classify(density, ConditionSpec(kind="cd", K=0.0, N=ambientN), classifyConfig)
        slack = report.worstViolation
        tolerance = config.concavityCells*report.tolerance
    return {"mass": needle.mass, "balance_residual": residual, "relative_residual": relative,
            "concavity_slack": slack, "concavity_tolerance": tolerance,
            "passed": bool(relative <= config.balanceTolerance and slack >= -tolerance)}


def verifyNeedles(decomposition, ambientN, config=None, classifyConfig=None):
    """Check the needle conclusions on a decomposition.

    Every needle must balance ``g`` up to ``balanceTolerance`` of its mass
    and carry a CD(0, ambientN) density up to ``concavityCells`` times the
    grid tolerance of the classification; the ``|g|`` mass off all rays
    must stay below ``leakTolerance`` of the total.

    Returns
    -------
    report : `NeedleReport`
        An empty decomposition with no leak passes vacuously.
    """
    if config is None:
        config = LocalizationConfig()
    config.validate()
    if not ambientN > 1:
        raise DomainError("The ambient dimension must exceed 1, got %r" % (ambientN,))
    records = parallelMap(lambda needle: _checkNeedle(needle, ambientN, config, classifyConfig),
                          decomposition.needles)
    for index, record in enumerate(records):
        record["index"] = index
    total = decomposition.totalGMass
    leak = decomposition.uncoveredGMass/total if total > 0 else 0.0
    passed = all(record["passed"] for record in records) and leak <= config.leakTolerance
    if not passed:
        _log.warning("Needle verification failed on %d of %d needles (leak %.3g)",
                     sum(not record["passed"] for record in records), len(records), leak)
    return NeedleReport(records=records, leak=leak, passed=bool(passed), ambientN=float(ambientN))
