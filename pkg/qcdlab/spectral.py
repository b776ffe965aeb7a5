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
"""Poincare, p-Poincare and log-Sobolev constants of weighted intervals.

A `SpectralProblem` couples a density ``h`` with an exponent ``p`` and a
set ``omega``, a finite union of closed intervals inside the support. The
energy ``int |f'|^p h`` is taken over the hull ``conv(omega)`` and the
``L^p`` norm over ``omega`` only.

Three solvers are provided:

- ``fd-eig``: for ``p = 2`` on the whole support, a lumped-mass finite
  difference discretization of the weighted Neumann problem
  ``-(h u')' = lambda h u``, symmetrized and handed to
  `scipy.linalg.eigh_tridiagonal`;
- ``shooting``: for any ``p > 1`` and ``omega``, integration of
  ``u' = Phi_q(w/h)``, ``w' = -lambda 1_omega h Phi_p(u)`` from
  ``u = 1, w = 0`` with ``Phi_r(s) = |s|^{r-2} s`` and ``1/p + 1/q = 1``,
  and bisection on the zero count of ``u``;
- ``ls-minimize``: L-BFGS-B minimization of the log-Sobolev quotient from
  the eigenfunction start and seeded random starts.
"""

__all__ = ("SpectralConfig", "SpectralProblem", "SpectralResult", "TheoremGapReport",
           "lambdaPClosedForm", "lichnerowicz", "solveLambdaP", "estimateLambdaLs",
           "rayleighQuotientP", "entropyQuotient", "theoremGap")

import dataclasses
import logging
import math

import numpy
from scipy import integrate, linalg, optimize

from .config import Config, Field
from .rangeField import RangeField
from .choiceField import ChoiceField
from .coefficients import CurvatureParams, maxDiameter
from .densities import ConditionSpec, classify, DEFAULT_SEED
from .errors import ConvergenceError, DomainError
from .parallel import parallelMap

_log = logging.getLogger(__name__)

LOG_FLOOR = 1e-12


class SpectralConfig(Config):
    grid = RangeField("Grid size used to materialize model densities.", int, default=1024, min=3)
    method = ChoiceField("Eigenvalue solver for lambda_p.", str,
                         allowed={"auto": "fd-eig when p = 2 on the whole support, shooting otherwise",
                                  "fd-eig": "finite-difference generalized eigenproblem (p = 2)",
                                  "shooting": "nonlinear shooting with bisection"},
                         default="auto", optional=False)
    maxIter = RangeField("Bisection iterations before giving up.", int, default=200, min=1)
    rtol = RangeField("Relative width at which the eigenvalue bracket is accepted.", float,
                      default=1e-9, min=0.0, inclusiveMin=False)
    odeRtol = RangeField("Relative tolerance of the shooting integrator.", float, default=1e-10,
                         min=0.0, inclusiveMin=False)
    odeAtol = RangeField("Absolute tolerance of the shooting integrator.", float, default=1e-12,
                         min=0.0, inclusiveMin=False)
    lsRestarts = RangeField("Seeded random starts of the log-Sobolev search.", int, default=8, min=0)
    lsAmplitude = RangeField("Relative amplitude of the log-Sobolev starts around 1.", float,
                             default=0.3, min=0.0, inclusiveMin=False)
    lsModes = RangeField("Cosine modes in a random log-Sobolev start.", int, default=6, min=1)
    lsDegenerateTolerance = RangeField("Entropy per unit mass below which a function counts "
                                       "as constant.", float, default=1e-10, min=0.0)
    lsMaxIter = RangeField("L-BFGS-B iterations per start.", int, default=500, min=1)
    seed = Field("Seed of the random log-Sobolev starts.", int, default=DEFAULT_SEED)
    tolerance = RangeField("Relative tolerance of the theorem-gap comparison.", float,
                           default=1e-2, min=0.0)


@dataclasses.dataclass
class SpectralProblem:
    """Density, exponent and subset of a spectral problem.

    Parameters
    ----------
    density : `qcdlab.densities.GridDensity`
        The weight ``h``.
    p : `float` or ``"ls"``
        Exponent, ``p > 1``, or the log-Sobolev tag.
    omega : `list` of `tuple`, optional
        Disjoint closed intervals inside the support; default the support.
    """

    density: object
    p: object = 2.0
    omega: list = None

    def __post_init__(self):
        a, b = self.density.support
        if self.p != "ls":
            self.p = float(self.p)
            if not self.p > 1.0:
                raise DomainError("p must be larger than 1, got %r" % (self.p,))
        if self.omega is None:
            self.omega = [(a, b)]
        pieces = sorted((float(lo), float(hi)) for lo, hi in self.omega)
        for lo, hi in pieces:
            if not (a <= lo < hi <= b):
                raise DomainError("omega piece [%g, %g] is not inside the support [%g, %g]"
                                  % (lo, hi, a, b))
        for (lo0, hi0), (lo1, hi1) in zip(pieces[:-1], pieces[1:]):
            if lo1 <= hi0:
                raise DomainError("omega pieces [%g, %g] and [%g, %g] overlap" % (lo0, hi0, lo1, hi1))
        if not pieces:
            raise DomainError("omega must not be empty")
        self.omega = pieces

    @property
    def hull(self):
        return (self.omega[0][0], self.omega[-1][1])

    @property
    def isFullSupport(self):
        return len(self.omega) == 1 and self.omega[0] == tuple(self.density.support)

    def indicator(self, x):
        x = numpy.asarray(x, dtype=float)
        out = numpy.zeros(x.shape, dtype=bool)
        for lo, hi in self.omega:
            out |= (x >= lo) & (x <= hi)
        return out


@dataclasses.dataclass
class SpectralResult:
    """Computed constant with its eigenfunction samples on ``grid``.
    """

    lam: float
    eigenfunction: numpy.ndarray
    grid: numpy.ndarray
    residual: float
    method: str
    status: str = "converged"
    iterations: int = 0

    def toDict(self):
        return {"lambda": self.lam, "eigenfunction": self.eigenfunction, "grid": self.grid,
                "residual": self.residual, "method": self.method, "status": self.status,
                "iterations": self.iterations}


def lambdaPClosedForm(p, D):
    """Sharp p-spectral gap ``(p-1)(2 pi/(p sin(pi/p) D))^p`` of CD(0,N)
    densities of diameter ``D``.
    """
    if not p > 1:
        raise DomainError("p must be larger than 1, got %r" % (p,))
    if not D > 0:
        raise DomainError("D must be positive, got %r" % (D,))
    return (p - 1.0)*(2.0*math.pi/(p*math.sin(math.pi/p)*D))**p


def lichnerowicz(K, N):
    """Sharp spectral gap ``N K/(N-1)`` of CD(K,N) spaces with ``K > 0``.
    """
    if not K > 0:
        raise DomainError("The Lichnerowicz bound needs K > 0, got %r" % (K,))
    if not N > 1:
        raise DomainError("N must be larger than 1, got %r" % (N,))
    return N*K/(N - 1.0)


def _phi(s, r):
    return numpy.sign(s)*numpy.abs(s)**(r - 1.0)


def _hullNodes(problem):
    """Grid nodes inside the hull, with stiffness and lumped masses.

    Returns ``(x, c, b)``: node positions, edge weights ``h_{i+1/2}/delta``
    and lumped masses restricted to omega.
    """
    h = problem.density
    lo, hi = problem.hull
    grid = h.grid
    d = h.spacing
    inside = (grid >= lo - 1e-12*d) & (grid <= hi + 1e-12*d)
    x = grid[inside]
    v = h.values[inside]
    c = 0.5*(v[:-1] + v[1:])/d
    w = numpy.full(x.size, d)
    w[0] *= 0.5
    w[-1] *= 0.5
    b = w*v*problem.indicator(x)
    return x, c, b


def _fdEigen(problem):
    x, c, b = _hullNodes(problem)
    keep = b > 0
    first = int(numpy.argmax(keep))
    last = x.size - int(numpy.argmax(keep[::-1]))
    if not numpy.all(keep[first:last]):
        raise DomainError("fd-eig needs a density positive inside its support")
    bk = b[first:last]
    # edges to dropped zero-mass end nodes carry no energy at the minimizer
    ck = c[first:last - 1]
    if bk.size < 3:
        raise DomainError("Too few grid points with positive mass")
    diag = numpy.zeros(bk.size)
    diag[:-1] += ck
    diag[1:] += ck
    scale = numpy.sqrt(bk)
    d = diag/bk
    e = -ck/(scale[:-1]*scale[1:])
    vals, vecs = linalg.eigh_tridiagonal(d, e, select="i", select_range=(0, 1))
    lam = float(vals[1])
    u = vecs[:, 1]/scale
    u -= numpy.sum(bk*u)/numpy.sum(bk)
    u /= numpy.max(numpy.abs(u))
    full = numpy.empty(x.size)
    full[first:last] = u
    full[:first] = u[0]
    full[last:] = u[-1]
    sym = d*vecs[:, 1]
    sym[:-1] += e*vecs[1:, 1]
    sym[1:] += e*vecs[:-1, 1]
    residual = float(numpy.linalg.norm(sym - lam*vecs[:, 1]))/max(abs(lam), 1.0)
    balance = abs(float(numpy.sum(bk*u)))/float(numpy.sum(bk*numpy.abs(u)))
    _log.debug("fd-eig on %d nodes: lambda=%.12g, residual=%.3g", bk.size, lam, residual)
    return SpectralResult(lam=lam, eigenfunction=full, grid=x, residual=max(residual, balance),
                          method="fd-eig", iterations=1)


class _Shooter:
    """Integrates the first-order eigenvalue system across the hull.
    """

    def __init__(self, problem, config):
        self.problem = problem
        self.config = config
        h = problem.density
        lo, hi = problem.hull
        grid = h.grid
        positive = grid[(h.values > 0) & (grid >= lo) & (grid <= hi)]
        if positive.size < 2:
            raise DomainError("Density vanishes on the hull of omega")
        self.start = max(lo, float(positive[0]))
        self.stop = min(hi, float(positive[-1]))
        points = {self.start, self.stop}
        for a, b in problem.omega:
            for x in (a, b):
                if self.start < x < self.stop:
                    points.add(x)
        self.breaks = sorted(points)
        self.p = problem.p
        self.q = self.p/(self.p - 1.0)

    def run(self, lam, dense=False):
        h = self.problem.density
        p, q = self.p, self.q
        state = numpy.array([1.0, 0.0])
        zeros = 0
        sols = []

        def crossing(x, y):
            return y[0]

        for s0, s1 in zip(self.breaks[:-1], self.breaks[1:]):
            weight = lam if self.problem.indicator(0.5*(s0 + s1)) else 0.0

            def rhs(x, y, weight=weight):
                hx = max(float(h(x)), LOG_FLOOR)
                return [_phi(y[1]/hx, q), -weight*hx*_phi(y[0], p)]

            sol = integrate.solve_ivp(rhs, (s0, s1), state, method="DOP853", events=crossing,
                                      rtol=self.config.odeRtol, atol=self.config.odeAtol,
                                      dense_output=dense)
            if sol.status < 0:
                raise ConvergenceError("Shooting integration failed: %s" % sol.message)
            zeros += len(sol.t_events[0])
            state = sol.y[:, -1]
            sols.append(sol)
        return zeros, state, sols

    def count(self, lam):
        zeros, (u, w), _ = self.run(lam)
        return max(zeros - 1, 0) + (1 if zeros >= 1 and u*w < 0 else 0)


def _shootEigen(problem, config):
    shooter = _Shooter(problem, config)
    lo = 0.0
    hi = lambdaPClosedForm(problem.p, shooter.stop - shooter.start)
    doublings = 0
    while shooter.count(hi) < 1:
        lo = hi
        hi *= 2.0
        doublings += 1
        if doublings > 60:
            raise ConvergenceError("No upper bracket for the eigenvalue", bracket=(lo, hi))
    iterations = 0
    while hi - lo > config.rtol*hi:
        if iterations >= config.maxIter:
            raise ConvergenceError("Bisection did not converge in %d iterations" % config.maxIter,
                                   bracket=(lo, hi))
        mid = 0.5*(lo + hi)
        if shooter.count(mid) >= 1:
            hi = mid
        else:
            lo = mid
        iterations += 1
    lam = hi
    _log.debug("shooting p=%g: lambda in [%.12g, %.12g] after %d iterations", problem.p, lo, hi, iterations)

    _, (uEnd, wEnd), sols = shooter.run(lam, dense=True)
    x, c, b = _hullNodes(problem)
    u = numpy.empty(x.size)
    for i, xi in enumerate(x):
        if xi <= shooter.start:
            u[i] = sols[0].sol(shooter.start)[0]
            continue
        if xi >= shooter.stop:
            u[i] = sols[-1].sol(shooter.stop)[0]
            continue
        k = numpy.searchsorted(shooter.breaks, xi) - 1
        k = min(max(k, 0), len(sols) - 1)
        u[i] = sols[k].sol(xi)[0]
    norm = float(numpy.sum(b*numpy.abs(u)**(problem.p - 1.0)))
    residual = abs(wEnd)/(lam*norm) if norm > 0 else math.inf
    u /= numpy.max(numpy.abs(u))
    return SpectralResult(lam=lam, eigenfunction=u, grid=x, residual=float(residual),
                          method="shooting", iterations=iterations)


def solveLambdaP(problem, config=None):
    """Compute the p-spectral gap ``lambda_p`` of a problem.

    Parameters
    ----------
    problem : `SpectralProblem`
        Density, exponent and subset; the density must be positive inside
        the hull of ``omega``.
    config : `SpectralConfig`, optional
        Solver selection and tolerances.

    Returns
    -------
    result : `SpectralResult`
        For shooting, ``residual`` is the normalized balance
        ``|int_omega Phi_p(u) h| / int_omega |u|^{p-1} h``.

    Raises
    ------
    ConvergenceError
        Raised if bisection does not converge; carries the last bracket.
    DomainError
        Raised if ``fd-eig`` is requested for ``p != 2`` or a proper subset.
    """
    if config is None:
        config = SpectralConfig()
    config.validate()
    if problem.p == "ls":
        raise DomainError("Use estimateLambdaLs for the log-Sobolev constant")
    method = config.method
    fdPossible = problem.p == 2.0 and problem.isFullSupport
    if method == "auto":
        method = "fd-eig" if fdPossible else "shooting"
    if method == "fd-eig":
        if not fdPossible:
            raise DomainError("fd-eig handles p = 2 on the whole support only")
        return _fdEigen(problem)
    return _shootEigen(problem, config)


def rayleighQuotientP(problem, f):
    """Poincare quotient of grid samples ``f`` (on the hull nodes).

    The denominator is ``int_omega |f - c|^p h`` with ``c`` the p-mean,
    ``int_omega Phi_p(f - c) h = 0``.
    """
    x, c, b = _hullNodes(problem)
    p = 2.0 if problem.p == "ls" else problem.p
    f = numpy.asarray(f, dtype=float)
    if f.shape != x.shape:
        raise DomainError("Expected %d samples on the hull nodes, got %d" % (x.size, f.size))
    d = problem.density.spacing
    energy = float(numpy.sum(c*d*d*numpy.abs(numpy.diff(f)/d)**p))
    sub = f[b > 0]
    weights = b[b > 0]
    if sub.max() == sub.min():
        return math.inf

    def balance(shift):
        return float(numpy.sum(weights*_phi(sub - shift, p)))

    mean = optimize.brentq(balance, float(sub.min()), float(sub.max()))
    denom = float(numpy.sum(weights*numpy.abs(sub - mean)**p))
    return energy/denom


class _EntropyQuotient:
    """``R(g) = 2 E(g)/(T - S log(S/m))`` and its gradient.
    """

    def __init__(self, problem, degenerate):
        self.x, self.c, self.b = _hullNodes(problem)
        self.m = float(numpy.sum(self.b))
        self.degenerate = degenerate
        self.best = (math.inf, None)
        self.evaluations = 0

    def parts(self, g):
        dg = numpy.diff(g)
        energy = float(numpy.sum(self.c*dg**2))
        g2 = numpy.maximum(g**2, LOG_FLOOR)
        S = float(numpy.sum(self.b*g**2))
        T = float(numpy.sum(self.b*g**2*numpy.log(g2)))
        return energy, S, T, dg, g2

    def value(self, g):
        energy, S, T, _, _ = self.parts(g)
        dn = T - S*math.log(S/self.m)
        if dn <= self.degenerate*S:
            return math.inf
        return 2.0*energy/dn

    def __call__(self, g):
        self.evaluations += 1
        energy, S, T, dg, g2 = self.parts(g)
        if not S > 0:
            return 1e30, numpy.zeros_like(g)
        dn = T - S*math.log(S/self.m)
        if dn <= self.degenerate*S:
            return 1e30, numpy.zeros_like(g)
        gradE = numpy.zeros_like(g)
        gradE[:-1] -= 2.0*self.c*dg
        gradE[1:] += 2.0*self.c*dg
        gradDn = 2.0*self.b*g*numpy.log(g2*self.m/S)
        R = 2.0*energy/dn
        grad = (2.0*gradE*dn - 2.0*energy*gradDn)/dn**2
        if R < self.best[0]:
            self.best = (R, g.copy())
        return R, grad


def entropyQuotient(problem, f):
    """Log-Sobolev quotient ``2 int f'^2 h / Ent(f^2)`` of grid samples on
    the hull nodes, in the scale-invariant form; ``inf`` for constants.
    """
    return _EntropyQuotient(problem, 0.0).value(numpy.asarray(f, dtype=float))


def estimateLambdaLs(problem, config=None):
    """Estimate the log-Sobolev constant by minimizing the entropy quotient.

    Parameters
    ----------
    problem : `SpectralProblem`
        Density and subset; ``p`` is ignored.
    config : `SpectralConfig`, optional
        Restarts, amplitude, seed and iteration limits.

    Returns
    -------
    result : `SpectralResult`
        The smallest quotient over all starts, an upper bound for the
        constant. ``status`` is ``"inconclusive"`` with ``lam = nan`` when
        every evaluated function was numerically constant.

    Notes
    -----
    On an interval the infimum is approached by ``1 + eps u`` with
    ``eps -> 0``, where the entropy vanishes to second order; the estimate
    keeps the best quotient among evaluations whose entropy per unit mass
    exceeds ``lsDegenerateTolerance``.
    """
    if config is None:
        config = SpectralConfig()
    config.validate()
    base = SpectralProblem(problem.density, 2.0, list(problem.omega))
    eig = solveLambdaP(base, config)
    x = eig.grid
    span = x[-1] - x[0]
    starts = [1.0 + config.lsAmplitude*eig.eigenfunction]
    rng = numpy.random.default_rng(config.seed)
    for _ in range(config.lsRestarts):
        coefs = rng.normal(size=config.lsModes)/numpy.arange(1, config.lsModes + 1)
        phases = rng.uniform(0.0, 2.0*math.pi, size=config.lsModes)
        wave = sum(cf*numpy.cos((k + 1)*math.pi*(x - x[0])/span + ph)
                   for k, (cf, ph) in enumerate(zip(coefs, phases)))
        wave /= max(float(numpy.max(numpy.abs(wave))), LOG_FLOOR)
        starts.append(1.0 + config.lsAmplitude*wave)

    def descend(g0):
        quotient = _EntropyQuotient(problem, config.lsDegenerateTolerance)
        optimize.minimize(quotient, g0, jac=True, method="L-BFGS-B",
                          options={"maxiter": config.lsMaxIter})
        return quotient.best, quotient.evaluations

    outcomes = parallelMap(descend, starts)
    best = (math.inf, None)
    evaluations = 0
    for (value, g), count in outcomes:
        evaluations += count
        if g is not None and value < best[0]:
            best = (value, g)
    if best[1] is None:
        _log.warning("Every log-Sobolev start degenerated to a constant")
        return SpectralResult(lam=math.nan, eigenfunction=numpy.ones(x.size), grid=x, residual=math.inf,
                              method="ls-minimize", status="inconclusive", iterations=evaluations)
    value, g = best
    _log.debug("log-Sobolev estimate %.8g after %d evaluations", value, evaluations)
    return SpectralResult(lam=float(value), eigenfunction=g, grid=x, residual=0.0,
                          method="ls-minimize", iterations=evaluations)


@dataclasses.dataclass
class TheoremGapReport:
    """Measured constant against the factor-Q lower bound of its class.

    ``upperApplicable`` is set when the class bound is attained (``Q = 1``
    and ``K = 0``, or ``K > 0`` with the diameter at its maximum); only then
    is ``upperSlack = bound (1 + tol) - measured`` expected to be
    non-negative, and it is reported, not enforced.
    """

    measured: float
    bound: float
    lowerBound: float
    lowerSlack: float
    attainment: float
    upperApplicable: bool
    upperSlack: float
    passed: bool
    Q: float
    K: float
    N: float
    p: float
    diameter: float

    def toDict(self):
        return dataclasses.asdict(self)


def theoremGap(h, Q, K, N, p, config=None, classifyConfig=None, checkClass=True):
    """Compare ``lambda_p(h)`` with ``bound/Q``, where ``bound`` is the sharp
    constant of CD(K,N) densities with the diameter of ``h``.

    Parameters
    ----------
    h : `qcdlab.densities.GridDensity`
        A QCD(Q,K,N) density.
    Q, K, N, p : `float`
        Class parameters and exponent.
    config : `SpectralConfig`, optional
        Solver settings and ``tolerance``.
    classifyConfig : `qcdlab.densities.ClassifyConfig`, optional
        Settings of the class membership check.
    checkClass : `bool`, optional
        Verify that ``h`` is QCD(Q,K,N) first.

    Returns
    -------
    report : `TheoremGapReport`

    Raises
    ------
    DomainError
        Raised if ``h`` fails the QCD(Q,K,N) check, or for ``K < 0`` where
        no closed-form comparison constant is available.
    """
    if config is None:
        config = SpectralConfig()
    if K < 0:
        raise DomainError("No closed-form comparison constant for K < 0")
    if checkClass:
        spec = ConditionSpec(kind="qcd", K=float(K), N=float(N), Q=float(Q))
        report = classify(h, spec, classifyConfig)
        if not report.passed:
            raise DomainError("Density is not %s (worst slack %.3g at %s)"
                              % (spec.label(), report.worstViolation, report.witness))
    D = h.diameter
    measured = solveLambdaP(SpectralProblem(h, p), config).lam
    bound = lambdaPClosedForm(p, D)
    sharp = Q == 1 and K == 0
    if K > 0:
        params = CurvatureParams(K=float(K), N=float(N))
        if p == 2.0:
            bound = max(bound, lichnerowicz(K, N))
        sharp = Q == 1 and p == 2.0 and D >= maxDiameter(params)*(1.0 - 1e-9)
    tol = config.tolerance
    lower = bound/Q
    lowerSlack = measured - lower
    upperSlack = bound*(1.0 + tol) - measured
    if sharp and upperSlack < 0:
        _log.warning("Measured constant %.6g exceeds the sharp class bound %.6g", measured, bound)
    return TheoremGapReport(measured=measured, bound=bound, lowerBound=lower, lowerSlack=lowerSlack,
                            attainment=measured/bound, upperApplicable=bool(sharp),
                            upperSlack=upperSlack, passed=bool(lowerSlack >= -tol*lower),
                            Q=float(Q), K=float(K), N=float(N), p=float(p), diameter=D)
