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
"""Distortion coefficients and the constants derived from them.

All functions accept scalars or numpy arrays and broadcast elementwise;
scalar inputs give `float` results. Infinite coefficients are returned as
``numpy.inf``, and products with them follow the convention
``inf * 0 = 0`` (see `extMul`).
"""

__all__ = ("CurvatureParams", "CoefficientConfig", "sKappa", "cKappa", "sigma", "tau",
           "tauPower", "maxDiameter", "qcdFromMcp", "cdCoefficient", "jensenFactor",
           "jensenSlack", "extMul")

import math

import numpy

from .config import Config, Field
from .rangeField import RangeField
from .errors import DomainError

TAYLOR_THRESHOLD = 1e-8


class CurvatureParams(Config):
    """Curvature lower bound ``K`` and dimension upper bound ``N``.
    """

    K = Field("Lower bound on the Ricci curvature.", float, default=0.0)
    N = RangeField("Upper bound on the dimension.", float, default=2.0, min=1.0, inclusiveMin=False)

    def validate(self):
        super().validate()
        if not math.isfinite(self.K):
            raise DomainError("K must be finite, got %r" % (self.K,))
        if not math.isfinite(self.N):
            raise DomainError("N must be finite, got %r" % (self.N,))

    @property
    def kappa(self):
        """Sectional curvature ``K/(N-1)`` of the one-dimensional model.
        """
        return self.K/(self.N - 1.0)


class CoefficientConfig(Config):
    tolerance = RangeField("Absolute tolerance of coefficient comparisons.", float,
                           default=1e-9, min=0.0)
    taylorThreshold = RangeField("Below this |kappa theta^2| the sigma ratio is "
                                 "evaluated by its Taylor expansion.", float,
                                 default=TAYLOR_THRESHOLD, min=0.0)


def _output(array, scalar):
    if scalar:
        return float(array)
    return array


def _isScalar(*values):
    return all(numpy.ndim(v) == 0 for v in values)


def _checkTime(t):
    t = numpy.asarray(t, dtype=float)
    if numpy.any(~(t > 0.0)) or numpy.any(~(t < 1.0)):
        raise DomainError("Interpolation time must lie in the open interval (0, 1); "
                          "t = 0 and t = 1 are excluded, got %s" % (t,))
    return t


def sKappa(kappa, theta):
    """Generalized sine: ``sin(sqrt(k) x)/sqrt(k)``, ``x``, or
    ``sinh(sqrt(-k) x)/sqrt(-k)`` by the sign of ``kappa``.
    """
    scalar = _isScalar(kappa, theta)
    k, th = numpy.broadcast_arrays(numpy.asarray(kappa, dtype=float),
                                   numpy.asarray(theta, dtype=float))
    out = numpy.array(th, dtype=float)
    rk = numpy.sqrt(numpy.abs(k))
    pos = k > 0
    neg = k < 0
    out[pos] = numpy.sin(rk[pos]*th[pos])/rk[pos]
    out[neg] = numpy.sinh(rk[neg]*th[neg])/rk[neg]
    return _output(out, scalar)


def cKappa(kappa, t):
    """Generalized cosine, truncated to zero outside ``|sqrt(k) t| <= pi/2``
    when ``kappa > 0``.
    """
    scalar = _isScalar(kappa, t)
    k, tt = numpy.broadcast_arrays(numpy.asarray(kappa, dtype=float),
                                   numpy.asarray(t, dtype=float))
    out = numpy.ones(tt.shape, dtype=float)
    rk = numpy.sqrt(numpy.abs(k))
    pos = k > 0
    neg = k < 0
    arg = rk[pos]*tt[pos]
    out[pos] = numpy.where(numpy.abs(arg) <= 0.5*math.pi, numpy.cos(arg), 0.0)
    out[neg] = numpy.cosh(rk[neg]*tt[neg])
    return _output(out, scalar)


def sigma(t, theta, params, taylorThreshold=TAYLOR_THRESHOLD):
    """Distortion coefficient ``sigma^{(t)}_{K,N-1}(theta)``.

    Parameters
    ----------
    t : `float` or array
        Interpolation time in the open interval (0, 1).
    theta : `float` or array
        Distance, non-negative.
    params : `CurvatureParams`
        Curvature and dimension bounds.
    taylorThreshold : `float`, optional
        Below this value of ``|kappa theta^2|`` the ratio of generalized
        sines is replaced by its Taylor polynomial, which has no cancellation
        near ``theta = 0``.

    Returns
    -------
    sigma : `float` or array
        ``inf`` where ``K theta^2 >= pi^2 (N-1)``; ``t`` at ``theta = 0``.

    Raises
    ------
    DomainError
        Raised if ``t`` is not in (0, 1) or ``theta`` is negative.
    """
    scalar = _isScalar(t, theta)
    t = _checkTime(t)
    theta = numpy.asarray(theta, dtype=float)
    if numpy.any(theta < 0):
        raise DomainError("theta must be non-negative")
    t, theta = numpy.broadcast_arrays(t, theta)
    kappa = params.kappa
    x = kappa*theta**2
    out = numpy.empty(theta.shape, dtype=float)

    small = numpy.abs(x) < taylorThreshold
    if numpy.any(small):
        xs = x[small]
        ts2 = t[small]**2
        num = 1.0 - xs*ts2/6.0 + xs**2*ts2**2/120.0 - xs**3*ts2**3/5040.0
        den = 1.0 - xs/6.0 + xs**2/120.0 - xs**3/5040.0
        out[small] = t[small]*num/den

    beyond = ~small & (x >= math.pi**2)
    out[beyond] = numpy.inf

    regular = ~small & ~beyond
    if numpy.any(regular):
        out[regular] = sKappa(kappa, t[regular]*theta[regular])/sKappa(kappa, theta[regular])
    return _output(out, scalar)


def tau(t, theta, params, taylorThreshold=TAYLOR_THRESHOLD):
    """Distortion coefficient ``tau^{(t)}_{K,N} = t^{1/N} sigma^{1-1/N}``.

    ``inf`` is propagated from `sigma`.
    """
    scalar = _isScalar(t, theta)
    s = numpy.asarray(sigma(t, theta, params, taylorThreshold=taylorThreshold), dtype=float)
    tt = numpy.asarray(t, dtype=float)
    N = params.N
    with numpy.errstate(over="ignore"):
        out = tt**(1.0/N)*s**(1.0 - 1.0/N)
    return _output(numpy.asarray(out, dtype=float), scalar)


def tauPower(t, theta, params):
    """Return ``tau^{(t)}_{K,N}(theta)^N``, the lower bound for the volume
    distortion of a measure contraction; equals ``t^N`` when ``K = 0``.
    """
    return tau(t, theta, params)**params.N


def maxDiameter(params):
    """Bonnet-Myers diameter bound ``pi sqrt((N-1)/K)``; ``inf`` unless
    ``K > 0``.
    """
    if params.K > 0:
        return math.pi*math.sqrt((params.N - 1.0)/params.K)
    return math.inf


def qcdFromMcp(N, n):
    """Quasi-convexity order ``Q = 2^(N-n)`` of a space that is MCP(K,N)
    and has topological dimension ``n``.

    Raises
    ------
    DomainError
        Raised unless ``1 <= n <= N``.
    """
    if n < 1 or n > N:
        raise DomainError("Need 1 <= n <= N, got n=%r, N=%r" % (n, N))
    return 2.0**(N - n)


def cdCoefficient(t, theta, params, Q=1.0):
    """Interpolation weight ``Q^{-1/(N-1)} sigma^{(t)}_{K,N-1}(theta)`` of
    the quasi curvature-dimension condition.
    """
    if Q < 1:
        raise DomainError("Q must be at least 1, got %r" % (Q,))
    return Q**(-1.0/(params.N - 1.0))*sigma(t, theta, params)


def jensenFactor(alpha):
    """Return ``2^(alpha-1)``, the best constant ``c`` with
    ``(a+b)^alpha >= c (a^alpha + b^alpha)`` for ``alpha`` in (0, 1].
    """
    if not 0 < alpha <= 1:
        raise DomainError("alpha must lie in (0, 1], got %r" % (alpha,))
    return 2.0**(alpha - 1.0)


def jensenSlack(a, b, alpha):
    """Return ``(a+b)^alpha - 2^(alpha-1) (a^alpha + b^alpha)``, which is
    non-negative for ``a, b >= 0``.
    """
    a = numpy.asarray(a, dtype=float)
    b = numpy.asarray(b, dtype=float)
    out = (a + b)**alpha - jensenFactor(alpha)*(a**alpha + b**alpha)
    return _output(out, _isScalar(a, b))


def extMul(coefficient, value):
    """Multiply a possibly infinite coefficient by a non-negative value with
    ``inf * 0 = 0``.
    """
    scalar = _isScalar(coefficient, value)
    c, v = numpy.broadcast_arrays(numpy.asarray(coefficient, dtype=float),
                                  numpy.asarray(value, dtype=float))
    out = numpy.where(v == 0.0, 0.0, c*numpy.where(v == 0.0, 1.0, v))
    return _output(out, scalar)
