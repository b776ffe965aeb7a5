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
"""Exceptions raised by the numerical modules.

Precondition failures derive from `ValueError` and solver failures from
`RuntimeError`, so callers that only know the builtin hierarchy still catch
them sensibly.
"""

__all__ = ("QcdlabError", "DomainError", "ConvergenceError", "VolumeBudgetError")


class QcdlabError(Exception):
    """Base class of every error raised by qcdlab.
    """
    pass


class DomainError(QcdlabError, ValueError):
    """An input lies outside the domain where an operation is defined.

    Examples are an interpolation time of 0 or 1, a support longer than the
    Bonnet-Myers diameter, or a model density vanishing inside its support.
    """
    pass


class ConvergenceError(QcdlabError, RuntimeError):
    """A solver stopped before reaching its tolerance.

    Parameters
    ----------
    msg : `str`
        Description of the failure.
    bracket : `tuple` of `float`, optional
        Last bracketing interval of a bisection, if any.
    residual : `float`, optional
        Best residual reached.
    """

    def __init__(self, msg, bracket=None, residual=None):
        self.bracket = bracket
        self.residual = residual
        if bracket is not None:
            msg = "%s (bracket [%.17g, %.17g])" % (msg, bracket[0], bracket[1])
        if residual is not None:
            msg = "%s (best residual %.3g)" % (msg, residual)
        super().__init__(msg)


class VolumeBudgetError(QcdlabError, RuntimeError):
    """A voxel estimate would need more cells, or more samples, than allowed.

    Parameters
    ----------
    msg : `str`
        Description of the failure.
    budget : `int`
        The configured limit.
    requested : `int`
        What the estimate asked for.
    """

    def __init__(self, msg, budget, requested):
        self.budget = budget
        self.requested = requested
        super().__init__("%s (requested %d, budget %d)" % (msg, requested, budget))
