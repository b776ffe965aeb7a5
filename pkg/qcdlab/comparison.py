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
"""Helpers for comparing `qcdlab.Config` instances.

Field ``_compare`` implementations go through these so that reporting,
floating-point tolerance and shortcutting behave the same everywhere.
"""

import numpy

__all__ = ("getComparisonName", "compareScalars", "compareConfigs")


def getComparisonName(name1, name2):
    """Return ``name1`` when both names agree, else ``"name1 / name2"``.
    """
    if name1 != name2:
        return "%s / %s" % (name1, name2)
    return name1


def compareScalars(name, v1, v2, output, rtol=1E-8, atol=1E-8, dtype=None):
    """Compare two scalar values for equality.

    Parameters
    ----------
    name : `str`
        Name to use when reporting differences.
    v1, v2 : object
        Values to compare.
    output : callable or `None`
        Receives a message when the values differ (for example `print`).
    rtol, atol : `float`, optional
        Tolerances for floating point comparisons.
    dtype : class, optional
        Data type of the values; `float` selects `numpy.allclose`.

    Returns
    -------
    areEqual : `bool`

    Notes
    -----
    Two NaN values compare equal, and so do two infinities of the same sign.
    Tolerances such as the interior-zero threshold legitimately take the
    value ``inf``.
    """
    if v1 is None or v2 is None:
        result = (v1 == v2)
    elif dtype in (float, complex):
        result = bool(numpy.allclose(v1, v2, rtol=rtol, atol=atol)) or \
            bool(numpy.isnan(v1) and numpy.isnan(v2)) or v1 == v2
    else:
        result = (v1 == v2)
    if not result and output is not None:
        output("Inequality in %s: %r != %r" % (name, v1, v2))
    return result


def compareConfigs(name, c1, c2, shortcut=True, rtol=1E-8, atol=1E-8, output=None):
    """Compare two `qcdlab.Config` instances field by field.

    Parameters
    ----------
    name : `str`
        Name to use when reporting differences.
    c1, c2 : `qcdlab.Config` or `None`
        Configs to compare.
    shortcut : `bool`, optional
        Return as soon as an inequality is found.
    rtol, atol : `float`, optional
        Tolerances for floating point comparisons.
    output : callable, optional
        Receives a message for every inequality.

    Returns
    -------
    areEqual : `bool`
    """
    assert name is not None
    if c1 is None:
        if c2 is None:
            return True
        if output is not None:
            output("LHS is None for %s" % name)
        return False
    if c2 is None:
        if output is not None:
            output("RHS is None for %s" % name)
        return False
    if type(c1) != type(c2):
        if output is not None:
            output("Config types do not match for %s: %s != %s" % (name, type(c1), type(c2)))
        return False
    equal = True
    for field in c1._fields.values():
        result = field._compare(c1, c2, shortcut=shortcut, rtol=rtol, atol=atol, output=output)
        if not result and shortcut:
            return False
        equal = equal and result
    return equal
