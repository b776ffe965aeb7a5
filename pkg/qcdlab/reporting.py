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
"""Serialization of reports to byte-stable JSON and CSV.
"""

__all__ = ("toJsonable", "dumpReport", "provenance")

import csv
import dataclasses
import json
import math

import numpy

from .config import Config


def _floatToken(x):
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def toJsonable(value):
    """Convert a report value into plain JSON types.

    Parameters
    ----------
    value : object
        A dataclass (or object with ``toDict``), `Config`, mapping,
        sequence, numpy array or scalar.

    Returns
    -------
    plain : object
        Nested `dict`, `list`, `str`, `int`, `float`, `bool` or `None`.
        Non-finite floats become the tokens ``"inf"``, ``"-inf"`` and
        ``"nan"``.
    """
    if value is None or isinstance(value, (bool, str)):
        return value
    if isinstance(value, Config):
        return toJsonable(value.toDict())
    if hasattr(value, "toDict") and not isinstance(value, type):
        return toJsonable(value.toDict())
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return toJsonable({f.name: getattr(value, f.name) for f in dataclasses.fields(value)})
    if isinstance(value, numpy.ndarray):
        return toJsonable(value.tolist())
    if isinstance(value, numpy.generic):
        return toJsonable(value.item())
    if isinstance(value, float):
        return _floatToken(value)
    if isinstance(value, int):
        return value
    if isinstance(value, dict):
        return {str(k): toJsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [toJsonable(v) for v in value]
    raise TypeError("Cannot serialize value of type %s" % type(value).__name__)


def dumpReport(report, stream, fmt="json"):
    """Write a report to ``stream``.

    Parameters
    ----------
    report : object
        Anything `toJsonable` accepts. For ``fmt="csv"`` it must convert to
        a list of flat dicts (rows) or to a dict holding such a list under
        ``"rows"``.
    stream : file-like
        Text stream.
    fmt : {"json", "csv"}
        Output format.
    """
    plain = toJsonable(report)
    if fmt == "json":
        json.dump(plain, stream, sort_keys=True, indent=2, allow_nan=False)
        stream.write("\n")
    elif fmt == "csv":
        rows = plain.get("rows") if isinstance(plain, dict) else plain
        if not isinstance(rows, list):
            raise TypeError("CSV output needs a list of rows")
        if not rows:
            return
        header = sorted(rows[0].keys())
        writer = csv.DictWriter(stream, fieldnames=header, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k) for k in header})
    else:
        raise ValueError("Unknown report format %r" % (fmt,))


def provenance(config=None, seed=None, **grids):
    """Return the provenance block attached to every CLI report.

    Parameters
    ----------
    config : `Config`, optional
        Solver configuration whose fields (tolerances, grid sizes) are
        embedded.
    seed : `int`, optional
        Random seed of the run.
    **grids
        Additional grid sizes or tolerances to record.
    """
    from . import __version__
    block = {"version": __version__, "seed": seed}
    if config is not None:
        block["config"] = config.toDict()
    block.update(grids)
    return toJsonable(block)
