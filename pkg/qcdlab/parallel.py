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
"""Ordered parallel map bounded by the ``QCDLAB_THREADS`` environment
variable.
"""

__all__ = ("threadCount", "parallelMap")

import logging
import os
from concurrent.futures import ThreadPoolExecutor

_log = logging.getLogger(__name__)

ENV_VAR = "QCDLAB_THREADS"
MAX_DEFAULT_THREADS = 8


def threadCount():
    """Return the number of worker threads to use.

    Returns
    -------
    count : `int`
        The value of ``QCDLAB_THREADS`` when it is a positive integer;
        otherwise ``os.cpu_count()`` capped at 8.
    """
    value = os.environ.get(ENV_VAR)
    if value is not None:
        try:
            count = int(value)
        except ValueError:
            count = 0
        if count > 0:
            return count
        _log.warning("Ignoring invalid %s=%r", ENV_VAR, value)
    return max(1, min(os.cpu_count() or 1, MAX_DEFAULT_THREADS))


def parallelMap(func, items):
    """Apply ``func`` to every item, possibly on several threads.

    Parameters
    ----------
    func : callable
        Function of one argument.
    items : iterable
        Arguments.

    Returns
    -------
    results : `list`
        ``[func(item) for item in items]`` in input order, whatever the
        number of threads, so reductions over the results do not depend on
        scheduling.
    """
    items = list(items)
    workers = min(threadCount(), len(items))
    if workers <= 1:
        return [func(item) for item in items]
    _log.debug("parallelMap over %d items on %d threads", len(items), workers)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items))
