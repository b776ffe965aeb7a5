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
"""Numerical experiments on quasi curvature-dimension conditions.
"""

__version__ = "1.0.0"

from .errors import *
from .comparison import *
from .config import *
from .rangeField import *
from .choiceField import *
from .listField import *
from .configField import *
from .coefficients import *
from .densities import *
from .envelope import *
from .transport1d import *
from .spectral import *
from .spaceConstants import *
from .heisenberg import *
from .localization2d import *
