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
"""List-valued configuration fields, used for sweeps over interpolation
times and similar grids of parameters.
"""

__all__ = ["ListField"]

import collections.abc

from .config import Field, FieldValidationError, _typeStr, _autocast, _joinNamePath
from .comparison import compareScalars, getComparisonName


class List(collections.abc.MutableSequence):
    """Items of a `ListField`, checked one by one as they are stored.

    Parameters
    ----------
    config : `qcdlab.Config`
        Config instance that contains ``field``.
    field : `ListField`
        The field owning this list.
    value : iterable
        Initial items.
    """

    __slots__ = ("_field", "_config", "_items")

    def __init__(self, config, field, value):
        object.__setattr__(self, "_field", field)
        object.__setattr__(self, "_config", config)
        if isinstance(value, (str, bytes)) or not isinstance(value, collections.abc.Iterable):
            raise FieldValidationError(field, config,
                                       "Value %r is of incorrect type %s. Sequence type expected"
                                       % (value, _typeStr(value)))
        object.__setattr__(self, "_items", [self._checked(i, x) for i, x in enumerate(value)])

    def _checked(self, index, value):
        field = self._field
        value = _autocast(value, field.itemtype)
        if value is not None and not isinstance(value, field.itemtype):
            raise FieldValidationError(field, self._config,
                                       "Item %d (%r) has type %s, expected %s"
                                       % (index, value, _typeStr(value), _typeStr(field.itemtype)))
        if field.itemCheck is not None and not field.itemCheck(value):
            raise FieldValidationError(field, self._config,
                                       "Item %d (%r) is not a valid value" % (index, value))
        return value

    def _assertMutable(self):
        if self._config._frozen:
            raise FieldValidationError(self._field, self._config, "Cannot modify a frozen Config")

    def __getitem__(self, index):
        return self._items[index]

    def __setitem__(self, index, value):
        self._assertMutable()
        if isinstance(index, slice):
            start = index.indices(len(self._items))[0]
            value = [self._checked(start + n, x) for n, x in enumerate(value)]
        else:
            value = self._checked(index, value)
        self._items[index] = value

    def __delitem__(self, index):
        self._assertMutable()
        del self._items[index]

    def __len__(self):
        return len(self._items)

    def insert(self, index, value):
        self._assertMutable()
        self._items.insert(index, self._checked(index, value))

    def list(self):
        """Return a plain `list` copy of the items.
        """
        return list(self._items)

    def __eq__(self, other):
        if not isinstance(other, collections.abc.Sequence) or isinstance(other, str):
            return NotImplemented
        return len(self) == len(other) and all(a == b for a, b in zip(self._items, other))

    def __ne__(self, other):
        result = self.__eq__(other)
        return result if result is NotImplemented else not result

    __hash__ = None

    def __repr__(self):
        return repr(self._items)

    def __setattr__(self, attr, value):
        raise FieldValidationError(self._field, self._config,
                                   "%s has no attribute %s" % (_typeStr(self._field), attr))


class ListField(Field):
    """A `Field` holding a list of values of one type.

    Parameters
    ----------
    doc : `str`
        A description of the field.
    dtype : class
        Type of the items.
    default : iterable, optional
        Default items.
    optional : `bool`, optional
        When `False`, `qcdlab.Config.validate` fails on `None`.
    listCheck : callable, optional
        Check on the whole list, applied by `qcdlab.Config.validate`.
    itemCheck : callable, optional
        Check on each item, applied whenever an item is stored.
    length, minLength, maxLength : `int`, optional
        Bounds on the number of items; ``length`` overrides the others.
    """

    def __init__(self, doc, dtype, default=None, optional=False,
                 listCheck=None, itemCheck=None,
                 length=None, minLength=None, maxLength=None):
        if dtype not in Field.supportedTypes:
            raise ValueError("Unsupported dtype %s" % _typeStr(dtype))
        for name, check in (("listCheck", listCheck), ("itemCheck", itemCheck)):
            if check is not None and not callable(check):
                raise ValueError("'%s' must be callable" % name)
        if length is not None:
            if length <= 0:
                raise ValueError("'length' (%d) must be positive" % length)
            minLength = maxLength = length
        elif maxLength is not None:
            if maxLength <= 0:
                raise ValueError("'maxLength' (%d) must be positive" % maxLength)
            if minLength is not None and minLength > maxLength:
                raise ValueError("'maxLength' (%d) is smaller than 'minLength' (%d)" % (maxLength, minLength))

        Field.__init__(self, doc=doc, dtype=dtype, default=None, optional=optional)
        self.dtype = List
        self.default = default
        self.itemtype = dtype
        self.listCheck = listCheck
        self.itemCheck = itemCheck
        self.minLength = minLength
        self.maxLength = maxLength

    def validate(self, instance):
        """Check optionality, the length bounds and ``listCheck``.

        Raises
        ------
        FieldValidationError
            Raised if any of them fails.
        """
        Field.validate(self, instance)
        value = self.__get__(instance)
        if value is None:
            return
        size = len(value)
        if self.minLength is not None and size < self.minLength:
            raise FieldValidationError(self, instance,
                                       "Need at least %d items, got %d" % (self.minLength, size))
        if self.maxLength is not None and size > self.maxLength:
            raise FieldValidationError(self, instance,
                                       "Need at most %d items, got %d" % (self.maxLength, size))
        if self.listCheck is not None and not self.listCheck(value):
            raise FieldValidationError(self, instance, "%s is not a valid value" % (value,))

    def __set__(self, instance, value):
        if instance._frozen:
            raise FieldValidationError(self, instance, "Cannot modify a frozen Config")
        instance._storage[self.name] = None if value is None else List(instance, self, value)

    def toDict(self, instance):
        value = self.__get__(instance)
        return None if value is None else value.list()

    def _compare(self, instance1, instance2, shortcut, rtol, atol, output):
        l1 = getattr(instance1, self.name)
        l2 = getattr(instance2, self.name)
        name = getComparisonName(_joinNamePath(instance1._name, self.name),
                                 _joinNamePath(instance2._name, self.name))
        if l1 is None or l2 is None:
            return compareScalars(name, l1, l2, output=output)
        if not compareScalars("length of %s" % name, len(l1), len(l2), output=output):
            return False
        equal = True
        for n, (v1, v2) in enumerate(zip(l1, l2)):
            if not compareScalars("%s[%d]" % (name, n), v1, v2, dtype=self.itemtype,
                                  rtol=rtol, atol=atol, output=output):
                if shortcut:
                    return False
                equal = False
        return equal
