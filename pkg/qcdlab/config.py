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
__all__ = ("Config", "Field", "FieldValidationError")

import copy
import math
import numbers
import os
import shutil
import tempfile

import numpy

from .comparison import getComparisonName, compareScalars, compareConfigs


def _joinNamePath(prefix=None, name=None, index=None):
    """Generate dotted names for nested solver configurations.
    """
    if not prefix and not name:
        raise ValueError("Invalid name: cannot be None")
    elif not name:
        name = prefix
    elif prefix and name:
        name = prefix + "." + name

    if index is not None:
        return "%s[%r]" % (name, index)
    return name


def _autocast(x, dtype):
    """Cast a value to the field type where the conversion is lossless.

    Parameters
    ----------
    x : object
        A value, possibly a numpy scalar produced by a computation.
    dtype : type
        Field data type, such as `float`, `int`, or `str`.

    Returns
    -------
    value : object
        ``x`` converted to a builtin of type ``dtype`` when that is safe
        (``int`` to ``float``, numpy scalars to builtins); otherwise ``x``
        unchanged so that validation reports the mismatch.
    """
    if isinstance(x, numpy.generic):
        x = x.item()
    if dtype is float and isinstance(x, numbers.Integral) and not isinstance(x, bool):
        return float(x)
    return x


def _typeStr(x):
    """Return the fully-qualified type name of ``x`` (or of the type ``x``).
    """
    xtype = x if isinstance(x, type) else type(x)
    if xtype.__module__ == "builtins":
        return xtype.__name__
    return "%s.%s" % (xtype.__module__, xtype.__name__)


class ConfigMeta(type):
    """Metaclass that collects `Field` class attributes of a `Config`.

    Notes
    -----
    Each subclass receives its own deep copies of the inherited fields in a
    ``_fields`` dictionary, and every field learns its attribute name, so
    that a field never has to be told its own name.
    """

    def __init__(cls, name, bases, dict_):
        type.__init__(cls, name, bases, dict_)
        cls._fields = {}

        def getFields(classtype):
            fields = {}
            for b in reversed(classtype.__bases__):
                fields.update(getFields(b))
            for k, v in classtype.__dict__.items():
                if isinstance(v, Field):
                    fields[k] = v
            return fields

        for k, v in getFields(cls).items():
            setattr(cls, k, copy.deepcopy(v))

    def __setattr__(cls, name, value):
        if isinstance(value, Field):
            value.name = name
            cls._fields[name] = value
        type.__setattr__(cls, name, value)


class FieldValidationError(ValueError):
    """Raised when a `Field` value is rejected by its `Config`.

    Parameters
    ----------
    field : `Field`
        The field that was not valid.
    config : `Config`
        The config containing the invalid field.
    msg : `str`
        Text describing why the field was not valid.
    """

    def __init__(self, field, config, msg):
        self.fieldType = type(field)
        self.fieldName = field.name
        self.fullname = _joinNamePath(config._name, field.name)
        self.doc = field.doc
        error = "%s '%s' failed validation: %s\n(field: %s)" % \
            (self.fieldType.__name__, self.fullname, msg, self.doc)
        super().__init__(error)


class Field:
    """A typed solver parameter declared on a `Config`.

    Parameters
    ----------
    doc : `str`
        A description of the parameter, including units where relevant.
    dtype : type
        One of `str`, `bool`, `float` or `int`.
    default : object, optional
        The default value.
    check : callable, optional
        Called with a candidate value; returning `False` rejects it.
        Relations between several fields belong in `Config.validate`.
    optional : `bool`, optional
        When `False`, `Config.validate` rejects a value of `None`.

    Raises
    ------
    ValueError
        Raised when ``dtype`` is not supported.

    See also
    --------
    ChoiceField
    ConfigField
    ListField
    RangeField

    Notes
    -----
    Fields are descriptors: reading the attribute on a config instance
    returns the stored value, assigning validates first and stores after.

    Examples
    --------
    >>> from qcdlab import Config, Field
    >>> class ShootingConfig(Config):
    ...     maxIter = Field("Bisection iterations before giving up.", int, default=200)
    ...
    >>> config = ShootingConfig()
    >>> config.maxIter
    200
    >>> config.maxIter = 50
    """

    supportedTypes = set((str, bool, float, int))
    """Supported data types for field values (`set` of types).
    """

    def __init__(self, doc, dtype, default=None, check=None, optional=False):
        if dtype not in self.supportedTypes:
            raise ValueError("Unsupported Field dtype %s" % _typeStr(dtype))
        self._setup(doc=doc, dtype=dtype, default=default, check=check, optional=optional)

    def _setup(self, doc, dtype, default, check, optional):
        self.dtype = dtype
        self.doc = doc
        self.__doc__ = "%s (`%s`" % (doc, dtype.__name__)
        if optional or default is not None:
            self.__doc__ += ", default ``%r``" % (default,)
        self.__doc__ += ")"
        self.default = default
        self.check = check
        self.optional = optional
        self.name = None

    def rename(self, instance):
        """Propagate a new dotted name to held subconfigs (internal).
        """
        pass

    def validate(self, instance):
        """Check the stored value of this field (internal).

        Raises
        ------
        FieldValidationError
            Raised if a required value is `None`.
        """
        value = self.__get__(instance)
        if not self.optional and value is None:
            raise FieldValidationError(self, instance, "Required value cannot be None")

    def freeze(self, instance):
        """Freeze held subconfigs (internal); plain fields hold none.
        """
        pass

    def _validateValue(self, value):
        """Validate a candidate value.

        Raises
        ------
        TypeError
            Raised if the value's type does not match ``dtype``.
        ValueError
            Raised if the value is rejected by ``check``.
        """
        if value is None:
            return

        if not isinstance(value, self.dtype) or (self.dtype is not bool and isinstance(value, bool)):
            msg = "Value %s is of incorrect type %s. Expected type %s" % \
                (value, _typeStr(value), _typeStr(self.dtype))
            raise TypeError(msg)
        if self.check is not None and not self.check(value):
            msg = "Value %s is not a valid value" % str(value)
            raise ValueError(msg)

    def save(self, outfile, instance):
        """Write ``# doc`` and ``fullname=value`` lines that reload this value.
        """
        value = self.__get__(instance)
        fullname = _joinNamePath(instance._name, self.name)

        doc = "# " + str(self.doc).replace("\n", "\n# ")
        if isinstance(value, float) and (math.isinf(value) or math.isnan(value)):
            outfile.write("{}\n{}=float('{!r}')\n\n".format(doc, fullname, value))
        else:
            outfile.write("{}\n{}={!r}\n\n".format(doc, fullname, value))

    def toDict(self, instance):
        """Return the value as a plain Python object (internal).
        """
        return self.__get__(instance)

    def fromDict(self, instance, value):
        """Assign a plain value produced by `toDict` (internal).
        """
        self.__set__(instance, value)

    def __get__(self, instance, owner=None):
        if instance is None or not isinstance(instance, Config):
            return self
        return instance._storage[self.name]

    def __set__(self, instance, value):
        if instance._frozen:
            raise FieldValidationError(self, instance, "Cannot modify a frozen Config")

        if value is not None:
            value = _autocast(value, self.dtype)
            try:
                self._validateValue(value)
            except (TypeError, ValueError) as e:
                raise FieldValidationError(self, instance, str(e))

        instance._storage[self.name] = value

    def __delete__(self, instance):
        self.__set__(instance, None)

    def _compare(self, instance1, instance2, shortcut, rtol, atol, output):
        """Compare this field in two configs; floats go through
        `numpy.allclose`.
        """
        v1 = getattr(instance1, self.name)
        v2 = getattr(instance2, self.name)
        name = getComparisonName(
            _joinNamePath(instance1._name, self.name),
            _joinNamePath(instance2._name, self.name)
        )
        return compareScalars(name, v1, v2, dtype=self.dtype, rtol=rtol, atol=atol, output=output)


class Config(metaclass=ConfigMeta):
    """Base class for solver parameter objects.

    Notes
    -----
    Subclasses declare `Field` instances as class attributes. Instances
    behave like a read-only mapping of field names to values and reject
    attributes that are not declared fields, so a misspelt tolerance fails
    loudly instead of being silently ignored.

    Examples
    --------
    >>> from qcdlab import Config, RangeField, ListField
    >>> class SweepConfig(Config):
    ...     samples = RangeField(doc="Samples per sweep.", dtype=int, default=64, min=1)
    ...     tGrid = ListField(doc="Interpolation times.", dtype=float, default=[0.25, 0.5, 0.75])
    ...
    >>> config = SweepConfig()
    >>> config.keys()
    ['samples', 'tGrid']
    >>> config.tGrid.append(0.9)
    >>> config.samples = 0
    Traceback (most recent call last):
    ...
    qcdlab.config.FieldValidationError: RangeField 'samples' failed validation: ...
    """

    def __iter__(self):
        return self._fields.__iter__()

    def keys(self):
        """Return the field names (`list` of `str`).
        """
        return list(self._storage.keys())

    def values(self):
        """Return the field values (`list`).
        """
        return list(self._storage.values())

    def items(self):
        """Return ``(name, value)`` pairs (`list` of `tuple`).
        """
        return list(self._storage.items())

    def __contains__(self, name):
        return self._storage.__contains__(name)

    def __new__(cls, *args, **kw):
        name = kw.pop("__name", None)
        instance = object.__new__(cls)
        instance._frozen = False
        instance._name = name
        instance._storage = {}
        for field in instance._fields.values():
            field.__set__(instance, field.default)
        instance.setDefaults()
        instance.update(**kw)
        return instance

    def setDefaults(self):
        """Subclass hook for defaults that must be computed.

        Implementations must call the base class ``setDefaults``.
        """
        pass

    def update(self, **kw):
        """Update the values of fields named by the keyword arguments.

        Raises
        ------
        KeyError
            Raised if a keyword is not a field of this config.
        """
        for name, value in kw.items():
            try:
                field = self._fields[name]
            except KeyError:
                raise KeyError("No field of name %s exists in config type %s" % (name, _typeStr(self)))
            field.__set__(self, value)

    def updateFromDict(self, dict_):
        """Apply a nested mapping such as the one produced by `toDict`.

        Parameters
        ----------
        dict_ : `dict`
            Field names to plain values; nested configs take nested dicts.

        Raises
        ------
        KeyError
            Raised if a key is not a field of this config.
        """
        for name, value in dict_.items():
            if name not in self._fields:
                raise KeyError("No field of name %s exists in config type %s" % (name, _typeStr(self)))
            self._fields[name].fromDict(self, value)

    def load(self, filename, root="config"):
        """Apply a Python override file (``config.field = value`` lines).
        """
        with open(filename, "r") as f:
            code = compile(f.read(), filename=filename, mode="exec")
        self.loadFromStream(stream=code, root=root)

    def loadFromStream(self, stream, root="config"):
        """Apply override code from a string, file object or compiled code.
        """
        if hasattr(stream, "read"):
            stream = stream.read()
        local = {root: self}
        exec(stream, {"inf": math.inf}, local)

    def save(self, filename, root="config"):
        """Write an override file that reproduces this config.

        The file is written to a temporary name first and moved into place.
        """
        d = os.path.dirname(os.path.abspath(filename))
        with tempfile.NamedTemporaryFile(mode="w", delete=False, dir=d) as outfile:
            self.saveToStream(outfile, root)
        umask = os.umask(0o077)
        os.umask(umask)
        os.chmod(outfile.name, (~umask & 0o666))
        shutil.move(outfile.name, filename)

    def saveToStream(self, outfile, root="config"):
        """Write override code reproducing this config to ``outfile``.
        """
        tmp = self._name
        self._rename(root)
        try:
            typeString = _typeStr(self)
            outfile.write("assert type({}).__name__ == '{}', 'config is of type %s instead of {}' "
                          "% type({}).__name__\n".format(root, type(self).__name__, typeString, root))
            self._save(outfile)
        finally:
            self._rename(tmp)

    def freeze(self):
        """Make this config and its subconfigs read-only.
        """
        self._frozen = True
        for field in self._fields.values():
            field.freeze(self)

    def _save(self, outfile):
        for field in self._fields.values():
            field.save(outfile, self)

    def toDict(self):
        """Return a nested `dict` of plain values keyed by field name.
        """
        return {name: field.toDict(self) for name, field in self._fields.items()}

    def _rename(self, name):
        self._name = name
        for field in self._fields.values():
            field.rename(self)

    def validate(self):
        """Validate every field; subclasses add inter-field checks after
        calling this.

        Raises
        ------
        FieldValidationError
            Raised if verification fails.
        """
        for field in self._fields.values():
            field.validate(self)

    def __setattr__(self, attr, value):
        if attr in self._fields:
            self._fields[attr].__set__(self, value)
        elif hasattr(getattr(self.__class__, attr, None), '__set__'):
            return object.__setattr__(self, attr, value)
        elif attr in self.__dict__ or attr in ("_name", "_storage", "_frozen"):
            self.__dict__[attr] = value
        else:
            raise AttributeError("%s has no attribute %s" % (_typeStr(self), attr))

    def __delattr__(self, attr):
        if attr in self._fields:
            self._fields[attr].__delete__(self)
        else:
            object.__delattr__(self, attr)

    def __eq__(self, other):
        if type(other) == type(self):
            for name in self._fields:
                thisValue = getattr(self, name)
                otherValue = getattr(other, name)
                if isinstance(thisValue, float) and math.isnan(thisValue):
                    if not (isinstance(otherValue, float) and math.isnan(otherValue)):
                        return False
                elif thisValue != otherValue:
                    return False
            return True
        return False

    def __ne__(self, other):
        return not self.__eq__(other)

    def __str__(self):
        return str(self.toDict())

    def __repr__(self):
        return "%s(%s)" % (
            _typeStr(self),
            ", ".join("%s=%r" % (k, v) for k, v in self.toDict().items() if v is not None)
        )

    def compare(self, other, shortcut=True, rtol=1E-8, atol=1E-8, output=None):
        """Compare two configs field by field.

        Parameters
        ----------
        other : `Config`
            Config to compare against.
        shortcut : `bool`, optional
            Stop at the first inequality.
        rtol, atol : `float`, optional
            Tolerances for floating-point fields (`numpy.allclose`).
        output : callable, optional
            Receives a message for each inequality found.

        Returns
        -------
        isEqual : `bool`
        """
        name1 = self._name if self._name is not None else "config"
        name2 = other._name if other._name is not None else "config"
        name = getComparisonName(name1, name2)
        return compareConfigs(name, self, other, shortcut=shortcut,
                              rtol=rtol, atol=atol, output=output)
