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
__all__ = ["ConfigField"]

from .config import Config, Field, FieldValidationError, _joinNamePath, _typeStr
from .comparison import compareConfigs, getComparisonName


class ConfigField(Field):
    """A `Field` whose value is a nested `Config`.

    Parameters
    ----------
    doc : `str`
        A description of the field.
    dtype : `qcdlab.Config` subclass
        Type of the nested config.
    default : `qcdlab.Config`, optional
        Defaults to a default-constructed ``dtype``; the class itself is
        accepted as shorthand for that.
    check : callable, optional
        Validates the nested config as a whole.

    Notes
    -----
    Assigning to a ``ConfigField`` copies every field of the assigned config
    into the held instance, so references to the held subconfig stay valid.
    `qcdlab.cli.RunConfig` nests one solver config per subcommand this way.
    """

    def __init__(self, doc, dtype, default=None, check=None):
        if not issubclass(dtype, Config):
            raise ValueError("dtype=%s is not a subclass of Config" %
                             _typeStr(dtype))
        if default is None:
            default = dtype
        self._setup(doc=doc, dtype=dtype, default=default, check=check, optional=False)

    def __get__(self, instance, owner=None):
        if instance is None or not isinstance(instance, Config):
            return self
        value = instance._storage.get(self.name, None)
        if value is None:
            self.__set__(instance, self.default)
            value = instance._storage[self.name]
        return value

    def __set__(self, instance, value):
        if instance._frozen:
            raise FieldValidationError(self, instance,
                                       "Cannot modify a frozen Config")
        name = _joinNamePath(prefix=instance._name, name=self.name)

        if value != self.dtype and type(value) != self.dtype:
            msg = "Value %s is of incorrect type %s. Expected %s" % \
                (value, _typeStr(value), _typeStr(self.dtype))
            raise FieldValidationError(self, instance, msg)

        oldValue = instance._storage.get(self.name, None)
        if oldValue is None:
            if value == self.dtype:
                instance._storage[self.name] = self.dtype(__name=name)
            else:
                instance._storage[self.name] = self.dtype(__name=name, **value._storage)
        else:
            if value == self.dtype:
                value = value()
            oldValue.update(**value._storage)

    def fromDict(self, instance, value):
        self.__get__(instance).updateFromDict(value)

    def rename(self, instance):
        value = self.__get__(instance)
        value._rename(_joinNamePath(instance._name, self.name))

    def save(self, outfile, instance):
        value = self.__get__(instance)
        value._save(outfile)

    def freeze(self, instance):
        value = self.__get__(instance)
        value.freeze()

    def toDict(self, instance):
        value = self.__get__(instance)
        return value.toDict()

    def validate(self, instance):
        """Validate the nested config, then apply ``check`` to it.

        Raises
        ------
        FieldValidationError
            Raised if ``check`` rejects the nested config.
        """
        value = self.__get__(instance)
        value.validate()

        if self.check is not None and not self.check(value):
            msg = "%s is not a valid value" % str(value)
            raise FieldValidationError(self, instance, msg)

    def _compare(self, instance1, instance2, shortcut, rtol, atol, output):
        c1 = getattr(instance1, self.name)
        c2 = getattr(instance2, self.name)
        name = getComparisonName(
            _joinNamePath(instance1._name, self.name),
            _joinNamePath(instance2._name, self.name)
        )
        return compareConfigs(name, c1, c2, shortcut=shortcut, rtol=rtol, atol=atol, output=output)
