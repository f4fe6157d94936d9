# Copyright 2024, The SlackBox developers.
import functools

import numpy as np

from slackbox.errors import ShapeMismatchError

"""
A package for helper universal utility functions
"""


def make_prop_pointer(hidden_param, types=None, base_type=None, validator=None):
    """
    A decorator function that makes a property based off of a hidden attribute.

    The getter returns the hidden attribute unless the decorated function returns something truthy.
    The property is only settable when ``types`` is given.

    :param hidden_param: The name of the internally stored attribute.
    :type hidden_param: str
    :param types: the acceptable types for the settable, which is passed to isinstance.
    :type types: Class, tuple
    :param base_type: a type to coerce accepted values into before storing them.
    :type base_type: Class
    :param validator: A validator function to run on values before setting. Must accept func(self, value).
    :type validator: function
    """

    def decorator(func):
        @property
        @functools.wraps(func)
        def getter(self):
            result = func(self)
            if result:
                return result
            return getattr(self, hidden_param)

        if types is not None:

            def setter(self, value):
                # bool is an int, but never a valid count or ratio
                if isinstance(value, bool) and bool not in _as_tuple(types):
                    raise TypeError(
                        f"{func.__name__} must be of type: {types}. {value} given."
                    )
                if not isinstance(value, types):
                    raise TypeError(
                        f"{func.__name__} must be of type: {types}. {value} given."
                    )
                if base_type is not None and not isinstance(value, base_type):
                    value = base_type(value)
                if validator:
                    validator(self, value)
                setattr(self, hidden_param, value)

            getter = getter.setter(setter)
        return getter

    return decorator


def _as_tuple(types):
    if isinstance(types, tuple):
        return types
    return (types,)


def check_same_shape(reference, *others, what="raster"):
    """
    Checks that every array has the same shape as the reference.

    :param reference: the array whose shape is expected.
    :type reference: numpy.ndarray
    :param others: arrays to compare.
    :type others: numpy.ndarray
    :param what: the name of the compared object for the error message.
    :type what: str
    :raises ShapeMismatchError: if any shape differs.
    """
    for other in others:
        if np.shape(other) != np.shape(reference):
            raise ShapeMismatchError(np.shape(reference), np.shape(other), what)


def as_mask(values):
    """
    Converts anything array like into a boolean mask.

    :param values: the values to convert; non-zero is foreground.
    :type values: array_like
    :rtype: numpy.ndarray
    """
    return np.asarray(values) != 0
