"""Compensated accumulation.

Scalar running sums use Neumaier's variant of Kahan summation built on the
error-free ``two_sum``; whole blocks of terms (one shell of a multi-index
series) are reduced exactly with :func:`math.fsum` before being added.
"""

from __future__ import annotations

import math

import numpy as np


def two_sum(a, b):
    """Error-free transformation: ``a + b == s + t`` exactly."""
    s = a + b
    ap = s - b
    bp = s - ap
    return s, (a - ap) + (b - bp)


class CompensatedSum:
    """Running sum carrying a second word for the rounding error."""

    __slots__ = ("_s", "_c")

    def __init__(self, value=0.0):
        self._s = float(value)
        self._c = 0.0

    def add(self, value):
        self._s, err = two_sum(self._s, float(value))
        self._c += err
        return self

    def add_block(self, values):
        """Add an array of terms, reduced exactly first."""
        return self.add(math.fsum(np.ravel(values)))

    @property
    def value(self):
        return self._s + self._c


def compensated_sum_axis(terms, axis=-1):
    """Neumaier summation of ``terms`` along ``axis``, vectorised over the rest."""
    terms = np.moveaxis(np.asarray(terms, dtype=float), axis, 0)
    s = np.zeros(terms.shape[1:])
    c = np.zeros(terms.shape[1:])
    for v in terms:
        t = s + v
        c += np.where(np.abs(s) >= np.abs(v), (s - t) + v, (v - t) + s)
        s = t
    return s + c
