"""Compiled inner loops."""

from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True)
def x9_shells(al, be, ga, x, y, z, k0, count, shell):
    """Advance the Exton ``X9`` triple series by ``count`` shells.

    ``shell[p, q]`` holds the terms of total degree ``k0`` (``l = k0 - p - q``;
    entries with ``p + q > k0`` are unused).  Shell ``k + 1`` is built from
    shell ``k``: every entry moves to ``l + 1``, then the ``l = 0`` edge is
    filled by raising ``q`` from the previous edge, or ``p`` for ``(k+1, 0, 0)``.

    Returns the Neumaier-compensated sum and the absolute sum of each new
    shell, and the last shell.
    """
    sums = np.empty(count)
    abss = np.empty(count)
    cur = shell
    for s in range(count):
        k = k0 + s
        nxt = np.empty((k + 2, k + 2))
        zk = z / (ga + k)
        acc = 0.0
        comp = 0.0
        mag = 0.0
        for p in range(k + 1):
            for q in range(k + 1 - p):
                l = k - p - q
                m = be + 2.0 * l + q
                v = cur[p, q] * (m * (m + 1.0) / (l + 1.0)) * zk
                nxt[p, q] = v
                t = acc + v
                if abs(acc) >= abs(v):
                    comp += (acc - t) + v
                else:
                    comp += (v - t) + acc
                acc = t
                mag += abs(v)
        v = cur[k, 0] * ((al + 2.0 * k) * (al + 2.0 * k + 1.0) * x / ((ga + k) * (k + 1.0)))
        nxt[k + 1, 0] = v
        t = acc + v
        if abs(acc) >= abs(v):
            comp += (acc - t) + v
        else:
            comp += (v - t) + acc
        acc = t
        mag += abs(v)
        for q in range(1, k + 2):
            p = k + 1 - q
            v = cur[p, q - 1] * ((al + 2.0 * p + q - 1.0) * (be + q - 1.0) * y / ((ga + k) * q))
            nxt[p, q] = v
            t = acc + v
            if abs(acc) >= abs(v):
                comp += (acc - t) + v
            else:
                comp += (v - t) + acc
            acc = t
            mag += abs(v)
        sums[s] = acc + comp
        abss[s] = mag
        cur = nxt
    return sums, abss, cur


@numba.njit(cache=True)
def f1_shells(a, b1, b2, c, x, y, k0, count, shell):
    """Advance the Appell ``F1`` double series by ``count`` shells.

    ``shell[m]`` holds the term ``(m, k0 - m)``.  Every entry moves to
    ``l + 1`` and ``(k0 + 1, 0)`` comes from ``(k0, 0)``.  Same return layout
    as :func:`x9_shells`.
    """
    sums = np.empty(count)
    abss = np.empty(count)
    cur = shell
    for s in range(count):
        k = k0 + s
        nxt = np.empty(k + 2)
        step = (a + k) / (c + k)
        acc = 0.0
        comp = 0.0
        mag = 0.0
        for m in range(k + 2):
            if m <= k:
                l = k - m
                v = cur[m] * (step * (b2 + l) / (l + 1.0) * y)
            else:
                v = cur[k] * (step * (b1 + k) / (k + 1.0) * x)
            nxt[m] = v
            t = acc + v
            if abs(acc) >= abs(v):
                comp += (acc - t) + v
            else:
                comp += (v - t) + acc
            acc = t
            mag += abs(v)
        sums[s] = acc + comp
        abss[s] = mag
        cur = nxt
    return sums, abss, cur
