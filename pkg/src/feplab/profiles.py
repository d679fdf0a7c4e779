"""Closed-form profile tags shared by the experiment harness and the CLI.

Accepted forms:

* ``const:v``        constant v
* ``linear:a,b``     a + b*u
* ``step:a,b,u0``    a for u < u0, b for u >= u0
* ``cosine:c,a``     c + a*cos(pi*u)
* ``@path`` or a bare path: two-column text (cell center, value)
"""

from __future__ import annotations

import os

import numpy as np

from .errors import DomainError
from .mapping import FEP_RANGE, SEP_RANGE, Profile


def profile_function(spec: str):
    """Callable u -> value for a closed-form tag."""
    try:
        tag, _, args = spec.partition(":")
        vals = [float(x) for x in args.split(",")] if args else []
        if tag == "const" and len(vals) == 1:
            c = vals[0]
            return lambda u: np.full_like(np.asarray(u, float), c)
        if tag == "linear" and len(vals) == 2:
            a, b = vals
            return lambda u: a + b * np.asarray(u, float)
        if tag == "step" and len(vals) == 3:
            a, b, u0 = vals
            return lambda u: np.where(np.asarray(u, float) < u0, a, b)
        if tag == "cosine" and len(vals) == 2:
            c, a = vals
            return lambda u: c + a * np.cos(np.pi * np.asarray(u, float))
    except ValueError:
        pass
    raise DomainError(f"unrecognised profile tag {spec!r}")


def make_profile(spec: str, K: int, side: str = "fep") -> Profile:
    """Materialise a tag or a two-column file on K uniform cells."""
    low, high = FEP_RANGE if side == "fep" else SEP_RANGE
    if spec.startswith("@") or os.path.exists(spec):
        path = spec[1:] if spec.startswith("@") else spec
        data = np.loadtxt(path, ndmin=2)
        values = data[:, 1]
        if values.size != K:
            centers = (np.arange(K) + 0.5) / K
            src = np.minimum((centers * values.size).astype(int), values.size - 1)
            values = values[src]
        return Profile(values, low, high)
    fn = profile_function(spec)
    centers = (np.arange(K) + 0.5) / K
    return Profile(np.asarray(fn(centers), float), low, high)
