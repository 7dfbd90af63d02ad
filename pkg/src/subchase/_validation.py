"""Input validation helpers shared by the functional API and the estimators."""

import numbers

import numpy as np

TOL = 1e-9


def check_fraction(value, name="eps"):
    if not isinstance(value, numbers.Real) or not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {value!r}")
    return float(value)


def check_rng(seed):
    """Turn None, an int, a SeedSequence or a Generator into a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def check_point(x, n=None, name="x"):
    """Validate a fractional point in [0, 1]^n; tiny excursions are clipped."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {x.shape}")
    if n is not None and x.shape[0] != n:
        raise ValueError(f"{name} has length {x.shape[0]}, expected {n}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite entries")
    if x.size and (x.min() < -TOL or x.max() > 1 + TOL):
        raise ValueError(f"{name} must lie in [0, 1]^n")
    return np.clip(x, 0.0, 1.0)


def check_elements(S, n):
    """Return a sorted tuple of element indices, checking bounds."""
    out = sorted({int(i) for i in S})
    if out and (out[0] < 0 or out[-1] >= n):
        raise IndexError(f"element index out of range for ground set of size {n}: {out}")
    return tuple(out)


def indicator(S, n):
    row = np.zeros(n, dtype=bool)
    row[list(check_elements(S, n))] = True
    return row
