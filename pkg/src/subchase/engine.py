"""Online chasing of positive covering/packing halfspaces with an l1 recourse ledger.

Covering rows use a shifted multiplicative update
``x_i <- min(1, (x_i + delta_i) * exp(a_i * mu) - delta_i)`` with
``delta_i = eps * b / (d * a_i)``. Packing rows use ``x_i <- x_i * exp(-a_i * mu)``.
In both cases the single dual variable ``mu`` is found by bisection so the row
ends up tight.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_fraction
from .exceptions import InfeasibleError

MAX_ITER = 200
_EXP_CLIP = 700.0


@dataclass
class Halfspace:
    """``<a, x> >= b`` (covering) or ``<a, x> <= b`` (packing) with sparse a >= 0."""

    kind: str
    idx: np.ndarray
    coef: np.ndarray
    bound: float

    def __post_init__(self):
        if self.kind not in ("covering", "packing"):
            raise ValueError(f"unknown halfspace kind {self.kind!r}")
        self.idx = np.asarray(self.idx, dtype=int)
        self.coef = np.asarray(self.coef, dtype=float)
        keep = self.coef > 0
        if np.any(self.coef < 0):
            raise ValueError("halfspace coefficients must be non-negative")
        self.idx, self.coef = self.idx[keep], self.coef[keep]
        if not self.bound > 0:
            raise ValueError("halfspace bound must be positive")

    @classmethod
    def from_dense(cls, kind, a, bound):
        a = np.asarray(a, dtype=float)
        idx = np.flatnonzero(a)
        return cls(kind, idx, a[idx], float(bound))

    def lhs(self, x):
        return float(self.coef @ np.asarray(x)[self.idx])

    def violated(self, x, tol=0.0):
        if self.kind == "covering":
            return self.lhs(x) < self.bound - tol
        return self.lhs(x) > self.bound + tol


@dataclass
class ChaserState:
    x: np.ndarray
    eps: float
    d: int
    ledger: float = 0.0
    time: int = 0
    step_log: list = field(default_factory=list)

    @property
    def n(self):
        return self.x.shape[0]

    def _record(self, kind, x_new):
        movement = float(np.abs(x_new - self.x).sum())
        self.x = x_new
        self.ledger += movement
        self.step_log.append((self.time, kind, movement, self.ledger))
        return movement


def init(n, eps, d):
    check_fraction(eps, "eps")
    if d < 1:
        raise ValueError("d must be >= 1")
    return ChaserState(x=np.zeros(int(n)), eps=float(eps), d=int(d))


def _bisect(h, target, increasing):
    """Smallest mu >= 0 with h(mu) on the satisfied side of target."""

    def ok(mu):
        v = h(mu)
        return v >= target if increasing else v <= target

    hi = 1.0
    while not ok(hi):
        hi *= 2.0
        if hi > 1e12:
            raise InfeasibleError("bisection failed to bracket the dual variable")
    lo = 0.0
    for _ in range(MAX_ITER):
        # Stop on a tight row; otherwise shrink the bracket to float resolution.
        if abs(h(hi) - target) <= 1e-11 or hi - lo <= 4e-16 * hi:
            break
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def apply_covering(state, h):
    """Raise x along supp(a) until ``<a, x> = b``; returns the l1 movement."""
    if h.kind != "covering":
        raise ValueError("apply_covering needs a covering halfspace")
    a, idx, b = h.coef, h.idx, h.bound
    if a.sum() < b - 1e-12:
        raise InfeasibleError("covering row cannot be met inside the unit box")
    xs = state.x[idx]
    if a @ xs >= b:
        return state._record("covering", state.x.copy())
    delta = state.eps * b / (state.d * a)

    def update(mu):
        return np.minimum(1.0, (xs + delta) * np.exp(np.minimum(a * mu, _EXP_CLIP)) - delta)

    mu = _bisect(lambda m: a @ update(m), b, increasing=True)
    x_new = state.x.copy()
    x_new[idx] = np.maximum(update(mu), xs)
    return state._record("covering", x_new)


def apply_packing(state, h):
    """Shrink x along supp(a) until ``<a, x> = b``; returns the l1 movement."""
    if h.kind != "packing":
        raise ValueError("apply_packing needs a packing halfspace")
    a, idx, b = h.coef, h.idx, h.bound
    xs = state.x[idx]
    if a @ xs <= b:
        return state._record("packing", state.x.copy())

    def update(mu):
        return xs * np.exp(-a * mu)

    mu = _bisect(lambda m: a @ update(m), b, increasing=False)
    x_new = state.x.copy()
    x_new[idx] = np.minimum(update(mu), xs)
    return state._record("packing", x_new)


def zero_departed(state, departed):
    departed = sorted(int(i) for i in departed)
    x_new = state.x.copy()
    x_new[departed] = 0.0
    return state._record("departure", x_new)


def write_step_log(state, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "kind", "movement", "ledger"])
        for t, kind, mv, led in state.step_log:
            w.writerow([t, kind, repr(float(mv)), repr(float(led))])
