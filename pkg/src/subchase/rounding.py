"""Online rounding of fractional trajectories with expected recourse at most the l1 movement.

k = 1 schemes:

* Keyfitz rejection sampling. Keep the current element when its mass did not
  shrink, otherwise leave it with probability (x_i - y_i) / x_i and move to an
  element whose mass grew, chosen proportionally to the growth. A dummy element
  absorbs 1 - ||x||_1.
* Interval families with a single dart U. Each element owns a union of
  subintervals of [0, 1) of total length x_i; the output is the owner of U.
  The layout is canonical: mass is removed from the highest endpoints first and
  added into the lowest free gaps first, so it depends only on the stream.

k copies on x / k give the cardinality-k rounder; running one per part gives
the partition rounder. Pivotal sampling is the static, marginal-exact rounder.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import TOL, check_rng
from .exceptions import InvariantError

_EDGE = 1e-13


def _check_mass(y, k=1.0, what="point"):
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or np.any(y < -TOL) or np.any(y > 1 + TOL):
        raise ValueError(f"{what} must be a vector in [0, 1]")
    if y.sum() > k + 1e-9:
        raise ValueError(f"{what} has l1 norm {y.sum():.6g} > {k}")
    return np.clip(y, 0.0, 1.0)


# --- Keyfitz -----------------------------------------------------------------


@dataclass
class KeyfitzState:
    n: int
    current: int = -1  # -1 is the dummy
    last_x: np.ndarray = None

    def __post_init__(self):
        if self.last_x is None:
            self.last_x = np.zeros(self.n)


def _with_dummy(x):
    return np.append(x, max(0.0, 1.0 - x.sum()))


def _keyfitz_move(cur, x, y, u_leave, u_pick):
    """Vectorized Keyfitz transition. ``cur`` indexes x/y including the dummy slot."""
    xc, yc = x[cur], y[cur]
    with np.errstate(divide="ignore", invalid="ignore"):
        p_leave = np.where(xc > yc, (xc - yc) / xc, 0.0)
    grow = np.clip(y - x, 0.0, None)
    total = grow.sum()
    leave = u_leave < p_leave
    if total <= 0 or not leave.any():
        return cur
    cdf = np.cumsum(grow) / total
    dest = np.minimum(np.searchsorted(cdf, u_pick, side="right"), len(y) - 1)
    return np.where(leave, dest, cur)


def keyfitz_step(state, y, rng=None):
    y = _check_mass(y)
    rng = check_rng(rng)
    x = _with_dummy(state.last_x)
    yd = _with_dummy(y)
    cur = np.array([state.n if state.current < 0 else state.current])
    u = rng.random(2)
    nxt = int(_keyfitz_move(cur, x, yd, u[:1], u[1:])[0])
    state.current = -1 if nxt == state.n else nxt
    state.last_x = y.copy()
    return frozenset() if state.current < 0 else frozenset([state.current])


# --- interval families ---------------------------------------------------------


class IntervalLayout:
    """Disjoint interval families on [0, 1), one per element."""

    def __init__(self, n):
        self.n = n
        self.families = [[] for _ in range(n)]

    def measure(self, i):
        return sum(b - a for a, b in self.families[i])

    def copy(self):
        out = IntervalLayout(self.n)
        out.families = [list(f) for f in self.families]
        return out

    def _gaps(self):
        taken = sorted(iv for fam in self.families for iv in fam)
        gaps, pos = [], 0.0
        for a, b in taken:
            if a > pos + _EDGE:
                gaps.append((pos, a))
            pos = max(pos, b)
        if pos < 1.0 - _EDGE:
            gaps.append((pos, 1.0))
        return gaps

    def _shrink(self, i, mass):
        fam = sorted(self.families[i], key=lambda iv: iv[1])
        while mass > _EDGE and fam:
            a, b = fam[-1]
            if b - a <= mass + _EDGE:
                fam.pop()
                mass -= b - a
            else:
                fam[-1] = (a, b - mass)
                mass = 0.0
        self.families[i] = sorted(fam)

    def _grow(self, i, mass):
        fam = self.families[i]
        for a, b in self._gaps():
            if mass <= _EDGE:
                break
            take = min(mass, b - a)
            fam.append((a, a + take))
            mass -= take
        if mass > 1e-9:
            raise InvariantError(f"no free space left to grow element {i} by {mass:.3g}")
        fam.sort()
        merged = []
        for a, b in fam:
            if merged and a <= merged[-1][1] + _EDGE:
                merged[-1] = (merged[-1][0], max(b, merged[-1][1]))
            else:
                merged.append((a, b))
        self.families[i] = merged

    def update(self, y):
        y = _check_mass(y)
        cur = np.array([self.measure(i) for i in range(self.n)])
        for i in np.flatnonzero(cur > y + _EDGE):
            self._shrink(int(i), cur[i] - y[i])
        for i in np.flatnonzero(y > cur + _EDGE):
            self._grow(int(i), y[i] - cur[i])

    def table(self):
        """Sorted segment starts, ends and owners for vectorized dart lookup."""
        segs = sorted((a, b, i) for i, fam in enumerate(self.families) for a, b in fam)
        if not segs:
            return np.zeros(0), np.zeros(0), np.zeros(0, dtype=int)
        a, b, i = zip(*segs)
        return np.array(a), np.array(b), np.array(i, dtype=int)

    def lookup(self, U):
        """Owner of each dart in U, or -1 when it lands in free space."""
        U = np.asarray(U, dtype=float)
        starts, ends, owners = self.table()
        if starts.size == 0:
            return np.full(U.shape, -1)
        j = np.searchsorted(starts, U, side="right") - 1
        jc = np.clip(j, 0, None)
        hit = (j >= 0) & (U < ends[jc])
        return np.where(hit, owners[jc], -1)


@dataclass
class IntervalFamilyState:
    n: int
    U: float
    layout: IntervalLayout = None

    def __post_init__(self):
        if self.layout is None:
            self.layout = IntervalLayout(self.n)


def interval_init(n, rng=None):
    return IntervalFamilyState(n, float(check_rng(rng).random()))


def interval_step(state, y):
    state.layout.update(y)
    owner = int(state.layout.lookup([state.U])[0])
    return frozenset() if owner < 0 else frozenset([owner])


# --- k-fold union and partitions -----------------------------------------------


@dataclass
class KFoldState:
    n: int
    k: int
    scheme: str = "interval"
    subs: list = field(default_factory=list)


def kfold_init(n, k, rng=None, scheme="interval"):
    rng = check_rng(rng)
    if k < 1:
        raise ValueError("k must be >= 1")
    if scheme == "interval":
        subs = [interval_init(n, rng) for _ in range(k)]
    elif scheme == "keyfitz":
        subs = [KeyfitzState(n) for _ in range(k)]
    else:
        raise ValueError(f"unknown rounding scheme {scheme!r}")
    return KFoldState(n, int(k), scheme, subs)


def kfold_step(state, x, rng=None):
    x = _check_mass(x, state.k)
    y = x / state.k
    out = set()
    if state.scheme == "interval":
        # all copies see the same stream, so one layout serves every dart
        lay = state.subs[0].layout
        lay.update(y)
        for sub in state.subs[1:]:
            sub.layout = lay
        owners = lay.lookup([s.U for s in state.subs])
        out.update(int(o) for o in owners if o >= 0)
    else:
        rng = check_rng(rng)
        for sub in state.subs:
            out |= keyfitz_step(sub, y, rng)
    if len(out) > state.k:
        raise InvariantError("k-fold rounding produced more than k elements")
    return frozenset(out)


@dataclass
class PartitionRounderState:
    C: object
    folds: list


def partition_init(C, rng=None, scheme="interval"):
    rng = check_rng(rng)
    folds = [kfold_init(len(p), int(k), rng, scheme) for p, k in zip(C.parts, C.caps)]
    return PartitionRounderState(C, folds)


def partition_step(state, x, rng=None):
    C = state.C
    x = np.asarray(x, dtype=float)
    sums = C.part_sums(x)
    if np.any(sums > C.caps + 1e-9):
        raise ValueError("fractional point exceeds a part capacity")
    out = set()
    for p, fold in zip(C.parts, state.folds):
        local = kfold_step(fold, x[list(p)], rng)
        out.update(p[i] for i in local)
    return frozenset(out)


# --- pivotal sampling ------------------------------------------------------------


def pivotal_sample_many(x, C, replicas, rng=None):
    """Pairwise pivotal rounding within each part for many replicas at once.

    Returns a bool array (replicas, n). Marginals equal x exactly and each part
    receives floor or ceil of its fractional mass.
    """
    rng = check_rng(rng)
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    sums = C.part_sums(x)
    if np.any(sums > C.caps + 1e-9):
        raise ValueError("fractional point exceeds a part capacity")
    R = int(replicas)
    out = np.zeros((R, C.n), dtype=bool)
    rows = np.arange(R)
    for p in C.parts:
        pend = np.full(R, -1)
        pv = np.zeros(R)
        for i in p:
            xi = x[i]
            if xi >= 1 - 1e-12:
                out[:, i] = True
                continue
            if xi <= 1e-12:
                continue
            fresh = pend < 0
            pend = np.where(fresh, i, pend)
            pv = np.where(fresh, xi, pv)
            act = ~fresh
            if not act.any():
                continue
            a, b = pv, xi
            u = rng.random(R)
            low = a + b <= 1.0
            # a + b <= 1: one of the two absorbs the joint mass
            keep_a = low & (u < a / (a + b))
            move_b = act & low & ~keep_a
            keep_a &= act
            # a + b > 1: one of the two is rounded up to 1
            hi_a = act & ~low & (u < (1.0 - b) / np.maximum(2.0 - a - b, 1e-300))
            hi_b = act & ~low & ~hi_a
            out[rows[hi_a], pend[hi_a]] = True
            out[hi_b, i] = True
            new_pv = np.where(low, a + b, a + b - 1.0)
            pend = np.where(move_b | hi_a, i, pend)
            pv = np.where(act, new_pv, pv)
        left = pend >= 0
        frac = np.where(left, pv, 0.0)
        up = left & ((frac >= 1 - 1e-9) | ((frac > 1e-9) & (rng.random(R) < frac)))
        out[rows[up], pend[up]] = True
    return out


def pivotal_sample(x, C, rng=None):
    row = pivotal_sample_many(x, C, 1, rng)[0]
    return frozenset(np.flatnonzero(row).tolist())


# --- replica runners for statistics ---------------------------------------------


def _interval_replicas(xs, C, replicas, rng):
    T = xs.shape[0]
    out = np.zeros((replicas, T, C.n), dtype=bool)
    rows = np.arange(replicas)[:, None]
    for p, k in zip(C.parts, C.caps):
        p = np.array(p)
        k = int(k)
        lay = IntervalLayout(len(p))
        darts = rng.random((replicas, k))
        for t in range(T):
            lay.update(xs[t, p] / k)
            owners = lay.lookup(darts)
            hit = owners >= 0
            glob = np.where(hit, p[np.clip(owners, 0, None)], 0)
            sel = np.zeros((replicas, C.n), dtype=bool)
            sel[np.broadcast_to(rows, owners.shape)[hit], glob[hit]] = True
            out[:, t, :] |= sel
    return out


def _keyfitz_replicas(xs, C, replicas, rng):
    T = xs.shape[0]
    out = np.zeros((replicas, T, C.n), dtype=bool)
    for p, k in zip(C.parts, C.caps):
        p = np.array(p)
        m, k = len(p), int(k)
        cur = np.full(replicas * k, m)
        prev = np.zeros(m)
        for t in range(T):
            y = xs[t, p] / k
            u = rng.random((2, replicas * k))
            cur = _keyfitz_move(cur, _with_dummy(prev), _with_dummy(y), u[0], u[1])
            prev = y
            owners = cur.reshape(replicas, k)
            hit = owners < m
            r_idx = np.broadcast_to(np.arange(replicas)[:, None], owners.shape)[hit]
            out[r_idx, t, p[owners[hit]]] = True
    return out


def round_stream_replicas(xs, C, replicas, rng=None, scheme="interval"):
    """Run independent partition rounders over one stream; returns bool (R, T, n)."""
    rng = check_rng(rng)
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    for t in range(xs.shape[0]):
        if np.any(C.part_sums(xs[t]) > C.caps + 1e-9):
            raise ValueError(f"step {t} exceeds a part capacity")
    if scheme == "interval":
        return _interval_replicas(xs, C, int(replicas), rng)
    if scheme == "keyfitz":
        return _keyfitz_replicas(xs, C, int(replicas), rng)
    raise ValueError(f"unknown rounding scheme {scheme!r}")


def recourse_of(sets_bool):
    """Per-step symmetric differences |S_t xor S_{t-1}| with S_0 empty; shape (..., T)."""
    prev = np.concatenate([np.zeros_like(sets_bool[..., :1, :]), sets_bool[..., :-1, :]], axis=-2)
    return (sets_bool ^ prev).sum(axis=-1)
