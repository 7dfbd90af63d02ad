"""Absolute-recourse chasers for insertion-only, deletion-only and sliding-window streams.

The partially dynamic chaser keeps a solution built from large items only
(singleton value >= (eps/k) * the current max) and rebuilds it whenever the
optimum has moved by a 1/(1 - eps) factor since the last rebuild. The sliding
window chaser keeps suffix anchors whose optimal values are geometrically
spaced and outputs from the earliest anchor through a restartable
insertion-only chaser.
"""

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from ._validation import check_fraction, check_rng
from .aos import maximize_static
from .constraints import PartitionConstraint
from .exceptions import InvariantError
from .rounding import pivotal_sample
from .setfunc import SetFunction

_REL = 1e-12


class Restricted(SetFunction):
    """f seen through a sub-ground set ``idx`` (local ids 0..len(idx)-1)."""

    kind = "restricted"

    def __init__(self, base, idx):
        self.idx = np.asarray(sorted(idx), dtype=int)
        super().__init__(len(self.idx))
        self.base = base

    def _lift(self, M):
        G = np.zeros((M.shape[0], self.base.n), dtype=bool)
        G[:, self.idx] = M
        return G

    def _eval(self, M):
        return self.base.values(self._lift(M))

    def _marginals(self, M):
        return self.base.marginals(self._lift(M))[:, self.idx]


def best_subset(f, candidates, k):
    """Exact max of f over subsets of ``candidates`` with at most k elements.

    f is monotone, so only sets of size min(k, |candidates|) are searched.
    Ties go to the lexicographically smallest sorted tuple.
    """
    cand = sorted(int(i) for i in candidates)
    size = min(int(k), len(cand))
    if size == 0:
        return 0.0, frozenset()
    combos = np.array(list(combinations(cand, size)), dtype=int)
    M = np.zeros((combos.shape[0], f.n), dtype=bool)
    M[np.arange(combos.shape[0])[:, None], combos] = True
    vals = f.values(M)
    j = int(np.flatnonzero(vals >= vals.max() - 1e-12)[0])
    return float(vals[j]), frozenset(combos[j].tolist())


def static_subset(f, candidates, k, eps, rng):
    """Approximate max via the static solver plus pivotal rounding."""
    cand = sorted(int(i) for i in candidates)
    if not cand:
        return 0.0, frozenset()
    g = Restricted(f, cand)
    x, _ = maximize_static(g, PartitionConstraint.cardinality(len(cand), k), eps, 0.1, rng)
    S = frozenset(cand[i] for i in pivotal_sample(x, PartitionConstraint.cardinality(len(cand), k), rng))
    return f.value(S), S


def phases_per_era(k, eps):
    return math.ceil(math.log(k * k / eps) / -math.log(1.0 - eps)) + 1


@dataclass
class EraTracker:
    k: int
    eps: float
    phase: int = 0
    large_inserts: list = field(default_factory=lambda: [0])

    @property
    def per_era(self):
        return phases_per_era(self.k, self.eps)

    @property
    def era(self):
        return max(self.phase - 1, 0) // self.per_era

    def new_phase(self):
        self.phase += 1
        while len(self.large_inserts) <= self.era:
            self.large_inserts.append(0)

    def record_insert(self, large):
        if large:
            self.large_inserts[self.era] += 1


class PartialDynamicChaser:
    """Recompute-on-drift chaser for a fixed f under a cardinality cap k.

    ``direction="up"`` handles insertions, ``"down"`` deletions. Besides the
    drift trigger, a rebuild also happens if the held set falls below
    (1 - eps)^2 of the current optimum, which can only occur after deletions
    remove solution elements.
    """

    def __init__(self, f, k, eps, direction="up", solver="brute", rng=None, available=()):
        check_fraction(eps, "eps")
        if direction not in ("up", "down"):
            raise ValueError("direction must be 'up' or 'down'")
        if solver not in ("brute", "static"):
            raise ValueError("solver must be 'brute' or 'static'")
        self.f, self.k, self.eps = f, int(k), float(eps)
        self.direction, self.solver = direction, solver
        self.rng = check_rng(rng)
        self.single = f.singletons()
        self.A = set(int(i) for i in available)
        self.S = frozenset()
        self.anchor = None
        self.recomputes = 0
        self.eras = EraTracker(self.k, self.eps)
        self.opt = 0.0

    def _solve(self, cand):
        if self.solver == "brute":
            return best_subset(self.f, cand, self.k)
        return static_subset(self.f, cand, self.k, self.eps, self.rng)

    def large(self):
        if not self.A:
            return set()
        bar = self.eps / self.k * max(self.single[i] for i in self.A)
        return {i for i in self.A if self.single[i] >= bar}

    def _refresh(self):
        self.opt = self._solve(self.A)[0] if self.A else 0.0
        held = self.f.value(self.S) if self.S else 0.0
        if self.anchor is None:
            drift = self.opt > 0
        elif self.direction == "up":
            drift = self.opt >= self.anchor / (1.0 - self.eps) * (1.0 - _REL)
        else:
            drift = self.opt < (1.0 - self.eps) * self.anchor * (1.0 - _REL)
        if drift or held < (1.0 - self.eps) ** 2 * self.opt - 1e-9:
            self.S = self._solve(self.large())[1]
            self.anchor = self.opt
            self.recomputes += 1
            self.eras.new_phase()
        return self.S

    def start(self):
        """Build the initial solution from the initially available items."""
        prev = self.S
        self._refresh()
        return len(prev ^ self.S)

    def insert(self, e):
        e = int(e)
        self.A.add(e)
        self.eras.record_insert(e in self.large())
        prev = self.S
        self._refresh()
        return len(prev ^ self.S)

    def delete(self, e):
        e = int(e)
        self.A.discard(e)
        prev = self.S
        self.S = self.S - {e}
        self._refresh()
        return len(prev ^ self.S)

    def value(self):
        return self.f.value(self.S) if self.S else 0.0


@dataclass
class DynamicsResult:
    solutions: list
    recourse: np.ndarray
    values: np.ndarray
    recomputes: int = 0
    eras: list = None
    anchors: list = None
    trace: list = None

    @property
    def total_recourse(self):
        return int(self.recourse.sum())


def incremental_chase(stream, f, k, eps, solver="brute", rng=None):
    ch = PartialDynamicChaser(f, k, eps, "up", solver, rng)
    sols, rec, vals = [], [], []
    for e in stream:
        rec.append(ch.insert(e))
        sols.append(ch.S)
        vals.append(ch.value())
    return DynamicsResult(sols, np.array(rec, dtype=int), np.array(vals), ch.recomputes,
                          list(ch.eras.large_inserts))


def decremental_chase(initial, deletions, f, k, eps, solver="brute", rng=None):
    """Deletion-only counterpart; the first entry is the build of the initial solution."""
    ch = PartialDynamicChaser(f, k, eps, "down", solver, rng, available=initial)
    rec = [ch.start()]
    sols, vals = [ch.S], [ch.value()]
    for e in deletions:
        rec.append(ch.delete(e))
        sols.append(ch.S)
        vals.append(ch.value())
    return DynamicsResult(sols, np.array(rec, dtype=int), np.array(vals), ch.recomputes,
                          list(ch.eras.large_inserts))


def anchor_bound(k, eps, const=8.0):
    return const / eps * math.log(k / eps)


class SlidingWindowChaser:
    """Smooth-histogram chaser over the last L stream positions."""

    def __init__(self, f, L, k, eps, solver="brute", rng=None):
        check_fraction(eps, "eps")
        if L < k:
            raise ValueError("window length must be at least k")
        self.f, self.L, self.k, self.eps = f, int(L), int(k), float(eps)
        self.solver = solver
        self.rng = check_rng(rng)
        self.single = f.singletons()
        self.stream = []
        self.anchors = []  # [position, g]
        self.inner = None
        self.inner_start = None
        self.S = frozenset()

    def _elements(self, lo, hi):
        return {self.stream[s] for s in range(lo, hi + 1)}

    def _g(self, s, t):
        return best_subset(self.f, self._elements(s, t), self.k)[0]

    def check_anchors(self):
        g = [a[1] for a in self.anchors]
        for i in range(1, len(g) - 1):
            if g[i + 1] >= (1.0 - self.eps) * g[i - 1] - 1e-12:
                raise InvariantError(f"anchors {i - 1}, {i}, {i + 1} should have been merged")
        pos = [a[0] for a in self.anchors]
        if pos != sorted(set(pos)):
            raise InvariantError("anchor positions must be strictly increasing")

    def push(self, e):
        """Append one element; returns |S_t xor S_{t-1}|."""
        self.stream.append(int(e))
        t = len(self.stream) - 1
        lo = max(0, t - self.L + 1)
        window = range(lo, t + 1)
        wmax = max(self.single[self.stream[s]] for s in window)
        bar = self.eps / self.k * wmax
        self.anchors = [a for a in self.anchors if a[0] >= lo]
        if self.single[self.stream[t]] >= bar:
            self.anchors.append([t, 0.0])
        # keep only anchors whose suffix still holds a large element
        suffix_max = np.maximum.accumulate([self.single[self.stream[s]] for s in reversed(window)])[::-1]
        self.anchors = [a for a in self.anchors if suffix_max[a[0] - lo] >= bar]
        if not self.anchors:
            self.anchors = [[lo, 0.0]]
        for a in self.anchors:
            a[1] = self._g(a[0], t)
        i = 1
        while i < len(self.anchors) - 1:
            if self.anchors[i + 1][1] >= (1.0 - self.eps) * self.anchors[i - 1][1] - 1e-12:
                del self.anchors[i]
            else:
                i += 1
        self.check_anchors()

        first = self.anchors[0][0]
        if self.inner is None or self.inner_start != first:
            self.inner = PartialDynamicChaser(self.f, self.k, self.eps, "up", self.solver, self.rng)
            self.inner_start = first
            for s in range(first, t + 1):
                self.inner.insert(self.stream[s])
        else:
            self.inner.insert(self.stream[t])
        prev, self.S = self.S, self.inner.S
        return len(prev ^ self.S)

    def value(self):
        return self.f.value(self.S) if self.S else 0.0


def sliding_window_chase(stream, L, f, k, eps, solver="brute", rng=None, with_opt=True):
    """Run the window chaser; the trace holds (t, value, OPT_t, recourse, anchors)."""
    ch = SlidingWindowChaser(f, L, k, eps, solver, rng)
    sols, rec, vals, counts, trace = [], [], [], [], []
    for t, e in enumerate(stream):
        r = ch.push(e)
        v = ch.value()
        opt = float("nan")
        if with_opt:
            lo = max(0, t - L + 1)
            opt = best_subset(f, ch._elements(lo, t), k)[0]
        sols.append(ch.S)
        rec.append(r)
        vals.append(v)
        counts.append(len(ch.anchors))
        trace.append((t + 1, v, opt, r, len(ch.anchors)))
    return DynamicsResult(sols, np.array(rec, dtype=int), np.array(vals), anchors=counts, trace=trace)
