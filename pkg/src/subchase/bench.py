"""Brute-force and statistical oracles plus adversarial scenario generators."""

import json
import math
from dataclasses import asdict, dataclass, field
from itertools import combinations

import numpy as np

from ._validation import check_rng
from .aos import trials_for
from .chasing import Chaser, talg
from .constraints import PartitionConstraint
from .exceptions import CapacityError, InstanceError
from .instance import ChaseInstance, Step
from .setfunc import CappedCardinality, Coverage, GroundSet

MAX_FEASIBLE = 1 << 20
MAX_LAYER = 10_000


def _subsets_upto(items, cap, n):
    rows = [()]
    for s in range(1, min(cap, len(items)) + 1):
        rows.extend(combinations(items, s))
    M = np.zeros((len(rows), n), dtype=bool)
    for r, combo in enumerate(rows):
        M[r, list(combo)] = True
    return M


def feasible_sets(C, E, limit=MAX_FEASIBLE):
    """Bool matrix of every feasible subset of E, built part by part."""
    E = set(int(i) for i in E)
    blocks = []
    total = 1
    for p, k in zip(C.parts, C.caps):
        items = sorted(i for i in p if i in E)
        count = sum(math.comb(len(items), s) for s in range(min(int(k), len(items)) + 1))
        total *= count
        if total > limit:
            raise CapacityError(f"more than {limit} feasible subsets; instance too large for brute force")
        blocks.append(_subsets_upto(items, int(k), C.n))
    M = np.zeros((1, C.n), dtype=bool)
    for B in blocks:
        M = (M[:, None, :] | B[None, :, :]).reshape(-1, C.n)
    return M


def _lexmin(M):
    return min(tuple(np.flatnonzero(r).tolist()) for r in M)


def brute_opt(f, C, E=None):
    """Exact (value, set) maximizing f over feasible subsets of E.

    Among exact ties the lexicographically smallest sorted tuple wins.
    """
    E = range(f.n) if E is None else E
    M = feasible_sets(C, E)
    vals = f.values(M)
    best = vals.max()
    return float(best), frozenset(_lexmin(M[vals >= best - 1e-12]))


def _sym_diff(A, B):
    a = A.sum(axis=1).astype(np.int64)
    b = B.sum(axis=1).astype(np.int64)
    return a[:, None] + b[None, :] - 2 * (A.astype(np.int64) @ B.T.astype(np.int64))


def offline_min_recourse(inst, max_layer=MAX_LAYER, return_path=False):
    """Minimum integral recourse via a layered shortest path from the empty set."""
    prev = np.zeros((1, inst.n), dtype=bool)
    dist = np.zeros(1)
    back = []
    for t, s in enumerate(inst.steps, 1):
        M = feasible_sets(inst.constraint, s.available)
        M = M[s.f.values(M) >= s.target - 1e-9]
        if M.shape[0] == 0:
            raise InstanceError(f"step {t}: no feasible set reaches the target")
        if M.shape[0] > max_layer:
            raise CapacityError(f"step {t}: {M.shape[0]} valid sets exceed the layer cap {max_layer}")
        new = np.empty(M.shape[0])
        arg = np.empty(M.shape[0], dtype=int)
        for lo in range(0, M.shape[0], 1024):
            D = dist[:, None] + _sym_diff(prev, M[lo:lo + 1024])
            arg[lo:lo + 1024] = D.argmin(axis=0)
            new[lo:lo + 1024] = D.min(axis=0)
        back.append((prev, arg))
        prev, dist = M, new
    best = float(dist.min()) if inst.steps else 0.0
    if not return_path:
        return best
    j = int(dist.argmin())
    path = []
    for M_prev, arg in reversed(back):
        path.append(frozenset(np.flatnonzero(prev[j]).tolist()))
        j = int(arg[j])
        prev = M_prev
    return best, path[::-1]


# --- statistics -----------------------------------------------------------------


@dataclass
class StatReport:
    name: str
    estimate: float
    stderr: float
    trials: int
    bound: float
    side: str
    passed: bool = field(init=False)

    def __post_init__(self):
        slack = 3.0 * self.stderr + 1e-12
        if self.side == "ge":
            self.passed = bool(self.estimate >= self.bound - slack)
        else:
            self.passed = bool(self.estimate <= self.bound + slack)

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)


def mean_report(name, samples, bound, side="ge"):
    s = np.asarray(samples, dtype=float)
    se = float(s.std(ddof=1) / math.sqrt(s.size)) if s.size > 1 else 0.0
    return StatReport(name, float(s.mean()), se, int(s.size), float(bound), side)


def proportion_report(name, hits, trials, bound, side="ge"):
    p = hits / trials
    return StatReport(name, float(p), math.sqrt(max(p * (1 - p), 0.0) / trials), int(trials), float(bound), side)


def _cov_stats(a, b):
    a = a.astype(float)
    b = b.astype(float)
    prod = (a - a.mean()) * (b - b.mean())
    return float(prod.mean()), float(prod.std(ddof=1) / math.sqrt(a.size))


def na_test(sampler, trials, blocks=None, rng=None):
    """Pairwise and block-max covariance gate for negative association.

    ``sampler(trials, rng)`` returns a bool matrix (trials, n). ``blocks`` is a
    list of (A, B) pairs of disjoint index lists; by default the first and
    second halves of the index range. Passes iff every covariance is at most
    +3 sigma. The report carries the worst standardized covariance.
    """
    if trials < 1000:
        raise ValueError("na_test needs at least 1000 trials")
    rng = check_rng(rng)
    X = np.asarray(sampler(int(trials), rng), dtype=bool)
    n = X.shape[1]
    stats = []
    for i in range(n):
        for j in range(i + 1, n):
            stats.append(_cov_stats(X[:, i], X[:, j]))
    if blocks is None:
        blocks = [(list(range(n // 2)), list(range(n // 2, n)))] if n >= 2 else []
    for A, B in blocks:
        if set(A) & set(B):
            raise ValueError("blocks must be disjoint")
        stats.append(_cov_stats(X[:, A].any(axis=1), X[:, B].any(axis=1)))
    if not stats:
        return StatReport("na", 0.0, 0.0, int(trials), 0.0, "le")
    passed = all(c <= 3 * s + 1e-12 for c, s in stats)
    worst = max(stats, key=lambda cs: cs[0] - 3 * cs[1])
    rep = StatReport("na", worst[0], worst[1], int(trials), 0.0, "le")
    rep.passed = passed
    return rep


# --- scenarios --------------------------------------------------------------------


def deletion_order(n, rng=None, terminal=True):
    """All n elements present, then removed one at a time in random order.

    f = min(1, |S|), k = 1, V_t = 1 while anything is left. With ``terminal``
    a final empty step at target 0 closes the run, so the offline optimum pays
    one insertion and one removal.
    """
    rng = check_rng(rng)
    order = rng.permutation(n).tolist()
    f = CappedCardinality(n, 1)
    alive = set(range(n))
    steps = [Step(frozenset(alive), f, 1.0)]
    for e in order[:-1]:
        alive.discard(e)
        steps.append(Step(frozenset(alive), f, 1.0))
    if terminal:
        steps.append(Step(frozenset(), f, 0.0))
    return ChaseInstance(GroundSet(n), steps, PartitionConstraint.cardinality(n, 1))


def disjoint_swap(n, T=4, target=1.0):
    """Supports alternate between the two halves of the ground set."""
    if n < 2:
        raise ValueError("disjoint swap needs n >= 2")
    f = CappedCardinality(n, 1)
    halves = [frozenset(range(n // 2)), frozenset(range(n // 2, n))]
    steps = [Step(halves[t % 2], f, float(target)) for t in range(T)]
    return ChaseInstance(GroundSet(n), steps, PartitionConstraint.cardinality(n, 1))


def random_coverage(n, rng, universe=None, p=0.35, weighted=False):
    rng = check_rng(rng)
    universe = universe or max(3, int(1.5 * n))
    sets = []
    for _ in range(n):
        s = [f"u{u}" for u in range(universe) if rng.random() < p]
        if not s:
            s = [f"u{int(rng.integers(universe))}"]
        sets.append(s)
    weights = None
    if weighted:
        weights = {f"u{u}": float(np.round(rng.uniform(0.5, 2.0), 3)) for u in range(universe)}
    return Coverage(sets, weights, n=n)


def random_partition(n, rng, max_parts=3, max_cap=3):
    rng = check_rng(rng)
    r = int(rng.integers(1, min(max_parts, n) + 1))
    labels = rng.permutation(np.arange(n) % r)
    parts = [np.flatnonzero(labels == j).tolist() for j in range(r)]
    caps = [int(rng.integers(1, min(max_cap, len(p)) + 1)) for p in parts]
    return PartitionConstraint(parts, caps, n=n)


def random_instance(n, T, rng=None, ratio=0.9, fixed_f=False, max_cap=3):
    """Random coverage steps and random supports with V_t = ratio * OPT_t."""
    rng = check_rng(rng)
    C = random_partition(n, rng, max_cap=max_cap)
    f0 = random_coverage(n, rng)
    steps = []
    for _ in range(T):
        f = f0 if fixed_f else random_coverage(n, rng)
        size = int(rng.integers(max(1, n // 2), n + 1))
        avail = frozenset(rng.choice(n, size=size, replace=False).tolist())
        opt, _ = brute_opt(f, C, avail)
        steps.append(Step(avail, f, float(ratio * opt)))
    return ChaseInstance(GroundSet(n), steps, C)


def adversarial_scenarios(kind, rng=None, **params):
    if kind == "deletion-order":
        return deletion_order(params.get("n", 8), rng, params.get("terminal", True))
    if kind == "disjoint-swap":
        return disjoint_swap(params.get("n", 4), params.get("T", 4), params.get("target", 1.0))
    if kind == "random":
        return random_instance(params.get("n", 8), params.get("T", 6), rng, params.get("ratio", 0.9))
    raise ValueError(f"unknown scenario kind {kind!r}")


class AdaptiveAdversary:
    """Builds the next step after seeing the algorithm's current point.

    ``next_step(t, x)`` returns a Step or None to stop.
    """

    n = 0
    constraint = None

    def next_step(self, t, x):
        raise NotImplementedError


class DeleteCurrentPick(AdaptiveAdversary):
    """Capped cardinality with k = 1; each step deletes the element holding most mass."""

    def __init__(self, n, terminal=True):
        self.n = n
        self.f = CappedCardinality(n, 1)
        self.constraint = PartitionConstraint.cardinality(n, 1)
        self.alive = set(range(n))
        self.terminal = terminal
        self.done = False

    def next_step(self, t, x):
        if self.done:
            return None
        if t > 0:
            live = sorted(self.alive)
            pick = max(live, key=lambda i: (x[i], -i))
            self.alive.discard(pick)
        if not self.alive:
            self.done = True
            return Step(frozenset(), self.f, 0.0) if self.terminal else None
        return Step(frozenset(self.alive), self.f, 1.0)


def play_adaptive(adversary, eps, method="fast", rng=None, trials=None, certify=False):
    """Run a chaser against an adaptive adversary; returns (trajectory, instance)."""
    rng = check_rng(rng)
    steps = []
    x = np.zeros(adversary.n)
    ch = None
    while True:
        s = adversary.next_step(len(steps), x)
        if s is None:
            break
        steps.append(s)
        if ch is None:
            ghost = ChaseInstance(GroundSet(adversary.n), [s] * max(adversary.n + 1, 1), adversary.constraint)
            if method == "fast" and trials is None:
                trials = trials_for(eps, talg(ghost, eps), eps)
            ch = Chaser(adversary.n, adversary.constraint, eps, adversary.n, method,
                        trials=trials, rng=rng, certify=certify)
        x = ch.step(s.available, s.f, s.target)
    inst = ChaseInstance(GroundSet(adversary.n), steps, adversary.constraint)
    return ch.trajectory(), inst


def fit_log(ns, values):
    """Least-squares fit values ~ a + b ln n; returns (a, b, R^2)."""
    X = np.log(np.asarray(ns, dtype=float))
    y = np.asarray(values, dtype=float)
    b, a = np.polyfit(X, y, 1)
    resid = y - (a + b * X)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return float(a), float(b), r2
