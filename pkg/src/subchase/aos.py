"""Approximate-or-separate: exponential-clock witnesses driving a cutting-plane loop.

At a query point x the loop first repairs the (1 + eps)-relaxed partition
polytope, then any extra linear covering rows, then samples threshold sets
``S = {i : Y_i <= t}`` with ``Y_i ~ Exp(x_i)``. A set whose Wolsey value falls
below ``(1 - eps/2) V`` yields a truncated covering cut that every integral
solution of value ``V`` satisfies. When no cut is found, x/(1 + eps) is returned.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from . import engine
from ._validation import TOL, check_fraction, check_point, check_rng, indicator
from .constraints import fractional_violation, scale_into_polytope
from .exceptions import InfeasibleError, InvariantError
from .rounding import pivotal_sample
from .setfunc import MAX_SUPPORT, curvature_decompose, multilinear_exact, multilinear_mc

log = logging.getLogger(__name__)

TRIALS_CONST = 4.0
_BATCH = 256


@dataclass
class WitnessSample:
    t: float
    S: frozenset
    wolsey_value: float = None


def sample_threshold_set(x, rng=None, f=None, t=None):
    """One exponential-clock draw; pass ``t`` to fix the threshold."""
    x = check_point(x)
    rng = check_rng(rng)
    if t is None:
        t = float(rng.random())
    clocks = rng.exponential(size=x.shape[0])
    member = (x > 0) & (clocks <= t * x)
    S = frozenset(np.flatnonzero(member).tolist())
    value = None
    if f is not None:
        value = float(f.values(member)[0] + f.marginals(member)[0] @ x)
    return WitnessSample(t, S, value)


def wolsey_values(f, M, x):
    """Wolsey objective f(S) + sum_i f(i|S) x_i for each row of M."""
    return f.values(M) + f.marginals(M) @ x


def find_witness(f, x, V, eps, trials, rng=None):
    """First of ``trials`` threshold sets with Wolsey value <= (1 - eps/2) V, else None.

    Draws are generated in batches; the earliest qualifying draw wins, so the
    result depends only on the seed.
    """
    if not V > 0:
        raise ValueError("find_witness needs V > 0")
    check_fraction(eps, "eps")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    x = check_point(x, f.n)
    rng = check_rng(rng)
    live = x > 0
    bar = (1.0 - eps / 2.0) * V
    left = int(trials)
    while left > 0:
        b = min(_BATCH, left)
        left -= b
        t = rng.random(b)
        clocks = rng.exponential(size=(b, f.n))
        M = live & (clocks <= t[:, None] * x)
        hits = np.flatnonzero(wolsey_values(f, M, x) <= bar + TOL)
        if hits.size:
            return frozenset(np.flatnonzero(M[hits[0]]).tolist())
    return None


def truncated_wolsey_cut(f, S, V, available=None):
    """Unit-RHS covering row  sum_i min{V - f(S), f(i|S)} / (V - f(S)) x_i >= 1.

    Raises InfeasibleError when even the all-ones point over ``available``
    misses the row, i.e. no integral set reaches V.
    """
    fS = f.value(S)
    gap = V - fS
    if gap <= TOL:
        raise ValueError("set already reaches the target; it cannot separate")
    coef = np.minimum(gap, f.marginals(indicator(S, f.n))[0]) / gap
    coef[list(S)] = 0.0
    if available is not None:
        mask = np.zeros(f.n, dtype=bool)
        mask[list(available)] = True
        coef[~mask] = 0.0
    if coef.sum() < 1.0 - 1e-12:
        raise InfeasibleError("target value unreachable from the available elements")
    return engine.Halfspace.from_dense("covering", coef, 1.0)


def partition_cut(C, j, available=None):
    a = np.zeros(C.n)
    a[list(C.parts[j])] = 1.0
    if available is not None:
        keep = np.zeros(C.n, dtype=bool)
        keep[list(available)] = True
        a[~keep] = 0.0
    return engine.Halfspace.from_dense("packing", a, float(C.caps[j]))


def trials_for(eps, horizon, fail, const=TRIALS_CONST):
    """Witness draws per query: ceil(const * eps^-2 * ln(horizon / fail))."""
    return max(1, math.ceil(const * eps**-2 * math.log(max(horizon / fail, math.e))))


def default_tcap(n, eps):
    n = max(n, 1)
    return 50 * n * math.ceil(math.log(max(n / eps, math.e)) / eps)


@dataclass
class LoopStats:
    wolsey: int = 0
    packing: int = 0
    extra: int = 0
    wolsey_moves: tuple = ()

    @property
    def total(self):
        return self.wolsey + self.packing + self.extra


def settle(state, C, eps, find_cut, extras=(), available=None, cap=None, on_cut=None):
    """Feed violated rows to the engine until the point passes every check.

    Order per round: partition packing, extra coverings (eps-relaxed), Wolsey.
    ``find_cut(x)`` returns a covering Halfspace or None. ``on_cut(stats)``
    may return True to abort; the function then returns ``(stats, False)``.
    """
    stats = LoopStats()
    moves = []
    while True:
        if cap is not None and stats.total >= cap:
            stats.wolsey_moves = tuple(moves)
            return stats, False
        hit = fractional_violation(C, state.x, eps)
        if hit is not None:
            engine.apply_packing(state, partition_cut(C, hit[0], available))
            stats.packing += 1
            continue
        fixed = False
        for h in extras:
            if h.lhs(state.x) < (1.0 - eps) * h.bound - TOL:
                engine.apply_covering(state, h)
                stats.extra += 1
                fixed = True
                break
        if fixed:
            continue
        cut = find_cut(state.x)
        if cut is None:
            stats.wolsey_moves = tuple(moves)
            return stats, True
        moves.append(engine.apply_covering(state, cut))
        stats.wolsey += 1
        if on_cut is not None and on_cut(stats):
            stats.wolsey_moves = tuple(moves)
            return stats, False


def _lp_empty(cuts, C, extras, available, n):
    """Whether the cuts, exact partition caps, extras and the box leave nothing."""
    rows, rhs = [], []
    for h in list(cuts) + list(extras):
        a = np.zeros(n)
        a[h.idx] = h.coef
        rows.append(-a)
        rhs.append(-h.bound)
    for j, p in enumerate(C.parts):
        a = np.zeros(n)
        a[list(p)] = 1.0
        rows.append(a)
        rhs.append(C.caps[j])
    upper = np.ones(n)
    if available is not None:
        upper[:] = 0.0
        upper[list(available)] = 1.0
    res = linprog(np.zeros(n), A_ub=np.array(rows), b_ub=np.array(rhs),
                  bounds=list(zip(np.zeros(n), upper)), method="highs")
    return res.status == 2


def approximate_or_separate(f, C, V, eps, delta, T_cap=None, rng=None, extras=(),
                            trials=None, lp_every=10, return_stats=False, witness_const=TRIALS_CONST):
    """Return x in the partition polytope certified against V, or None if K(V) looks empty.

    ``extras`` are additional covering Halfspaces. With ``lp_every > 0`` the
    accumulated cuts are checked for joint feasibility every ``lp_every`` cuts;
    an empty system proves no integral solution reaches V.
    """
    check_fraction(eps, "eps")
    check_fraction(delta, "delta")
    rng = check_rng(rng)
    n = f.n
    T_cap = default_tcap(n, eps) if T_cap is None else int(T_cap)
    trials = trials_for(eps, T_cap, delta, witness_const) if trials is None else int(trials)
    state = engine.init(n, eps, max(n, 1))
    cuts = []

    if extras and lp_every and _lp_empty([], C, extras, None, n):
        return (None, LoopStats()) if return_stats else None

    def find_cut(x):
        if V <= 0:
            return None
        S = find_witness(f, x, V, eps, trials, rng)
        if S is None:
            return None
        cut = truncated_wolsey_cut(f, S, V)
        cuts.append(cut)
        return cut

    def on_cut(stats):
        return bool(lp_every) and stats.wolsey % lp_every == 0 and _lp_empty(cuts, C, extras, None, n)

    try:
        stats, ok = settle(state, C, eps, find_cut, extras, cap=T_cap, on_cut=on_cut)
    except InfeasibleError:
        return (None, LoopStats()) if return_stats else None
    x = scale_into_polytope(state.x, eps) if ok else None
    log.debug("aos V=%.6g ok=%s cuts=%d", V, ok, stats.total)
    return (x, stats) if return_stats else x


def value_grid(lo, hi, eps):
    """Geometric grid lo * (1 - eps)^-k up to and including the first point >= hi."""
    if lo <= 0:
        return np.array([])
    step = 1.0 / (1.0 - eps)
    k = max(0, math.ceil(math.log(hi / lo) / math.log(step) - 1e-12))
    return lo * step ** np.arange(k + 1)


def maximize_static(f, C, eps, delta, rng=None, trials=None, witness_const=TRIALS_CONST):
    """Binary search over value guesses; returns (x, largest accepted guess)."""
    check_fraction(eps, "eps")
    check_fraction(delta, "delta")
    rng = check_rng(rng)
    single = f.singletons()
    m = float(single.max()) if f.n else 0.0
    if m <= 0:
        return np.zeros(f.n), 0.0
    grid = value_grid(m, f.n * m, eps)
    per_call = delta / max(1, math.ceil(math.log2(len(grid)))) if len(grid) > 1 else delta

    def probe(V):
        return approximate_or_separate(f, C, V, eps, per_call, rng=rng, trials=trials,
                                       witness_const=witness_const)

    best_x = probe(grid[0])
    lo, hi = 0, len(grid) - 1
    if best_x is None:
        # the top singleton is always feasible since every cap is at least 1
        best_x = np.zeros(f.n)
        best_x[int(np.argmax(single))] = 1.0
        return best_x, m
    while lo < hi:
        mid = (lo + hi + 1) // 2
        x = probe(grid[mid])
        if x is None:
            hi = mid - 1
        else:
            lo, best_x = mid, x
    return best_x, float(grid[lo])


def extension_value(f, x, samples=4000, rng=None):
    """Multilinear extension, exact for small support and sampled otherwise."""
    if np.count_nonzero(np.asarray(x) > 0) <= MAX_SUPPORT:
        return multilinear_exact(f, x)
    return multilinear_mc(f, x, samples, rng)[0]


@dataclass
class CurvatureResult:
    S: frozenset
    certificate: float
    x: np.ndarray
    c: float
    gamma: float
    lam: float


def maximize_with_curvature(f, C, eps, delta, rng=None, trials=None, return_details=False,
                            witness_const=TRIALS_CONST):
    """Curvature-aware maximization via value guesses for g(O) and ell(O).

    For each accepted guess pair the loop runs on g with the extra row
    <ell, x> >= lambda. The pairs are explored as a staircase: lambda
    descending, gamma ascending, so each guess is probed at most once. The
    point with the best exact extension value of f is reported; every
    accepted point is rounded once by pivotal sampling and the best set kept.
    """
    check_fraction(eps, "eps")
    check_fraction(delta, "delta")
    rng = check_rng(rng)
    dec = curvature_decompose(f)
    c, g, ell = dec.c, dec.g, dec.ell
    w = ell.weights
    m = float(w.max())
    n = f.n
    lams = np.concatenate([[0.0], value_grid(m, n * m, eps)])
    gams = np.concatenate([[0.0], value_grid(eps * m, n * m, eps)]) if c > 0 else np.array([0.0])
    probes = max(1, len(lams) + len(gams))
    per_call = delta / probes

    def run(gamma, lam):
        extras = (engine.Halfspace.from_dense("covering", w, lam),) if lam > 0 else ()
        return approximate_or_separate(g, C, gamma, eps, per_call, rng=rng, extras=extras,
                                       trials=trials, witness_const=witness_const)

    accepted = []
    gi = 0
    for li in range(len(lams) - 1, -1, -1):
        lam = lams[li]
        x0 = run(gams[gi], lam)
        if x0 is None:
            continue
        cur = (x0, gams[gi])
        while gi + 1 < len(gams):
            x1 = run(gams[gi + 1], lam)
            if x1 is None:
                break
            gi += 1
            cur = (x1, gams[gi])
        accepted.append((extension_value(f, cur[0], rng=rng), cur[0], cur[1], lam))
    if not accepted:
        raise InvariantError("no guess pair accepted; the zero guess is always feasible")
    top = max(range(len(accepted)), key=lambda j: (accepted[j][0], -j))
    val, x, gamma, lam = accepted[top]
    # one rounding per accepted pair, best point first; keep the best set
    order = [top] + [j for j in range(len(accepted)) if j != top]
    rounded = [pivotal_sample(accepted[j][1], C, rng) for j in order]
    S = max(rounded, key=f.value)
    res = CurvatureResult(S, float(val), x, c, float(gamma), float(lam))
    return res if return_details else (S, float(val))
