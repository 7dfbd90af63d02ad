"""Monotone submodular set functions, their continuous extensions, and curvature.

Sets are passed around as iterables of integer element ids. Internally every
function evaluates a boolean membership matrix ``M`` of shape ``(m, n)`` in one
vectorized call, which is what keeps the exponential-clock sampler and the
brute-force oracles cheap at the ground-set sizes the tests use.
"""

import threading
from dataclasses import dataclass

import numpy as np

from ._validation import TOL, check_elements, check_point, check_rng, indicator
from .exceptions import CapacityError, DomainError

MAX_TABLE_N = 20
MAX_SUPPORT = 20


class GroundSet:
    """Dense element ids ``0..n-1`` with optional external labels."""

    def __init__(self, n=None, labels=None):
        if labels is None:
            if n is None or n < 0:
                raise ValueError("need n >= 0 or labels")
            labels = [str(i) for i in range(n)]
        labels = [str(lab) for lab in labels]
        if len(set(labels)) != len(labels):
            raise ValueError("ground-set labels must be unique")
        if n is not None and n != len(labels):
            raise ValueError("n does not match number of labels")
        self.labels = labels
        self._index = {lab: i for i, lab in enumerate(labels)}

    @property
    def n(self):
        return len(self.labels)

    @property
    def ids(self):
        return range(self.n)

    def index(self, label):
        try:
            return self._index[str(label)]
        except KeyError:
            raise KeyError(f"unknown element label {label!r}") from None

    def indices(self, labels):
        return frozenset(self.index(lab) for lab in labels)

    def names(self, S):
        return [self.labels[i] for i in sorted(S)]

    def __eq__(self, other):
        return isinstance(other, GroundSet) and self.labels == other.labels

    def __repr__(self):
        return f"GroundSet(n={self.n})"


def all_masks(n):
    """Membership matrix of all ``2**n`` subsets; row ``m`` is the bitmask ``m``."""
    if n > MAX_TABLE_N:
        raise CapacityError(f"cannot enumerate 2^{n} subsets (limit n <= {MAX_TABLE_N})")
    codes = np.arange(1 << n, dtype=np.int64)
    return ((codes[:, None] >> np.arange(n)) & 1).astype(bool)


def mask_to_set(code):
    code = int(code)
    out = []
    i = 0
    while code:
        if code & 1:
            out.append(i)
        code >>= 1
        i += 1
    return frozenset(out)


def set_to_mask(S):
    code = 0
    for i in S:
        code |= 1 << int(i)
    return code


class SetFunction:
    """Base class for value oracles over ``n`` elements.

    Subclasses implement ``_eval(M)``; they may override ``_marginals(M)`` with
    a closed form. ``eval_count`` counts oracle calls: one per evaluated set,
    ``n + 1`` per row of a marginal batch.
    """

    kind = None

    def __init__(self, n):
        self.n = int(n)
        self.eval_count = 0
        self._lock = threading.Lock()
        self._table = None

    def _count(self, k):
        with self._lock:
            self.eval_count += int(k)

    def _eval(self, M):
        raise NotImplementedError

    def _marginals(self, M):
        base = self._eval(M)
        out = np.empty(M.shape, dtype=float)
        for i in range(self.n):
            Mi = M.copy()
            Mi[:, i] = True
            out[:, i] = self._eval(Mi) - base
        return out

    def value(self, S):
        row = indicator(S, self.n)
        self._count(1)
        return float(self._eval(row[None, :])[0])

    def marginal(self, i, S):
        """f(S + i) - f(S)."""
        i = int(i)
        if not 0 <= i < self.n:
            raise IndexError(f"element {i} out of range")
        S = check_elements(S, self.n)
        return self.value(set(S) | {i}) - self.value(S)

    def values(self, M):
        M = np.asarray(M, dtype=bool)
        if M.ndim == 1:
            M = M[None, :]
        self._count(M.shape[0])
        return self._eval(M)

    def marginals(self, M):
        """Matrix of f(i | S_row) for every row of ``M`` and every element i."""
        M = np.asarray(M, dtype=bool)
        if M.ndim == 1:
            M = M[None, :]
        self._count(M.shape[0] * (self.n + 1))
        return self._marginals(M)

    def table(self):
        """All ``2**n`` values indexed by bitmask; computed once and cached."""
        if self._table is None:
            self._table = self.values(all_masks(self.n))
        return self._table

    def singletons(self):
        return self.values(np.eye(self.n, dtype=bool))

    def to_dict(self, labels=None):
        raise NotImplementedError

    def __call__(self, S):
        return self.value(S)


class Coverage(SetFunction):
    """(Weighted) coverage: total weight of universe items covered by S."""

    def __init__(self, sets, weights=None, n=None):
        sets = [list(s) for s in sets]
        super().__init__(len(sets) if n is None else n)
        items = sorted({u for s in sets for u in s}, key=str)
        self.items = items
        pos = {u: j for j, u in enumerate(items)}
        self.incidence = np.zeros((self.n, len(items)))
        for i, s in enumerate(sets):
            for u in s:
                self.incidence[i, pos[u]] = 1.0
        weights = {} if weights is None else dict(weights)
        self.item_weights = np.array([float(weights.get(u, 1.0)) for u in items])
        if np.any(self.item_weights < 0):
            raise DomainError("coverage item weights must be non-negative")
        self.kind = "coverage" if np.all(self.item_weights == 1.0) else "weighted-coverage"
        self.sets = sets

    def _covered(self, M):
        return (M.astype(float) @ self.incidence) > 0

    def _eval(self, M):
        return self._covered(M) @ self.item_weights

    def _marginals(self, M):
        uncovered = (~self._covered(M)) * self.item_weights
        return uncovered @ self.incidence.T

    def to_dict(self, labels=None):
        labels = labels or [str(i) for i in range(self.n)]
        w = dict(zip(self.items, self.item_weights))
        if self.kind == "coverage":
            payload = {labels[i]: [str(u) for u in s] for i, s in enumerate(self.sets)}
        else:
            payload = {labels[i]: [[str(u), float(w[u])] for u in s] for i, s in enumerate(self.sets)}
        return {"kind": self.kind, "sets": payload}


class CappedCardinality(SetFunction):
    """f(S) = min(cap, |S|)."""

    kind = "capped-cardinality"

    def __init__(self, n, cap):
        super().__init__(n)
        if cap < 0:
            raise DomainError("cap must be non-negative")
        self.cap = float(cap)

    def _eval(self, M):
        return np.minimum(self.cap, M.sum(axis=1)).astype(float)

    def _marginals(self, M):
        size = M.sum(axis=1)
        gain = np.minimum(self.cap, size + 1) - np.minimum(self.cap, size)
        return gain[:, None] * ~M

    def to_dict(self, labels=None):
        return {"kind": self.kind, "cap": self.cap, "n": self.n}


class Additive(SetFunction):
    """Modular function with non-negative per-element weights."""

    kind = "additive"

    def __init__(self, weights):
        w = np.asarray(weights, dtype=float)
        super().__init__(w.shape[0])
        if np.any(w < 0):
            raise DomainError("additive weights must be non-negative")
        self.weights = w

    def _eval(self, M):
        return M.astype(float) @ self.weights

    def _marginals(self, M):
        return self.weights[None, :] * ~M

    def to_dict(self, labels=None):
        labels = labels or [str(i) for i in range(self.n)]
        return {"kind": self.kind, "weights": {labels[i]: float(w) for i, w in enumerate(self.weights)}}


class ExplicitTable(SetFunction):
    """Value table over all 2^n subsets, indexed by bitmask."""

    kind = "explicit-table"

    def __init__(self, values):
        v = np.asarray(values, dtype=float)
        n = int(round(np.log2(v.shape[0]))) if v.size else -1
        if n < 0 or (1 << n) != v.shape[0]:
            raise ValueError("explicit table length must be a power of two")
        if n > MAX_TABLE_N:
            raise CapacityError(f"explicit tables are limited to n <= {MAX_TABLE_N}")
        super().__init__(n)
        self.values_ = v
        self._weights = 1 << np.arange(n, dtype=np.int64)

    def _eval(self, M):
        return self.values_[M.astype(np.int64) @ self._weights]

    def to_dict(self, labels=None):
        return {"kind": self.kind, "values": [float(v) for v in self.values_]}


class CurvatureResidual(SetFunction):
    """g = (f - (1 - c) * ell) / c, evaluated lazily through f."""

    kind = "curvature-residual"

    def __init__(self, f, c, ell):
        if not 0 < c <= 1:
            raise DomainError("residual needs curvature in (0, 1]")
        super().__init__(f.n)
        self.f = f
        self.c = float(c)
        self.ell = ell

    def _eval(self, M):
        f_val = self.f.values(M)
        return np.maximum((f_val - (1.0 - self.c) * self.ell._eval(M)) / self.c, 0.0)

    def _marginals(self, M):
        fm = self.f.marginals(M)
        lm = self.ell._marginals(M)
        return np.maximum((fm - (1.0 - self.c) * lm) / self.c, 0.0)

    def to_dict(self, labels=None):
        return ExplicitTable(self.table()).to_dict(labels)


def function_from_dict(spec, labels):
    """Build a set function from its JSON form over the given ground labels."""
    index = {str(lab): i for i, lab in enumerate(labels)}
    n = len(labels)
    kind = spec.get("kind")

    def idx(lab):
        try:
            return index[str(lab)]
        except KeyError:
            raise KeyError(f"unknown element label {lab!r} in function payload") from None

    if kind in ("coverage", "weighted-coverage"):
        sets = [[] for _ in range(n)]
        weights = {}
        for lab, entries in spec["sets"].items():
            i = idx(lab)
            for entry in entries:
                if isinstance(entry, (list, tuple)):
                    item, w = str(entry[0]), float(entry[1])
                else:
                    item, w = str(entry), 1.0
                if kind == "coverage" and w != 1.0:
                    raise ValueError("unweighted coverage items must have weight 1")
                if weights.setdefault(item, w) != w:
                    raise ValueError(f"inconsistent weights for universe item {item!r}")
                sets[i].append(item)
        return Coverage(sets, weights, n=n)
    if kind == "capped-cardinality":
        return CappedCardinality(n, spec["cap"])
    if kind == "additive":
        w = spec["weights"]
        if isinstance(w, dict):
            vec = np.zeros(n)
            for lab, val in w.items():
                vec[idx(lab)] = float(val)
            return Additive(vec)
        return Additive(w)
    if kind == "explicit-table":
        f = ExplicitTable(spec["values"])
        if f.n != n:
            raise ValueError(f"explicit table covers {f.n} elements, ground set has {n}")
        return f
    raise ValueError(f"unknown set-function kind {kind!r}")


def function_to_dict(f, labels=None):
    return f.to_dict(labels)


def verify_submodular(f, tol=TOL):
    """Brute-force check of normalization, non-negativity, monotonicity, submodularity.

    Raises DomainError naming the first violated property.
    """
    if f.n > 12:
        raise CapacityError("brute-force verification is limited to n <= 12")
    T = f.table()
    n = f.n
    codes = np.arange(1 << n)
    if abs(T[0]) > tol:
        raise DomainError(f"not normalized: f(empty) = {T[0]}")
    if T.min() < -tol:
        raise DomainError("function takes negative values")
    D = np.stack([T[codes | (1 << i)] - T for i in range(n)])
    if D.min() < -tol:
        raise DomainError("function is not monotone")
    for i in range(n):
        for j in range(n):
            if i != j and np.any(D[i][codes | (1 << j)] > D[i] + tol):
                raise DomainError(f"submodularity fails for elements {i}, {j}")
    return True


def multilinear_exact(f, x):
    """Multilinear extension by enumerating subsets of the support of x."""
    x = check_point(x, f.n)
    support = np.flatnonzero(x > 0)
    m = support.size
    if m > MAX_SUPPORT:
        raise CapacityError(
            f"support of size {m} exceeds {MAX_SUPPORT}; use multilinear_mc instead"
        )
    bits = all_masks(m)
    xs = x[support]
    probs = np.prod(np.where(bits, xs, 1.0 - xs), axis=1)
    M = np.zeros((bits.shape[0], f.n), dtype=bool)
    M[:, support] = bits
    return float(probs @ f.values(M))


def multilinear_mc(f, x, samples, seed=None):
    """Monte-Carlo estimate of the multilinear extension and its standard error."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    x = check_point(x, f.n)
    rng = check_rng(seed)
    M = rng.random((int(samples), f.n)) < x
    vals = f.values(M)
    if samples == 1:
        return float(vals[0]), 0.0
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(samples))


def wolsey_values_table(f, x, within=None):
    """Wolsey objective f(S) + sum_i f(i|S) x_i for every S (optionally S within a set).

    Returns ``(codes, values)`` with ``codes`` the bitmasks of the candidate sets.
    """
    if f.n > MAX_TABLE_N:
        raise CapacityError(f"exact coverage extension is limited to n <= {MAX_TABLE_N}")
    x = check_point(x, f.n)
    T = f.table()
    codes = np.arange(1 << f.n, dtype=np.int64)
    if within is not None:
        wmask = set_to_mask(within)
        codes = codes[(codes & ~wmask) == 0]
    W = T[codes].copy()
    for i in np.flatnonzero(x > 0):
        W += x[i] * (T[codes | (1 << int(i))] - T[codes])
    return codes, W


def wolsey_exact(f, x, within=None):
    """Coverage (Wolsey) extension by brute force; returns (value, minimizing set)."""
    codes, W = wolsey_values_table(f, x, within)
    j = int(np.argmin(W))
    return float(W[j]), mask_to_set(codes[j])


def one_minus_exp(x):
    return 1.0 - np.exp(-np.asarray(x, dtype=float))


def curvature(f):
    """Total curvature 1 - min_i f(i | E - i) / f({i})."""
    if f.n > MAX_TABLE_N:
        raise CapacityError(f"curvature is limited to n <= {MAX_TABLE_N}")
    if f.n == 0:
        return 0.0
    single = f.singletons()
    if np.any(single <= 0):
        raise DomainError("curvature is undefined when some element has zero value")
    tops = f.marginals(~np.eye(f.n, dtype=bool))[np.arange(f.n), np.arange(f.n)]
    return float(np.clip(1.0 - np.min(tops / single), 0.0, 1.0))


@dataclass
class CurvatureDecomposition:
    c: float
    g: SetFunction
    ell: Additive

    def reconstruct(self, S):
        return self.c * self.g.value(S) + (1.0 - self.c) * self.ell.value(S)


def curvature_decompose(f):
    """Split f = c * g + (1 - c) * ell with ell(S) = sum of singleton values.

    When c == 0, f is itself additive and g is returned as f.
    """
    c = curvature(f)
    ell = Additive(f.singletons())
    if c <= 0.0:
        return CurvatureDecomposition(0.0, f, ell)
    return CurvatureDecomposition(c, CurvatureResidual(f, c, ell), ell)
