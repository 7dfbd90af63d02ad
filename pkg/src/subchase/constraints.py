"""Partition-matroid constraints (cardinality is the one-part case)."""

import numpy as np

from ._validation import TOL, check_elements, check_point


class PartitionConstraint:
    """Disjoint parts covering ``0..n-1`` with a positive integer cap per part."""

    def __init__(self, parts, caps, n=None):
        parts = [tuple(sorted(int(i) for i in p)) for p in parts]
        caps = [int(k) for k in caps]
        if len(parts) != len(caps):
            raise ValueError("parts and caps must have the same length")
        if any(k < 1 for k in caps):
            raise ValueError("every part capacity must be >= 1")
        flat = [i for p in parts for i in p]
        if len(set(flat)) != len(flat):
            raise ValueError("parts must be pairwise disjoint")
        if n is None:
            n = len(flat)
        if sorted(flat) != list(range(n)):
            raise ValueError("parts must cover the ground set exactly")
        self.n = n
        self.parts = parts
        self.caps = np.array(caps, dtype=int)
        self.part_of = np.empty(n, dtype=int)
        for j, p in enumerate(parts):
            self.part_of[list(p)] = j

    @classmethod
    def cardinality(cls, n, k):
        return cls([range(n)], [k], n=n)

    @property
    def r(self):
        return len(self.parts)

    @property
    def rank(self):
        return int(sum(min(k, len(p)) for p, k in zip(self.parts, self.caps)))

    def part_sums(self, x):
        return np.bincount(self.part_of, weights=np.asarray(x, dtype=float), minlength=self.r)

    def to_dict(self, labels=None):
        labels = labels or [str(i) for i in range(self.n)]
        return {"parts": [[labels[i] for i in p] for p in self.parts], "caps": self.caps.tolist()}

    @classmethod
    def from_dict(cls, spec, labels):
        index = {str(lab): i for i, lab in enumerate(labels)}
        try:
            parts = [[index[str(lab)] for lab in p] for p in spec["parts"]]
        except KeyError as exc:
            raise KeyError(f"unknown element label {exc.args[0]!r} in constraint") from None
        return cls(parts, spec["caps"], n=len(labels))

    def __repr__(self):
        return f"PartitionConstraint(r={self.r}, caps={self.caps.tolist()})"


def is_feasible_set(C, S):
    S = check_elements(S, C.n)
    counts = np.bincount(C.part_of[list(S)], minlength=C.r) if S else np.zeros(C.r)
    return bool(np.all(counts <= C.caps))


def is_feasible_point(C, x, eps=0.0, tol=TOL):
    """Whether every part sum is within (1 + eps) times its cap."""
    return bool(np.all(C.part_sums(x) <= (1.0 + eps) * C.caps + tol))


def fractional_violation(C, x, eps):
    """Most violated part of the (1 + eps)-relaxed partition polytope, or None.

    Returns ``(j, excess)`` with ``excess = sum_{P_j} x - (1 + eps) k_j > 0``.
    Ties go to the lowest part index.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    x = check_point(x, C.n)
    excess = C.part_sums(x) - (1.0 + eps) * C.caps
    j = int(np.argmax(excess)) if C.r else 0
    if C.r == 0 or excess[j] <= TOL:
        return None
    return j, float(excess[j])


def scale_into_polytope(x, eps):
    return np.asarray(x, dtype=float) / (1.0 + eps)
