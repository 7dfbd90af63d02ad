"""Online fractional chasing of submodular objectives under partition constraints.

Each step zeroes departed coordinates, then alternates partition packing fixes
and truncated Wolsey covering cuts until the point passes the eps-relaxed
tests. The slow variant separates with the exact coverage-extension minimizer;
the fast one with exponential-clock witnesses. Outputs are y / (1 + eps).
"""

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import engine
from ._validation import TOL, check_fraction, check_rng
from .aos import extension_value, find_witness, settle, trials_for, truncated_wolsey_cut
from .constraints import scale_into_polytope
from .exceptions import CapacityError, InvariantError
from .setfunc import one_minus_exp, wolsey_exact

log = logging.getLogger(__name__)

SLOW_MAX_N = 14
TALG_MULT = 8.0


@dataclass
class Trajectory:
    points: np.ndarray
    targets: np.ndarray
    certificates: np.ndarray
    movement: np.ndarray
    sep_count: np.ndarray
    pack_count: np.ndarray
    wolsey_moves: list = field(default_factory=list)
    step_log: list = field(default_factory=list)
    engine_ledger: float = 0.0

    @property
    def ledger(self):
        return float(self.movement.sum())

    @property
    def T(self):
        return len(self.targets)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "movement", "certificate", "target", "sep_count"])
            for t in range(self.T):
                w.writerow([t + 1, repr(float(self.movement[t])), repr(float(self.certificates[t])),
                            repr(float(self.targets[t])), int(self.sep_count[t])])


def talg(inst, eps, mult=TALG_MULT):
    """Per-run cutting-plane budget: mult * eps^-1 * r * T * max(1, ln d)."""
    return mult / eps * inst.constraint.r * inst.T * max(1.0, math.log(inst.d))


class Chaser:
    """Step-by-step chaser; ``chase_slow`` and ``chase_fast`` drive one over an instance."""

    def __init__(self, n, C, eps, d, method="slow", trials=None, loop_cap=None,
                 rng=None, certify=True, cert_samples=4000):
        check_fraction(eps, "eps")
        if method == "slow" and n > SLOW_MAX_N:
            raise CapacityError(f"exact separation is limited to n <= {SLOW_MAX_N}")
        if method == "fast" and trials is None:
            raise ValueError("the fast chaser needs a witness trial count")
        self.C, self.eps, self.method, self.trials = C, float(eps), method, trials
        self.loop_cap = loop_cap
        self.rng = check_rng(rng)
        self.state = engine.init(n, eps, d)
        self.x = np.zeros(n)
        self.certify, self.cert_samples = certify, cert_samples
        self.history = [self.x.copy()]
        self.records = []

    def _cutter(self, f, V, avail):
        eps = self.eps
        within = sorted(avail)

        def exact(y):
            val, S = wolsey_exact(f, y, within=within)
            if val < (1.0 - eps) * V - TOL:
                return truncated_wolsey_cut(f, S, V, within)
            return None

        def sampled(y):
            S = find_witness(f, y, V, eps, self.trials, self.rng)
            return None if S is None else truncated_wolsey_cut(f, S, V, within)

        return exact if self.method == "slow" else sampled

    def step(self, avail, f, V):
        """Advance one time step; returns the new output point x^t."""
        st = self.state
        st.time += 1
        avail = frozenset(avail)
        gone = [i for i in np.flatnonzero(st.x > 0) if i not in avail]
        engine.zero_departed(st, gone)
        find_cut = self._cutter(f, V, avail) if V > 0 else (lambda y: None)
        stats, ok = settle(st, self.C, self.eps, find_cut, available=avail, cap=self.loop_cap)
        if not ok:
            raise InvariantError(f"step {st.time}: no fixed point within {self.loop_cap} cuts")
        x = scale_into_polytope(st.x, self.eps)
        if np.any(x[[i for i in range(len(x)) if i not in avail]] > 0):
            raise InvariantError("support left the available set")
        if np.any(self.C.part_sums(x) > self.C.caps + 1e-9):
            raise InvariantError("output point outside the partition polytope")
        cert = float("nan")
        if self.certify:
            cert = extension_value(f, one_minus_exp(x), self.cert_samples, self.rng)
        move = float(np.abs(x - self.x).sum())
        self.x = x
        self.history.append(x.copy())
        self.records.append((V, cert, move, stats.wolsey, stats.packing, stats.wolsey_moves))
        return x

    def trajectory(self):
        r = self.records
        return Trajectory(
            points=np.array(self.history),
            targets=np.array([v[0] for v in r], dtype=float),
            certificates=np.array([v[1] for v in r], dtype=float),
            movement=np.array([v[2] for v in r], dtype=float),
            sep_count=np.array([v[3] for v in r], dtype=int),
            pack_count=np.array([v[4] for v in r], dtype=int),
            wolsey_moves=[v[5] for v in r],
            step_log=list(self.state.step_log),
            engine_ledger=self.state.ledger,
        )


def chase_slow(inst, eps, certify=True, talg_mult=TALG_MULT):
    """Deterministic chaser with exact coverage-extension separation."""
    cap = math.ceil(10 * talg(inst, eps, talg_mult))
    ch = Chaser(inst.n, inst.constraint, eps, inst.d, "slow", loop_cap=cap, certify=certify)
    for s in inst.steps:
        ch.step(s.available, s.f, s.target)
    return ch.trajectory()


def fast_trials(inst, eps, talg_mult=TALG_MULT, const=4.0):
    """Witness draws per query: ceil(const * eps^-2 * ln(T_ALG / eps))."""
    return trials_for(eps, talg(inst, eps, talg_mult), eps, const)


def chase_fast(inst, eps, delta=0.1, rng=None, certify=True, talg_mult=TALG_MULT,
               witness_const=4.0, trials=None, cert_samples=4000):
    """Randomized chaser separating with exponential-clock witnesses.

    ``delta`` is accepted for interface symmetry with the static solver; the
    per-run failure budget is eps, as the trial count is sized from T_ALG / eps.
    """
    check_fraction(delta, "delta")
    budget = talg(inst, eps, talg_mult)
    trials = fast_trials(inst, eps, talg_mult, witness_const) if trials is None else int(trials)
    ch = Chaser(inst.n, inst.constraint, eps, inst.d, "fast", trials=trials,
                loop_cap=math.ceil(10 * budget), rng=rng, certify=certify, cert_samples=cert_samples)
    for s in inst.steps:
        ch.step(s.available, s.f, s.target)
    return ch.trajectory()
