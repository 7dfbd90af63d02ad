import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subchase.aos import approximate_or_separate
from subchase.bench import disjoint_swap, random_instance
from subchase.chasing import Chaser, chase_fast, chase_slow, fast_trials
from subchase.constraints import PartitionConstraint
from subchase.exceptions import CapacityError
from subchase.instance import ChaseInstance, Step
from subchase.setfunc import Additive, CappedCardinality, GroundSet, multilinear_exact, one_minus_exp

E1 = 1 - 1 / math.e


def single(f, V, n=2, k=1, T=1, avail=None):
    avail = frozenset(range(n)) if avail is None else frozenset(avail)
    return ChaseInstance(GroundSet(n), [Step(avail, f, V)] * T, PartitionConstraint.cardinality(n, k))


def check_trajectory(inst, tr, eps):
    assert tr.ledger == pytest.approx(np.abs(np.diff(tr.points, axis=0)).sum(), abs=1e-9)
    for t, s in enumerate(inst.steps, start=1):
        x = tr.points[t]
        assert np.all(inst.constraint.part_sums(x) <= inst.constraint.caps + 1e-9)
        outside = [i for i in range(inst.n) if i not in s.available]
        assert np.all(x[outside] == 0)
    for moves in tr.wolsey_moves:
        assert all(m >= eps / 4 for m in moves)


def test_slow_single_step():
    f = CappedCardinality(2, 1)
    inst = single(f, 1.0)
    tr = chase_slow(inst, 0.1)
    x = tr.points[1]
    assert x.sum() <= 1 + 1e-9
    assert multilinear_exact(f, one_minus_exp(x)) >= E1 - 0.1
    assert tr.ledger == pytest.approx(np.abs(x).sum())


def test_slow_repeated_step_does_not_move():
    tr = chase_slow(single(CappedCardinality(2, 1), 1.0, T=2), 0.1)
    assert tr.movement[1] == 0


def test_zero_targets():
    tr = chase_slow(single(CappedCardinality(3, 1), 0.0, n=3, T=3), 0.1)
    assert np.all(tr.points == 0) and tr.ledger == 0


def test_slow_capacity():
    with pytest.raises(CapacityError):
        chase_slow(single(CappedCardinality(15, 1), 1.0, n=15), 0.1)


def test_fast_needs_trials():
    with pytest.raises(ValueError):
        Chaser(2, PartitionConstraint.cardinality(2, 1), 0.1, 2, "fast")


def test_single_step_matches_aos():
    f = CappedCardinality(3, 1)
    inst = single(f, 1.0, n=3)
    trials = 200
    tr = chase_fast(inst, 0.1, rng=np.random.default_rng(5), trials=trials, certify=False)
    x = approximate_or_separate(f, inst.constraint, 1.0, 0.1, 0.1, rng=np.random.default_rng(5),
                                trials=trials, lp_every=0)
    assert np.allclose(tr.points[1], x, atol=1e-12)


def test_swap_scenario(rng):
    eps = 0.1
    f = Additive([1.0, 1.0])
    C = PartitionConstraint.cardinality(2, 1)
    inst = ChaseInstance(GroundSet(2), [Step(frozenset({0}), f, 1 - eps), Step(frozenset({1}), f, 1 - eps)], C)
    tr = chase_fast(inst, eps, rng=rng)
    check_trajectory(inst, tr, eps)
    assert tr.points[1][0] >= (1 - eps) / (1 + eps) - 1e-6
    assert tr.points[2][1] >= (1 - eps) / (1 + eps) - 1e-6
    # forced: build one element, drop it, build the other
    assert 2.4 <= tr.ledger <= 3 + 1e-9


def test_disjoint_swap_slow():
    inst = disjoint_swap(4, T=4)
    tr = chase_slow(inst, 0.2)
    check_trajectory(inst, tr, 0.2)
    assert np.all(tr.certificates >= (E1 - 0.4) * tr.targets - 1e-9)


def test_trajectory_csv(tmp_path):
    tr = chase_slow(single(CappedCardinality(2, 1), 1.0, T=2), 0.1)
    tr.write_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "t,movement,certificate,target,sep_count" and len(lines) == 3


def test_fast_trial_count():
    inst = single(CappedCardinality(2, 1), 1.0)
    assert fast_trials(inst, 0.1) >= 400


@settings(max_examples=15)
@given(st.integers(0, 2**32 - 1), st.integers(2, 7), st.integers(1, 4))
def test_slow_invariants(seed, n, T):
    rng = np.random.default_rng(seed)
    eps = 0.2
    inst = random_instance(n, T, rng)
    tr = chase_slow(inst, eps)
    check_trajectory(inst, tr, eps)
    assert np.all(tr.certificates >= (E1 - 2 * eps) * tr.targets - 1e-9)


@settings(max_examples=10)
@given(st.integers(0, 2**32 - 1), st.integers(2, 7))
def test_fast_invariants(seed, n):
    rng = np.random.default_rng(seed)
    eps = 0.2
    inst = random_instance(n, 3, rng)
    tr = chase_fast(inst, eps, rng=rng)
    check_trajectory(inst, tr, eps)
