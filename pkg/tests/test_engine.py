import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from subchase import engine
from subchase.engine import Halfspace, apply_covering, apply_packing, zero_departed
from subchase.exceptions import InfeasibleError


def test_init():
    s = engine.init(3, 0.1, 3)
    assert np.all(s.x == 0) and s.ledger == 0
    assert engine.init(0, 0.1, 1).n == 0
    assert np.all(engine.init(5, 0.5, 10).x == 0)
    with pytest.raises(ValueError):
        engine.init(3, 1.5, 1)


def test_covering_examples():
    s = engine.init(2, 0.5, 2)
    mv = apply_covering(s, Halfspace.from_dense("covering", [1, 1], 1))
    # symmetric start and row force equal coordinates
    assert np.allclose(s.x, [0.5, 0.5]) and mv == pytest.approx(1)
    s = engine.init(2, 0.5, 2)
    s.x = np.array([1.0, 0.0])
    mv = apply_covering(s, Halfspace.from_dense("covering", [0, 1], 1))
    assert np.allclose(s.x, [1, 1]) and mv == pytest.approx(1)


def test_covering_continuity():
    s = engine.init(2, 0.1, 2)
    s.x = np.array([0.5, 0.5 - 1e-12])
    assert apply_covering(s, Halfspace.from_dense("covering", [1, 1], 1)) <= 1e-9


def test_covering_infeasible():
    s = engine.init(2, 0.1, 2)
    with pytest.raises(InfeasibleError):
        apply_covering(s, Halfspace.from_dense("covering", [0.3, 0.3], 1))


def test_packing_examples():
    s = engine.init(2, 0.1, 2)
    s.x = np.array([0.6, 0.6])
    mv = apply_packing(s, Halfspace.from_dense("packing", [1, 1], 1))
    assert np.allclose(s.x, [0.5, 0.5]) and mv == pytest.approx(0.2)
    s.x = np.array([1.0, 0.0])
    mv = apply_packing(s, Halfspace.from_dense("packing", [1, 0], 0.5))
    assert np.allclose(s.x, [0.5, 0]) and mv == pytest.approx(0.5)
    s.x = np.array([0.5, 0.5 + 1e-12])
    assert apply_packing(s, Halfspace.from_dense("packing", [1, 1], 1)) <= 1e-9


def test_zero_departed_examples():
    s = engine.init(2, 0.1, 2)
    s.x = np.array([0.5, 0.5])
    assert zero_departed(s, {1}) == 0.5 and np.allclose(s.x, [0.5, 0])
    assert zero_departed(s, set()) == 0
    s.x = np.zeros(2)
    assert zero_departed(s, {0}) == 0


def test_step_log_csv(tmp_path):
    s = engine.init(2, 0.5, 2)
    s.time = 4
    apply_covering(s, Halfspace.from_dense("covering", [1, 1], 1))
    engine.write_step_log(s, tmp_path / "log.csv")
    lines = (tmp_path / "log.csv").read_text().splitlines()
    assert lines[0] == "time,kind,movement,ledger"
    assert lines[1].startswith("4,covering,")


def test_halfspace_validation():
    with pytest.raises(ValueError):
        Halfspace.from_dense("covering", [-1, 1], 1)
    with pytest.raises(ValueError):
        Halfspace.from_dense("covering", [1, 1], 0)


rows = st.lists(st.floats(0.05, 3.0), min_size=1, max_size=6)


@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.floats(0.05, 0.9), st.integers(1, 40))
def test_engine_invariants(seed, n, eps, steps):
    rng = np.random.default_rng(seed)
    s = engine.init(n, eps, n)
    total = 0.0
    for _ in range(steps):
        a = rng.uniform(0, 2, n) * (rng.random(n) < 0.7)
        if not a.any():
            continue
        before = s.x.copy()
        if rng.random() < 0.5:
            b = float(rng.uniform(0.05, 1.0) * a.sum())
            h = Halfspace.from_dense("covering", a, b)
            if h.lhs(s.x) >= b:
                continue
            mv = apply_covering(s, h)
            assert np.all(s.x >= before - 1e-12)
        else:
            b = float(rng.uniform(0.05, 1.0) * max(a @ s.x, 1e-3))
            h = Halfspace.from_dense("packing", a, b)
            if h.lhs(s.x) <= b:
                continue
            mv = apply_packing(s, h)
            assert np.all(s.x <= before + 1e-12)
        assert abs(h.lhs(s.x) - b) <= 1e-7
        assert np.all((s.x >= 0) & (s.x <= 1))
        total += mv
        assert s.ledger == pytest.approx(total, abs=1e-9)
