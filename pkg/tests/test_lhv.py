import itertools
import math

import jsonschema
import numpy as np
import pytest

from hwselftest.cli import load_schema
from hwselftest.errors import InfeasibleMethod
from hwselftest.lhv import (Assignment, _block_best_response, _block_exhaustive, csv_row,
                            full_lhv_bound, lhv_bound, lhv_value)
from hwselftest.nuspec import default_nu
from hwselftest.strategy import Strategy, bell_value

LHV3 = 5.638155724715451
LHV5 = 8 + 4 * math.sqrt(5)
LHV7 = 33.62325282965806


def deterministic_strategy(assign):
    d = assign.d
    w = np.exp(2j * np.pi / d)
    A = [np.array([[w ** x]]) for x in assign.a]
    B = [np.array([[w ** x]]) for x in assign.b]
    return Strategy(d, np.array([1.0 + 0j]), A, B)


def test_qutrit_zero_assignment(nu3):
    a = Assignment((0, 0, 0), (0, 0, 0), 3)
    direct = 2 / math.sqrt(3) * (6 * math.cos(nu3.phi1) + 3 * math.cos(nu3.phi2))
    assert abs(lhv_value(a, nu3) - direct) < 1e-12


@pytest.mark.parametrize("d", [3, 5, 7])
def test_value_matches_deterministic_strategy(d):
    nu = default_nu(d)
    rng = np.random.default_rng(d)
    for _ in range(10):
        a = Assignment(rng.integers(0, d, d), rng.integers(0, d, d), d)
        assert abs(lhv_value(a, nu) - bell_value(deterministic_strategy(a), nu)) < 1e-9


@pytest.mark.parametrize("d", [3, 5, 7])
def test_global_shift_invariance(d):
    nu = default_nu(d)
    rng = np.random.default_rng(1)
    a = Assignment(rng.integers(0, d, d), rng.integers(0, d, d), d)
    for c in range(d):
        assert abs(lhv_value(a.shifted(c), nu) - lhv_value(a, nu)) < 1e-10


def test_assignment_validation():
    with pytest.raises(ValueError):
        Assignment((0, 1), (0, 1, 2), 3)
    with pytest.raises(ValueError):
        Assignment((0, 1, 3), (0, 1, 2), 3)


def _random_table(rng, d):
    K = np.zeros((d, d, d), complex)
    for n in range(1, (d + 1) // 2):
        K[n] = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        K[d - n] = K[n].conj()
    return K


@pytest.mark.parametrize("d", [3, 5])
def test_best_response_is_exact_on_random_tables(d):
    rng = np.random.default_rng(20 + d)
    for _ in range(3):
        K = _random_table(rng, d)
        n_a = d ** d
        br = _block_best_response(K, 0, n_a)
        ex = _block_exhaustive(K, 0, n_a)
        assert abs(br[0] - ex[0]) < 1e-9


def test_exhaustive_qutrit(nu3):
    c = lhv_bound(3, nu3, "exhaustive")
    assert c.method == "exhaustive" and c.assignments_examined == 729
    assert c.best_value < 5.640
    assert c.gap >= 0.36
    assert abs(c.best_value - LHV3) < 1e-12
    # brute force over all 729 points by the definition
    best = max(lhv_value(Assignment(a, b, 3), nu3)
               for a in itertools.product(range(3), repeat=3)
               for b in itertools.product(range(3), repeat=3))
    assert abs(best - c.best_value) < 1e-12


def test_best_response_d5(nu5):
    c = lhv_bound(5, nu5, "best_response_exhaustive")
    assert c.assignments_examined == 3125
    assert abs(c.best_value - LHV5) < 1e-9
    assert c.best_value < 20 and c.gap > 0
    ex = lhv_bound(5, nu5, "exhaustive")
    assert abs(ex.best_value - c.best_value) < 1e-12
    assert ex.best_assignment == c.best_assignment


def test_sampled_below_exhaustive(nu5):
    ex = lhv_bound(5, nu5, "best_response_exhaustive").best_value
    for seed in range(3):
        s = lhv_bound(5, nu5, "sampled", seed=seed, starts=8)
        assert s.best_value <= ex + 1e-12
        assert not s.exhaustive


def test_sampled_reproducible(nu7):
    a = lhv_bound(7, nu7, "sampled", seed=4, starts=10)
    b = lhv_bound(7, nu7, "sampled", seed=4, starts=10)
    assert a == b


def test_argmax_is_lexicographically_smallest(nu5):
    c = lhv_bound(5, nu5, "best_response_exhaustive")
    # every shift of the argmax attains the same value, and the reported one is smallest
    shifts = [c.best_assignment.shifted(k) for k in range(5)]
    for s in shifts:
        assert abs(lhv_value(s, nu5) - c.best_value) < 1e-10
    assert min(s.a + s.b for s in shifts) == c.best_assignment.a + c.best_assignment.b


def test_thread_count_does_not_change_result(nu5, monkeypatch):
    monkeypatch.setenv("SELFTEST_THREADS", "1")
    one = lhv_bound(5, nu5)
    monkeypatch.setenv("SELFTEST_THREADS", "4")
    four = lhv_bound(5, nu5)
    assert one == four


def test_infeasible(nu5):
    nu11 = default_nu(11)
    with pytest.raises(InfeasibleMethod):
        lhv_bound(11, nu11, "exhaustive")
    with pytest.raises(InfeasibleMethod):
        lhv_bound(11, nu11, "best_response_exhaustive")


def test_sampled_d11_below_quantum():
    c = lhv_bound(11, default_nu(11), "sampled", seed=0, starts=8)
    assert c.best_value <= 110 + 1e-9 and c.gap > 0


def test_full_operator_bound(nu3, nu5):
    assert full_lhv_bound(lhv_bound(3, nu3)) < 9
    assert full_lhv_bound(lhv_bound(5, nu5)) < 25


def test_certificate_export(nu3):
    c = lhv_bound(3, nu3)
    jsonschema.validate(c.to_dict(), load_schema("lhv_certificate"))
    row = csv_row(c, None)
    assert row[0] == 3 and row[1] == "exhaustive" and row[-1] == ""
