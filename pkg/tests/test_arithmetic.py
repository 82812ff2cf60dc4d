import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from carleson_lab.arithmetic import (RationalVector, ReducedRational, arc_width, certificate_json,
                                     class_members, continued_fraction_approx, convergents,
                                     denominator_class, farey_set, in_iw_set, iw_set, lcm_ladder,
                                     major_arc_membership, major_arc_membership_bruteforce,
                                     rationals_csv)


def totients(n):
    """Sieve oracle for phi(1..n)."""
    phi = list(range(n + 1))
    for p in range(2, n + 1):
        if phi[p] == p:
            for k in range(p, n + 1, p):
                phi[k] -= phi[k] // p
    return phi


def test_reduced_rational_invariants():
    with pytest.raises(ValueError):
        ReducedRational(2, 4)
    with pytest.raises(ValueError):
        ReducedRational(1, 0)
    assert ReducedRational.of(Fraction(6, 8)) == ReducedRational(3, 4)
    assert str(ReducedRational(-1, 3)) == "-1/3"


def test_rational_vector_reduced_flag():
    assert not RationalVector((2, 4), 6).reduced
    assert RationalVector((2, 3), 6).reduced
    assert RationalVector((1, 0), 2).as_fractions() == (Fraction(1, 2), Fraction(0))


def test_continued_fraction_examples():
    assert continued_fraction_approx(0.5, 10) == ReducedRational(1, 2)
    r = continued_fraction_approx(math.sqrt(2) - 1, 5)
    assert r == ReducedRational(2, 5)
    assert abs(math.sqrt(2) - 1 - 0.4) == pytest.approx(0.014214, abs=1e-6)
    assert abs(math.sqrt(2) - 1 - 0.4) <= 1 / 25
    r = continued_fraction_approx(math.pi - 3, 100)
    assert r == ReducedRational(1, 7)
    assert abs(math.pi - 3 - 1 / 7) == pytest.approx(0.0012645, abs=1e-6)
    assert abs(math.pi - 3 - 1 / 7) <= 1 / 700


def test_convergents_of_sqrt2():
    cs = [c for _, c in zip(range(5), convergents(math.sqrt(2) - 1))]
    assert cs == [Fraction(0), Fraction(1, 2), Fraction(2, 5), Fraction(5, 12), Fraction(12, 29)]


@pytest.mark.parametrize("Q", [10, 100, 1000])
def test_dirichlet_guarantee_random(Q):
    r = np.random.default_rng(Q)
    for lam in r.uniform(0, 1, 10_000):
        a = continued_fraction_approx(float(lam), Q)
        assert a.q <= Q
        assert abs(Fraction(float(lam)) - a.fraction) < Fraction(1, a.q * Q)


@given(st.fractions(min_value=-3, max_value=3, max_denominator=10**9), st.integers(1, 5000))
def test_dirichlet_guarantee_exact(lam, Q):
    a = continued_fraction_approx(lam, Q)
    assert a.q <= Q
    assert abs(lam - a.fraction) <= Fraction(1, a.q * (Q + 1))


def test_continued_fraction_rejects_Q():
    with pytest.raises(ValueError):
        continued_fraction_approx(0.3, 0)


def test_farey_examples():
    assert farey_set(1) == [ReducedRational(0, 1)]
    assert [str(r) for r in farey_set(3)] == ["0/1", "1/3", "1/2", "2/3"]
    assert len(farey_set(5)) == 10
    with pytest.raises(ValueError):
        farey_set(0.5)


def test_farey_cardinality_matches_totient_sieve():
    phi = totients(200)
    total = 0
    for N in range(1, 201):
        total += phi[N]
        if N % 13 == 0 or N <= 10 or N == 200:
            assert len(farey_set(N)) == total


def test_farey_sorted_and_reduced():
    fs = farey_set(12)
    assert all(a < b for a, b in zip(fs, fs[1:]))
    assert all(math.gcd(r.a, r.q) == 1 and 0 <= r.a < r.q for r in fs)


def test_major_arc_examples():
    for j, M, d in [(1, 1.0, 1), (5, 2.0, 1), (9, 1.5, 2)]:
        c = major_arc_membership(0, j, M, d)
        assert c.alpha == ReducedRational(0, 1) and c.distance == 0
    assert major_arc_membership(Fraction(1, 2), 5, 2, 1).alpha == ReducedRational(1, 2)
    assert major_arc_membership(math.sqrt(2) - 1, 20, 2, 1) is None
    assert arc_width(20, 2, 1) == pytest.approx(3.638e-10, rel=1e-3)


def test_major_arc_certificate_json():
    c = major_arc_membership(Fraction(1, 3), 4, 2, 1)
    data = json.loads(certificate_json(c))
    assert data["alpha"] == "1/3" and data["distance"] == 0
    assert certificate_json(None) == "null"


near_rationals = st.builds(lambda a, q, off: Fraction(a % q, q) + Fraction(off),
                           st.integers(0, 80), st.integers(1, 70), st.floats(-1e-3, 1e-3))


@given(st.integers(1, 8), st.sampled_from([0.5, 1.0, 1.5, 2.0]),
       st.one_of(near_rationals, st.floats(0, 1)), st.integers(1, 2))
def test_major_arc_matches_bruteforce(j, M, lam, d):
    fast = major_arc_membership(lam, j, M, d)
    slow = major_arc_membership_bruteforce(lam, j, M, d)
    assert (fast is None) == (slow is None)
    if fast is not None:
        assert fast.distance == pytest.approx(slow.distance, abs=1e-300)


def test_major_arc_bruteforce_random_sweep():
    r = np.random.default_rng(7)
    hits = 0
    for _ in range(1000):
        j = int(r.integers(1, 9))
        M = float(r.choice([1.0, 1.5, 2.0]))
        q = int(r.integers(1, 65))
        lam = Fraction(int(r.integers(0, q)), q) + Fraction(float(r.normal(0, 2.0 ** (-2 * j) * j**M)))
        fast = major_arc_membership(lam, j, M, 1)
        slow = major_arc_membership_bruteforce(lam, j, M, 1)
        assert (fast is None) == (slow is None)
        hits += fast is not None
    assert 50 < hits < 1000


def test_denominator_class_examples():
    assert denominator_class(1) == 1
    assert denominator_class(4) == 3
    assert denominator_class(7) == 3
    assert denominator_class(ReducedRational(3, 8)) == 4


@given(st.integers(1, 10**6))
def test_denominator_class_partitions(q):
    s = denominator_class(q)
    assert 2 ** (s - 1) <= q < 2**s
    assert sum(1 for t in range(1, 25) if 2 ** (t - 1) <= q < 2**t) == 1


def test_class_members():
    assert class_members(1) == [ReducedRational(0, 1)]
    assert [str(r) for r in class_members(2)] == ["1/3", "1/2", "2/3"]
    assert all(4 <= r.q < 8 for r in class_members(3))


def test_lcm_ladder_examples():
    assert lcm_ladder(1) == 1
    assert lcm_ladder(2) == 6
    assert lcm_ladder(3) == 420
    assert lcm_ladder(6) == math.lcm(*range(1, 64))
    with pytest.raises(OverflowError):
        lcm_ladder(8)


@given(st.integers(1, 6), st.data())
def test_lcm_ladder_clears_denominators(s, data):
    Q = lcm_ladder(s)
    q = data.draw(st.integers(1, 2**s - 1))
    b = data.draw(st.lists(st.integers(-100, 100), min_size=1, max_size=3))
    assert Q % q == 0
    assert all((Q * Fraction(v, q)).denominator == 1 for v in b)


def test_iw_set_examples():
    assert [v.as_fractions() for v in iw_set(2)] == [(Fraction(0),), (Fraction(1, 2),)]
    assert [v.as_fractions()[0] for v in iw_set(3)] == [0, Fraction(1, 3), Fraction(1, 2), Fraction(2, 3)]
    for rho in (0.5, 1.0, 3.0):
        pts = {v.as_fractions() for v in iw_set(4, rho)}
        assert all((Fraction(k, 4),) in pts for k in range(4))
    with pytest.raises(ValueError):
        iw_set(1)
    with pytest.raises(OverflowError):
        iw_set(200, n=2)


def test_iw_set_two_dimensional_common_denominator():
    pts = iw_set(2, n=2)
    assert len(pts) == 4
    assert in_iw_set((Fraction(1, 2), Fraction(1, 3)), 6)
    assert not in_iw_set((Fraction(1, 2), Fraction(1, 3)), 5)


def test_rational_csv():
    text = rationals_csv(farey_set(2))
    assert text.splitlines() == ["a,q,value", "0,1,0.0", "1,2,0.5"]
